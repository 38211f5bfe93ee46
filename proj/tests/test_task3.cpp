#include "doctest.h"

#include <array>
#include <cmath>

#include "omas/task3.hpp"

using namespace omas;

namespace {

// Pointwise optimal discriminator at an atom, Task-1 optimum (p_g = p_x)
// substituted so the alpha and gamma terms merge.
double c_star(double ag, double beta, double px, double pgp, double pb) {
    return ag * px / (ag * px + pgp + beta * pb);
}

// Retraining objective value for discrete distributions with C* plugged in.
double objective_at(const std::array<double, 3>& px, const std::array<double, 3>& pgp,
                    const std::array<double, 3>& pb, double ag, double beta) {
    double v = 0.0;
    for (int a = 0; a < 3; ++a) {
        const double c = c_star(ag, beta, px[a], pgp[a], pb[a]);
        const double log_c = std::log(std::max(c, 1e-300));
        const double log_1c = std::log(std::max(1.0 - c, 1e-300));
        v += pgp[a] * log_1c + ag * px[a] * log_c + beta * pb[a] * log_1c;
    }
    return v;
}

// Brute-force minimization of the objective over the 3-atom simplex.
std::array<double, 3> simplex_argmin(const std::array<double, 3>& px,
                                     const std::array<double, 3>& pb, double ag, double beta,
                                     double step = 0.01) {
    std::array<double, 3> best{1.0, 0.0, 0.0};
    double best_v = 1e300;
    const int n = static_cast<int>(std::lround(1.0 / step));
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j + i <= n; ++j) {
            const std::array<double, 3> cand{static_cast<double>(i) * step,
                                             static_cast<double>(j) * step,
                                             static_cast<double>(n - i - j) * step};
            const double v = objective_at(px, cand, pb, ag, beta);
            if (v < best_v) {
                best_v = v;
                best = cand;
            }
        }
    return best;
}

std::array<double, 3> clip_normalize_target(const std::array<double, 3>& px,
                                            const std::array<double, 3>& pb, double beta) {
    std::array<double, 3> t;
    double sum = 0.0;
    for (int a = 0; a < 3; ++a) {
        t[a] = std::max(0.0, (1.0 + beta) * px[a] - beta * pb[a]);
        sum += t[a];
    }
    for (double& v : t) v /= sum;
    return t;
}

} // namespace

TEST_CASE("c_loss analytic values") {
    Tape tape;
    Var half = tape.leaf(Tensor::vec({0.5, 0.5, 0.5}));
    Var loss = c_loss(tape, half, half, half, half, 0.35, 0.7, 0.35);
    // objective = (1 + alpha + beta + gamma) log 0.5; the op returns its negation
    CHECK(tape.value(loss).item() == doctest::Approx(-2.4 * std::log(0.5)));

    Tape t2;
    Var p = t2.leaf(Tensor::vec({0.3, 0.8}));
    Var other = t2.leaf(Tensor::vec({0.6, 0.6}));
    Var reduced = c_loss(t2, p, other, other, other, 0.0, 0.0, 0.0);
    double expected = -(std::log(0.7) + std::log(0.2)) / 2.0;
    CHECK(t2.value(reduced).item() == doctest::Approx(expected));
}

TEST_CASE("gprime_loss value and variants") {
    Tape tape;
    Var half = tape.leaf(Tensor::vec({0.5, 0.5}));
    CHECK(tape.value(gprime_loss(tape, half)).item() == doctest::Approx(std::log(0.5)));
    // pushing C(G') toward 1 decreases the loss
    Tape t2;
    Var high = t2.leaf(Tensor::vec({0.99, 0.99}));
    CHECK(t2.value(gprime_loss(t2, high)).item() < std::log(0.5));
    // non-saturating variant at 0.5
    Tape t3;
    Var h3 = t3.leaf(Tensor::vec({0.5}));
    CHECK(t3.value(gprime_loss(t3, h3, true)).item() == doctest::Approx(-std::log(0.5)));
}

TEST_CASE("j_loss analytic values") {
    Tape tape;
    Var half = tape.leaf(Tensor::vec({0.5, 0.5}));
    CHECK(tape.value(j_loss(tape, half, half, half, 0.5)).item() ==
          doctest::Approx(-2.0 * std::log(0.5)));

    // delta = 1: only real data serves as negatives
    Tape t2;
    Var jb = t2.leaf(Tensor::vec({0.9}));
    Var jx = t2.leaf(Tensor::vec({0.1}));
    Var jg = t2.leaf(Tensor::vec({0.42})); // must not contribute
    const double expected = -(std::log(0.9) + std::log(0.9));
    CHECK(t2.value(j_loss(t2, jb, jx, jg, 1.0)).item() == doctest::Approx(expected));

    CHECK_THROWS_AS(j_loss(tape, half, half, half, 1.5), ContractError);
}

TEST_CASE("loss gradients match finite differences") {
    const MlpSpec g_spec = generator_spec(2, 2, {5});
    const MlpSpec c_spec = critic_spec(2, {5});
    const ParamSet g = init_params(g_spec, 1);
    const ParamSet c = init_params(c_spec, 2);
    Rng rng(3);
    Tensor z(Shape{4, 2});
    for (double& v : z.values) v = rng.gaussian();

    auto loss_of = [&](const ParamSet& gp) {
        Tape tape;
        Var batch = mlp_forward(tape, g_spec, gp, tape.constant(z));
        Var prob = tape.sigmoid(mlp_forward(tape, c_spec, c, batch));
        return tape.value(gprime_loss(tape, prob)).item();
    };
    Tape tape;
    std::vector<int> ids;
    Var batch = mlp_forward(tape, g_spec, g, tape.constant(z), &ids);
    Var prob = tape.sigmoid(mlp_forward(tape, c_spec, c, batch));
    tape.backward(gprime_loss(tape, prob));
    const std::vector<double> analytic = collect_gradients(tape, ids);

    Tensor flat(Shape{g.count()});
    flat.values = g.values;
    const Tensor numeric = finite_difference_gradient(
        [&](const Tensor& t) {
            ParamSet q = g;
            q.values = t.values;
            return loss_of(q);
        },
        flat, 1e-5);
    for (size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric.values[i]), 1e-6});
        CHECK(std::abs(analytic[i] - numeric.values[i]) / denom < 1e-4);
    }
}

TEST_CASE("weight constraint checks") {
    CHECK_NOTHROW(check_task3_weights(0.35, 0.7, 0.35, 0.5));
    CHECK_NOTHROW(check_task3_weights(0.35, 0.0, 0.35, 0.5)); // 0.0 >= -0.3
    CHECK_THROWS_AS(check_task3_weights(0.6, 0.7, 0.6, 0.5), ConfigError); // sum 1.2
    CHECK_THROWS_AS(check_task3_weights(0.5, -0.8, 0.4, 0.5), ConfigError); // beta too low
    CHECK_THROWS_AS(check_task3_weights(0.35, 0.7, 0.35, 1.5), ConfigError);
}

TEST_CASE("pointwise optimal discriminator formula") {
    // alpha+gamma = 0.7, beta = 0.7, masses 0.5 / 0.3 / 0.2
    const double expected = 0.35 / 0.79; // about 0.4430
    CHECK(c_star(0.7, 0.7, 0.5, 0.3, 0.2) == doctest::Approx(expected));

    // 1-D numeric maximization of the atom objective over C in (0,1)
    auto atom_value = [](double c) {
        return 0.3 * std::log(1.0 - c) + 0.7 * 0.5 * std::log(c) + 0.7 * 0.2 * std::log(1.0 - c);
    };
    double best_c = 0.0, best_v = -1e300;
    for (int i = 1; i < 100000; ++i) {
        const double c = static_cast<double>(i) / 100000.0;
        const double v = atom_value(c);
        if (v > best_v) {
            best_v = v;
            best_c = c;
        }
    }
    CHECK(std::abs(best_c - expected) < 1e-4);
}

TEST_CASE("retraining optimum: brute-force simplex recovers (1+beta)px - beta pb") {
    // spec instance: px = (0.5, 0.3, 0.2), pb = (0.2, 0.3, 0.5), beta = 0.7
    const std::array<double, 3> px{0.5, 0.3, 0.2};
    const std::array<double, 3> pb{0.2, 0.3, 0.5};
    const double beta = 0.7, ag = 0.7;

    const std::array<double, 3> target = clip_normalize_target(px, pb, beta);
    CHECK(target[0] == doctest::Approx(0.71 / 1.01).epsilon(1e-6)); // 0.703
    CHECK(target[1] == doctest::Approx(0.30 / 1.01).epsilon(1e-6)); // 0.297
    CHECK(target[2] == doctest::Approx(0.0));

    const std::array<double, 3> argmin = simplex_argmin(px, pb, ag, beta);
    double l1 = 0.0;
    for (int a = 0; a < 3; ++a) l1 += std::abs(argmin[a] - target[a]);
    CHECK(l1 < 0.05);
}

TEST_CASE("retraining optimum across random nonnegative-target instances") {
    Rng rng(6);
    int done = 0;
    while (done < 8) {
        std::array<double, 3> px{rng.uniform(0.05, 1.0), rng.uniform(0.05, 1.0),
                                 rng.uniform(0.05, 1.0)};
        std::array<double, 3> pb{rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0),
                                 rng.uniform(0.0, 1.0)};
        double sx = px[0] + px[1] + px[2], sb = pb[0] + pb[1] + pb[2];
        for (double& v : px) v /= sx;
        for (double& v : pb) v /= sb;
        const double beta = rng.uniform(0.2, 1.0);
        bool nonneg = true;
        for (int a = 0; a < 3; ++a)
            if ((1.0 + beta) * px[a] - beta * pb[a] < 0.0) nonneg = false;
        if (!nonneg) continue;
        ++done;
        const double ag = rng.uniform(0.3, 0.9);
        const std::array<double, 3> target = clip_normalize_target(px, pb, beta);
        const std::array<double, 3> argmin = simplex_argmin(px, pb, ag, beta);
        double l1 = 0.0;
        for (int a = 0; a < 3; ++a) l1 += std::abs(argmin[a] - target[a]);
        INFO("beta ", beta, " ag ", ag);
        CHECK(l1 < 0.05);
    }
}

TEST_CASE("train_task3 determinism and beta = 0 degenerate weight") {
    const MlpSpec g_spec = generator_spec(2, 2, {8});
    const MlpSpec c_spec = critic_spec(2, {8});
    const ParamSet g = init_params(g_spec, 1);
    const ParamSet b = init_params(g_spec, 2);
    const ParamSet d = init_params(c_spec, 3);
    Rng rng(4);
    Tensor data(Shape{64, 2});
    for (double& v : data.values) v = rng.uniform(-1.0, 1.0);

    Task3Config cfg;
    cfg.epochs = 3;
    cfg.batch = 32;
    cfg.seed = 5;
    const RetrainOutput a = train_task3(g_spec, g, b, c_spec, d, cfg, data);
    const RetrainOutput bb = train_task3(g_spec, g, b, c_spec, d, cfg, data);
    REQUIRE(a.trace.size() == bb.trace.size());
    for (size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].first == bb.trace[i].first);
        CHECK(a.trace[i].second == bb.trace[i].second);
    }
    CHECK(a.gprime.values == bb.gprime.values);

    cfg.beta = 0.0; // no repulsion: still trains, plain GAN refit
    const RetrainOutput c = train_task3(g_spec, g, b, c_spec, d, cfg, data);
    CHECK(c.trace.size() == cfg.epochs);
    for (const auto& e : c.trace) {
        CHECK(std::isfinite(e.first));
        CHECK(std::isfinite(e.second));
    }
}

TEST_CASE("train_j sanity on a toy boundary") {
    // B emits points near a ring at radius 2 (simulated by a fixed net is
    // overkill here: instead treat the generator/boundary params as nets
    // trained elsewhere and just check the mechanics + determinism)
    const MlpSpec g_spec = generator_spec(2, 2, {8});
    MlpSpec j_spec = critic_spec(2, {8});
    j_spec.output = OutputTransform::Sigmoid;
    const ParamSet b = init_params(g_spec, 7);
    const ParamSet gprime = init_params(g_spec, 8);
    Rng rng(9);
    Tensor data(Shape{64, 2});
    for (double& v : data.values) v = rng.uniform(-0.5, 0.5);

    JConfig cfg;
    cfg.epochs = 2;
    cfg.batch = 32;
    cfg.seed = 1;
    const JOutput a = train_j(g_spec, b, gprime, j_spec, cfg, data, Tensor(Shape{0, 2}));
    const JOutput bb = train_j(g_spec, b, gprime, j_spec, cfg, data, Tensor(Shape{0, 2}));
    CHECK(a.j.values == bb.j.values);
    CHECK(a.trace.size() == cfg.epochs);

    // untrained zero-weight J outputs 0.5 everywhere
    ParamSet zero = init_params(j_spec, 0);
    for (double& v : zero.values) v = 0.0;
    const Tensor out = mlp_eval(j_spec, zero, data);
    for (double v : out.values) CHECK(v == doctest::Approx(0.5));
}
