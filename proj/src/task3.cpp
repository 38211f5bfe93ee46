#include "omas/task3.hpp"

#include <cmath>
#include <sstream>

#include "omas/optim.hpp"

namespace omas {

namespace {

// log p and log(1-p) with the probability clamp applied
Var log_p(Tape& tape, Var p) { return tape.log(tape.clamp(p, kProbClamp, 1.0 - kProbClamp)); }

Var log_1mp(Tape& tape, Var p) {
    return tape.log(tape.clamp(tape.affine(p, -1.0, 1.0), kProbClamp, 1.0 - kProbClamp));
}

Tensor take_rows(const Tensor& points, const std::vector<size_t>& idx, size_t from, size_t to) {
    const size_t k = points.shape[1];
    Tensor out(Shape{to - from, k});
    for (size_t r = from; r < to; ++r)
        for (size_t c = 0; c < k; ++c) out.at(r - from, c) = points.at(idx[r], c);
    return out;
}

} // namespace

void check_task3_weights(double alpha, double beta, double gamma, double delta) {
    const double ag = alpha + gamma;
    if (alpha < 0.0 || gamma < 0.0 || ag < 0.0 || ag > 1.0)
        throw ConfigError("task3 weights: alpha+gamma = " + std::to_string(ag) +
                          " violates alpha+gamma in [0,1]");
    if (beta < ag - 1.0)
        throw ConfigError("task3 weights: beta = " + std::to_string(beta) +
                          " violates beta >= alpha+gamma-1 = " + std::to_string(ag - 1.0));
    if (delta < 0.0 || delta > 1.0)
        throw ConfigError("task3 weights: delta = " + std::to_string(delta) +
                          " violates delta in [0,1]");
}

Var c_loss(Tape& tape, Var c_gprime, Var c_x, Var c_b, Var c_g, double alpha, double beta,
           double gamma) {
    Var term_gp = tape.mean(log_1mp(tape, c_gprime));
    Var term_x = tape.affine(tape.mean(log_p(tape, c_x)), alpha, 0.0);
    Var term_b = tape.affine(tape.mean(log_1mp(tape, c_b)), beta, 0.0);
    Var term_g = tape.affine(tape.mean(log_p(tape, c_g)), gamma, 0.0);
    return tape.neg(tape.add(tape.add(term_gp, term_x), tape.add(term_b, term_g)));
}

Var gprime_loss(Tape& tape, Var c_gprime, bool nonsaturating) {
    if (nonsaturating) return tape.neg(tape.mean(log_p(tape, c_gprime)));
    return tape.mean(log_1mp(tape, c_gprime));
}

Var j_loss(Tape& tape, Var j_b, Var j_x, Var j_gprime, double delta) {
    if (delta < 0.0 || delta > 1.0) throw ContractError("j_loss: delta must be in [0,1]");
    Var term_b = tape.mean(log_p(tape, j_b));
    Var term_x = tape.affine(tape.mean(log_1mp(tape, j_x)), delta, 0.0);
    Var term_gp = tape.affine(tape.mean(log_1mp(tape, j_gprime)), 1.0 - delta, 0.0);
    return tape.neg(tape.add(term_b, tape.add(term_x, term_gp)));
}

RetrainOutput train_task3(const MlpSpec& g_spec, const ParamSet& g, const ParamSet& b,
                          const MlpSpec& critic_spec, const ParamSet& task1_critic,
                          const Task3Config& cfg, const Tensor& train_points) {
    check_task3_weights(cfg.alpha, cfg.beta, cfg.gamma, 0.5);
    if (train_points.rank() != 2 || train_points.shape[0] == 0)
        throw ContractError("train_task3: empty training set");
    if (cfg.batch < 2) throw ContractError("train_task3: batch must be >= 2");

    RetrainOutput out;
    out.gprime = cfg.warmstart_gprime ? g : init_params(g_spec, derive_seed(cfg.seed, "task3/gprime"));
    out.c = cfg.warmstart_c ? task1_critic
                            : init_params(critic_spec, derive_seed(cfg.seed, "task3/c"));

    Adam opt_gp(out.gprime.count(), cfg.lr_gprime, cfg.adam_beta1, cfg.adam_beta2);
    Adam opt_c(out.c.count(), cfg.lr_c, cfg.adam_beta1, cfg.adam_beta2);
    Rng rng_shuffle(cfg.seed, "task3/shuffle");
    Rng rng_z(cfg.seed, "task3/z");

    const size_t n = train_points.shape[0];
    const size_t batch = std::min(cfg.batch, n);
    const size_t batches = n / batch;
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng_shuffle.shuffle(idx);
        double c_sum = 0.0, gp_sum = 0.0;
        size_t count = 0;
        try {
            for (size_t bi = 0; bi < batches; ++bi) {
                const Tensor x = take_rows(train_points, idx, bi * batch, (bi + 1) * batch);
                // C update
                {
                    Tensor gp_out = sample_generator(g_spec, out.gprime, batch, rng_z);
                    Tensor b_out = sample_generator(g_spec, b, batch, rng_z);
                    Tensor g_out = sample_generator(g_spec, g, batch, rng_z);
                    Tape tape;
                    std::vector<int> ids;
                    Var p_gp = tape.sigmoid(
                        mlp_forward(tape, critic_spec, out.c, tape.constant(gp_out), &ids));
                    Var p_x = tape.sigmoid(
                        mlp_forward(tape, critic_spec, out.c, tape.constant(x), &ids));
                    Var p_b = tape.sigmoid(
                        mlp_forward(tape, critic_spec, out.c, tape.constant(b_out), &ids));
                    Var p_g = tape.sigmoid(
                        mlp_forward(tape, critic_spec, out.c, tape.constant(g_out), &ids));
                    Var loss = c_loss(tape, p_gp, p_x, p_b, p_g, cfg.alpha, cfg.beta, cfg.gamma);
                    tape.backward(loss);
                    std::vector<double> grads = collect_gradients(tape, ids);
                    const size_t quarter = grads.size() / 4;
                    for (size_t i = 0; i < quarter; ++i)
                        grads[i] += grads[quarter + i] + grads[2 * quarter + i] +
                                    grads[3 * quarter + i];
                    grads.resize(quarter);
                    opt_c.step(out.c.values, grads);
                    c_sum += tape.value(loss).item();
                }
                // G' update
                {
                    Tape tape;
                    std::vector<int> ids;
                    Var z = tape.constant(sample_latent(batch, g_spec.input_dim(), rng_z));
                    Var gp_batch = mlp_forward(tape, g_spec, out.gprime, z, &ids);
                    Var p_gp = tape.sigmoid(mlp_forward(tape, critic_spec, out.c, gp_batch));
                    Var loss = gprime_loss(tape, p_gp, cfg.nonsaturating);
                    tape.backward(loss);
                    opt_gp.step(out.gprime.values, collect_gradients(tape, ids));
                    gp_sum += tape.value(loss).item();
                }
                ++count;
            }
        } catch (const NumericError& e) {
            std::ostringstream trace;
            for (const auto& t : out.trace)
                trace << t.epoch << "," << t.first << "," << t.second << "\n";
            throw TrainingDivergedError("task3 diverged at epoch " + std::to_string(epoch) +
                                        ": " + e.what() + "\ntrace so far:\n" + trace.str());
        }
        out.trace.push_back({epoch, count ? c_sum / static_cast<double>(count) : 0.0,
                             count ? gp_sum / static_cast<double>(count) : 0.0});
    }
    return out;
}

JOutput train_j(const MlpSpec& g_spec, const ParamSet& b, const ParamSet& gprime,
                const MlpSpec& j_spec, const JConfig& cfg, const Tensor& train_points,
                const Tensor& val_points) {
    if (cfg.delta < 0.0 || cfg.delta > 1.0) throw ConfigError("train_j: delta must be in [0,1]");
    if (train_points.rank() != 2 || train_points.shape[0] == 0)
        throw ContractError("train_j: empty training set");

    JOutput out;
    out.j = init_params(j_spec, derive_seed(cfg.seed, "j/init"));
    Adam opt(out.j.count(), cfg.lr, cfg.adam_beta1, cfg.adam_beta2);
    Rng rng_shuffle(cfg.seed, "j/shuffle");
    Rng rng_z(cfg.seed, "j/z");

    const size_t n = train_points.shape[0];
    const size_t batch = std::min(cfg.batch, n);
    const size_t batches = n / batch;
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng_shuffle.shuffle(idx);
        double sum = 0.0;
        size_t count = 0;
        try {
            for (size_t bi = 0; bi < batches; ++bi) {
                const Tensor x = take_rows(train_points, idx, bi * batch, (bi + 1) * batch);
                Tensor b_out = sample_generator(g_spec, b, batch, rng_z);
                Tensor gp_out = sample_generator(g_spec, gprime, batch, rng_z);
                Tape tape;
                std::vector<int> ids;
                Var p_b = mlp_forward(tape, j_spec, out.j, tape.constant(b_out), &ids);
                Var p_x = mlp_forward(tape, j_spec, out.j, tape.constant(x), &ids);
                Var p_gp = mlp_forward(tape, j_spec, out.j, tape.constant(gp_out), &ids);
                Var loss = j_loss(tape, p_b, p_x, p_gp, cfg.delta);
                tape.backward(loss);
                std::vector<double> grads = collect_gradients(tape, ids);
                const size_t third = grads.size() / 3;
                for (size_t i = 0; i < third; ++i)
                    grads[i] += grads[third + i] + grads[2 * third + i];
                grads.resize(third);
                opt.step(out.j.values, grads);
                sum += tape.value(loss).item();
                ++count;
            }
        } catch (const NumericError& e) {
            std::ostringstream trace;
            for (const auto& t : out.trace) trace << t.epoch << "," << t.first << "\n";
            throw TrainingDivergedError("train_j diverged at epoch " + std::to_string(epoch) +
                                        ": " + e.what() + "\ntrace so far:\n" + trace.str());
        }
        out.trace.push_back({epoch, count ? sum / static_cast<double>(count) : 0.0, 0.0});
    }

    // held-out sanity readings: J should sit higher on boundary samples
    const Tensor& held = val_points.rows() ? val_points : train_points;
    Rng rng_check(cfg.seed, "j/check");
    Tensor b_check = sample_generator(g_spec, b, held.rows(), rng_check);
    const Tensor jb = mlp_eval(j_spec, out.j, b_check);
    const Tensor jx = mlp_eval(j_spec, out.j, held);
    double sb = 0.0, sx = 0.0;
    for (double v : jb.values) sb += v;
    for (double v : jx.values) sx += v;
    out.mean_j_boundary = sb / static_cast<double>(jb.numel());
    out.mean_j_real = sx / static_cast<double>(jx.numel());
    return out;
}

} // namespace omas
