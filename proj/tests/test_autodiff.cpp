#include "doctest.h"

#include <cmath>

#include "omas/autodiff.hpp"
#include "omas/rng.hpp"

using namespace omas;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -2.0, double hi = 2.0) {
    Tensor t(shape);
    for (double& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

// FD-check a scalar function of one input tensor against the tape gradient.
void check_gradient(const std::function<Var(Tape&, Var)>& build, const Tensor& input,
                    double tol = 1e-4) {
    Tape tape;
    Var x = tape.leaf(input);
    Var root = build(tape, x);
    REQUIRE(tape.value(root).numel() == 1);
    tape.backward(root);
    const Tensor& analytic = tape.grad(x);
    const Tensor numeric = finite_difference_gradient(
        [&](const Tensor& p) {
            Tape t2;
            Var x2 = t2.leaf(p);
            return t2.value(build(t2, x2)).item();
        },
        input, 1e-5);
    for (size_t i = 0; i < input.numel(); ++i) {
        INFO("coordinate ", i);
        CHECK(rel_err(analytic.values[i], numeric.values[i]) < tol);
    }
}

} // namespace

TEST_CASE("forward op examples") {
    Tape tape;
    CHECK(tape.value(tape.sigmoid(tape.scalar(0.0))).item() == doctest::Approx(0.5));
    CHECK(tape.value(tape.log(tape.scalar(1.0))).item() == doctest::Approx(0.0));
    Var v = tape.leaf(Tensor::vec({3.0, 1.0, 2.0}));
    CHECK(tape.value(tape.min_reduce(v)).item() == doctest::Approx(1.0));
}

TEST_CASE("shape errors name the op and shapes") {
    Tape tape;
    Var a = tape.leaf(Tensor(Shape{2, 3}, 1.0));
    Var b = tape.leaf(Tensor(Shape{4, 5}, 1.0));
    try {
        tape.matmul(a, b);
        FAIL("expected ShapeError");
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("matmul") != std::string::npos);
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x5]") != std::string::npos);
    }
    CHECK_THROWS_AS(tape.add(a, b), ShapeError);
}

TEST_CASE("non-finite forward values raise NumericError") {
    Tape tape;
    Var big = tape.scalar(1e308);
    CHECK_THROWS_AS(tape.exp(big), NumericError);
    Var z = tape.scalar(-1.0);
    CHECK_THROWS_AS(tape.log(z), NumericError); // log(-1) = NaN
}

TEST_CASE("backward requires a scalar root") {
    Tape tape;
    Var a = tape.leaf(Tensor::vec({1.0, 2.0}));
    CHECK_THROWS_AS(tape.backward(a), ContractError);
}

TEST_CASE("power rule and sigmoid derivative") {
    Tape tape;
    Var x = tape.scalar(3.0);
    Var y = tape.square(x);
    tape.backward(y);
    CHECK(tape.grad(x).item() == doctest::Approx(6.0));

    Tape t2;
    Var v = t2.scalar(0.0);
    Var s = t2.sigmoid(v);
    t2.backward(s);
    CHECK(t2.grad(v).item() == doctest::Approx(0.25));
}

TEST_CASE("finite differences: known closed forms") {
    const Tensor x = Tensor::scalar(3.0);
    const Tensor g = finite_difference_gradient(
        [](const Tensor& p) { return p.values[0] * p.values[0]; }, x, 1e-5);
    CHECK(g.item() == doctest::Approx(6.0).epsilon(1e-6));

    Rng rng(7);
    const Tensor v = random_tensor(rng, Shape{5});
    const Tensor gsum = finite_difference_gradient(
        [](const Tensor& p) {
            double s = 0.0;
            for (double x : p.values) s += x;
            return s;
        },
        v, 1e-5);
    for (double gi : gsum.values) CHECK(gi == doctest::Approx(1.0).epsilon(1e-8));

    CHECK_THROWS_AS(finite_difference_gradient([](const Tensor&) { return 0.0; }, x, 0.0),
                    ContractError);
}

TEST_CASE("every op kind matches finite differences on random inputs") {
    Rng rng(12345);
    for (int round = 0; round < 100; ++round) {
        const size_t n = 1 + rng.below(4);
        const size_t m = 1 + rng.below(4);
        const Shape mat{n, m};

        check_gradient([](Tape& t, Var x) { return t.sum(t.neg(x)); }, random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.exp(x)); }, random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.log(x)); },
                       random_tensor(rng, mat, 0.3, 3.0));
        check_gradient([](Tape& t, Var x) { return t.sum(t.sigmoid(x)); },
                       random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.tanh(x)); }, random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.leaky_relu(x)); },
                       random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.square(x)); },
                       random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.sqrt(x)); },
                       random_tensor(rng, mat, 0.3, 3.0));
        check_gradient([](Tape& t, Var x) { return t.sum(t.softplus(x)); },
                       random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.affine(x, 1.7, -0.3)); },
                       random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.clamp(x, -0.9, 0.9)); },
                       random_tensor(rng, mat, -2.0, -1.2)); // fully clamped region
        check_gradient([](Tape& t, Var x) { return t.sum(t.clamp(x, -5.0, 5.0)); },
                       random_tensor(rng, mat)); // pass-through region
        check_gradient([](Tape& t, Var x) { return t.sum(t.recip_clamped(x, 1e-8)); },
                       random_tensor(rng, mat, 0.5, 3.0));
        check_gradient([](Tape& t, Var x) { return t.mean(x); }, random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.row_l2norm(x)); },
                       random_tensor(rng, mat, 0.5, 2.0));
        check_gradient([](Tape& t, Var x) { return t.min_reduce(x); }, random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.min_reduce(x, 1)); },
                       random_tensor(rng, mat));
        check_gradient([](Tape& t, Var x) { return t.sum(t.min_reduce(x, 0)); },
                       random_tensor(rng, mat));
        check_gradient(
            [&](Tape& t, Var x) { return t.sum(t.broadcast_scalar(t.mean(x), Shape{3, 2})); },
            random_tensor(rng, mat));

        // binary ops: treat one input as the differentiated leaf
        const Tensor other = random_tensor(rng, mat, 0.5, 2.0);
        check_gradient([&](Tape& t, Var x) { return t.sum(t.add(x, t.constant(other))); },
                       random_tensor(rng, mat));
        check_gradient([&](Tape& t, Var x) { return t.sum(t.sub(t.constant(other), x)); },
                       random_tensor(rng, mat));
        check_gradient([&](Tape& t, Var x) { return t.sum(t.mul(x, t.constant(other))); },
                       random_tensor(rng, mat));
        check_gradient([&](Tape& t, Var x) { return t.sum(t.div(t.constant(other), x)); },
                       random_tensor(rng, mat, 0.5, 2.0));
        check_gradient([&](Tape& t, Var x) { return t.sum(t.div(x, t.constant(other))); },
                       random_tensor(rng, mat));

        const size_t p = 1 + rng.below(3);
        const Tensor rhs = random_tensor(rng, Shape{m, p});
        check_gradient([&](Tape& t, Var x) { return t.sum(t.matmul(x, t.constant(rhs))); },
                       random_tensor(rng, mat));
        const Tensor lhs = random_tensor(rng, Shape{p, n});
        check_gradient([&](Tape& t, Var x) { return t.sum(t.matmul(t.constant(lhs), x)); },
                       random_tensor(rng, mat));

        const Tensor rowvec = random_tensor(rng, Shape{m});
        const Tensor rowvec_mat = random_tensor(rng, mat);
        check_gradient([&](Tape& t, Var x) { return t.sum(t.add_rowvec(x, t.constant(rowvec))); },
                       random_tensor(rng, mat));
        check_gradient(
            [&](Tape& t, Var v) { return t.sum(t.add_rowvec(t.constant(rowvec_mat), v)); },
            rowvec);

        check_gradient([&](Tape& t, Var x) { return t.sum(t.concat_rows({x, t.constant(other)})); },
                       random_tensor(rng, mat));

        const Tensor pts_b = random_tensor(rng, Shape{2 + rng.below(3), m});
        check_gradient([&](Tape& t, Var x) { return t.sum(t.cdist(x, t.constant(pts_b))); },
                       random_tensor(rng, Shape{n, m}, 2.5, 5.0)); // disjoint range: no zero dist
        check_gradient([&](Tape& t, Var x) { return t.sum(t.cdist(t.constant(pts_b), x)); },
                       random_tensor(rng, Shape{n, m}, 2.5, 5.0));
        // self-distance (both sides differentiated)
        check_gradient(
            [](Tape& t, Var x) { return t.sum(t.min_reduce(t.cdist(x, x), 1)); },
            random_tensor(rng, Shape{3, m}));
    }
}

TEST_CASE("random MLP-style graphs match finite differences") {
    Rng rng(99);
    for (int round = 0; round < 20; ++round) {
        const size_t in = 1 + rng.below(3), hid = 2 + rng.below(4), bat = 1 + rng.below(4);
        const Tensor batch = random_tensor(rng, Shape{bat, in});
        const Tensor w2 = random_tensor(rng, Shape{hid, 1});
        Tensor w1 = random_tensor(rng, Shape{in, hid});
        check_gradient(
            [&](Tape& t, Var w) {
                Var h = t.leaky_relu(t.matmul(t.constant(batch), w));
                Var out = t.matmul(h, t.constant(w2));
                return t.mean(t.square(out));
            },
            w1);
    }
}

TEST_CASE("backward is deterministic and repeatable") {
    Rng rng(5);
    Tape tape;
    Var x = tape.leaf(random_tensor(rng, Shape{4, 3}));
    Var y = tape.leaf(random_tensor(rng, Shape{3, 2}));
    Var loss = tape.mean(tape.square(tape.tanh(tape.matmul(x, y))));
    tape.backward(loss);
    const std::vector<double> g1 = tape.grad(x).values;
    tape.zero_grads();
    tape.backward(loss);
    const std::vector<double> g2 = tape.grad(x).values;
    CHECK(g1 == g2); // bit-identical
}

TEST_CASE("gradient linearity in the root") {
    Rng rng(21);
    const Tensor input = random_tensor(rng, Shape{3, 3});
    const double a = 1.7, b = -2.3;

    auto grad_of = [&](const std::function<Var(Tape&, Var)>& f) {
        Tape t;
        Var x = t.leaf(input);
        t.backward(f(t, x));
        return t.grad(x).values;
    };
    auto f = [](Tape& t, Var x) { return t.sum(t.square(x)); };
    auto g = [](Tape& t, Var x) { return t.mean(t.exp(x)); };
    const auto gf = grad_of(f);
    const auto gg = grad_of(g);
    const auto gfg = grad_of([&](Tape& t, Var x) {
        return t.add(t.affine(f(t, x), a, 0.0), t.affine(g(t, x), b, 0.0));
    });
    for (size_t i = 0; i < gfg.size(); ++i)
        CHECK(gfg[i] == doctest::Approx(a * gf[i] + b * gg[i]).epsilon(1e-10));
}
