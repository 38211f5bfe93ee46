#include "omas/task1.hpp"

#include <cmath>
#include <sstream>

#include "omas/optim.hpp"

namespace omas {

Var gan_d_loss(Tape& tape, DivergenceKind kind, Var v_real, Var v_fake) {
    if (tape.value(v_real).numel() == 0 || tape.value(v_fake).numel() == 0)
        throw ContractError("gan_d_loss: empty score batch");
    return tape.neg(variational_bound_on_tape(tape, kind, v_real, v_fake));
}

Var gan_g_loss(Tape& tape, DivergenceKind kind, Var v_fake) {
    if (tape.value(v_fake).numel() == 0) throw ContractError("gan_g_loss: empty score batch");
    return tape.neg(tape.mean(conjugate_gf_on_tape(tape, kind, v_fake)));
}

double classical_gan_objective(std::span<const double> d_real, std::span<const double> d_fake) {
    if (d_real.empty() || d_fake.empty())
        throw ContractError("classical_gan_objective: empty batch");
    double a = 0.0;
    for (double p : d_real) a += std::log(p);
    a /= static_cast<double>(d_real.size());
    double b = 0.0;
    for (double p : d_fake) b += std::log(1.0 - p);
    b /= static_cast<double>(d_fake.size());
    return a + b;
}

Tensor sample_latent(size_t n, size_t latent_dim, Rng& rng) {
    Tensor z(Shape{n, latent_dim});
    for (double& v : z.values) v = rng.gaussian();
    return z;
}

Tensor sample_generator(const MlpSpec& g_spec, const ParamSet& g, size_t n, Rng& rng) {
    Tensor z = sample_latent(n, g_spec.input_dim(), rng);
    return mlp_eval(g_spec, g, z);
}

namespace {

Tensor take_rows(const Tensor& points, const std::vector<size_t>& idx, size_t from, size_t to) {
    const size_t k = points.shape[1];
    Tensor out(Shape{to - from, k});
    for (size_t r = from; r < to; ++r)
        for (size_t c = 0; c < k; ++c) out.at(r - from, c) = points.at(idx[r], c);
    return out;
}

std::string trace_to_string(const std::vector<EpochLossGan>& trace) {
    std::ostringstream out;
    for (const auto& e : trace)
        out << e.epoch << "," << e.d_loss << "," << e.g_loss << "\n";
    return out.str();
}

} // namespace

Task1Output train_task1(const MlpSpec& g_spec, const MlpSpec& d_spec, const Task1Config& cfg,
                        const Tensor& train_points, const Tensor& val_points,
                        const EpochCallback& on_epoch) {
    if (train_points.rank() != 2 || train_points.shape[0] == 0)
        throw ContractError("train_task1: empty training set");
    if (train_points.shape[1] != d_spec.input_dim())
        throw ShapeError("train_task1: data dim " + std::to_string(train_points.shape[1]) +
                         " does not match critic input " + std::to_string(d_spec.input_dim()));
    if (cfg.batch < 2) throw ContractError("train_task1: batch must be >= 2");
    if (cfg.critic_steps < 1) throw ContractError("train_task1: critic_steps must be >= 1");

    Task1Output out;
    out.g = init_params(g_spec, cfg.seed);
    out.d = init_params(d_spec, cfg.seed);
    if (cfg.epochs == 0) return out;

    Adam opt_g(out.g.count(), cfg.lr_g, cfg.adam_beta1, cfg.adam_beta2);
    Adam opt_d(out.d.count(), cfg.lr_d, cfg.adam_beta1, cfg.adam_beta2, 1e-8,
               cfg.critic_weight_decay);
    Rng rng_shuffle(cfg.seed, "task1/shuffle");
    Rng rng_z(cfg.seed, "task1/z");
    Rng rng_val(cfg.seed, "task1/val");

    const size_t n = train_points.shape[0];
    const size_t batch = std::min(cfg.batch, n);
    const size_t batches = n / batch;
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;

    double best_val = 0.0;
    bool have_best = false;
    size_t since_best = 0;

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng_shuffle.shuffle(idx);
        double d_sum = 0.0, g_sum = 0.0;
        size_t d_count = 0, g_count = 0;
        try {
            for (size_t b = 0; b < batches; ++b) {
                // critic update
                {
                    Tape tape;
                    Var real = tape.constant(take_rows(train_points, idx, b * batch, (b + 1) * batch));
                    Var z = tape.constant(sample_latent(batch, g_spec.input_dim(), rng_z));
                    Var fake = mlp_forward(tape, g_spec, out.g, z);
                    std::vector<int> ids;
                    Var v_real = mlp_forward(tape, d_spec, out.d, real, &ids);
                    Var v_fake = mlp_forward(tape, d_spec, out.d, fake, &ids);
                    Var loss = gan_d_loss(tape, cfg.kind, v_real, v_fake);
                    tape.backward(loss);
                    std::vector<double> grads = collect_gradients(tape, ids);
                    // the two critic passes share parameters: fold the two
                    // leaf gradients together
                    const size_t half = grads.size() / 2;
                    for (size_t i = 0; i < half; ++i) grads[i] += grads[half + i];
                    grads.resize(half);
                    opt_d.step(out.d.values, grads);
                    d_sum += tape.value(loss).item();
                    ++d_count;
                }
                // generator update, every critic_steps batches
                if ((b + 1) % static_cast<size_t>(cfg.critic_steps) == 0) {
                    Tape tape;
                    Var z = tape.constant(sample_latent(batch, g_spec.input_dim(), rng_z));
                    std::vector<int> ids;
                    Var fake = mlp_forward(tape, g_spec, out.g, z, &ids);
                    Var v_fake = mlp_forward(tape, d_spec, out.d, fake);
                    Var loss = gan_g_loss(tape, cfg.kind, v_fake);
                    tape.backward(loss);
                    opt_g.step(out.g.values, collect_gradients(tape, ids));
                    g_sum += tape.value(loss).item();
                    ++g_count;
                }
            }
        } catch (const NumericError& e) {
            throw TrainingDivergedError("task1 diverged at epoch " + std::to_string(epoch) +
                                        ": " + e.what() + "\ntrace so far:\n" +
                                        trace_to_string(out.trace));
        }
        out.trace.push_back({epoch, d_count ? d_sum / static_cast<double>(d_count) : 0.0,
                             g_count ? g_sum / static_cast<double>(g_count) : 0.0});
        out.epochs_run = epoch + 1;
        if (on_epoch) on_epoch(epoch, out.g, out.d);

        if (cfg.patience > 0 && val_points.rank() == 2 && val_points.shape[0] > 0) {
            const Tensor fake = sample_generator(g_spec, out.g, val_points.shape[0], rng_val);
            const Tensor v_real = mlp_eval(d_spec, out.d, val_points);
            const Tensor v_fake = mlp_eval(d_spec, out.d, fake);
            const double bound =
                variational_bound(cfg.kind, v_real.values, v_fake.values);
            if (!have_best || bound < best_val) {
                best_val = bound;
                have_best = true;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }
    return out;
}

} // namespace omas
