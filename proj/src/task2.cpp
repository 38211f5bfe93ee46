#include "omas/task2.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "omas/optim.hpp"

namespace omas {

double pointset_distance(std::span<const double> point, const Tensor& refs) {
    if (refs.rank() != 2 || refs.shape[0] == 0)
        throw ContractError("pointset_distance: empty reference set");
    if (refs.shape[1] != point.size())
        throw ShapeError("pointset_distance: point dim " + std::to_string(point.size()) +
                         " vs refs " + shape_str(refs.shape));
    const size_t m = refs.shape[0], k = refs.shape[1];
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (size_t c = 0; c < k; ++c) {
            const double d = point[c] - refs.values[j * k + c];
            s += d * d;
        }
        best = std::min(best, s);
    }
    return std::sqrt(best);
}

double chamfer_distance(const Tensor& set_a, const Tensor& set_b) {
    if (set_a.rank() != 2 || set_b.rank() != 2 || set_a.shape[0] == 0 || set_b.shape[0] == 0)
        throw ContractError("chamfer_distance: empty set");
    const size_t k = set_a.shape[1];
    if (set_b.shape[1] != k)
        throw ShapeError("chamfer_distance: dims " + shape_str(set_a.shape) + " vs " +
                         shape_str(set_b.shape));
    double a_to_b = 0.0;
    for (size_t i = 0; i < set_a.shape[0]; ++i) {
        std::span<const double> row(set_a.values.data() + i * k, k);
        a_to_b += pointset_distance(row, set_b);
    }
    a_to_b /= static_cast<double>(set_a.shape[0]);
    double b_to_a = 0.0;
    for (size_t i = 0; i < set_b.shape[0]; ++i) {
        std::span<const double> row(set_b.values.data() + i * k, k);
        b_to_a += pointset_distance(row, set_a);
    }
    b_to_a /= static_cast<double>(set_b.shape[0]);
    return a_to_b + b_to_a;
}

double scattering(const Tensor& z_batch, const Tensor& b_batch, size_t i, double eps) {
    if (z_batch.rank() != 2 || b_batch.rank() != 2 || z_batch.shape[0] != b_batch.shape[0])
        throw ContractError("scattering: z/B row mismatch");
    const size_t n = z_batch.shape[0];
    if (n < 2) throw ContractError("scattering: need at least two samples");
    if (i >= n) throw ContractError("scattering: index out of range");
    const size_t lz = z_batch.shape[1], lb = b_batch.shape[1];
    double sum = 0.0;
    bool clamped = false;
    for (size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        double dz = 0.0;
        for (size_t c = 0; c < lz; ++c) {
            const double d = z_batch.values[i * lz + c] - z_batch.values[j * lz + c];
            dz += d * d;
        }
        double db = 0.0;
        for (size_t c = 0; c < lb; ++c) {
            const double d = b_batch.values[i * lb + c] - b_batch.values[j * lb + c];
            db += d * d;
        }
        double denom = std::sqrt(db);
        if (denom < eps) {
            denom = eps;
            clamped = true;
        }
        sum += std::sqrt(dz) / denom;
    }
    if (clamped)
        std::cerr << "[omas] scattering: coincident B outputs, denominator clamped to " << eps
                  << "\n";
    return sum / static_cast<double>(n - 1);
}

BoundaryLossParts boundary_loss(Tape& tape, DivergenceKind kind, const MlpSpec& critic_spec,
                                const ParamSet& critic, Var b_batch, const Tensor& g_metric_batch,
                                const Tensor& g_pool, const Tensor& z_batch, double mu, double nu,
                                double scatter_eps, bool chamfer) {
    if (mu < 0.0 || nu < 0.0) throw ContractError("boundary_loss: mu and nu must be >= 0");
    const Tensor& b_val = tape.value(b_batch);
    if (b_val.rank() != 2 || b_val.shape[0] == 0)
        throw ContractError("boundary_loss: empty B batch");
    if (g_metric_batch.rows() == 0 || g_pool.rows() == 0)
        throw ContractError("boundary_loss: empty G batch");
    const size_t n = b_val.shape[0];
    if (z_batch.rows() != n) throw ContractError("boundary_loss: z batch size mismatch");

    // G sits in the anchored (data) slot of the bound, mirroring the base
    // GAN objective; the conjugate side of the bound is what pushes B off
    // the support, and it saturates once the critic confidently rejects B,
    // so the escape is self-limiting.
    Var v_b = mlp_forward(tape, critic_spec, critic, b_batch);
    Var v_g = mlp_forward(tape, critic_spec, critic, tape.constant(g_metric_batch));
    Var metric = tape.neg(variational_bound_on_tape(tape, kind, v_g, v_b));

    Var pool = tape.constant(g_pool);
    Var dists = tape.cdist(b_batch, pool);
    Var distance = tape.mean(tape.min_reduce(dists, 1));
    if (chamfer) distance = tape.add(distance, tape.mean(tape.min_reduce(dists, 0)));

    // scattering as one matrix expression: sum over i != j of
    // ||z_i - z_j|| / (N (N-1) max(||B_i - B_j||, eps))
    Tensor weights(Shape{n, n});
    const size_t lz = z_batch.shape[1];
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double dz = 0.0;
            for (size_t c = 0; c < lz; ++c) {
                const double d = z_batch.values[i * lz + c] - z_batch.values[j * lz + c];
                dz += d * d;
            }
            weights.at(i, j) = std::sqrt(dz) * norm;
        }
    Var b_dists = tape.cdist(b_batch, b_batch);
    Var scatter = tape.sum(tape.mul(tape.constant(std::move(weights)),
                                    tape.recip_clamped(b_dists, scatter_eps)));

    BoundaryLossParts parts;
    parts.metric = metric;
    parts.distance = distance;
    parts.scatter = scatter;
    parts.total = tape.add(metric, tape.add(tape.affine(distance, mu, 0.0),
                                            tape.affine(scatter, nu, 0.0)));
    return parts;
}

namespace {

double mean_pairwise_distance(const Tensor& pts) {
    const size_t n = pts.shape[0], k = pts.shape[1];
    if (n < 2) return 0.0;
    double sum = 0.0;
    size_t count = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (size_t c = 0; c < k; ++c) {
                const double d = pts.values[i * k + c] - pts.values[j * k + c];
                s += d * d;
            }
            sum += std::sqrt(s);
            ++count;
        }
    return sum / static_cast<double>(count);
}

} // namespace

BoundaryOutput train_task2(const MlpSpec& g_spec, const ParamSet& g, const MlpSpec& critic_spec,
                           const ParamSet& task1_critic, const Task2Config& cfg) {
    if (cfg.pool < cfg.batch) throw ContractError("train_task2: pool Q must be >= batch N");
    if (cfg.batch < 2) throw ContractError("train_task2: batch must be >= 2");

    BoundaryOutput out;
    out.b = cfg.warmstart_b ? g : init_params(g_spec, derive_seed(cfg.seed, "task2/b"));
    if (cfg.warmstart_b && cfg.warmstart_scale != 1.0) {
        // scale the output layer so B starts just outside the support,
        // approaching the boundary from the out-of-distribution side
        const size_t last = out.b.manifest.size() - 2;
        size_t off = 0;
        for (size_t i = 0; i < last; ++i) off += shape_numel(out.b.manifest[i]);
        for (size_t i = off; i < out.b.values.size(); ++i)
            out.b.values[i] *= cfg.warmstart_scale;
    }
    out.critic = task1_critic;

    Adam opt_b(out.b.count(), cfg.lr_b, cfg.adam_beta1, cfg.adam_beta2);
    Adam opt_c(out.critic.count(), cfg.lr_critic, cfg.adam_beta1, cfg.adam_beta2, 1e-8,
               cfg.critic_weight_decay);
    Rng rng_z(cfg.seed, "task2/z");
    Rng rng_pool(cfg.seed, "task2/pool");

    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const Tensor pool = sample_generator(g_spec, g, cfg.pool, rng_pool);
        double m_sum = 0.0, d_sum = 0.0, s_sum = 0.0;
        try {
            for (size_t step = 0; step < cfg.steps_per_epoch; ++step) {
                // auxiliary critic updates: keep the bound tight as B moves
                for (int cs = 0; cs < cfg.critic_steps; ++cs) {
                    Tensor z = sample_latent(cfg.batch, g_spec.input_dim(), rng_z);
                    Tensor b_out = mlp_eval(g_spec, out.b, z);
                    Tensor g_out = sample_generator(g_spec, g, cfg.batch, rng_z);
                    Tape tape;
                    std::vector<int> ids;
                    Var v_g = mlp_forward(tape, critic_spec, out.critic, tape.constant(g_out), &ids);
                    Var v_b = mlp_forward(tape, critic_spec, out.critic, tape.constant(b_out), &ids);
                    Var loss = gan_d_loss(tape, cfg.critic_kind, v_g, v_b);
                    tape.backward(loss);
                    std::vector<double> grads = collect_gradients(tape, ids);
                    const size_t half = grads.size() / 2;
                    for (size_t i = 0; i < half; ++i) grads[i] += grads[half + i];
                    grads.resize(half);
                    opt_c.step(out.critic.values, grads);
                }
                // B update: minimize the boundary objective
                {
                    Tensor z = sample_latent(cfg.batch, g_spec.input_dim(), rng_z);
                    Tensor g_out = sample_generator(g_spec, g, cfg.batch, rng_z);
                    Tape tape;
                    std::vector<int> ids;
                    Var b_batch = mlp_forward(tape, g_spec, out.b, tape.constant(z), &ids);
                    BoundaryLossParts parts =
                        boundary_loss(tape, cfg.kind, critic_spec, out.critic, b_batch, g_out,
                                      pool, z, cfg.mu, cfg.nu, cfg.scatter_eps, cfg.chamfer);
                    tape.backward(parts.total);
                    opt_b.step(out.b.values, collect_gradients(tape, ids));
                    m_sum += tape.value(parts.metric).item();
                    d_sum += tape.value(parts.distance).item();
                    s_sum += tape.value(parts.scatter).item();
                }
            }
        } catch (const NumericError& e) {
            std::ostringstream trace;
            for (const auto& t : out.trace)
                trace << t.epoch << "," << t.metric_term << "," << t.distance_term << ","
                      << t.scatter_term << "\n";
            throw TrainingDivergedError("task2 diverged at epoch " + std::to_string(epoch) +
                                        ": " + e.what() + "\ntrace so far:\n" + trace.str());
        }
        const double steps = static_cast<double>(cfg.steps_per_epoch);
        out.trace.push_back({epoch, m_sum / steps, d_sum / steps, s_sum / steps});
    }

    Rng rng_final(cfg.seed, "task2/final");
    const Tensor final_b = mlp_eval(
        g_spec, out.b, sample_latent(std::min<size_t>(cfg.pool, 1024), g_spec.input_dim(), rng_final));
    out.final_mean_pairwise_dist = mean_pairwise_distance(final_b);
    return out;
}

} // namespace omas
