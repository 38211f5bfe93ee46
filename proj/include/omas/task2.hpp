#pragma once

#include <span>
#include <vector>

#include "omas/divergence.hpp"
#include "omas/nets.hpp"
#include "omas/task1.hpp"

namespace omas {

// Boundary generator B: emits out-of-distribution samples that sit on the
// support boundary of the trained generator G. B maximizes its divergence
// from G (negated metric term) while the point-set distance term keeps it
// near G's samples and the scattering term keeps it spread out.

struct Task2Config {
    DivergenceKind kind = DivergenceKind::JensenShannonGAN;        // B's metric term
    DivergenceKind critic_kind = DivergenceKind::JensenShannonGAN; // aux critic bound
    size_t batch = 256;       // N
    size_t pool = 1024;       // Q, generator samples for the distance term
    size_t epochs = 250;
    size_t steps_per_epoch = 16;
    double lr_b = 2e-4;
    double lr_critic = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double critic_weight_decay = 1e-3;
    double mu = 0.2;
    double nu = 0.25;
    double scatter_eps = 1e-8;
    int critic_steps = 1;      // auxiliary critic updates per B update
    bool chamfer = false;      // replace the min-distance term with Chamfer
    bool warmstart_b = true;    // initialize B from G's parameters
    double warmstart_scale = 1.5; // output-layer scale: B starts at scale*G(z)
    uint64_t seed = 0;
};

struct EpochLossBoundary {
    size_t epoch;
    double metric_term;
    double distance_term;
    double scatter_term;
};

struct BoundaryOutput {
    ParamSet b;
    ParamSet critic; // auxiliary critic that keeps the bound tight
    std::vector<EpochLossBoundary> trace;
    double final_mean_pairwise_dist = 0.0; // dispersion diagnostic of B samples
};

// Minimum Euclidean distance from one point to a reference set.
double pointset_distance(std::span<const double> point, const Tensor& refs);

// Symmetric Chamfer distance: mean min-distance A->B plus B->A.
double chamfer_distance(const Tensor& set_a, const Tensor& set_b);

// Scattering of sample i: (1/(N-1)) sum_{j != i} ||z_i - z_j|| / ||B_i - B_j||.
// Coincident outputs are guarded by eps (warned, not fatal).
double scattering(const Tensor& z_batch, const Tensor& b_batch, size_t i, double eps = 1e-8);

struct BoundaryLossParts {
    Var total;
    Var metric;   // -variational_bound(critic(G), critic(B)), G anchored
    Var distance; // batch mean of min distance to the pool (or Chamfer)
    Var scatter;  // batch mean scattering
};

// Assembles the boundary objective on the tape. b_batch must already be on
// the tape (typically the output of a trainable B forward); the critic and
// every reference batch are constants.
BoundaryLossParts boundary_loss(Tape& tape, DivergenceKind kind, const MlpSpec& critic_spec,
                                const ParamSet& critic, Var b_batch, const Tensor& g_metric_batch,
                                const Tensor& g_pool, const Tensor& z_batch, double mu, double nu,
                                double scatter_eps = 1e-8, bool chamfer = false);

// Alternating optimization: the auxiliary critic (warm-started from the
// Task-1 critic) maximizes the bound between B(z) and G(z); B minimizes the
// boundary objective. G stays frozen; the pool of Q generator samples is
// refreshed every epoch.
BoundaryOutput train_task2(const MlpSpec& g_spec, const ParamSet& g, const MlpSpec& critic_spec,
                           const ParamSet& task1_critic, const Task2Config& cfg);

} // namespace omas
