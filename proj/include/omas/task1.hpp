#pragma once

#include <functional>
#include <span>
#include <vector>

#include "omas/divergence.hpp"
#include "omas/nets.hpp"
#include "omas/tensor.hpp"

namespace omas {

// Base GAN: generator G and critic D trained on normal data with the
// variational f-divergence objective. The critic maximizes the bound, the
// generator minimizes it; both losses below are written for minimizers.

struct Task1Config {
    DivergenceKind kind = DivergenceKind::JensenShannonGAN;
    size_t batch = 256;
    size_t epochs = 400;
    double lr_g = 2e-4;
    double lr_d = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double critic_weight_decay = 1e-3; // keeps the critic out of saturation
    int critic_steps = 1; // critic updates per generator update
    size_t patience = 0;  // early stop on the validation bound; 0 disables
    uint64_t seed = 0;
};

struct EpochLossGan {
    size_t epoch;
    double d_loss;
    double g_loss;
};

struct Task1Output {
    ParamSet g;
    ParamSet d;
    std::vector<EpochLossGan> trace;
    size_t epochs_run = 0;
};

// Critic loss: negated variational bound (the critic ascends the bound).
Var gan_d_loss(Tape& tape, DivergenceKind kind, Var v_real, Var v_fake);

// Generator loss: -mean(f*(g_f(V_fake))); descending it tightens the bound
// from the generator side.
Var gan_g_loss(Tape& tape, DivergenceKind kind, Var v_fake);

// Classical saturating objective E log D + E log(1-D) over probabilities,
// kept as a sanity adapter for the sigmoid-critic view of the same game.
double classical_gan_objective(std::span<const double> d_real, std::span<const double> d_fake);

using EpochCallback = std::function<void(size_t epoch, const ParamSet& g, const ParamSet& d)>;

// Alternating training (critic_steps critic updates per generator update).
// Deterministic for a fixed seed. Throws TrainingDivergedError when a loss
// goes non-finite. With patience > 0, stops once the validation bound has
// not improved for that many epochs.
Task1Output train_task1(const MlpSpec& g_spec, const MlpSpec& d_spec, const Task1Config& cfg,
                        const Tensor& train_points, const Tensor& val_points,
                        const EpochCallback& on_epoch = {});

// Sample n points from the generator (z ~ N(0, I)).
Tensor sample_generator(const MlpSpec& g_spec, const ParamSet& g, size_t n, Rng& rng);
Tensor sample_latent(size_t n, size_t latent_dim, Rng& rng);

} // namespace omas
