#pragma once

#include <vector>

#include "omas/nets.hpp"
#include "omas/task1.hpp"

namespace omas {

// Negative retraining: generator G' and discriminator C trained against
// real data, frozen Task-1 samples G(z), and frozen Task-2 boundary
// samples B(z). C separates the boundary from (x, G(z), G'(z)); G' learns
// the data while staying away from the boundary. The anomaly discriminator
// J is trained afterwards to flag boundary samples against x and G'(z).

struct Task3Config {
    size_t batch = 256;
    size_t epochs = 250;
    double lr_gprime = 2e-4;
    double lr_c = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double alpha = 0.35;
    double beta = 0.7;
    double gamma = 0.35;
    bool nonsaturating = false; // G' maximizes log C(G') instead
    bool warmstart_c = false;   // start C from the Task-1 critic
    bool warmstart_gprime = true;
    uint64_t seed = 0;
};

struct JConfig {
    size_t batch = 256;
    size_t epochs = 150;
    double lr = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    double delta = 0.5;
    uint64_t seed = 0;
};

struct EpochLossPair {
    size_t epoch;
    double first;  // c_loss / j_loss
    double second; // gprime_loss / 0
};

struct RetrainOutput {
    ParamSet gprime;
    ParamSet c;
    std::vector<EpochLossPair> trace;
};

struct JOutput {
    ParamSet j;
    std::vector<EpochLossPair> trace;
    double mean_j_boundary = 0.0; // post-training sanity readings
    double mean_j_real = 0.0;
};

// Probabilities are clamped to [1e-7, 1-1e-7] before every log.
constexpr double kProbClamp = 1e-7;

// Discriminator objective, negated for a minimizer:
//   -( E log(1-C(G')) + alpha E log C(x) + beta E log(1-C(B)) + gamma E log C(G) )
// Inputs are probability tensors (sigmoid already applied).
Var c_loss(Tape& tape, Var c_gprime, Var c_x, Var c_b, Var c_g, double alpha, double beta,
           double gamma);

// Generator objective E log(1 - C(G'(z))); the non-saturating variant
// minimizes -E log C(G') instead.
Var gprime_loss(Tape& tape, Var c_gprime, bool nonsaturating = false);

// Anomaly-discriminator objective, negated for a minimizer:
//   -( E log J(B) + delta E log(1-J(x)) + (1-delta) E log(1-J(G')) )
Var j_loss(Tape& tape, Var j_b, Var j_x, Var j_gprime, double delta);

// Weight constraints from the retraining objective; throws ConfigError.
void check_task3_weights(double alpha, double beta, double gamma, double delta);

RetrainOutput train_task3(const MlpSpec& g_spec, const ParamSet& g, const ParamSet& b,
                          const MlpSpec& critic_spec, const ParamSet& task1_critic,
                          const Task3Config& cfg, const Tensor& train_points);

JOutput train_j(const MlpSpec& g_spec, const ParamSet& b, const ParamSet& gprime,
                const MlpSpec& j_spec, const JConfig& cfg, const Tensor& train_points,
                const Tensor& val_points);

} // namespace omas
