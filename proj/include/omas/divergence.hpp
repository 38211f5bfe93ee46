#pragma once

#include <span>
#include <string>

#include "omas/autodiff.hpp"

namespace omas {

// f-divergence variational machinery. Each kind binds one conjugate f*
// and one output activation g_f; the variational lower bound
//
//   bound = mean_p g_f(V) - mean_q f*(g_f(V))
//
// over raw critic scores V is the distribution metric used by every
// training objective here.
enum class DivergenceKind { JensenShannonGAN, KL, PearsonChiSq };

DivergenceKind divergence_from_string(const std::string& s);
const char* divergence_name(DivergenceKind k);

// Fenchel conjugate f*(t).
//   JensenShannonGAN: -log(2 - e^t), domain t < log 2
//   KL:               e^(t-1)
//   PearsonChiSq:     0.25 t^2 + t
double conjugate(DivergenceKind kind, double t);

// Output activation g_f(v) mapping a raw critic score into dom f*.
//   JensenShannonGAN: -log(1 + e^-v), numerically stabilized
//   KL, PearsonChiSq: v
double output_activation(DivergenceKind kind, double v);

// Variational lower bound on the divergence between the distributions the
// two score batches were drawn from.
double variational_bound(DivergenceKind kind, std::span<const double> scores_p,
                         std::span<const double> scores_q);

// Tape versions (elementwise over a score tensor) for training.
Var gf_on_tape(Tape& tape, DivergenceKind kind, Var v);
Var conjugate_gf_on_tape(Tape& tape, DivergenceKind kind, Var v); // f*(g_f(v))
Var variational_bound_on_tape(Tape& tape, DivergenceKind kind, Var scores_p, Var scores_q);

} // namespace omas
