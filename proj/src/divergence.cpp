#include "omas/divergence.hpp"

#include <cmath>

namespace omas {

DivergenceKind divergence_from_string(const std::string& s) {
    if (s == "js" || s == "jensen-shannon" || s == "jensen_shannon_gan")
        return DivergenceKind::JensenShannonGAN;
    if (s == "kl") return DivergenceKind::KL;
    if (s == "pearson" || s == "pearson_chi_sq") return DivergenceKind::PearsonChiSq;
    throw ConfigError("unknown divergence '" + s + "' (expected js, kl, or pearson)");
}

const char* divergence_name(DivergenceKind k) {
    switch (k) {
        case DivergenceKind::JensenShannonGAN: return "js";
        case DivergenceKind::KL: return "kl";
        case DivergenceKind::PearsonChiSq: return "pearson";
    }
    return "?";
}

namespace {

constexpr double kLog2 = 0.6931471805599453094;

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

} // namespace

double conjugate(DivergenceKind kind, double t) {
    switch (kind) {
        case DivergenceKind::JensenShannonGAN:
            if (t >= kLog2)
                throw DomainError("conjugate(js): t = " + std::to_string(t) +
                                  " outside domain t < log 2");
            return -std::log(2.0 - std::exp(t));
        case DivergenceKind::KL:
            return std::exp(t - 1.0);
        case DivergenceKind::PearsonChiSq:
            return 0.25 * t * t + t;
    }
    return 0.0;
}

double output_activation(DivergenceKind kind, double v) {
    switch (kind) {
        case DivergenceKind::JensenShannonGAN:
            return -softplus(-v);
        case DivergenceKind::KL:
        case DivergenceKind::PearsonChiSq:
            return v;
    }
    return 0.0;
}

double variational_bound(DivergenceKind kind, std::span<const double> scores_p,
                         std::span<const double> scores_q) {
    if (scores_p.empty() || scores_q.empty())
        throw ContractError("variational_bound: empty score batch");
    double p = 0.0;
    for (double v : scores_p) p += output_activation(kind, v);
    p /= static_cast<double>(scores_p.size());
    double q = 0.0;
    for (double v : scores_q) q += conjugate(kind, output_activation(kind, v));
    q /= static_cast<double>(scores_q.size());
    return p - q;
}

Var gf_on_tape(Tape& tape, DivergenceKind kind, Var v) {
    switch (kind) {
        case DivergenceKind::JensenShannonGAN:
            // -log(1 + e^-v) = -softplus(-v)
            return tape.neg(tape.softplus(tape.neg(v)));
        case DivergenceKind::KL:
        case DivergenceKind::PearsonChiSq:
            return v;
    }
    return v;
}

Var conjugate_gf_on_tape(Tape& tape, DivergenceKind kind, Var v) {
    switch (kind) {
        case DivergenceKind::JensenShannonGAN: {
            // f*(g_f(v)) = -log(2 - e^{g_f(v)}) with e^{g_f(v)} = sigmoid(v)
            Var sig = tape.sigmoid(v);
            return tape.neg(tape.log(tape.affine(sig, -1.0, 2.0)));
        }
        case DivergenceKind::KL:
            // e^{v-1}
            return tape.exp(tape.affine(v, 1.0, -1.0));
        case DivergenceKind::PearsonChiSq: {
            // 0.25 v^2 + v
            return tape.add(tape.affine(tape.square(v), 0.25, 0.0), v);
        }
    }
    return v;
}

Var variational_bound_on_tape(Tape& tape, DivergenceKind kind, Var scores_p, Var scores_q) {
    Var p = tape.mean(gf_on_tape(tape, kind, scores_p));
    Var q = tape.mean(conjugate_gf_on_tape(tape, kind, scores_q));
    return tape.sub(p, q);
}

} // namespace omas
