#pragma once

#include <optional>
#include <span>
#include <vector>

#include "omas/divergence.hpp"
#include "omas/nets.hpp"

namespace omas {

// Anomaly scoring. The f-divergence point term is the negated
// g_f-activated raw critic score at x*: a critic trained to believe in the
// data assigns high V to normal points, so -g_f(V) grows with abnormality.
// It is min-max normalized over the validation set to make it commensurate
// with J's (0,1) output; test points more extreme than any validation point
// map outside [0,1], which preserves the ranking.

enum class ScoreMode { Full, Task3Only, Task1Only };

ScoreMode score_mode_from_string(const std::string& s);
const char* score_mode_name(ScoreMode m);

struct AnomalyVerdict {
    double score;
    double tau;
    bool is_anomaly; // score >= tau; equality counts as abnormal
};

// Affine calibration of the f-divergence term, fitted on validation data.
struct ScoreCalibration {
    double fdiv_min = 0.0;
    double fdiv_max = 1.0;
    double normalize(double raw) const {
        const double range = fdiv_max - fdiv_min;
        return range > 0.0 ? (raw - fdiv_min) / range : 0.0;
    }
};

// Raw (uncalibrated) f-divergence point score -g_f(V_critic(x*)).
double fdiv_point_score(const MlpSpec& critic_spec, const ParamSet& critic,
                        std::span<const double> x_star, DivergenceKind kind);
std::vector<double> fdiv_point_scores(const MlpSpec& critic_spec, const ParamSet& critic,
                                      const Tensor& points, DivergenceKind kind);

// Fit the min-max calibration on a validation set.
ScoreCalibration calibrate_fdiv(const MlpSpec& critic_spec, const ParamSet& critic,
                                const Tensor& val_points, DivergenceKind kind);

// Everything needed to score points in one mode.
struct Scorer {
    ScoreMode mode = ScoreMode::Full;
    DivergenceKind kind = DivergenceKind::JensenShannonGAN;
    MlpSpec critic_spec;          // D (Task1Only) or C (Full / Task3Only)
    ParamSet critic;
    std::optional<MlpSpec> j_spec; // Full mode only
    std::optional<ParamSet> j;
    double lambda = 1.0;
    ScoreCalibration calib;

    double score(std::span<const double> x_star) const;
    std::vector<double> score_batch(const Tensor& points) const;
};

// AS(x*) = J(x*) + lambda * normalized fdiv term (Full mode); the ablation
// modes use the normalized fdiv term of the respective critic alone.
double anomaly_score(const Scorer& scorer, std::span<const double> x_star);

AnomalyVerdict classify(double score, double tau);

// Nearest-rank quantile of a score set (q in [0,1]).
double score_quantile(std::vector<double> scores, double q);

} // namespace omas
