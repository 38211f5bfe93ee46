#include "omas/inference.hpp"

#include <algorithm>
#include <cmath>

namespace omas {

ScoreMode score_mode_from_string(const std::string& s) {
    if (s == "full") return ScoreMode::Full;
    if (s == "task3") return ScoreMode::Task3Only;
    if (s == "task1") return ScoreMode::Task1Only;
    throw ConfigError("unknown score mode '" + s + "' (expected full, task3, or task1)");
}

const char* score_mode_name(ScoreMode m) {
    switch (m) {
        case ScoreMode::Full: return "full";
        case ScoreMode::Task3Only: return "task3";
        case ScoreMode::Task1Only: return "task1";
    }
    return "?";
}

std::vector<double> fdiv_point_scores(const MlpSpec& critic_spec, const ParamSet& critic,
                                      const Tensor& points, DivergenceKind kind) {
    const Tensor v = mlp_eval(critic_spec, critic, points);
    std::vector<double> out(v.numel());
    for (size_t i = 0; i < v.numel(); ++i) out[i] = -output_activation(kind, v.values[i]);
    return out;
}

double fdiv_point_score(const MlpSpec& critic_spec, const ParamSet& critic,
                        std::span<const double> x_star, DivergenceKind kind) {
    Tensor p(Shape{1, x_star.size()});
    std::copy(x_star.begin(), x_star.end(), p.values.begin());
    return fdiv_point_scores(critic_spec, critic, p, kind)[0];
}

ScoreCalibration calibrate_fdiv(const MlpSpec& critic_spec, const ParamSet& critic,
                                const Tensor& val_points, DivergenceKind kind) {
    if (val_points.rows() == 0) throw ContractError("calibrate_fdiv: empty validation set");
    const std::vector<double> raw = fdiv_point_scores(critic_spec, critic, val_points, kind);
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    return ScoreCalibration{*lo, *hi};
}

std::vector<double> Scorer::score_batch(const Tensor& points) const {
    std::vector<double> fdiv = fdiv_point_scores(critic_spec, critic, points, kind);
    for (double& v : fdiv) v = calib.normalize(v);
    if (mode != ScoreMode::Full) return fdiv;
    if (!j_spec || !j)
        throw ConfigError("full score mode requires a trained J discriminator");
    const Tensor jout = mlp_eval(*j_spec, *j, points);
    std::vector<double> out(points.rows());
    for (size_t i = 0; i < out.size(); ++i) out[i] = jout.values[i] + lambda * fdiv[i];
    return out;
}

double Scorer::score(std::span<const double> x_star) const {
    Tensor p(Shape{1, x_star.size()});
    std::copy(x_star.begin(), x_star.end(), p.values.begin());
    return score_batch(p)[0];
}

double anomaly_score(const Scorer& scorer, std::span<const double> x_star) {
    return scorer.score(x_star);
}

AnomalyVerdict classify(double score, double tau) {
    return AnomalyVerdict{score, tau, score >= tau};
}

double score_quantile(std::vector<double> scores, double q) {
    if (scores.empty()) throw ContractError("score_quantile: empty input");
    if (q < 0.0 || q > 1.0) throw ContractError("score_quantile: q must be in [0,1]");
    std::sort(scores.begin(), scores.end());
    const double pos = q * static_cast<double>(scores.size());
    size_t rank = static_cast<size_t>(std::ceil(pos));
    if (rank == 0) rank = 1;
    rank = std::min(rank, scores.size());
    return scores[rank - 1];
}

} // namespace omas
