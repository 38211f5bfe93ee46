#include "omas/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "omas/errors.hpp"

namespace omas {

namespace {

void check_scored_input(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ContractError("metrics: scores/labels size mismatch");
    if (scores.empty()) throw ContractError("metrics: empty input");
    for (double s : scores)
        if (!std::isfinite(s)) throw ContractError("metrics: non-finite score");
}

} // namespace

double auroc(std::span<const double> scores, std::span<const int> labels) {
    check_scored_input(scores, labels);
    size_t n_anom = 0;
    for (int l : labels) n_anom += (l != 0);
    const size_t n = scores.size();
    const size_t n_norm = n - n_anom;
    if (n_anom == 0 || n_norm == 0)
        throw ContractError("auroc: both classes must be present");
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    // midranks over tie groups; rank sum of the anomaly class gives U
    double rank_sum_anom = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j); // average of i+1 .. j
        for (size_t t = i; t < j; ++t)
            if (labels[order[t]] != 0) rank_sum_anom += midrank;
        i = j;
    }
    const double u = rank_sum_anom -
                     0.5 * static_cast<double>(n_anom) * static_cast<double>(n_anom + 1);
    return u / (static_cast<double>(n_anom) * static_cast<double>(n_norm));
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
    check_scored_input(scores, labels);
    size_t n_anom = 0;
    for (int l : labels) n_anom += (l != 0);
    if (n_anom == 0) throw ContractError("auprc: no anomalies present");
    const size_t n = scores.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });
    // sweep thresholds downward; a tie group enters as one step
    double area = 0.0;
    double prev_recall = 0.0;
    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        for (size_t t = i; t < j; ++t) {
            if (labels[order[t]] != 0)
                ++tp;
            else
                ++fp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(n_anom);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return area;
}

ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                   double tau) {
    check_scored_input(scores, labels);
    if (!std::isfinite(tau)) throw ContractError("threshold_metrics: tau must be finite");
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= tau;
        const bool anom = labels[i] != 0;
        if (pred && anom)
            ++tp;
        else if (pred && !anom)
            ++fp;
        else if (!pred && anom)
            ++fn;
        else
            ++tn;
    }
    ThresholdMetrics m;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
    m.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    if (tp + fp == 0) {
        m.precision = 0.0;
        m.precision_defined = false;
    } else {
        m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    }
    m.f1 = (m.precision + m.recall > 0.0)
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    return m;
}

Histogram score_histogram(std::span<const double> scores, std::span<const int> labels,
                          size_t bins, double lo, double hi) {
    check_scored_input(scores, labels);
    if (bins < 1) throw ContractError("score_histogram: bins must be >= 1");
    if (!(lo < hi)) throw ContractError("score_histogram: empty range");
    Histogram h;
    h.bin_edges.resize(bins + 1);
    for (size_t i = 0; i <= bins; ++i)
        h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    h.counts_normal.assign(bins, 0);
    h.counts_anomaly.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (size_t i = 0; i < scores.size(); ++i) {
        double s = scores[i];
        if (s < lo || s > hi) {
            s = std::clamp(s, lo, hi);
            ++h.clipped;
        }
        size_t bin = (s >= hi) ? bins - 1
                               : static_cast<size_t>(std::floor((s - lo) / width));
        bin = std::min(bin, bins - 1);
        if (labels[i] != 0)
            ++h.counts_anomaly[bin];
        else
            ++h.counts_normal[bin];
    }
    return h;
}

size_t mode_coverage(const std::vector<std::vector<double>>& samples,
                     const std::vector<std::vector<double>>& centers, double sigma,
                     double min_frac) {
    if (centers.empty()) throw ContractError("mode_coverage: no centers");
    std::vector<size_t> hits(centers.size(), 0);
    for (const auto& s : samples) {
        size_t best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (size_t c = 0; c < centers.size(); ++c) {
            double d2 = 0.0;
            for (size_t a = 0; a < s.size(); ++a) {
                const double d = s[a] - centers[c][a];
                d2 += d * d;
            }
            if (d2 < best_d2) {
                best_d2 = d2;
                best = c;
            }
        }
        if (best_d2 <= 9.0 * sigma * sigma) ++hits[best];
    }
    const double need = min_frac * static_cast<double>(samples.size());
    size_t covered = 0;
    for (size_t h : hits)
        if (static_cast<double>(h) >= need) ++covered;
    return covered;
}

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              double tau, size_t hist_bins) {
    MetricsReport r;
    r.auroc = auroc(scores, labels);
    r.auprc = auprc(scores, labels);
    const ThresholdMetrics t = threshold_metrics(scores, labels, tau);
    r.f1 = t.f1;
    r.precision = t.precision;
    r.recall = t.recall;
    r.accuracy = t.accuracy;
    r.precision_defined = t.precision_defined;
    r.threshold = tau;
    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    double lo = *lo_it, hi = *hi_it;
    if (!(lo < hi)) hi = lo + 1.0;
    const Histogram h = score_histogram(scores, labels, hist_bins, lo, hi);
    r.bin_edges = h.bin_edges;
    r.counts_normal = h.counts_normal;
    r.counts_anomaly = h.counts_anomaly;
    r.clipped = h.clipped;
    return r;
}

std::string MetricsReport::to_csv() const {
    char buf[64];
    std::string out = "metric,value\n";
    auto add = [&](const char* name, double v) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g\n", name, v);
        out += buf;
    };
    add("auroc", auroc);
    add("auprc", auprc);
    add("f1", f1);
    add("precision", precision);
    add("recall", recall);
    add("accuracy", accuracy);
    add("threshold", threshold);
    return out;
}

std::string MetricsReport::to_json() const {
    std::ostringstream out;
    out.precision(17);
    out << "{\n";
    out << "  \"auroc\": " << auroc << ",\n";
    out << "  \"auprc\": " << auprc << ",\n";
    out << "  \"f1\": " << f1 << ",\n";
    out << "  \"precision\": " << precision << ",\n";
    out << "  \"recall\": " << recall << ",\n";
    out << "  \"accuracy\": " << accuracy << ",\n";
    out << "  \"threshold\": " << threshold << ",\n";
    out << "  \"precision_defined\": " << (precision_defined ? "true" : "false") << ",\n";
    auto arr = [&out](const char* name, const auto& v, bool last) {
        out << "  \"" << name << "\": [";
        for (size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
        out << "]" << (last ? "\n" : ",\n");
    };
    arr("bin_edges", bin_edges, false);
    arr("counts_normal", counts_normal, false);
    arr("counts_anomaly", counts_anomaly, true);
    out << "}\n";
    return out.str();
}

} // namespace omas
