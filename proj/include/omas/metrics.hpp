#pragma once

#include <span>
#include <string>
#include <vector>

namespace omas {

// One scored evaluation. Anomaly is the positive class throughout: higher
// score means more anomalous, and a point with score >= threshold is
// predicted anomalous.
struct MetricsReport {
    double auroc = 0.0;
    double auprc = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double accuracy = 0.0;
    double threshold = 0.0;
    bool precision_defined = true; // false when nothing was predicted positive

    std::vector<double> bin_edges;
    std::vector<size_t> counts_normal;
    std::vector<size_t> counts_anomaly;
    size_t clipped = 0; // out-of-range scores folded into edge bins

    std::string to_csv() const;
    std::string to_json() const;
};

// Probability that a random anomaly outscores a random normal, ties 0.5.
// Computed by midrank statistic; exactly equal to the O(n^2) pairwise count.
double auroc(std::span<const double> scores, std::span<const int> labels);

// Area under precision-recall via step interpolation over all thresholds
// (ties enter together; no trapezoids).
double auprc(std::span<const double> scores, std::span<const int> labels);

struct ThresholdMetrics {
    double f1 = 0.0, precision = 0.0, recall = 0.0, accuracy = 0.0;
    bool precision_defined = true;
};

ThresholdMetrics threshold_metrics(std::span<const double> scores, std::span<const int> labels,
                                   double tau);

struct Histogram {
    std::vector<double> bin_edges; // bins+1 edges
    std::vector<size_t> counts_normal;
    std::vector<size_t> counts_anomaly;
    size_t clipped = 0;
};

// Left-closed right-open bins; the last bin is right-closed. Scores outside
// the range are clipped into the edge bins and counted.
Histogram score_histogram(std::span<const double> scores, std::span<const int> labels,
                          size_t bins, double lo, double hi);

// Number of centers receiving at least min_frac of the samples, where a
// sample counts toward its nearest center and only within 3*sigma of it.
size_t mode_coverage(const std::vector<std::vector<double>>& samples,
                     const std::vector<std::vector<double>>& centers, double sigma,
                     double min_frac);

MetricsReport evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                              double tau, size_t hist_bins = 20);

} // namespace omas
