#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "omas/errors.hpp"
#include "omas/metrics.hpp"
#include "omas/rng.hpp"

using namespace omas;

namespace {

// exhaustive O(n^2) pairwise oracle, ties count 0.5
double auroc_pairwise(const std::vector<double>& scores, const std::vector<int>& labels) {
    double num = 0.0;
    size_t pairs = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] == 0) continue;
        for (size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                num += 1.0;
            else if (scores[i] == scores[j])
                num += 0.5;
        }
    }
    return num / static_cast<double>(pairs);
}

// threshold-sweep oracle for step-interpolated AUPRC
double auprc_sweep(const std::vector<double>& scores, const std::vector<int>& labels) {
    std::vector<double> thresholds = scores;
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    size_t n_anom = 0;
    for (int l : labels) n_anom += (l != 0);
    double area = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        size_t tp = 0, fp = 0;
        for (size_t i = 0; i < scores.size(); ++i) {
            if (scores[i] >= t) {
                if (labels[i] != 0)
                    ++tp;
                else
                    ++fp;
            }
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(n_anom);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return area;
}

void random_scored_set(Rng& rng, size_t n, std::vector<double>& scores, std::vector<int>& labels) {
    scores.resize(n);
    labels.resize(n);
    const bool quantize = rng.uniform() < 0.4; // force ties sometimes
    for (size_t i = 0; i < n; ++i) {
        double s = rng.uniform(-1.0, 1.0);
        if (quantize) s = std::round(s * 8.0) / 8.0;
        scores[i] = s;
        labels[i] = rng.uniform() < 0.3 ? 1 : 0;
    }
    // guarantee both classes
    labels[0] = 1;
    labels[n - 1] = 0;
}

} // namespace

TEST_CASE("auroc examples") {
    CHECK(auroc(std::vector<double>{0.9, 0.8, 0.1, 0.2}, std::vector<int>{1, 1, 0, 0}) ==
          doctest::Approx(1.0));
    CHECK(auroc(std::vector<double>{0.9, 0.3, 0.4, 0.1}, std::vector<int>{1, 1, 0, 0}) ==
          doctest::Approx(0.75));
    CHECK(auroc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 1, 0, 0}) ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(auroc(std::vector<double>{1.0, 2.0}, std::vector<int>{1, 1}), ContractError);
}

TEST_CASE("auroc equals the pairwise oracle exactly") {
    Rng rng(2024);
    for (int round = 0; round < 200; ++round) {
        std::vector<double> scores;
        std::vector<int> labels;
        random_scored_set(rng, 2 + rng.below(200), scores, labels);
        CHECK(auroc(scores, labels) == auroc_pairwise(scores, labels)); // exact
    }
}

TEST_CASE("auroc invariances") {
    Rng rng(55);
    for (int round = 0; round < 50; ++round) {
        std::vector<double> scores;
        std::vector<int> labels;
        random_scored_set(rng, 2 + rng.below(100), scores, labels);

        // strictly increasing transform leaves the rank statistic unchanged
        std::vector<double> warped = scores;
        for (double& s : warped) s = std::exp(0.7 * s) + 3.0;
        CHECK(auroc(scores, labels) == auroc(warped, labels));

        // tie-free inputs: flipping scores complements the area
        std::vector<double> jittered = scores;
        for (size_t i = 0; i < jittered.size(); ++i)
            jittered[i] += 1e-9 * static_cast<double>(i + 1);
        std::vector<double> negated = jittered;
        for (double& s : negated) s = -s;
        CHECK(auroc(jittered, labels) + auroc(negated, labels) == doctest::Approx(1.0));
    }
}

TEST_CASE("auprc matches the sweep oracle") {
    CHECK(auprc(std::vector<double>{0.9, 0.8, 0.1, 0.2}, std::vector<int>{1, 1, 0, 0}) ==
          doctest::Approx(1.0));
    // all ties collapse to prevalence
    CHECK(auprc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, std::vector<int>{1, 0, 0, 0}) ==
          doctest::Approx(0.25));

    Rng rng(321);
    for (int round = 0; round < 100; ++round) {
        std::vector<double> scores;
        std::vector<int> labels;
        random_scored_set(rng, 2 + rng.below(150), scores, labels);
        CHECK(auprc(scores, labels) == doctest::Approx(auprc_sweep(scores, labels)).epsilon(1e-12));
    }

    // single anomaly ranked last
    std::vector<double> scores{0.9, 0.8, 0.7, 0.1};
    std::vector<int> labels{0, 0, 0, 1};
    CHECK(auprc(scores, labels) == doctest::Approx(auprc_sweep(scores, labels)).epsilon(1e-12));
}

TEST_CASE("threshold metrics") {
    const std::vector<double> scores{0.9, 0.8, 0.2, 0.1};
    const std::vector<int> labels{1, 1, 0, 0};
    SUBCASE("perfect separation") {
        const ThresholdMetrics m = threshold_metrics(scores, labels, 0.5);
        CHECK(m.f1 == doctest::Approx(1.0));
        CHECK(m.precision == doctest::Approx(1.0));
        CHECK(m.recall == doctest::Approx(1.0));
        CHECK(m.accuracy == doctest::Approx(1.0));
    }
    SUBCASE("threshold below all scores") {
        const ThresholdMetrics m = threshold_metrics(scores, labels, 0.0);
        CHECK(m.recall == doctest::Approx(1.0));
        CHECK(m.accuracy == doctest::Approx(0.5)); // prevalence
    }
    SUBCASE("nothing predicted positive") {
        const ThresholdMetrics m = threshold_metrics(scores, labels, 2.0);
        CHECK_FALSE(m.precision_defined);
        CHECK(m.precision == 0.0);
    }
    SUBCASE("hand-computed confusion matrix") {
        // tau = 0.5: predictions {1,1,0,0} on labels {1,0,1,0}
        const ThresholdMetrics m =
            threshold_metrics(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<int>{1, 0, 1, 0},
                              0.5);
        CHECK(m.precision == doctest::Approx(0.5));
        CHECK(m.recall == doctest::Approx(0.5));
        CHECK(m.accuracy == doctest::Approx(0.5));
        CHECK(m.f1 == doctest::Approx(0.5));
    }
}

TEST_CASE("score histogram") {
    const std::vector<double> scores{0.0, 0.5, 1.0};
    const std::vector<int> labels{0, 0, 1};
    const Histogram h = score_histogram(scores, labels, 2, 0.0, 1.0);
    REQUIRE(h.counts_normal.size() == 2);
    CHECK(h.counts_normal[0] == 1);       // 0.0 in [0, 0.5)
    CHECK(h.counts_normal[1] == 1);       // 0.5 in [0.5, 1]
    CHECK(h.counts_anomaly[1] == 1);      // 1.0 in the closed last bin
    CHECK(h.clipped == 0);

    const Histogram h2 = score_histogram(std::vector<double>{-5.0, 7.0}, std::vector<int>{0, 1}, 4,
                                         0.0, 1.0);
    CHECK(h2.clipped == 2);
    CHECK(h2.counts_normal[0] == 1);
    CHECK(h2.counts_anomaly[3] == 1);

    size_t total = 0;
    for (size_t i = 0; i < h.counts_normal.size(); ++i)
        total += h.counts_normal[i] + h.counts_anomaly[i];
    CHECK(total == scores.size());

    CHECK_THROWS_AS(score_histogram(scores, labels, 2, 1.0, 1.0), ContractError);
}

TEST_CASE("mode coverage") {
    std::vector<std::vector<double>> centers;
    for (int m = 0; m < 8; ++m) {
        const double a = 2.0 * 3.14159265358979 * m / 8;
        centers.push_back({5.0 * std::cos(a), 5.0 * std::sin(a)});
    }
    SUBCASE("samples exactly at all centers") {
        CHECK(mode_coverage(centers, centers, 0.2, 0.1) == 8);
    }
    SUBCASE("all samples at one center") {
        std::vector<std::vector<double>> samples(100, centers[0]);
        CHECK(mode_coverage(samples, centers, 0.2, 0.02) == 1);
    }
    SUBCASE("matches a brute-force nearest-center tally") {
        Rng rng(8);
        std::vector<std::vector<double>> samples;
        for (int i = 0; i < 500; ++i) {
            const size_t m = rng.below(8);
            samples.push_back({centers[m][0] + rng.gaussian(0.0, 0.2),
                               centers[m][1] + rng.gaussian(0.0, 0.2)});
        }
        // independent tally
        std::vector<size_t> tally(8, 0);
        for (const auto& s : samples) {
            size_t best = 0;
            double bd = 1e300;
            for (size_t c = 0; c < 8; ++c) {
                const double d = std::hypot(s[0] - centers[c][0], s[1] - centers[c][1]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (bd <= 0.6) ++tally[best];
        }
        size_t covered = 0;
        for (size_t t : tally)
            if (static_cast<double>(t) >= 0.02 * 500.0) ++covered;
        CHECK(mode_coverage(samples, centers, 0.2, 0.02) == covered);
    }
}
