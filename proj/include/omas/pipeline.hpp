#pragma once

#include <string>
#include <vector>

#include "omas/config.hpp"
#include "omas/data.hpp"
#include "omas/inference.hpp"
#include "omas/metrics.hpp"
#include "omas/nets.hpp"

namespace omas {

// File layout inside an output directory. Checkpoints keep the binary
// format from nets.hpp; traces and scores are plain CSV; the manifest and
// the inference calibration are JSON.
struct RunPaths {
    std::string out_dir;

    std::string checkpoint(const std::string& name) const;
    std::string trace(const std::string& name) const;
    std::string scores_csv(ScoreMode mode) const;
    std::string metrics_csv(ScoreMode mode) const;
    std::string metrics_json(ScoreMode mode) const;
    std::string dataset_csv() const;
    std::string manifest() const;
    std::string inference_json() const;
    std::string ablate_csv() const;
    std::string seeds_detail_csv() const;
    std::string seeds_summary_csv() const;

    void ensure_dirs() const;
};

MlpSpec make_generator_spec(const TrainConfig& cfg);
MlpSpec make_critic_spec(const TrainConfig& cfg);
MlpSpec make_j_spec(const TrainConfig& cfg);

// Deterministic dataset / task construction from the config.
PointCloudDataset make_dataset(const TrainConfig& cfg);
ADTask make_task(const TrainConfig& cfg, const PointCloudDataset& ds);

// Ground truth for grid evaluation: a grid point is normal when it lies in
// the support of the configured dataset (within 3 sigma of a mixture
// center, inside the disk, or inside the ring).
std::vector<int> grid_truth_labels(const TrainConfig& cfg, const Tensor& grid);
Tensor make_grid(const TrainConfig& cfg);

// Stage execution. `stage` is one of task1, task2, task3, j, all. Missing
// upstream checkpoints raise DependencyError naming the stage to run
// first. When cfg.sweep is set, the stage is grid-run over the sweep
// values and the combination with the lowest validation loss-term sum is
// the one persisted.
void run_train(const TrainConfig& cfg, const std::string& out_dir, const std::string& stage);

// Write the configured dataset as CSV.
void run_synth(const TrainConfig& cfg, const std::string& out_dir);

// Build a scorer for a mode from the artifacts in out_dir.
Scorer build_scorer(const TrainConfig& cfg, const std::string& out_dir, ScoreMode mode);
double stored_tau(const std::string& out_dir, ScoreMode mode);

// Score a point set (defaults to the task's test set) and write the score
// CSV. Returns the scores in input order.
std::vector<double> run_score(const TrainConfig& cfg, const std::string& out_dir, ScoreMode mode,
                              const Tensor& points, const std::vector<int>* labels);
std::vector<double> run_score_testset(const TrainConfig& cfg, const std::string& out_dir,
                                      ScoreMode mode);

// Compute metrics from a score CSV (must contain labels) and write the
// metric reports.
MetricsReport run_evaluate(const TrainConfig& cfg, const std::string& out_dir, ScoreMode mode,
                           const std::string& scores_csv);

struct AblateResult {
    double auroc_full;
    double auroc_task3;
    double auroc_task1;
};

// Score the evaluation set under all three modes and emit the comparison
// table. Requires a fully trained pipeline in out_dir.
AblateResult run_ablate(const TrainConfig& cfg, const std::string& out_dir);

struct SeedsResult {
    std::vector<uint64_t> seeds;
    std::vector<MetricsReport> full_reports; // one per seed, full mode
    std::vector<AblateResult> ablations;     // one per seed
    double auroc_mean = 0.0;
    double auroc_sd = 0.0;
};

// Repeat the whole pipeline for every seed in cfg.seed_list (isolated
// subdirectories), evaluate each, and emit per-seed and mean +/- SD tables.
SeedsResult run_seeds(const TrainConfig& cfg, const std::string& out_dir);

// Score CSV helpers (index,score[,label],verdict rows).
void write_scores_csv(const std::string& path, std::span<const double> scores,
                      const std::vector<int>* labels, double tau);
struct LoadedScores {
    std::vector<double> scores;
    std::vector<int> labels;
    bool has_labels = false;
};
LoadedScores load_scores_csv(const std::string& path);

} // namespace omas
