#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "omas/pipeline.hpp"

namespace {

omas::TrainConfig load_config(const std::string& config_path, int64_t seed_override,
                              const std::string& data_override) {
    omas::TrainConfig cfg =
        config_path.empty() ? omas::TrainConfig{} : omas::parse_config(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
    if (!data_override.empty()) {
        cfg.dataset = omas::DatasetKind::Csv;
        cfg.csv_path = data_override;
    }
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"OMASGAN boundary-sample anomaly detection pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    int64_t seed_override = -1;
    std::string data_override;
    app.add_option("--config", config_path, "config file (key = value lines)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_override, "override the config seed");
    app.add_option("--data", data_override, "CSV dataset path (overrides config dataset)");

    auto* synth = app.add_subcommand("synth", "generate the configured dataset as CSV");

    std::string stage = "all";
    auto* train = app.add_subcommand("train", "train pipeline stages");
    train->add_option("--stage", stage, "task1|task2|task3|j|all")->capture_default_str();

    std::string mode_str = "full";
    bool use_grid = false;
    std::string score_data;
    auto* score = app.add_subcommand("score", "score test points");
    score->add_option("--mode", mode_str, "full|task3|task1")->capture_default_str();
    score->add_flag("--grid", use_grid, "score the evaluation grid instead of the test set");
    score->add_option("--points", score_data, "CSV of points to score (default: task test set)");

    std::string eval_mode_str = "full";
    std::string scores_path;
    auto* evaluate = app.add_subcommand("evaluate", "compute metrics from a score CSV");
    evaluate->add_option("--mode", eval_mode_str, "full|task3|task1")->capture_default_str();
    evaluate->add_option("--scores", scores_path, "score CSV (default: out/scores_<mode>.csv)");

    auto* ablate = app.add_subcommand("ablate", "compare full/task3/task1 score modes");
    auto* seeds = app.add_subcommand("seeds", "repeat the pipeline across the seed list");

    CLI11_PARSE(app, argc, argv);

    try {
        const omas::TrainConfig cfg = load_config(config_path, seed_override, data_override);
        omas::RunPaths paths{out_dir};

        if (synth->parsed()) {
            omas::run_synth(cfg, out_dir);
            std::cout << "wrote " << paths.dataset_csv() << "\n";
        } else if (train->parsed()) {
            omas::run_train(cfg, out_dir, stage);
            std::cout << "stage " << stage << " complete; artifacts in " << out_dir << "\n";
        } else if (score->parsed()) {
            const omas::ScoreMode mode = omas::score_mode_from_string(mode_str);
            if (!score_data.empty()) {
                omas::PointCloudDataset pts = omas::load_csv(score_data);
                const std::vector<int>* labels = pts.labeled() ? &pts.labels : nullptr;
                omas::run_score(cfg, out_dir, mode, pts.points, labels);
            } else if (use_grid) {
                omas::Tensor grid = omas::make_grid(cfg);
                std::vector<int> labels = omas::grid_truth_labels(cfg, grid);
                omas::run_score(cfg, out_dir, mode, grid, &labels);
            } else {
                omas::run_score_testset(cfg, out_dir, mode);
            }
            std::cout << "wrote " << paths.scores_csv(mode) << "\n";
        } else if (evaluate->parsed()) {
            const omas::ScoreMode mode = omas::score_mode_from_string(eval_mode_str);
            const std::string src = scores_path.empty() ? paths.scores_csv(mode) : scores_path;
            const omas::MetricsReport r = omas::run_evaluate(cfg, out_dir, mode, src);
            std::cout << r.to_csv();
        } else if (ablate->parsed()) {
            const omas::AblateResult r = omas::run_ablate(cfg, out_dir);
            std::cout << "auroc full=" << r.auroc_full << " task3=" << r.auroc_task3
                      << " task1=" << r.auroc_task1 << "\n";
        } else if (seeds->parsed()) {
            const omas::SeedsResult r = omas::run_seeds(cfg, out_dir);
            std::cout << "full-mode auroc mean=" << r.auroc_mean << " sd=" << r.auroc_sd << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
