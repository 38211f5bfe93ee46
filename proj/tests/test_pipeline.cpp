#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "omas/pipeline.hpp"

using namespace omas;
namespace fs = std::filesystem;

namespace {

// Small-everything config that runs the full pipeline in seconds.
TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.dataset = DatasetKind::Disk;
    cfg.disk_radius = 1.0;
    cfg.data_n = 256;
    cfg.batch = 32;
    cfg.pool = 64;
    cfg.hidden = {8, 8};
    cfg.task1_epochs = 3;
    cfg.task2_epochs = 3;
    cfg.task2_steps_per_epoch = 2;
    cfg.task3_epochs = 3;
    cfg.j_epochs = 3;
    cfg.grid_res = 8;
    cfg.grid_lo = -2.0;
    cfg.grid_hi = 2.0;
    cfg.seed = 0;
    return cfg;
}

std::string fresh_dir(const char* name) {
    const std::string dir = (fs::temp_directory_path() / name).string();
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("stage dependencies are enforced by name") {
    const TrainConfig cfg = tiny_config();
    const std::string dir = fresh_dir("omas_pipe_dep");
    try {
        run_train(cfg, dir, "task2");
        FAIL("expected DependencyError");
    } catch (const DependencyError& e) {
        CHECK(std::string(e.what()).find("task1") != std::string::npos);
    }
    try {
        run_train(cfg, dir, "j");
        FAIL("expected DependencyError");
    } catch (const DependencyError& e) {
        CHECK(std::string(e.what()).find("task2") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("full tiny pipeline produces artifacts, scores and metrics") {
    const TrainConfig cfg = tiny_config();
    const std::string dir = fresh_dir("omas_pipe_full");
    run_train(cfg, dir, "all");
    RunPaths paths{dir};
    for (const char* name : {"g", "d", "b", "bcritic", "gprime", "c", "j"})
        CHECK(fs::exists(paths.checkpoint(name)));
    for (const char* name : {"task1", "task2", "task3", "j"})
        CHECK(fs::exists(paths.trace(name)));
    CHECK(fs::exists(paths.manifest()));
    CHECK(fs::exists(paths.inference_json()));

    // trace headers
    CHECK(slurp(paths.trace("task1")).substr(0, 20) == "epoch,d_loss,g_loss\n");
    CHECK(slurp(paths.trace("task2")).substr(0, 30) == "epoch,metric,distance,scatter\n");

    const std::vector<double> scores = run_score_testset(cfg, dir, ScoreMode::Full);
    CHECK(fs::exists(paths.scores_csv(ScoreMode::Full)));
    CHECK(scores.size() == make_task(cfg, make_dataset(cfg)).test.rows());

    const MetricsReport r1 =
        run_evaluate(cfg, dir, ScoreMode::Full, paths.scores_csv(ScoreMode::Full));
    const std::string metrics_a = slurp(paths.metrics_csv(ScoreMode::Full));
    const MetricsReport r2 =
        run_evaluate(cfg, dir, ScoreMode::Full, paths.scores_csv(ScoreMode::Full));
    const std::string metrics_b = slurp(paths.metrics_csv(ScoreMode::Full));
    CHECK(metrics_a == metrics_b); // re-evaluation is reproducible
    CHECK(r1.auroc == r2.auroc);
    fs::remove_all(dir);
}

TEST_CASE("stage-by-stage equals stage all (identical checkpoint bytes)") {
    const TrainConfig cfg = tiny_config();
    const std::string dir_all = fresh_dir("omas_pipe_all");
    const std::string dir_seq = fresh_dir("omas_pipe_seq");
    run_train(cfg, dir_all, "all");
    for (const char* stage : {"task1", "task2", "task3", "j"}) run_train(cfg, dir_seq, stage);
    RunPaths pa{dir_all}, ps{dir_seq};
    for (const char* name : {"g", "d", "b", "bcritic", "gprime", "c", "j"}) {
        INFO("checkpoint ", name);
        CHECK(slurp(pa.checkpoint(name)) == slurp(ps.checkpoint(name)));
    }
    fs::remove_all(dir_all);
    fs::remove_all(dir_seq);
}

TEST_CASE("score csv round trip and verdict column") {
    const std::string dir = fresh_dir("omas_pipe_csv");
    fs::create_directories(dir);
    const std::string path = dir + "/scores.csv";
    const std::vector<double> scores{0.1, 0.9, 0.5};
    const std::vector<int> labels{0, 1, 0};
    write_scores_csv(path, scores, &labels, 0.5);
    const LoadedScores back = load_scores_csv(path);
    REQUIRE(back.has_labels);
    CHECK(back.scores == scores);
    CHECK(back.labels == labels);
    const std::string text = slurp(path);
    CHECK(text.find("index,score,label,verdict") == 0);
    CHECK(text.find("abnormal") != std::string::npos);
    CHECK(text.find("normal") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("grid truth labels match the configured support") {
    TrainConfig cfg = tiny_config();
    cfg.dataset = DatasetKind::Disk;
    cfg.disk_radius = 1.0;
    const Tensor grid = make_grid(cfg);
    const std::vector<int> labels = grid_truth_labels(cfg, grid);
    for (size_t i = 0; i < grid.rows(); ++i) {
        const double r = std::hypot(grid.at(i, 0), grid.at(i, 1));
        CHECK(labels[i] == (r <= 1.0 ? 0 : 1));
    }

    cfg.dataset = DatasetKind::Mixture;
    cfg.modes = 2;
    cfg.mode_radius = 2.0;
    cfg.sigma = 0.2;
    const std::vector<int> mixture_labels = grid_truth_labels(cfg, grid);
    for (size_t i = 0; i < grid.rows(); ++i) {
        const double d1 = std::hypot(grid.at(i, 0) - 2.0, grid.at(i, 1));
        const double d2 = std::hypot(grid.at(i, 0) + 2.0, grid.at(i, 1));
        CHECK(mixture_labels[i] == (std::min(d1, d2) <= 0.6 ? 0 : 1));
    }
}

TEST_CASE("sweep picks the better combination") {
    TrainConfig cfg = tiny_config();
    cfg.sweep = "task1_epochs:1,4";
    const std::string dir = fresh_dir("omas_pipe_sweep");
    run_train(cfg, dir, "task1");
    RunPaths paths{dir};
    CHECK(fs::exists(paths.checkpoint("g")));
    const std::string manifest = slurp(paths.manifest());
    CHECK(manifest.find("sweep_task1") != std::string::npos);
    CHECK(manifest.find("val_loss") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("synth writes a loadable dataset") {
    TrainConfig cfg = tiny_config();
    cfg.dataset = DatasetKind::Mixture;
    cfg.modes = 3;
    cfg.data_n = 99;
    const std::string dir = fresh_dir("omas_pipe_synth");
    run_synth(cfg, dir);
    RunPaths paths{dir};
    const PointCloudDataset ds = load_csv(paths.dataset_csv());
    CHECK(ds.size() == 99);
    CHECK(ds.labeled());
    fs::remove_all(dir);
}
