#include "omas/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "omas/task1.hpp"
#include "omas/task2.hpp"
#include "omas/task3.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace omas {

std::string RunPaths::checkpoint(const std::string& name) const {
    return out_dir + "/checkpoints/" + name + ".omas";
}
std::string RunPaths::trace(const std::string& name) const {
    return out_dir + "/traces/" + name + ".csv";
}
std::string RunPaths::scores_csv(ScoreMode mode) const {
    return out_dir + "/scores_" + score_mode_name(mode) + ".csv";
}
std::string RunPaths::metrics_csv(ScoreMode mode) const {
    return out_dir + "/metrics_" + score_mode_name(mode) + ".csv";
}
std::string RunPaths::metrics_json(ScoreMode mode) const {
    return out_dir + "/metrics_" + score_mode_name(mode) + ".json";
}
std::string RunPaths::dataset_csv() const { return out_dir + "/dataset.csv"; }
std::string RunPaths::manifest() const { return out_dir + "/manifest.json"; }
std::string RunPaths::inference_json() const { return out_dir + "/inference.json"; }
std::string RunPaths::ablate_csv() const { return out_dir + "/ablate.csv"; }
std::string RunPaths::seeds_detail_csv() const { return out_dir + "/seeds_detail.csv"; }
std::string RunPaths::seeds_summary_csv() const { return out_dir + "/seeds_summary.csv"; }

void RunPaths::ensure_dirs() const {
    fs::create_directories(out_dir + "/checkpoints");
    fs::create_directories(out_dir + "/traces");
}

MlpSpec make_generator_spec(const TrainConfig& cfg) {
    return generator_spec(cfg.latent_dim, cfg.data_dim, cfg.hidden);
}
MlpSpec make_critic_spec(const TrainConfig& cfg) { return critic_spec(cfg.data_dim, cfg.hidden); }
MlpSpec make_j_spec(const TrainConfig& cfg) {
    MlpSpec spec = critic_spec(cfg.data_dim, cfg.hidden);
    spec.output = OutputTransform::Sigmoid;
    return spec;
}

PointCloudDataset make_dataset(const TrainConfig& cfg) {
    switch (cfg.dataset) {
        case DatasetKind::Mixture:
            return gen_gaussian_mixture(cfg.modes, cfg.mode_radius, cfg.sigma, cfg.data_n,
                                        cfg.seed);
        case DatasetKind::Disk:
            return gen_disk(cfg.disk_radius, cfg.data_n, cfg.seed);
        case DatasetKind::Ring:
            return gen_ring(cfg.ring_r_in, cfg.ring_r_out, cfg.data_n, cfg.seed);
        case DatasetKind::Csv: {
            PointCloudDataset ds = load_csv(cfg.csv_path);
            if (ds.dim() != cfg.data_dim)
                throw ConfigError("csv dataset has dim " + std::to_string(ds.dim()) +
                                  " but data_dim = " + std::to_string(cfg.data_dim));
            return ds;
        }
    }
    throw ConfigError("unreachable dataset kind");
}

Tensor make_grid(const TrainConfig& cfg) {
    std::vector<std::pair<double, double>> bounds(cfg.data_dim, {cfg.grid_lo, cfg.grid_hi});
    std::vector<size_t> res(cfg.data_dim, cfg.grid_res);
    return grid_points(bounds, res);
}

std::vector<int> grid_truth_labels(const TrainConfig& cfg, const Tensor& grid) {
    const size_t n = grid.rows(), k = grid.shape[1];
    std::vector<int> labels(n, 1);
    switch (cfg.dataset) {
        case DatasetKind::Mixture: {
            const double tau = 2.0 * 3.141592653589793238462643383279502884;
            std::vector<std::pair<double, double>> centers;
            for (size_t m = 0; m < cfg.modes; ++m) {
                const double angle = tau * static_cast<double>(m) / static_cast<double>(cfg.modes);
                centers.emplace_back(cfg.mode_radius * std::cos(angle),
                                     cfg.mode_radius * std::sin(angle));
            }
            const double r2 = 9.0 * cfg.sigma * cfg.sigma;
            for (size_t i = 0; i < n; ++i) {
                for (const auto& c : centers) {
                    const double dx = grid.at(i, 0) - c.first;
                    const double dy = grid.at(i, 1) - c.second;
                    if (dx * dx + dy * dy <= r2) {
                        labels[i] = 0;
                        break;
                    }
                }
            }
            break;
        }
        case DatasetKind::Disk: {
            for (size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (size_t c = 0; c < k; ++c) s += grid.at(i, c) * grid.at(i, c);
                if (s <= cfg.disk_radius * cfg.disk_radius) labels[i] = 0;
            }
            break;
        }
        case DatasetKind::Ring: {
            for (size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (size_t c = 0; c < k; ++c) s += grid.at(i, c) * grid.at(i, c);
                if (s >= cfg.ring_r_in * cfg.ring_r_in && s <= cfg.ring_r_out * cfg.ring_r_out)
                    labels[i] = 0;
            }
            break;
        }
        case DatasetKind::Csv:
            throw ConfigError("grid ground truth is only defined for synthetic datasets");
    }
    return labels;
}

ADTask make_task(const TrainConfig& cfg, const PointCloudDataset& ds) {
    switch (cfg.protocol) {
        case TaskProtocol::Support: {
            Tensor grid = make_grid(cfg);
            std::vector<int> labels = grid_truth_labels(cfg, grid);
            return build_support_task(ds, cfg.train_frac, cfg.val_frac, cfg.seed, std::move(grid),
                                      std::move(labels));
        }
        case TaskProtocol::LOO:
            return build_loo_task(ds, cfg.special_class, cfg.train_frac, cfg.val_frac, cfg.seed);
        case TaskProtocol::OCC:
            return build_occ_task(ds, cfg.special_class, cfg.train_frac, cfg.val_frac, cfg.seed);
    }
    throw ConfigError("unreachable protocol");
}

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ContractError("cannot write " + path);
    f << text;
}

json load_json_or(const std::string& path, json fallback) {
    std::ifstream f(path);
    if (!f) return fallback;
    json j;
    f >> j;
    return j;
}

void update_manifest(const RunPaths& paths, const TrainConfig& cfg,
                     const std::string& section, json entry) {
    json manifest = load_json_or(paths.manifest(), json::object());
    json cfg_json = json::object();
    for (const auto& [k, v] : cfg.snapshot()) cfg_json[k] = v;
    manifest["config"] = cfg_json;
    manifest[section] = std::move(entry);
    write_text(paths.manifest(), manifest.dump(2) + "\n");
}

void require_checkpoint(const RunPaths& paths, const std::string& name,
                        const std::string& needed_stage, const std::string& for_stage) {
    if (!fs::exists(paths.checkpoint(name)))
        throw DependencyError("stage " + for_stage + ": missing checkpoint " +
                              paths.checkpoint(name) + "; run --stage " + needed_stage +
                              " first");
}

struct InferenceEntry {
    double fdiv_min = 0.0, fdiv_max = 1.0, tau = 0.5;
};

json inference_to_json(const json& existing, const std::string& mode, const InferenceEntry& e,
                       double lambda) {
    json j = existing;
    j["lambda"] = lambda;
    j[mode] = {{"fdiv_min", e.fdiv_min}, {"fdiv_max", e.fdiv_max}, {"tau", e.tau}};
    return j;
}

InferenceEntry inference_entry(const json& j, const std::string& mode) {
    if (!j.contains(mode))
        throw DependencyError("inference.json has no calibration for mode " + mode +
                              "; train the corresponding stage first");
    InferenceEntry e;
    e.fdiv_min = j[mode]["fdiv_min"].get<double>();
    e.fdiv_max = j[mode]["fdiv_max"].get<double>();
    e.tau = j[mode]["tau"].get<double>();
    return e;
}

std::string gan_trace_csv(const std::vector<EpochLossGan>& trace) {
    std::ostringstream out;
    out << "epoch,d_loss,g_loss\n";
    char buf[96];
    for (const auto& e : trace) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e.epoch, e.d_loss, e.g_loss);
        out << buf;
    }
    return out.str();
}

std::string boundary_trace_csv(const std::vector<EpochLossBoundary>& trace) {
    std::ostringstream out;
    out << "epoch,metric,distance,scatter\n";
    char buf[128];
    for (const auto& e : trace) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.metric_term,
                      e.distance_term, e.scatter_term);
        out << buf;
    }
    return out.str();
}

std::string pair_trace_csv(const std::vector<EpochLossPair>& trace, const char* a, const char* b) {
    std::ostringstream out;
    out << "epoch," << a;
    if (b) out << "," << b;
    out << "\n";
    char buf[128];
    for (const auto& e : trace) {
        if (b)
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", e.epoch, e.first, e.second);
        else
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e.epoch, e.first);
        out << buf;
    }
    return out.str();
}

Task1Config task1_config(const TrainConfig& cfg) {
    Task1Config t;
    t.kind = cfg.divergence;
    t.batch = cfg.batch;
    t.epochs = cfg.task1_epochs;
    t.lr_g = cfg.task1_lr;
    t.lr_d = cfg.task1_lr;
    t.adam_beta1 = cfg.adam_beta1;
    t.adam_beta2 = cfg.adam_beta2;
    t.critic_steps = cfg.critic_steps;
    t.critic_weight_decay = cfg.critic_weight_decay;
    t.patience = cfg.patience;
    t.seed = derive_seed(cfg.seed, "stage/task1");
    return t;
}

Task2Config task2_config(const TrainConfig& cfg) {
    Task2Config t;
    t.kind = cfg.task2_kind();
    t.critic_kind = cfg.task2_critic_kind();
    t.critic_steps = cfg.critic_steps;
    t.batch = cfg.batch;
    t.pool = cfg.pool;
    t.epochs = cfg.task2_epochs;
    t.steps_per_epoch = cfg.task2_steps_per_epoch;
    t.lr_b = cfg.task2_lr;
    t.lr_critic = cfg.task2_lr;
    t.adam_beta1 = cfg.adam_beta1;
    t.adam_beta2 = cfg.adam_beta2;
    t.critic_weight_decay = cfg.critic_weight_decay;
    t.mu = cfg.mu;
    t.nu = cfg.nu;
    t.scatter_eps = cfg.scatter_eps;
    t.chamfer = cfg.chamfer;
    t.warmstart_b = cfg.task2_warmstart_b;
    t.warmstart_scale = cfg.task2_warmstart_scale;
    t.seed = derive_seed(cfg.seed, "stage/task2");
    return t;
}

Task3Config task3_config(const TrainConfig& cfg) {
    Task3Config t;
    t.batch = cfg.batch;
    t.epochs = cfg.task3_epochs;
    t.lr_gprime = cfg.task3_lr;
    t.lr_c = cfg.task3_lr;
    t.adam_beta1 = cfg.adam_beta1;
    t.adam_beta2 = cfg.adam_beta2;
    t.alpha = cfg.alpha;
    t.beta = cfg.beta;
    t.gamma = cfg.gamma;
    t.nonsaturating = cfg.task3_nonsaturating;
    t.warmstart_c = cfg.task3_warmstart_c;
    t.warmstart_gprime = cfg.task3_warmstart_gprime;
    t.seed = derive_seed(cfg.seed, "stage/task3");
    return t;
}

JConfig j_config(const TrainConfig& cfg) {
    JConfig t;
    t.batch = cfg.batch;
    t.epochs = cfg.j_epochs;
    t.lr = cfg.j_lr;
    t.adam_beta1 = cfg.adam_beta1;
    t.adam_beta2 = cfg.adam_beta2;
    t.delta = cfg.delta;
    t.seed = derive_seed(cfg.seed, "stage/j");
    return t;
}

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Normalized fdiv scores on a point set for a stored calibration.
std::vector<double> normalized_fdiv_scores(const TrainConfig& cfg, const MlpSpec& spec,
                                           const ParamSet& critic, const Tensor& pts,
                                           const ScoreCalibration& calib) {
    std::vector<double> s = fdiv_point_scores(spec, critic, pts, cfg.divergence);
    for (double& v : s) v = calib.normalize(v);
    return s;
}

// --- single-stage runners -------------------------------------------------

void run_task1_stage(const TrainConfig& cfg, const RunPaths& paths) {
    const auto t0 = std::chrono::steady_clock::now();
    PointCloudDataset ds = make_dataset(cfg);
    ADTask task = make_task(cfg, ds);
    const MlpSpec g_spec = make_generator_spec(cfg);
    const MlpSpec d_spec = make_critic_spec(cfg);
    Task1Output out = train_task1(g_spec, d_spec, task1_config(cfg), task.train, task.val);
    save_checkpoint(out.g, paths.checkpoint("g"));
    save_checkpoint(out.d, paths.checkpoint("d"));
    write_text(paths.trace("task1"), gan_trace_csv(out.trace));

    // task1-mode calibration + threshold from the validation set
    const ParamSet d = load_checkpoint(paths.checkpoint("d"), d_spec);
    const ScoreCalibration calib = calibrate_fdiv(d_spec, d, task.val, cfg.divergence);
    std::vector<double> val_scores = normalized_fdiv_scores(cfg, d_spec, d, task.val, calib);
    InferenceEntry e{calib.fdiv_min, calib.fdiv_max,
                     score_quantile(val_scores, cfg.tau_quantile)};
    json inf = load_json_or(paths.inference_json(), json::object());
    write_text(paths.inference_json(),
               inference_to_json(inf, "task1", e, cfg.lambda).dump(2) + "\n");

    update_manifest(paths, cfg, "task1",
                    {{"checkpoints", {paths.checkpoint("g"), paths.checkpoint("d")}},
                     {"trace", paths.trace("task1")},
                     {"epochs_run", out.epochs_run},
                     {"wall_s", wall_seconds(t0)}});
}

void run_task2_stage(const TrainConfig& cfg, const RunPaths& paths) {
    const auto t0 = std::chrono::steady_clock::now();
    require_checkpoint(paths, "g", "task1", "task2");
    require_checkpoint(paths, "d", "task1", "task2");
    const MlpSpec g_spec = make_generator_spec(cfg);
    const MlpSpec d_spec = make_critic_spec(cfg);
    const ParamSet g = load_checkpoint(paths.checkpoint("g"), g_spec);
    const ParamSet d = load_checkpoint(paths.checkpoint("d"), d_spec);
    BoundaryOutput out = train_task2(g_spec, g, d_spec, d, task2_config(cfg));
    save_checkpoint(out.b, paths.checkpoint("b"));
    save_checkpoint(out.critic, paths.checkpoint("bcritic"));
    write_text(paths.trace("task2"), boundary_trace_csv(out.trace));
    update_manifest(paths, cfg, "task2",
                    {{"checkpoints", {paths.checkpoint("b"), paths.checkpoint("bcritic")}},
                     {"trace", paths.trace("task2")},
                     {"mean_pairwise_dist", out.final_mean_pairwise_dist},
                     {"wall_s", wall_seconds(t0)}});
}

void run_task3_stage(const TrainConfig& cfg, const RunPaths& paths) {
    const auto t0 = std::chrono::steady_clock::now();
    require_checkpoint(paths, "g", "task1", "task3");
    require_checkpoint(paths, "b", "task2", "task3");
    require_checkpoint(paths, "d", "task1", "task3");
    PointCloudDataset ds = make_dataset(cfg);
    ADTask task = make_task(cfg, ds);
    const MlpSpec g_spec = make_generator_spec(cfg);
    const MlpSpec d_spec = make_critic_spec(cfg);
    const ParamSet g = load_checkpoint(paths.checkpoint("g"), g_spec);
    const ParamSet b = load_checkpoint(paths.checkpoint("b"), g_spec);
    const ParamSet d = load_checkpoint(paths.checkpoint("d"), d_spec);
    RetrainOutput out = train_task3(g_spec, g, b, d_spec, d, task3_config(cfg), task.train);
    save_checkpoint(out.gprime, paths.checkpoint("gprime"));
    save_checkpoint(out.c, paths.checkpoint("c"));
    write_text(paths.trace("task3"), pair_trace_csv(out.trace, "c_loss", "gprime_loss"));

    const ParamSet c = load_checkpoint(paths.checkpoint("c"), d_spec);
    const ScoreCalibration calib = calibrate_fdiv(d_spec, c, task.val, cfg.divergence);
    std::vector<double> val_scores = normalized_fdiv_scores(cfg, d_spec, c, task.val, calib);
    InferenceEntry e{calib.fdiv_min, calib.fdiv_max,
                     score_quantile(val_scores, cfg.tau_quantile)};
    json inf = load_json_or(paths.inference_json(), json::object());
    write_text(paths.inference_json(),
               inference_to_json(inf, "task3", e, cfg.lambda).dump(2) + "\n");

    update_manifest(paths, cfg, "task3",
                    {{"checkpoints", {paths.checkpoint("gprime"), paths.checkpoint("c")}},
                     {"trace", paths.trace("task3")},
                     {"wall_s", wall_seconds(t0)}});
}

void run_j_stage(const TrainConfig& cfg, const RunPaths& paths) {
    const auto t0 = std::chrono::steady_clock::now();
    require_checkpoint(paths, "b", "task2", "j");
    require_checkpoint(paths, "gprime", "task3", "j");
    require_checkpoint(paths, "c", "task3", "j");
    PointCloudDataset ds = make_dataset(cfg);
    ADTask task = make_task(cfg, ds);
    const MlpSpec g_spec = make_generator_spec(cfg);
    const MlpSpec d_spec = make_critic_spec(cfg);
    const MlpSpec j_spec = make_j_spec(cfg);
    const ParamSet b = load_checkpoint(paths.checkpoint("b"), g_spec);
    const ParamSet gprime = load_checkpoint(paths.checkpoint("gprime"), g_spec);
    JOutput out = train_j(g_spec, b, gprime, j_spec, j_config(cfg), task.train, task.val);
    save_checkpoint(out.j, paths.checkpoint("j"));
    write_text(paths.trace("j"), pair_trace_csv(out.trace, "j_loss", nullptr));

    // full-mode calibration: fdiv term from C, threshold from full scores
    const ParamSet c = load_checkpoint(paths.checkpoint("c"), d_spec);
    const ParamSet j_params = load_checkpoint(paths.checkpoint("j"), j_spec);
    const ScoreCalibration calib = calibrate_fdiv(d_spec, c, task.val, cfg.divergence);
    Scorer scorer;
    scorer.mode = ScoreMode::Full;
    scorer.kind = cfg.divergence;
    scorer.critic_spec = d_spec;
    scorer.critic = c;
    scorer.j_spec = j_spec;
    scorer.j = j_params;
    scorer.lambda = cfg.lambda;
    scorer.calib = calib;
    std::vector<double> val_scores = scorer.score_batch(task.val);
    InferenceEntry e{calib.fdiv_min, calib.fdiv_max,
                     score_quantile(val_scores, cfg.tau_quantile)};
    json inf = load_json_or(paths.inference_json(), json::object());
    write_text(paths.inference_json(),
               inference_to_json(inf, "full", e, cfg.lambda).dump(2) + "\n");

    update_manifest(paths, cfg, "j",
                    {{"checkpoints", {paths.checkpoint("j")}},
                     {"trace", paths.trace("j")},
                     {"mean_j_boundary", out.mean_j_boundary},
                     {"mean_j_real", out.mean_j_real},
                     {"wall_s", wall_seconds(t0)}});
}

void run_stage_once(const TrainConfig& cfg, const RunPaths& paths, const std::string& stage) {
    if (stage == "task1")
        run_task1_stage(cfg, paths);
    else if (stage == "task2")
        run_task2_stage(cfg, paths);
    else if (stage == "task3")
        run_task3_stage(cfg, paths);
    else if (stage == "j")
        run_j_stage(cfg, paths);
    else if (stage == "all") {
        run_task1_stage(cfg, paths);
        run_task2_stage(cfg, paths);
        run_task3_stage(cfg, paths);
        run_j_stage(cfg, paths);
    } else {
        throw ConfigError("unknown stage '" + stage + "' (expected task1, task2, task3, j, all)");
    }
}

// --- hyperparameter sweep ---------------------------------------------------

struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

std::vector<SweepAxis> parse_sweep(const std::string& spec) {
    std::vector<SweepAxis> axes;
    std::stringstream ss(spec);
    std::string entry;
    while (std::getline(ss, entry, ';')) {
        if (entry.empty()) continue;
        const size_t colon = entry.find(':');
        if (colon == std::string::npos)
            throw ConfigError("sweep: entry '" + entry + "' is not key:v1,v2,...");
        SweepAxis axis;
        axis.key = entry.substr(0, colon);
        std::stringstream vs(entry.substr(colon + 1));
        std::string v;
        while (std::getline(vs, v, ',')) axis.values.push_back(v);
        if (axis.values.empty()) throw ConfigError("sweep: key '" + axis.key + "' has no values");
        axes.push_back(std::move(axis));
    }
    if (axes.empty()) throw ConfigError("sweep: empty sweep spec");
    return axes;
}

// Validation loss-term sum for one stage under one candidate config:
// the unweighted sum of the stage's loss terms on held-out data.
double stage_validation_loss(const TrainConfig& cfg, const std::string& stage,
                             const RunPaths& paths) {
    PointCloudDataset ds = make_dataset(cfg);
    ADTask task = make_task(cfg, ds);
    const MlpSpec g_spec = make_generator_spec(cfg);
    const MlpSpec d_spec = make_critic_spec(cfg);
    Rng rng(cfg.seed, "sweep/val");
    if (stage == "task1") {
        Task1Output out = train_task1(g_spec, d_spec, task1_config(cfg), task.train, task.val);
        const Tensor fake = sample_generator(g_spec, out.g, task.val.rows(), rng);
        const Tensor vr = mlp_eval(d_spec, out.d, task.val);
        const Tensor vf = mlp_eval(d_spec, out.d, fake);
        return variational_bound(cfg.divergence, vr.values, vf.values);
    }
    if (stage == "task2") {
        const ParamSet g = load_checkpoint(paths.checkpoint("g"), g_spec);
        const ParamSet d = load_checkpoint(paths.checkpoint("d"), d_spec);
        BoundaryOutput out = train_task2(g_spec, g, d_spec, d, task2_config(cfg));
        if (out.trace.empty()) return 0.0;
        const auto& last = out.trace.back();
        return last.metric_term + last.distance_term + last.scatter_term;
    }
    if (stage == "task3") {
        const ParamSet g = load_checkpoint(paths.checkpoint("g"), g_spec);
        const ParamSet b = load_checkpoint(paths.checkpoint("b"), g_spec);
        const ParamSet d = load_checkpoint(paths.checkpoint("d"), d_spec);
        RetrainOutput out = train_task3(g_spec, g, b, d_spec, d, task3_config(cfg), task.train);
        if (out.trace.empty()) return 0.0;
        return out.trace.back().first + out.trace.back().second;
    }
    if (stage == "j") {
        const MlpSpec j_spec = make_j_spec(cfg);
        const ParamSet b = load_checkpoint(paths.checkpoint("b"), g_spec);
        const ParamSet gprime = load_checkpoint(paths.checkpoint("gprime"), g_spec);
        JOutput out = train_j(g_spec, b, gprime, j_spec, j_config(cfg), task.train, task.val);
        return out.trace.empty() ? 0.0 : out.trace.back().first;
    }
    throw ConfigError("sweep: stage '" + stage + "' cannot be swept");
}

void run_stage_sweep(const TrainConfig& base, const RunPaths& paths, const std::string& stage) {
    const std::vector<SweepAxis> axes = parse_sweep(base.sweep);
    std::vector<size_t> idx(axes.size(), 0);
    TrainConfig best_cfg = base;
    double best_loss = 0.0;
    bool have_best = false;
    json tried = json::array();
    while (true) {
        TrainConfig cand = base;
        cand.sweep.clear();
        json combo = json::object();
        for (size_t a = 0; a < axes.size(); ++a) {
            apply_config_entry(cand, axes[a].key, axes[a].values[idx[a]]);
            combo[axes[a].key] = axes[a].values[idx[a]];
        }
        cand.validate();
        const double loss = stage_validation_loss(cand, stage, paths);
        combo["val_loss"] = loss;
        tried.push_back(combo);
        if (!have_best || loss < best_loss) {
            best_loss = loss;
            best_cfg = cand;
            have_best = true;
        }
        size_t a = 0;
        for (; a < axes.size(); ++a) {
            if (++idx[a] < axes[a].values.size()) break;
            idx[a] = 0;
        }
        if (a == axes.size()) break;
    }
    run_stage_once(best_cfg, paths, stage);
    json manifest = load_json_or(paths.manifest(), json::object());
    manifest["sweep_" + stage] = {{"tried", tried}, {"best_val_loss", best_loss}};
    write_text(paths.manifest(), manifest.dump(2) + "\n");
}

} // namespace

void run_train(const TrainConfig& cfg, const std::string& out_dir, const std::string& stage) {
    cfg.validate();
    RunPaths paths{out_dir};
    paths.ensure_dirs();
    if (!cfg.sweep.empty() && stage != "all")
        run_stage_sweep(cfg, paths, stage);
    else
        run_stage_once(cfg, paths, stage);
}

void run_synth(const TrainConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    RunPaths paths{out_dir};
    paths.ensure_dirs();
    PointCloudDataset ds = make_dataset(cfg);
    save_csv(ds, paths.dataset_csv());
    update_manifest(paths, cfg, "synth",
                    {{"dataset", paths.dataset_csv()}, {"points", ds.size()}});
}

double stored_tau(const std::string& out_dir, ScoreMode mode) {
    RunPaths paths{out_dir};
    json inf = load_json_or(paths.inference_json(), json::object());
    return inference_entry(inf, score_mode_name(mode)).tau;
}

Scorer build_scorer(const TrainConfig& cfg, const std::string& out_dir, ScoreMode mode) {
    RunPaths paths{out_dir};
    const MlpSpec d_spec = make_critic_spec(cfg);
    json inf = load_json_or(paths.inference_json(), json::object());
    Scorer s;
    s.mode = mode;
    s.kind = cfg.divergence;
    s.lambda = cfg.lambda;
    if (mode == ScoreMode::Task1Only) {
        require_checkpoint(paths, "d", "task1", "score");
        s.critic_spec = d_spec;
        s.critic = load_checkpoint(paths.checkpoint("d"), d_spec);
        const InferenceEntry e = inference_entry(inf, "task1");
        s.calib = ScoreCalibration{e.fdiv_min, e.fdiv_max};
        return s;
    }
    require_checkpoint(paths, "c", "task3", "score");
    s.critic_spec = d_spec;
    s.critic = load_checkpoint(paths.checkpoint("c"), d_spec);
    const InferenceEntry e = inference_entry(inf, mode == ScoreMode::Full ? "full" : "task3");
    s.calib = ScoreCalibration{e.fdiv_min, e.fdiv_max};
    if (mode == ScoreMode::Full) {
        require_checkpoint(paths, "j", "j", "score");
        const MlpSpec j_spec = make_j_spec(cfg);
        s.j_spec = j_spec;
        s.j = load_checkpoint(paths.checkpoint("j"), j_spec);
    }
    return s;
}

void write_scores_csv(const std::string& path, std::span<const double> scores,
                      const std::vector<int>* labels, double tau) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ContractError("cannot write " + path);
    f << (labels ? "index,score,label,verdict\n" : "index,score,verdict\n");
    char buf[128];
    for (size_t i = 0; i < scores.size(); ++i) {
        const AnomalyVerdict v = classify(scores[i], tau);
        if (labels)
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%d,%s\n", i, scores[i], (*labels)[i],
                          v.is_anomaly ? "abnormal" : "normal");
        else
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%s\n", i, scores[i],
                          v.is_anomaly ? "abnormal" : "normal");
        f << buf;
    }
}

LoadedScores load_scores_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ContractError("cannot open scores file " + path);
    std::string line;
    if (!std::getline(f, line)) throw ContractError(path + ": empty scores file");
    LoadedScores out;
    out.has_labels = line.find(",label,") != std::string::npos;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) throw ContractError(path + ": malformed row '" + line + "'");
        out.scores.push_back(std::stod(cells[1]));
        if (out.has_labels) out.labels.push_back(std::stoi(cells[2]));
    }
    return out;
}

std::vector<double> run_score(const TrainConfig& cfg, const std::string& out_dir, ScoreMode mode,
                              const Tensor& points, const std::vector<int>* labels) {
    cfg.validate();
    RunPaths paths{out_dir};
    Scorer scorer = build_scorer(cfg, out_dir, mode);
    const double tau = stored_tau(out_dir, mode);
    std::vector<double> scores = scorer.score_batch(points);
    write_scores_csv(paths.scores_csv(mode), scores, labels, tau);
    json manifest = load_json_or(paths.manifest(), json::object());
    manifest["score_" + std::string(score_mode_name(mode))] = {
        {"scores", paths.scores_csv(mode)}, {"points", scores.size()}, {"tau", tau}};
    write_text(paths.manifest(), manifest.dump(2) + "\n");
    return scores;
}

std::vector<double> run_score_testset(const TrainConfig& cfg, const std::string& out_dir,
                                      ScoreMode mode) {
    PointCloudDataset ds = make_dataset(cfg);
    ADTask task = make_task(cfg, ds);
    return run_score(cfg, out_dir, mode, task.test, &task.test_labels);
}

MetricsReport run_evaluate(const TrainConfig& cfg, const std::string& out_dir, ScoreMode mode,
                           const std::string& scores_csv) {
    cfg.validate();
    RunPaths paths{out_dir};
    const LoadedScores loaded = load_scores_csv(scores_csv);
    if (!loaded.has_labels)
        throw ContractError("evaluate: " + scores_csv + " has no label column");
    const double tau = stored_tau(out_dir, mode);
    MetricsReport report =
        evaluate_scores(loaded.scores, loaded.labels, tau, cfg.hist_bins);
    write_text(paths.metrics_csv(mode), report.to_csv());
    write_text(paths.metrics_json(mode), report.to_json());
    json manifest = load_json_or(paths.manifest(), json::object());
    manifest["metrics_" + std::string(score_mode_name(mode))] = {
        {"csv", paths.metrics_csv(mode)},
        {"json", paths.metrics_json(mode)},
        {"auroc", report.auroc},
        {"auprc", report.auprc}};
    write_text(paths.manifest(), manifest.dump(2) + "\n");
    return report;
}

AblateResult run_ablate(const TrainConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    RunPaths paths{out_dir};
    AblateResult result{};
    char buf[160];
    std::string table = "mode,auroc,auprc,f1,precision,recall,accuracy\n";
    for (ScoreMode mode : {ScoreMode::Full, ScoreMode::Task3Only, ScoreMode::Task1Only}) {
        run_score_testset(cfg, out_dir, mode);
        MetricsReport r = run_evaluate(cfg, out_dir, mode, paths.scores_csv(mode));
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      score_mode_name(mode), r.auroc, r.auprc, r.f1, r.precision, r.recall,
                      r.accuracy);
        table += buf;
        if (mode == ScoreMode::Full)
            result.auroc_full = r.auroc;
        else if (mode == ScoreMode::Task3Only)
            result.auroc_task3 = r.auroc;
        else
            result.auroc_task1 = r.auroc;
    }
    write_text(paths.ablate_csv(), table);
    json manifest = load_json_or(paths.manifest(), json::object());
    manifest["ablate"] = {{"table", paths.ablate_csv()},
                          {"auroc_full", result.auroc_full},
                          {"auroc_task3", result.auroc_task3},
                          {"auroc_task1", result.auroc_task1}};
    write_text(paths.manifest(), manifest.dump(2) + "\n");
    return result;
}

SeedsResult run_seeds(const TrainConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    RunPaths paths{out_dir};
    paths.ensure_dirs();
    SeedsResult result;
    std::string detail = "seed,mode,auroc,auprc,f1,precision,recall,accuracy\n";
    char buf[192];
    for (uint64_t seed : cfg.seed_list) {
        TrainConfig run_cfg = cfg;
        run_cfg.seed = seed;
        run_cfg.sweep.clear();
        const std::string seed_dir = out_dir + "/seed_" + std::to_string(seed);
        run_train(run_cfg, seed_dir, "all");
        AblateResult ab = run_ablate(run_cfg, seed_dir);
        RunPaths seed_paths{seed_dir};
        MetricsReport full =
            run_evaluate(run_cfg, seed_dir, ScoreMode::Full, seed_paths.scores_csv(ScoreMode::Full));
        result.seeds.push_back(seed);
        result.full_reports.push_back(full);
        result.ablations.push_back(ab);
        for (ScoreMode mode : {ScoreMode::Full, ScoreMode::Task3Only, ScoreMode::Task1Only}) {
            MetricsReport r = run_evaluate(run_cfg, seed_dir, mode,
                                           seed_paths.scores_csv(mode));
            std::snprintf(buf, sizeof(buf), "%llu,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                          static_cast<unsigned long long>(seed), score_mode_name(mode), r.auroc,
                          r.auprc, r.f1, r.precision, r.recall, r.accuracy);
            detail += buf;
        }
    }
    // mean +/- SD over seeds (full mode)
    auto mean_sd = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
        return std::pair<double, double>{m, s};
    };
    std::string summary = "metric,mean,sd\n";
    auto add_metric = [&](const char* name, auto getter) {
        std::vector<double> v;
        for (const auto& r : result.full_reports) v.push_back(getter(r));
        const auto [m, s] = mean_sd(v);
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f\n", name, m, s);
        summary += buf;
        if (std::string(name) == "auroc") {
            result.auroc_mean = m;
            result.auroc_sd = s;
        }
    };
    add_metric("auroc", [](const MetricsReport& r) { return r.auroc; });
    add_metric("auprc", [](const MetricsReport& r) { return r.auprc; });
    add_metric("f1", [](const MetricsReport& r) { return r.f1; });
    add_metric("precision", [](const MetricsReport& r) { return r.precision; });
    add_metric("recall", [](const MetricsReport& r) { return r.recall; });
    add_metric("accuracy", [](const MetricsReport& r) { return r.accuracy; });
    write_text(paths.seeds_detail_csv(), detail);
    write_text(paths.seeds_summary_csv(), summary);
    json manifest = load_json_or(paths.manifest(), json::object());
    manifest["seeds"] = {{"detail", paths.seeds_detail_csv()},
                         {"summary", paths.seeds_summary_csv()},
                         {"auroc_mean", result.auroc_mean},
                         {"auroc_sd", result.auroc_sd}};
    write_text(paths.manifest(), manifest.dump(2) + "\n");
    return result;
}

} // namespace omas
