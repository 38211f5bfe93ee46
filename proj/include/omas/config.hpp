#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "omas/divergence.hpp"

namespace omas {

enum class DatasetKind { Mixture, Disk, Ring, Csv };
enum class TaskProtocol { Support, LOO, OCC };

// Every knob of the pipeline. Defaults are the documented hyperparameters;
// parse_config overrides them from a `key = value` file and enforces the
// weight constraints at load time.
struct TrainConfig {
    DivergenceKind divergence = DivergenceKind::JensenShannonGAN;
    // Task 2 may run a different f-divergence than Task 1 (the boundary
    // objective accepts any of them); "inherit" uses `divergence`. The
    // auxiliary critic's bound can differ again from B's metric term.
    std::string task2_divergence = "inherit";
    std::string task2_critic_divergence = "inherit";
    uint64_t seed = 0;

    DivergenceKind task2_kind() const;
    DivergenceKind task2_critic_kind() const;

    // dimensions and architecture
    size_t latent_dim = 2;
    size_t data_dim = 2;
    std::vector<size_t> hidden = {64, 64};

    // objective weights
    double mu = 0.2;
    double nu = 0.25;
    double alpha = 0.35;
    double gamma = 0.35;
    double beta = 0.7;
    double delta = 0.5;
    double lambda = 1.0;
    double tau_quantile = 0.95;

    // batch and pool sizes
    size_t batch = 256; // N
    size_t pool = 1024; // Q

    // per-stage optimization
    size_t task1_epochs = 400;
    size_t task2_epochs = 250;
    size_t task3_epochs = 250;
    size_t j_epochs = 150;
    double task1_lr = 2e-4;
    double task2_lr = 2e-4;
    double task3_lr = 2e-4;
    double j_lr = 2e-4;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    int critic_steps = 1;
    double critic_weight_decay = 1e-3;
    size_t patience = 0; // early stop on validation loss; 0 disables
    size_t task2_steps_per_epoch = 16;
    double scatter_eps = 1e-8;
    bool chamfer = false;
    bool task2_warmstart_b = true;
    double task2_warmstart_scale = 1.5;
    bool task3_warmstart_c = false;
    bool task3_warmstart_gprime = true;
    bool task3_nonsaturating = false;

    // dataset
    DatasetKind dataset = DatasetKind::Mixture;
    size_t data_n = 8192;
    size_t modes = 8;
    double mode_radius = 5.0;
    double sigma = 0.2;
    double disk_radius = 1.0;
    double ring_r_in = 0.7;
    double ring_r_out = 1.0;
    std::string csv_path;
    double train_frac = 0.8;
    double val_frac = 0.1;
    TaskProtocol protocol = TaskProtocol::Support;
    int special_class = 0; // leave-out class (LOO) / normal class (OCC)

    // evaluation grid
    double grid_lo = -8.0;
    double grid_hi = 8.0;
    size_t grid_res = 64;
    size_t hist_bins = 20;

    // seed sweep for the `seeds` subcommand
    std::vector<uint64_t> seed_list = {0, 1, 2};

    // hyperparameter sweep: "key:v1,v2;key2:v3,v4" grid
    std::string sweep;

    void validate() const;
    std::map<std::string, std::string> snapshot() const; // key -> value, all keys
};

// Plain-text config: `key = value` lines, '#' comments, unknown keys
// rejected. An empty file yields the defaults.
TrainConfig parse_config(const std::string& path);
TrainConfig parse_config_text(const std::string& text);

// Apply one `key = value` override (used by the sweep grid and tests).
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);

} // namespace omas
