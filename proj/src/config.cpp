#include "omas/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "omas/errors.hpp"

namespace omas {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
    size_t consumed = 0;
    double out;
    try {
        out = std::stod(v, &consumed);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    if (consumed != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return out;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    size_t consumed = 0;
    unsigned long long out;
    try {
        out = std::stoull(v, &consumed);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    if (consumed != v.size())
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    return out;
}

std::vector<uint64_t> parse_u64_list(const std::string& key, const std::string& v) {
    std::vector<uint64_t> out;
    std::stringstream ss(v);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(parse_u64(key, trim(cell)));
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* dataset_name(DatasetKind k) {
    switch (k) {
        case DatasetKind::Mixture: return "mixture";
        case DatasetKind::Disk: return "disk";
        case DatasetKind::Ring: return "ring";
        case DatasetKind::Csv: return "csv";
    }
    return "?";
}

const char* protocol_name(TaskProtocol p) {
    switch (p) {
        case TaskProtocol::Support: return "support";
        case TaskProtocol::LOO: return "loo";
        case TaskProtocol::OCC: return "occ";
    }
    return "?";
}

} // namespace

void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "divergence")
        cfg.divergence = divergence_from_string(value);
    else if (key == "task2_divergence") {
        if (value != "inherit") divergence_from_string(value); // validate
        cfg.task2_divergence = value;
    } else if (key == "task2_critic_divergence") {
        if (value != "inherit") divergence_from_string(value);
        cfg.task2_critic_divergence = value;
    }
    else if (key == "seed")
        cfg.seed = parse_u64(key, value);
    else if (key == "latent_dim")
        cfg.latent_dim = parse_u64(key, value);
    else if (key == "data_dim")
        cfg.data_dim = parse_u64(key, value);
    else if (key == "hidden") {
        cfg.hidden.clear();
        std::stringstream ss(value);
        std::string cell;
        while (std::getline(ss, cell, ',')) cfg.hidden.push_back(parse_u64(key, trim(cell)));
        if (cfg.hidden.empty()) throw ConfigError("hidden: empty layer list");
    } else if (key == "mu")
        cfg.mu = parse_double(key, value);
    else if (key == "nu")
        cfg.nu = parse_double(key, value);
    else if (key == "alpha")
        cfg.alpha = parse_double(key, value);
    else if (key == "gamma")
        cfg.gamma = parse_double(key, value);
    else if (key == "beta")
        cfg.beta = parse_double(key, value);
    else if (key == "delta")
        cfg.delta = parse_double(key, value);
    else if (key == "lambda")
        cfg.lambda = parse_double(key, value);
    else if (key == "tau_quantile")
        cfg.tau_quantile = parse_double(key, value);
    else if (key == "batch")
        cfg.batch = parse_u64(key, value);
    else if (key == "pool")
        cfg.pool = parse_u64(key, value);
    else if (key == "task1_epochs")
        cfg.task1_epochs = parse_u64(key, value);
    else if (key == "task2_epochs")
        cfg.task2_epochs = parse_u64(key, value);
    else if (key == "task3_epochs")
        cfg.task3_epochs = parse_u64(key, value);
    else if (key == "j_epochs")
        cfg.j_epochs = parse_u64(key, value);
    else if (key == "task1_lr")
        cfg.task1_lr = parse_double(key, value);
    else if (key == "task2_lr")
        cfg.task2_lr = parse_double(key, value);
    else if (key == "task3_lr")
        cfg.task3_lr = parse_double(key, value);
    else if (key == "j_lr")
        cfg.j_lr = parse_double(key, value);
    else if (key == "adam_beta1")
        cfg.adam_beta1 = parse_double(key, value);
    else if (key == "adam_beta2")
        cfg.adam_beta2 = parse_double(key, value);
    else if (key == "critic_steps")
        cfg.critic_steps = static_cast<int>(parse_u64(key, value));
    else if (key == "critic_weight_decay")
        cfg.critic_weight_decay = parse_double(key, value);
    else if (key == "patience")
        cfg.patience = parse_u64(key, value);
    else if (key == "task2_steps_per_epoch")
        cfg.task2_steps_per_epoch = parse_u64(key, value);
    else if (key == "scatter_eps")
        cfg.scatter_eps = parse_double(key, value);
    else if (key == "chamfer")
        cfg.chamfer = parse_bool(key, value);
    else if (key == "task2_warmstart_b")
        cfg.task2_warmstart_b = parse_bool(key, value);
    else if (key == "task2_warmstart_scale")
        cfg.task2_warmstart_scale = parse_double(key, value);
    else if (key == "task3_warmstart_c")
        cfg.task3_warmstart_c = parse_bool(key, value);
    else if (key == "task3_warmstart_gprime")
        cfg.task3_warmstart_gprime = parse_bool(key, value);
    else if (key == "task3_nonsaturating")
        cfg.task3_nonsaturating = parse_bool(key, value);
    else if (key == "dataset") {
        if (value == "mixture")
            cfg.dataset = DatasetKind::Mixture;
        else if (value == "disk")
            cfg.dataset = DatasetKind::Disk;
        else if (value == "ring")
            cfg.dataset = DatasetKind::Ring;
        else if (value == "csv")
            cfg.dataset = DatasetKind::Csv;
        else
            throw ConfigError("dataset: unknown kind '" + value + "'");
    } else if (key == "data_n")
        cfg.data_n = parse_u64(key, value);
    else if (key == "modes")
        cfg.modes = parse_u64(key, value);
    else if (key == "mode_radius")
        cfg.mode_radius = parse_double(key, value);
    else if (key == "sigma")
        cfg.sigma = parse_double(key, value);
    else if (key == "disk_radius")
        cfg.disk_radius = parse_double(key, value);
    else if (key == "ring_r_in")
        cfg.ring_r_in = parse_double(key, value);
    else if (key == "ring_r_out")
        cfg.ring_r_out = parse_double(key, value);
    else if (key == "csv_path")
        cfg.csv_path = value;
    else if (key == "train_frac")
        cfg.train_frac = parse_double(key, value);
    else if (key == "val_frac")
        cfg.val_frac = parse_double(key, value);
    else if (key == "protocol") {
        if (value == "support")
            cfg.protocol = TaskProtocol::Support;
        else if (value == "loo")
            cfg.protocol = TaskProtocol::LOO;
        else if (value == "occ")
            cfg.protocol = TaskProtocol::OCC;
        else
            throw ConfigError("protocol: unknown protocol '" + value + "'");
    } else if (key == "special_class")
        cfg.special_class = static_cast<int>(parse_u64(key, value));
    else if (key == "grid_lo")
        cfg.grid_lo = parse_double(key, value);
    else if (key == "grid_hi")
        cfg.grid_hi = parse_double(key, value);
    else if (key == "grid_res")
        cfg.grid_res = parse_u64(key, value);
    else if (key == "hist_bins")
        cfg.hist_bins = parse_u64(key, value);
    else if (key == "seed_list")
        cfg.seed_list = parse_u64_list(key, value);
    else if (key == "sweep")
        cfg.sweep = value;
    else
        throw ConfigError("unknown config key '" + key + "'");
}

void TrainConfig::validate() const {
    if (mu < 0.0) throw ConfigError("mu: must be >= 0 (got " + fmt(mu) + ")");
    if (nu < 0.0) throw ConfigError("nu: must be >= 0 (got " + fmt(nu) + ")");
    const double ag = alpha + gamma;
    if (alpha < 0.0 || gamma < 0.0 || ag > 1.0)
        throw ConfigError("alpha/gamma: alpha+gamma must lie in [0,1] (got " + fmt(ag) + ")");
    if (beta < ag - 1.0)
        throw ConfigError("beta: must satisfy beta >= alpha+gamma-1 (got beta " + fmt(beta) +
                          " < " + fmt(ag - 1.0) + ")");
    if (delta < 0.0 || delta > 1.0)
        throw ConfigError("delta: must lie in [0,1] (got " + fmt(delta) + ")");
    if (batch < 2) throw ConfigError("batch: N must be >= 2");
    if (pool < batch) throw ConfigError("pool: Q must be >= batch N");
    if (lambda < 0.0) throw ConfigError("lambda: must be >= 0");
    if (tau_quantile < 0.0 || tau_quantile > 1.0)
        throw ConfigError("tau_quantile: must lie in [0,1]");
    if (latent_dim == 0 || data_dim == 0) throw ConfigError("latent_dim/data_dim: must be >= 1");
    if (hidden.empty()) throw ConfigError("hidden: at least one hidden layer required");
    if (task1_lr <= 0.0 || task2_lr <= 0.0 || task3_lr <= 0.0 || j_lr <= 0.0)
        throw ConfigError("learning rates must be > 0");
    if (critic_steps < 1) throw ConfigError("critic_steps: must be >= 1");
    if (critic_weight_decay < 0.0) throw ConfigError("critic_weight_decay: must be >= 0");
    if (task2_steps_per_epoch < 1) throw ConfigError("task2_steps_per_epoch: must be >= 1");
    if (task2_warmstart_scale <= 0.0) throw ConfigError("task2_warmstart_scale: must be > 0");
    if (!(train_frac > 0.0) || val_frac < 0.0 || train_frac + val_frac >= 1.0)
        throw ConfigError("train_frac/val_frac: need train_frac > 0 and train_frac+val_frac < 1");
    if (dataset != DatasetKind::Csv && data_n < 4) throw ConfigError("data_n: too small");
    if (dataset == DatasetKind::Mixture && modes < 1) throw ConfigError("modes: must be >= 1");
    if (dataset == DatasetKind::Ring && ring_r_in >= ring_r_out)
        throw ConfigError("ring_r_in/ring_r_out: need r_in < r_out");
    if (dataset == DatasetKind::Csv && csv_path.empty())
        throw ConfigError("csv_path: required when dataset = csv");
    if (!(grid_lo < grid_hi)) throw ConfigError("grid_lo/grid_hi: need lo < hi");
    if (grid_res < 2) throw ConfigError("grid_res: must be >= 2");
    if (hist_bins < 1) throw ConfigError("hist_bins: must be >= 1");
    if (seed_list.empty()) throw ConfigError("seed_list: must not be empty");
}

TrainConfig parse_config_text(const std::string& text) {
    TrainConfig cfg;
    std::stringstream ss(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected `key = value`, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
        apply_config_entry(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

TrainConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str());
}

DivergenceKind TrainConfig::task2_kind() const {
    return task2_divergence == "inherit" ? divergence
                                         : divergence_from_string(task2_divergence);
}

DivergenceKind TrainConfig::task2_critic_kind() const {
    return task2_critic_divergence == "inherit" ? task2_kind()
                                                : divergence_from_string(task2_critic_divergence);
}

std::map<std::string, std::string> TrainConfig::snapshot() const {
    std::map<std::string, std::string> m;
    m["divergence"] = divergence_name(divergence);
    m["task2_divergence"] = task2_divergence;
    m["task2_critic_divergence"] = task2_critic_divergence;
    m["seed"] = std::to_string(seed);
    m["latent_dim"] = std::to_string(latent_dim);
    m["data_dim"] = std::to_string(data_dim);
    std::string h;
    for (size_t i = 0; i < hidden.size(); ++i) h += (i ? "," : "") + std::to_string(hidden[i]);
    m["hidden"] = h;
    m["mu"] = fmt(mu);
    m["nu"] = fmt(nu);
    m["alpha"] = fmt(alpha);
    m["gamma"] = fmt(gamma);
    m["beta"] = fmt(beta);
    m["delta"] = fmt(delta);
    m["lambda"] = fmt(lambda);
    m["tau_quantile"] = fmt(tau_quantile);
    m["batch"] = std::to_string(batch);
    m["pool"] = std::to_string(pool);
    m["task1_epochs"] = std::to_string(task1_epochs);
    m["task2_epochs"] = std::to_string(task2_epochs);
    m["task3_epochs"] = std::to_string(task3_epochs);
    m["j_epochs"] = std::to_string(j_epochs);
    m["task1_lr"] = fmt(task1_lr);
    m["task2_lr"] = fmt(task2_lr);
    m["task3_lr"] = fmt(task3_lr);
    m["j_lr"] = fmt(j_lr);
    m["adam_beta1"] = fmt(adam_beta1);
    m["adam_beta2"] = fmt(adam_beta2);
    m["critic_steps"] = std::to_string(critic_steps);
    m["critic_weight_decay"] = fmt(critic_weight_decay);
    m["patience"] = std::to_string(patience);
    m["task2_steps_per_epoch"] = std::to_string(task2_steps_per_epoch);
    m["scatter_eps"] = fmt(scatter_eps);
    m["chamfer"] = chamfer ? "true" : "false";
    m["task2_warmstart_b"] = task2_warmstart_b ? "true" : "false";
    m["task2_warmstart_scale"] = fmt(task2_warmstart_scale);
    m["task3_warmstart_c"] = task3_warmstart_c ? "true" : "false";
    m["task3_warmstart_gprime"] = task3_warmstart_gprime ? "true" : "false";
    m["task3_nonsaturating"] = task3_nonsaturating ? "true" : "false";
    m["dataset"] = dataset_name(dataset);
    m["data_n"] = std::to_string(data_n);
    m["modes"] = std::to_string(modes);
    m["mode_radius"] = fmt(mode_radius);
    m["sigma"] = fmt(sigma);
    m["disk_radius"] = fmt(disk_radius);
    m["ring_r_in"] = fmt(ring_r_in);
    m["ring_r_out"] = fmt(ring_r_out);
    m["csv_path"] = csv_path;
    m["train_frac"] = fmt(train_frac);
    m["val_frac"] = fmt(val_frac);
    m["protocol"] = protocol_name(protocol);
    m["special_class"] = std::to_string(special_class);
    m["grid_lo"] = fmt(grid_lo);
    m["grid_hi"] = fmt(grid_hi);
    m["grid_res"] = std::to_string(grid_res);
    m["hist_bins"] = std::to_string(hist_bins);
    std::string s;
    for (size_t i = 0; i < seed_list.size(); ++i)
        s += (i ? "," : "") + std::to_string(seed_list[i]);
    m["seed_list"] = s;
    m["sweep"] = sweep;
    return m;
}

} // namespace omas
