#include "omas/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "omas/rng.hpp"

namespace omas {

std::vector<double> PointCloudDataset::row(size_t i) const {
    const size_t k = dim();
    std::vector<double> out(k);
    for (size_t c = 0; c < k; ++c) out[c] = points.at(i, c);
    return out;
}

PointCloudDataset gen_gaussian_mixture(size_t modes, double radius, double sigma, size_t n,
                                       uint64_t seed) {
    if (modes < 1) throw ContractError("gen_gaussian_mixture: modes must be >= 1");
    if (!(sigma > 0.0)) throw ContractError("gen_gaussian_mixture: sigma must be > 0");
    if (n < modes) throw ContractError("gen_gaussian_mixture: n must be >= modes");
    Rng rng(seed, "data/mixture");
    PointCloudDataset ds;
    ds.name = "mixture" + std::to_string(modes);
    ds.seed = seed;
    ds.points = Tensor(Shape{n, 2});
    ds.labels.resize(n);
    const double tau = 2.0 * 3.141592653589793238462643383279502884;
    for (size_t i = 0; i < n; ++i) {
        const size_t mode = i % modes;
        const double angle = tau * static_cast<double>(mode) / static_cast<double>(modes);
        ds.points.at(i, 0) = radius * std::cos(angle) + sigma * rng.gaussian();
        ds.points.at(i, 1) = radius * std::sin(angle) + sigma * rng.gaussian();
        ds.labels[i] = static_cast<int>(mode);
    }
    return ds;
}

PointCloudDataset gen_disk(double radius, size_t n, uint64_t seed) {
    if (!(radius > 0.0)) throw ContractError("gen_disk: radius must be > 0");
    Rng rng(seed, "data/disk");
    PointCloudDataset ds;
    ds.name = "disk";
    ds.seed = seed;
    ds.points = Tensor(Shape{n, 2});
    for (size_t i = 0; i < n; ++i) {
        double x, y;
        do {
            x = rng.uniform(-radius, radius);
            y = rng.uniform(-radius, radius);
        } while (x * x + y * y > radius * radius);
        ds.points.at(i, 0) = x;
        ds.points.at(i, 1) = y;
    }
    return ds;
}

PointCloudDataset gen_ring(double r_in, double r_out, size_t n, uint64_t seed) {
    if (!(r_in >= 0.0) || !(r_out > 0.0) || r_in >= r_out)
        throw ContractError("gen_ring: need 0 <= r_in < r_out");
    Rng rng(seed, "data/ring");
    PointCloudDataset ds;
    ds.name = "ring";
    ds.seed = seed;
    ds.points = Tensor(Shape{n, 2});
    for (size_t i = 0; i < n; ++i) {
        double x, y, r2;
        do {
            x = rng.uniform(-r_out, r_out);
            y = rng.uniform(-r_out, r_out);
            r2 = x * x + y * y;
        } while (r2 > r_out * r_out || r2 < r_in * r_in);
        ds.points.at(i, 0) = x;
        ds.points.at(i, 1) = y;
    }
    return ds;
}

namespace {

Tensor take_rows(const PointCloudDataset& ds, const std::vector<size_t>& idx) {
    const size_t k = ds.dim();
    Tensor out(Shape{idx.size(), k});
    for (size_t r = 0; r < idx.size(); ++r)
        for (size_t c = 0; c < k; ++c) out.at(r, c) = ds.points.at(idx[r], c);
    return out;
}

ADTask split_task(const PointCloudDataset& dataset, const std::vector<size_t>& normal_idx,
                  const std::vector<size_t>& anomaly_idx, double train_frac, double val_frac,
                  uint64_t seed, Protocol protocol, int special_class) {
    if (!(train_frac > 0.0) || !(val_frac >= 0.0) || train_frac + val_frac >= 1.0)
        throw ContractError("task split: need train_frac > 0, val_frac >= 0, sum < 1");
    std::vector<size_t> normals = normal_idx;
    Rng rng(seed, "data/split");
    rng.shuffle(normals);
    const size_t n = normals.size();
    const size_t n_train = static_cast<size_t>(std::llround(train_frac * static_cast<double>(n)));
    const size_t n_val = static_cast<size_t>(std::llround(val_frac * static_cast<double>(n)));
    if (n_train == 0 || n_train + n_val >= n)
        throw ContractError("task split: fractions leave no test normals");
    ADTask task;
    task.protocol = protocol;
    task.special_class = special_class;
    std::vector<size_t> train_idx(normals.begin(), normals.begin() + n_train);
    std::vector<size_t> val_idx(normals.begin() + n_train, normals.begin() + n_train + n_val);
    std::vector<size_t> test_norm_idx(normals.begin() + n_train + n_val, normals.end());
    task.train = take_rows(dataset, train_idx);
    task.val = take_rows(dataset, val_idx);
    std::vector<size_t> test_idx = test_norm_idx;
    test_idx.insert(test_idx.end(), anomaly_idx.begin(), anomaly_idx.end());
    task.test = take_rows(dataset, test_idx);
    task.test_labels.assign(test_norm_idx.size(), 0);
    task.test_labels.insert(task.test_labels.end(), anomaly_idx.size(), 1);
    return task;
}

} // namespace

ADTask build_loo_task(const PointCloudDataset& dataset, int leave_out_class, double train_frac,
                      double val_frac, uint64_t seed) {
    if (!dataset.labeled()) throw ContractError("build_loo_task: dataset has no labels");
    std::vector<size_t> normals, anomalies;
    for (size_t i = 0; i < dataset.size(); ++i)
        (dataset.labels[i] == leave_out_class ? anomalies : normals).push_back(i);
    if (anomalies.empty())
        throw ContractError("build_loo_task: class " + std::to_string(leave_out_class) +
                            " not present");
    if (normals.empty()) throw ContractError("build_loo_task: no normal points remain");
    return split_task(dataset, normals, anomalies, train_frac, val_frac, seed, Protocol::LOO,
                      leave_out_class);
}

ADTask build_occ_task(const PointCloudDataset& dataset, int normal_class, double train_frac,
                      double val_frac, uint64_t seed) {
    if (!dataset.labeled()) throw ContractError("build_occ_task: dataset has no labels");
    std::vector<size_t> normals, anomalies;
    for (size_t i = 0; i < dataset.size(); ++i)
        (dataset.labels[i] == normal_class ? normals : anomalies).push_back(i);
    if (normals.empty())
        throw ContractError("build_occ_task: class " + std::to_string(normal_class) +
                            " not present");
    if (anomalies.empty()) throw ContractError("build_occ_task: no anomalous points remain");
    return split_task(dataset, normals, anomalies, train_frac, val_frac, seed, Protocol::OCC,
                      normal_class);
}

ADTask build_support_task(const PointCloudDataset& dataset, double train_frac, double val_frac,
                          uint64_t seed, Tensor test, std::vector<int> test_labels) {
    if (test.rows() != test_labels.size())
        throw ContractError("build_support_task: test size / label mismatch");
    std::vector<size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), size_t{0});
    ADTask task = split_task(dataset, all, {}, train_frac, val_frac, seed, Protocol::Support, -1);
    task.test = std::move(test);
    task.test_labels = std::move(test_labels);
    return task;
}

PointCloudDataset load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ContractError("load_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw ContractError("load_csv: " + path + " is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    bool has_label = !header.empty() && header.back() == "label";
    const size_t k = has_label ? header.size() - 1 : header.size();
    if (k == 0) throw ContractError("load_csv: " + path + " header has no coordinate columns");
    for (size_t i = 0; i < k; ++i) {
        if (header[i] != "x" + std::to_string(i + 1))
            throw ContractError("load_csv: " + path + " header column " + std::to_string(i + 1) +
                                " is '" + header[i] + "', expected 'x" + std::to_string(i + 1) +
                                "'");
    }
    std::vector<double> values;
    std::vector<int> labels;
    size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != header.size())
            throw ContractError("load_csv: " + path + " line " + std::to_string(line_no) + " has " +
                                std::to_string(cells.size()) + " fields, expected " +
                                std::to_string(header.size()));
        for (size_t i = 0; i < k; ++i) {
            size_t consumed = 0;
            double v;
            try {
                v = std::stod(cells[i], &consumed);
            } catch (const std::exception&) {
                throw ContractError("load_csv: " + path + " line " + std::to_string(line_no) +
                                    ": non-numeric cell '" + cells[i] + "'");
            }
            if (consumed != cells[i].size())
                throw ContractError("load_csv: " + path + " line " + std::to_string(line_no) +
                                    ": non-numeric cell '" + cells[i] + "'");
            values.push_back(v);
        }
        if (has_label) {
            try {
                labels.push_back(std::stoi(cells[k]));
            } catch (const std::exception&) {
                throw ContractError("load_csv: " + path + " line " + std::to_string(line_no) +
                                    ": non-integer label '" + cells[k] + "'");
            }
        }
    }
    PointCloudDataset ds;
    ds.name = path;
    const size_t n = values.size() / k;
    ds.points = Tensor(Shape{n, k}, std::move(values));
    ds.labels = std::move(labels);
    return ds;
}

void save_csv(const PointCloudDataset& dataset, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw ContractError("save_csv: cannot open " + path + " for write");
    const size_t k = dataset.dim();
    for (size_t i = 0; i < k; ++i) f << (i ? ",x" : "x") << (i + 1);
    if (dataset.labeled()) f << ",label";
    f << "\n";
    char buf[64];
    for (size_t r = 0; r < dataset.size(); ++r) {
        for (size_t c = 0; c < k; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", dataset.points.at(r, c));
            if (c) f << ",";
            f << buf;
        }
        if (dataset.labeled()) f << "," << dataset.labels[r];
        f << "\n";
    }
}

Tensor grid_points(const std::vector<std::pair<double, double>>& bounds,
                   const std::vector<size_t>& resolution) {
    if (bounds.empty() || bounds.size() != resolution.size())
        throw ContractError("grid_points: bounds/resolution mismatch");
    size_t total = 1;
    for (size_t a = 0; a < bounds.size(); ++a) {
        if (!(bounds[a].first < bounds[a].second))
            throw ContractError("grid_points: axis " + std::to_string(a) + " has lo >= hi");
        if (resolution[a] < 2)
            throw ContractError("grid_points: axis " + std::to_string(a) + " resolution < 2");
        total *= resolution[a];
    }
    const size_t k = bounds.size();
    Tensor out(Shape{total, k});
    std::vector<size_t> idx(k, 0);
    for (size_t r = 0; r < total; ++r) {
        for (size_t a = 0; a < k; ++a) {
            const double t = static_cast<double>(idx[a]) / static_cast<double>(resolution[a] - 1);
            out.at(r, a) = bounds[a].first + t * (bounds[a].second - bounds[a].first);
        }
        for (size_t a = k; a-- > 0;) {
            if (++idx[a] < resolution[a]) break;
            idx[a] = 0;
        }
    }
    return out;
}

} // namespace omas
