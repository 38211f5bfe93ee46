#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omas/tensor.hpp"

namespace omas {

// Immutable point set with optional per-point class labels.
struct PointCloudDataset {
    Tensor points; // (n x k)
    std::vector<int> labels; // empty when unlabeled; else size n
    std::string name;
    uint64_t seed = 0;

    size_t size() const { return points.rows(); }
    size_t dim() const { return points.rank() == 2 ? points.shape[1] : 0; }
    bool labeled() const { return !labels.empty(); }
    std::vector<double> row(size_t i) const;
};

enum class Protocol { LOO, OCC, Support };

// One anomaly-detection task. Train/val hold normal points only; test
// carries binary labels (1 = anomaly).
struct ADTask {
    Tensor train;
    Tensor val;
    Tensor test;
    std::vector<int> test_labels;
    Protocol protocol = Protocol::Support;
    int special_class = -1; // leave-out class (LOO) or normal class (OCC)
};

// n points from m Gaussian modes with centers equally spaced on a circle
// of the given radius (angle 0 first). Point i belongs to mode i % m, so
// mode sizes differ by at most one. Labels are mode indices.
PointCloudDataset gen_gaussian_mixture(size_t modes, double radius, double sigma, size_t n,
                                       uint64_t seed);

// Uniform samples in a disk / annulus via rejection sampling. Unlabeled.
PointCloudDataset gen_disk(double radius, size_t n, uint64_t seed);
PointCloudDataset gen_ring(double r_in, double r_out, size_t n, uint64_t seed);

// Leave-one-out: all classes except leave_out_class are normal. Train/val
// hold shuffled normal points (fractions of the normal pool); the test set
// mixes the remaining normals with every leave_out_class point.
ADTask build_loo_task(const PointCloudDataset& dataset, int leave_out_class, double train_frac,
                      double val_frac, uint64_t seed);

// One-class: normal_class is normal, every other class is anomalous.
ADTask build_occ_task(const PointCloudDataset& dataset, int normal_class, double train_frac,
                      double val_frac, uint64_t seed);

// All points are normal; evaluation happens on an external labeled set
// (typically a grid labeled by support membership).
ADTask build_support_task(const PointCloudDataset& dataset, double train_frac, double val_frac,
                          uint64_t seed, Tensor test, std::vector<int> test_labels);

// CSV: header "x1,...,xk[,label]"; values round-trip at 17 significant
// digits. Parse errors name the offending line.
PointCloudDataset load_csv(const std::string& path);
void save_csv(const PointCloudDataset& dataset, const std::string& path);

// Cartesian product of equidistant axis values, endpoints inclusive.
Tensor grid_points(const std::vector<std::pair<double, double>>& bounds,
                   const std::vector<size_t>& resolution);

} // namespace omas
