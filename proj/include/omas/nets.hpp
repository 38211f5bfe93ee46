#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "omas/autodiff.hpp"
#include "omas/rng.hpp"
#include "omas/tensor.hpp"

namespace omas {

enum class Activation { LeakyRelu, Tanh };
enum class OutputTransform { Identity, Sigmoid };

// Dense MLP layout. widths = {in, hidden..., out}; at least one hidden layer.
struct MlpSpec {
    std::vector<size_t> widths;
    Activation hidden = Activation::LeakyRelu;
    OutputTransform output = OutputTransform::Identity;
    double leaky_slope = 0.2;

    size_t input_dim() const { return widths.front(); }
    size_t output_dim() const { return widths.back(); }
    size_t layer_count() const { return widths.size() - 1; }
    size_t param_count() const;
    std::string fingerprint() const;
    void validate() const;
};

// Generator: latent_dim -> hidden -> data_dim, identity output.
MlpSpec generator_spec(size_t latent_dim, size_t data_dim, const std::vector<size_t>& hidden);
// Critic: data_dim -> hidden -> 1, identity output (raw score V; consuming
// losses apply sigmoid where they need a probability).
MlpSpec critic_spec(size_t data_dim, const std::vector<size_t>& hidden);

// Flat parameter store: per layer, weight matrix (in x out, row-major)
// followed by the bias vector.
struct ParamSet {
    std::vector<double> values;
    std::vector<Shape> manifest; // weight/bias shapes in storage order
    std::string fingerprint;

    size_t count() const { return values.size(); }
    bool all_finite() const;
};

// Kaiming-uniform weights, U(-1/sqrt(fan_in), +1/sqrt(fan_in)); zero
// biases. Deterministic for a fixed seed.
ParamSet init_params(const MlpSpec& spec, uint64_t seed);

// Plain forward evaluation (no tape). batch is (n x in) -> (n x out).
Tensor mlp_eval(const MlpSpec& spec, const ParamSet& params, const Tensor& batch);

// Tape forward for training. If param_ids is non-null the parameters enter
// the tape as leaves (one per weight/bias tensor, in manifest order) and
// their node ids are appended so gradients can be collected after backward.
Var mlp_forward(Tape& tape, const MlpSpec& spec, const ParamSet& params, Var batch,
                std::vector<int>* param_ids = nullptr);

// Flatten leaf gradients (manifest order) back into ParamSet layout.
std::vector<double> collect_gradients(const Tape& tape, const std::vector<int>& param_ids);

// Checkpoint format, little-endian:
//   magic "OMAS1" | u16 version | u32 fingerprint length | fingerprint bytes
//   | u64 value count | f32 values (row-major, storage order)
// Values are quantized to 32-bit on save; load reproduces them at 32-bit
// precision.
void save_checkpoint(const ParamSet& params, const std::string& path);
ParamSet load_checkpoint(const std::string& path);
// Load and require a matching spec fingerprint.
ParamSet load_checkpoint(const std::string& path, const MlpSpec& expected_spec);

} // namespace omas
