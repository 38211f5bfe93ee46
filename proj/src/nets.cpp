#include "omas/nets.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace omas {

namespace {

constexpr char kMagic[5] = {'O', 'M', 'A', 'S', '1'};
constexpr uint16_t kVersion = 1;

const char* activation_tag(Activation a) {
    return a == Activation::LeakyRelu ? "lrelu" : "tanh";
}

const char* output_tag(OutputTransform o) {
    return o == OutputTransform::Identity ? "identity" : "sigmoid";
}

} // namespace

void MlpSpec::validate() const {
    if (widths.size() < 3)
        throw ContractError("mlp spec needs at least one hidden layer, got " +
                            std::to_string(widths.size()) + " widths");
    for (size_t w : widths)
        if (w == 0) throw ContractError("mlp spec has a zero-width layer");
}

size_t MlpSpec::param_count() const {
    size_t n = 0;
    for (size_t i = 0; i + 1 < widths.size(); ++i) n += widths[i] * widths[i + 1] + widths[i + 1];
    return n;
}

std::string MlpSpec::fingerprint() const {
    std::string fp = "mlp:";
    for (size_t i = 0; i < widths.size(); ++i) {
        if (i) fp += "-";
        fp += std::to_string(widths[i]);
    }
    fp += "|";
    fp += activation_tag(hidden);
    if (hidden == Activation::LeakyRelu) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.3g", leaky_slope);
        fp += buf;
    }
    fp += "|";
    fp += output_tag(output);
    return fp;
}

MlpSpec generator_spec(size_t latent_dim, size_t data_dim, const std::vector<size_t>& hidden) {
    MlpSpec spec;
    spec.widths.push_back(latent_dim);
    spec.widths.insert(spec.widths.end(), hidden.begin(), hidden.end());
    spec.widths.push_back(data_dim);
    spec.validate();
    return spec;
}

MlpSpec critic_spec(size_t data_dim, const std::vector<size_t>& hidden) {
    MlpSpec spec;
    spec.widths.push_back(data_dim);
    spec.widths.insert(spec.widths.end(), hidden.begin(), hidden.end());
    spec.widths.push_back(1);
    spec.validate();
    return spec;
}

bool ParamSet::all_finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

ParamSet init_params(const MlpSpec& spec, uint64_t seed) {
    spec.validate();
    ParamSet p;
    p.fingerprint = spec.fingerprint();
    p.values.reserve(spec.param_count());
    Rng rng(seed, "init/" + p.fingerprint);
    for (size_t i = 0; i + 1 < spec.widths.size(); ++i) {
        const size_t fan_in = spec.widths[i], fan_out = spec.widths[i + 1];
        // default linear-layer Kaiming-uniform bound; keeps raw critic
        // scores near zero at init so the exp-style conjugates stay tame
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (size_t j = 0; j < fan_in * fan_out; ++j)
            p.values.push_back(rng.uniform(-bound, bound));
        p.manifest.push_back(Shape{fan_in, fan_out});
        for (size_t j = 0; j < fan_out; ++j) p.values.push_back(0.0);
        p.manifest.push_back(Shape{fan_out});
    }
    return p;
}

Tensor mlp_eval(const MlpSpec& spec, const ParamSet& params, const Tensor& batch) {
    spec.validate();
    if (batch.rank() != 2 || batch.shape[1] != spec.input_dim())
        throw ShapeError("mlp_eval: batch " + shape_str(batch.shape) + " does not match input dim " +
                         std::to_string(spec.input_dim()));
    const size_t n = batch.shape[0];
    std::vector<double> cur = batch.values;
    size_t cur_w = spec.input_dim();
    size_t off = 0;
    for (size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
        const size_t in_w = spec.widths[layer], out_w = spec.widths[layer + 1];
        const double* W = params.values.data() + off;
        const double* b = W + in_w * out_w;
        std::vector<double> next(n * out_w, 0.0);
        for (size_t r = 0; r < n; ++r) {
            const double* x = cur.data() + r * in_w;
            double* y = next.data() + r * out_w;
            for (size_t c = 0; c < out_w; ++c) y[c] = b[c];
            for (size_t k = 0; k < in_w; ++k) {
                const double xv = x[k];
                const double* Wrow = W + k * out_w;
                for (size_t c = 0; c < out_w; ++c) y[c] += xv * Wrow[c];
            }
        }
        const bool last = layer + 2 == spec.widths.size();
        if (!last) {
            if (spec.hidden == Activation::LeakyRelu) {
                for (double& v : next)
                    if (v < 0.0) v *= spec.leaky_slope;
            } else {
                for (double& v : next) v = std::tanh(v);
            }
        } else if (spec.output == OutputTransform::Sigmoid) {
            for (double& v : next)
                v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        }
        cur = std::move(next);
        cur_w = out_w;
        off += in_w * out_w + out_w;
    }
    Tensor out(Shape{n, cur_w});
    out.values = std::move(cur);
    if (!out.all_finite()) throw NumericError("mlp_eval: non-finite output");
    return out;
}

Var mlp_forward(Tape& tape, const MlpSpec& spec, const ParamSet& params, Var batch,
                std::vector<int>* param_ids) {
    spec.validate();
    const Tensor& b = tape.value(batch);
    if (b.rank() != 2 || b.shape[1] != spec.input_dim())
        throw ShapeError("mlp_forward: batch " + shape_str(b.shape) +
                         " does not match input dim " + std::to_string(spec.input_dim()));
    size_t off = 0;
    Var x = batch;
    for (size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
        const size_t in_w = spec.widths[layer], out_w = spec.widths[layer + 1];
        Tensor W(Shape{in_w, out_w});
        std::copy(params.values.begin() + off, params.values.begin() + off + in_w * out_w,
                  W.values.begin());
        Tensor bias(Shape{out_w});
        std::copy(params.values.begin() + off + in_w * out_w,
                  params.values.begin() + off + in_w * out_w + out_w, bias.values.begin());
        Var w_var = tape.leaf(std::move(W));
        Var b_var = tape.leaf(std::move(bias));
        if (param_ids) {
            param_ids->push_back(w_var.id);
            param_ids->push_back(b_var.id);
        }
        x = tape.add_rowvec(tape.matmul(x, w_var), b_var);
        const bool last = layer + 2 == spec.widths.size();
        if (!last) {
            x = spec.hidden == Activation::LeakyRelu ? tape.leaky_relu(x, spec.leaky_slope)
                                                     : tape.tanh(x);
        } else if (spec.output == OutputTransform::Sigmoid) {
            x = tape.sigmoid(x);
        }
        off += in_w * out_w + out_w;
    }
    return x;
}

std::vector<double> collect_gradients(const Tape& tape, const std::vector<int>& param_ids) {
    std::vector<double> out;
    for (int id : param_ids) {
        const Tensor& g = tape.grad(id);
        out.insert(out.end(), g.values.begin(), g.values.end());
    }
    return out;
}

namespace {

template <typename T>
void write_le(std::ofstream& f, T v) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    f.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
bool read_le(std::ifstream& f, T& v) {
    unsigned char buf[sizeof(T)];
    if (!f.read(reinterpret_cast<char*>(buf), sizeof(T))) return false;
    v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return true;
}

uint32_t float_bits(float x) {
    uint32_t u;
    std::memcpy(&u, &x, sizeof(u));
    return u;
}

float bits_float(uint32_t u) {
    float x;
    std::memcpy(&x, &u, sizeof(x));
    return x;
}

} // namespace

void save_checkpoint(const ParamSet& params, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path + " for write");
    f.write(kMagic, sizeof(kMagic));
    write_le<uint16_t>(f, kVersion);
    write_le<uint32_t>(f, static_cast<uint32_t>(params.fingerprint.size()));
    f.write(params.fingerprint.data(), static_cast<std::streamsize>(params.fingerprint.size()));
    write_le<uint64_t>(f, static_cast<uint64_t>(params.values.size()));
    for (double v : params.values) write_le<uint32_t>(f, float_bits(static_cast<float>(v)));
    if (!f) throw CheckpointError(CheckpointError::Kind::Io, "write failed on " + path);
}

namespace {

ParamSet load_checkpoint_impl(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path);
    char magic[5];
    if (!f.read(magic, sizeof(magic)))
        throw CheckpointError(CheckpointError::Kind::Truncated, path + ": truncated header");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError(CheckpointError::Kind::BadMagic, path + ": bad magic");
    uint16_t version = 0;
    if (!read_le(f, version))
        throw CheckpointError(CheckpointError::Kind::Truncated, path + ": truncated header");
    if (version != kVersion)
        throw CheckpointError(CheckpointError::Kind::BadVersion,
                              path + ": unsupported version " + std::to_string(version));
    uint32_t fp_len = 0;
    if (!read_le(f, fp_len))
        throw CheckpointError(CheckpointError::Kind::Truncated, path + ": truncated header");
    std::string fp(fp_len, '\0');
    if (fp_len && !f.read(fp.data(), fp_len))
        throw CheckpointError(CheckpointError::Kind::Truncated, path + ": truncated fingerprint");
    uint64_t count = 0;
    if (!read_le(f, count))
        throw CheckpointError(CheckpointError::Kind::Truncated, path + ": truncated count");
    ParamSet p;
    p.fingerprint = std::move(fp);
    p.values.resize(count);
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t bits = 0;
        if (!read_le(f, bits))
            throw CheckpointError(CheckpointError::Kind::Truncated,
                                  path + ": truncated at value " + std::to_string(i));
        p.values[i] = static_cast<double>(bits_float(bits));
    }
    return p;
}

// Rebuild the layer manifest from a "mlp:w0-w1-..." fingerprint.
std::vector<Shape> manifest_from_fingerprint(const std::string& fp) {
    std::vector<Shape> manifest;
    const auto colon = fp.find(':');
    const auto bar = fp.find('|');
    if (colon == std::string::npos || bar == std::string::npos) return manifest;
    std::vector<size_t> widths;
    size_t pos = colon + 1;
    while (pos < bar) {
        size_t end = fp.find('-', pos);
        if (end == std::string::npos || end > bar) end = bar;
        widths.push_back(static_cast<size_t>(std::stoull(fp.substr(pos, end - pos))));
        pos = end + 1;
    }
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
        manifest.push_back(Shape{widths[i], widths[i + 1]});
        manifest.push_back(Shape{widths[i + 1]});
    }
    return manifest;
}

} // namespace

ParamSet load_checkpoint(const std::string& path) {
    ParamSet p = load_checkpoint_impl(path);
    p.manifest = manifest_from_fingerprint(p.fingerprint);
    size_t expected = 0;
    for (const Shape& s : p.manifest) expected += shape_numel(s);
    if (expected != p.values.size())
        throw CheckpointError(CheckpointError::Kind::Truncated,
                              path + ": value count does not match fingerprint layout");
    return p;
}

ParamSet load_checkpoint(const std::string& path, const MlpSpec& expected_spec) {
    ParamSet p = load_checkpoint(path);
    if (p.fingerprint != expected_spec.fingerprint())
        throw CheckpointError(CheckpointError::Kind::SpecMismatch,
                              path + ": checkpoint is " + p.fingerprint + ", expected " +
                                  expected_spec.fingerprint());
    return p;
}

} // namespace omas
