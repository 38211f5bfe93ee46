#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace omas {

// Mix a label into a seed so independent components get independent,
// reproducible streams.
inline uint64_t derive_seed(uint64_t seed, std::string_view label) {
    uint64_t h = 1469598103934665603ull; // FNV-1a 64
    for (char c : label) {
        h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ull;
    }
    return seed ^ h;
}

// xoshiro256++ with splitmix64 seeding. Self-contained so streams are
// reproducible independent of the standard library implementation.
// Reference algorithm: Blackman & Vigna, xoshiro256++ 1.0.
class Rng {
public:
    explicit Rng(uint64_t seed) { reseed(seed); }

    // Derive an independent, deterministic stream for a named purpose
    // (e.g. "task1/shuffle"). Same (seed, label) -> same stream.
    Rng(uint64_t seed, std::string_view label) {
        uint64_t h = 1469598103934665603ull; // FNV-1a 64
        for (char c : label) {
            h ^= static_cast<uint64_t>(static_cast<unsigned char>(c));
            h *= 1099511628211ull;
        }
        reseed(seed ^ h);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n).
    uint64_t below(uint64_t n) {
        uint64_t x, r;
        do {
            x = next_u64();
            r = x % n;
        } while (x - r > uint64_t(0) - n);
        return r;
    }

    // Standard normal via Box-Muller with a cached spare.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    void reseed(uint64_t seed) {
        // splitmix64 expansion of the seed into the four-word state
        uint64_t z = seed;
        for (auto& w : s_) {
            z += 0x9e3779b97f4a7c15ull;
            uint64_t t = z;
            t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ull;
            t = (t ^ (t >> 27)) * 0x94d049bb133111ebull;
            w = t ^ (t >> 31);
        }
        has_spare_ = false;
    }

    uint64_t s_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace omas
