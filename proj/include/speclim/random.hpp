#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace speclim {

// Counter-based randomness: every stream is a splitmix64 walk whose key is a
// hash of (master seed, purpose tag, indices...). Two streams with different
// keys are independent for all practical purposes, and a stream's output
// depends only on its key, never on global state or call order.

inline constexpr std::uint64_t kSplitMixGamma = 0x9e3779b97f4a7c15ull;

inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h + kSplitMixGamma + (v ^ (h >> 17)));
}

// Key for the child-distribution draw at a tree node. Folding the child
// indices one at a time keeps distinct paths on distinct streams, including
// prefixes of each other.
inline std::uint64_t path_key(std::uint64_t seed, std::span<const std::uint32_t> path) {
    std::uint64_t h = mix64(seed ^ 0x5ca1ab1e0ddba11ull);
    for (std::uint32_t step : path) {
        h = hash_combine(h, static_cast<std::uint64_t>(step) + 1);
    }
    return h;
}

class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(std::uint64_t key) : state_(key) {}

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~0ull; }

    std::uint64_t operator()() {
        state_ += kSplitMixGamma;
        return mix64(state_);
    }

    // Uniform on [0, 1).
    double next_unit() {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1); safe as a log argument.
    double next_unit_open() {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double next_normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(next_unit_open()));
        const double theta = 2.0 * std::numbers::pi * next_unit();
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Marsaglia-Tsang; shape < 1 is boosted through shape + 1.
    double next_gamma(double shape) {
        if (shape < 1.0) {
            const double u = next_unit_open();
            return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = next_normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) {
                continue;
            }
            v = v * v * v;
            const double u = next_unit_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) {
                return d * v;
            }
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
                return d * v;
            }
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Inverse-CDF draw over a probability vector. The caller guarantees the
// entries sum to ~1; the last index absorbs rounding slack.
inline std::size_t sample_index(std::span<const double> probs, RngStream& rng) {
    double t = rng.next_unit();
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        t -= probs[i];
        if (t < 0.0) {
            return i;
        }
    }
    return probs.empty() ? 0 : probs.size() - 1;
}

}  // namespace speclim
