#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace speclim {

// Path-from-root identity of a token-tree node. The root has an empty path,
// value 0 and probability 1; value is -ln P(v) in nats and never decreases
// along a path.
struct NodeRef {
    std::vector<std::uint32_t> path;
    double value = 0.0;
    double prob = 1.0;

    std::uint32_t depth() const { return static_cast<std::uint32_t>(path.size()); }
};

inline bool path_less(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (a[i] != b[i]) {
            return a[i] < b[i];
        }
    }
    return a.size() < b.size();
}

}  // namespace speclim
