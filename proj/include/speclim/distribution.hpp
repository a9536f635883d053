#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace speclim {

// Mass below this threshold is dropped and the remainder renormalized; the
// bounds depend only on non-negligible mass and truncation caps per-node work.
inline constexpr double kProbTruncation = 1e-12;
inline constexpr double kSumTolerance = 1e-9;

// Finite next-token distribution at one tree node. Target-model ("p")
// vectors are stored truncated and strictly positive; drafter-view ("q")
// vectors are aligned index-wise to their p partner and may contain zeros.
struct TokenDistribution {
    std::vector<double> probs;

    std::size_t support_size() const;
    double sum() const;
    double entropy() const;            // -sum p ln p, with 0 ln 0 := 0
    double second_log_moment() const;  // sum p ln^2 p
    bool is_point_mass() const;        // support of size one
};

// Sorts descending, truncates negligible mass, renormalizes, validates.
// Throws std::invalid_argument on a vector that cannot be made a
// distribution (empty, negative entries, sum far from one).
TokenDistribution make_distribution(std::vector<double> probs);

// Child distribution of one node: the target model's view plus, for paired
// families, the drafter's view over the same child indices.
struct NodeDistribution {
    TokenDistribution p;
    std::optional<TokenDistribution> q;

    bool paired() const { return q.has_value(); }
};

// Child indices ordered by decreasing q, ties broken by index; q == 0
// children are excluded (the drafter never proposes them).
std::vector<std::uint32_t> drafter_child_order(const NodeDistribution& dist);

// Per-draw moment functionals shared by family_moments and trace estimation.
struct PairedStats {
    double entropy = 0.0;
    double second_log_moment = 0.0;
    // Present only when a q vector exists.
    std::optional<double> q_zero_mass;       // sum of p where q == 0
    std::optional<double> cross_entropy;     // (-sum_{q>0} p ln q) / (sum_{q>0} p)
};

PairedStats paired_stats(std::span<const double> p, const std::vector<double>* q);

}  // namespace speclim
