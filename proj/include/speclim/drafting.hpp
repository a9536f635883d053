#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <unordered_map>
#include <vector>

#include "speclim/family.hpp"
#include "speclim/node_ref.hpp"
#include "speclim/tree.hpp"

namespace speclim {

struct FrontierEntry {
    NodeRef node;
    double q_prob = std::numeric_limits<double>::quiet_NaN();  // NaN when unpaired
};

// Prefix-closed set of at most P nodes rooted at the empty path, in
// nondecreasing key order, plus the navigation state the verifier needs.
struct DraftTree {
    KeyMode mode = KeyMode::target;
    std::vector<NodeRef> nodes;    // nodes[0] is the root
    std::vector<double> q_probs;   // aligned with nodes; empty when unpaired
    double expected_accepted = 0.0;  // sum of P(v) over nodes
    bool truncated = false;

    // The p-frontier: every non-tree child with positive target probability
    // of a tree node. Populated when requested; total mass is one.
    std::vector<FrontierEntry> frontier;

    std::vector<std::int64_t> parent;  // -1 for the root
    std::vector<std::unordered_map<std::uint32_t, std::uint32_t>> children;
    std::vector<std::shared_ptr<const NodeDistribution>> dists;

    std::size_t size() const { return nodes.size(); }
};

struct DraftOptions {
    bool build_frontier = true;
    TreeLimits limits{};
};

// The capacity lowest-value nodes of the realized tree; by construction the
// draft tree maximizing the expected accepted-path length.
DraftTree draft_optimal(const FamilySpec& family, std::uint32_t p_capacity,
                        const DraftOptions& options = {});

// Greedy tree over the drafter's values -ln Q(v); expected_accepted is still
// evaluated under the target model. Requires a paired family.
DraftTree draft_q_greedy(const FamilySpec& family, std::uint32_t p_capacity,
                         const DraftOptions& options = {});

}  // namespace speclim
