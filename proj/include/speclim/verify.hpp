#pragma once

#include <cstdint>
#include <vector>

#include "speclim/drafting.hpp"
#include "speclim/family.hpp"
#include "speclim/node_ref.hpp"
#include "speclim/random.hpp"

namespace speclim {

// Result of one verification call: the accepted root-anchored chain plus the
// verifier's bonus token. accepted_count includes the root, so it is at
// least one even for a root-only tree.
struct IterationOutcome {
    std::uint32_t accepted_count = 1;
    std::uint32_t exit_token = 0;  // child index where the sampled path left the tree
    std::vector<NodeRef> path;     // accepted chain, root first
};

// Samples the verifier's walk through the tree: descend while the sampled
// child is a tree node, stop at the first sample outside. The accepted
// sequence is distributed exactly as natural generation restricted to the
// tree.
IterationOutcome verify(const DraftTree& tree, const FamilySpec& family, RngStream& rng);

enum class DraftMode { full, q_greedy };

const char* draft_mode_name(DraftMode mode);

struct RunReport {
    std::uint64_t total_tokens = 0;  // requested N
    std::uint64_t iterations = 0;
    std::uint64_t accepted_total = 0;  // sum of X_i; overshoots N by < max X
    double mean_x = 0.0;
    double stderr_x = 0.0;
    double speedup_inverse_delta = 0.0;  // iterations / total_tokens
    std::uint64_t seed = 0;
    bool truncated = false;
};

// Draft -> verify until at least n_tokens are generated. Every iteration
// re-roots on a fresh realization (the i.i.d. assumption makes per-iteration
// subtrees independent), so iterations are embarrassingly parallel; results
// are identical for any worker count.
RunReport run(const FamilySpec& family, std::uint32_t p_capacity, std::uint64_t n_tokens,
              DraftMode mode, std::uint64_t seed, std::uint32_t workers = 1,
              const TreeLimits& limits = {});

// Closed-form E[X] for a fixed tree: the sum of node acceptance
// probabilities.
double exact_expected_x(const DraftTree& tree);

}  // namespace speclim
