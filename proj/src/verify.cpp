#include "speclim/verify.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace speclim {

namespace {

constexpr std::uint64_t kIterTag = 0x697465726174696full;
constexpr std::uint64_t kVerifyTag = 0x76657269667931ull;

struct WalkResult {
    std::uint32_t accepted = 1;
    std::uint32_t exit_token = 0;
    bool truncated = false;
};

WalkResult walk(const DraftTree& tree, const FamilySpec& family, RngStream& rng,
                std::vector<std::uint32_t>* chain) {
    WalkResult result;
    std::uint32_t idx = 0;
    if (chain) {
        chain->push_back(0);
    }
    for (;;) {
        const NodeDistribution& dist =
            tree.dists.empty() ? distribution_at(family, tree.nodes[idx].path)
                               : *tree.dists[idx];
        const auto token = static_cast<std::uint32_t>(sample_index(dist.p.probs, rng));
        const auto& kids = tree.children[idx];
        const auto it = kids.find(token);
        if (it == kids.end()) {
            result.exit_token = token;
            break;
        }
        idx = it->second;
        ++result.accepted;
        if (chain) {
            chain->push_back(idx);
        }
    }
    return result;
}

std::uint32_t one_iteration(const FamilySpec& family, std::uint32_t p_capacity,
                            DraftMode mode, std::uint64_t seed, std::uint64_t index,
                            const TreeLimits& limits, bool& truncated) {
    // Fresh realization per iteration: a new node-hash namespace stands in
    // for re-rooting, which is statistically identical under i.i.d. draws.
    const FamilySpec iter_family =
        family.with_seed(hash_combine(mix64(seed ^ kIterTag), index));
    DraftOptions options;
    options.build_frontier = false;
    options.limits = limits;
    const DraftTree tree = mode == DraftMode::full
                               ? draft_optimal(iter_family, p_capacity, options)
                               : draft_q_greedy(iter_family, p_capacity, options);
    if (tree.truncated) {
        truncated = true;
    }
    RngStream rng(hash_combine(mix64(seed ^ kVerifyTag), index));
    return walk(tree, iter_family, rng, nullptr).accepted;
}

}  // namespace

const char* draft_mode_name(DraftMode mode) {
    return mode == DraftMode::full ? "full" : "q-greedy";
}

IterationOutcome verify(const DraftTree& tree, const FamilySpec& family, RngStream& rng) {
    if (tree.nodes.empty() || !tree.nodes[0].path.empty()) {
        throw std::invalid_argument("verify: tree must contain the root");
    }
    std::vector<std::uint32_t> chain;
    const WalkResult result = walk(tree, family, rng, &chain);
    IterationOutcome outcome;
    outcome.accepted_count = result.accepted;
    outcome.exit_token = result.exit_token;
    outcome.path.reserve(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        // One accepted node per depth, forming a root-anchored chain.
        assert(tree.nodes[chain[i]].depth() == i);
        outcome.path.push_back(tree.nodes[chain[i]]);
    }
    return outcome;
}

RunReport run(const FamilySpec& family, std::uint32_t p_capacity, std::uint64_t n_tokens,
              DraftMode mode, std::uint64_t seed, std::uint32_t workers,
              const TreeLimits& limits) {
    if (n_tokens == 0) {
        throw std::invalid_argument("run: n_tokens must be >= 1");
    }
    if (mode == DraftMode::q_greedy && !family.is_paired()) {
        throw std::invalid_argument("run: q-greedy mode requires a paired family");
    }
    family.validate();
    workers = std::max<std::uint32_t>(workers, 1);

    RunReport report;
    report.total_tokens = n_tokens;
    report.seed = seed;
    std::uint64_t sum_x = 0;
    std::uint64_t sum_x2 = 0;
    bool truncated = false;

    const std::uint64_t batch = 256;
    std::vector<std::uint32_t> xs(batch);
    std::vector<std::uint8_t> trunc(batch);
    std::uint64_t next_index = 0;
    bool done = false;
    while (!done) {
        const std::uint64_t begin = next_index;
        const std::uint64_t end = begin + batch;
        if (workers == 1) {
            for (std::uint64_t i = begin; i < end; ++i) {
                bool t = false;
                xs[i - begin] = one_iteration(family, p_capacity, mode, seed, i, limits, t);
                trunc[i - begin] = t ? 1 : 0;
            }
        } else {
            std::vector<std::thread> pool;
            const std::uint64_t chunk = (batch + workers - 1) / workers;
            for (std::uint32_t w = 0; w < workers; ++w) {
                const std::uint64_t lo = begin + w * chunk;
                const std::uint64_t hi = std::min(end, lo + chunk);
                if (lo >= hi) {
                    break;
                }
                pool.emplace_back([&, lo, hi] {
                    for (std::uint64_t i = lo; i < hi; ++i) {
                        bool t = false;
                        xs[i - begin] =
                            one_iteration(family, p_capacity, mode, seed, i, limits, t);
                        trunc[i - begin] = t ? 1 : 0;
                    }
                });
            }
            for (auto& th : pool) {
                th.join();
            }
        }
        // Deterministic stopping scan, independent of the worker layout.
        for (std::uint64_t i = begin; i < end; ++i) {
            const std::uint64_t x = xs[i - begin];
            sum_x += x;
            sum_x2 += x * x;
            truncated = truncated || trunc[i - begin] != 0;
            ++report.iterations;
            if (sum_x >= n_tokens) {
                done = true;
                break;
            }
        }
        next_index = end;
    }

    report.accepted_total = sum_x;
    const double n = static_cast<double>(report.iterations);
    report.mean_x = static_cast<double>(sum_x) / n;
    if (report.iterations > 1) {
        const double var = (static_cast<double>(sum_x2) -
                            static_cast<double>(sum_x) * report.mean_x) /
                           (n - 1.0);
        report.stderr_x = std::sqrt(std::max(0.0, var) / n);
    }
    report.speedup_inverse_delta =
        static_cast<double>(report.iterations) / static_cast<double>(n_tokens);
    report.truncated = truncated;
    return report;
}

double exact_expected_x(const DraftTree& tree) {
    double total = 0.0;
    for (const NodeRef& node : tree.nodes) {
        total += node.prob;
    }
    return total;
}

}  // namespace speclim
