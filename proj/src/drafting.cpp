#include "speclim/drafting.hpp"

#include <cmath>
#include <stdexcept>

namespace speclim {

namespace {

void build_frontier(DraftTree& tree) {
    const bool paired = !tree.q_probs.empty();
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const NodeDistribution& dist = *tree.dists[i];
        const auto& kids = tree.children[i];
        for (std::uint32_t token = 0; token < dist.p.probs.size(); ++token) {
            if (kids.find(token) != kids.end()) {
                continue;
            }
            FrontierEntry entry;
            entry.node.path = tree.nodes[i].path;
            entry.node.path.push_back(token);
            entry.node.value = tree.nodes[i].value - std::log(dist.p.probs[token]);
            entry.node.prob = std::exp(-entry.node.value);
            if (paired) {
                entry.q_prob = tree.q_probs[i] * dist.q->probs[token];
            }
            tree.frontier.push_back(std::move(entry));
        }
    }
}

DraftTree draft_impl(const FamilySpec& family, std::uint32_t p_capacity, KeyMode mode,
                     const DraftOptions& options) {
    if (p_capacity == 0) {
        throw std::invalid_argument("draft: p_capacity must be >= 1");
    }
    FrontierQueue queue(family, mode, options.limits);
    const bool paired = family.is_paired();
    DraftTree tree;
    tree.mode = mode;
    tree.nodes.reserve(p_capacity);
    while (tree.nodes.size() < p_capacity) {
        auto popped = queue.pop_min();
        if (!popped) {
            tree.truncated = queue.budget_exhausted();
            break;
        }
        const auto idx = static_cast<std::uint32_t>(tree.nodes.size());
        if (popped->parent_pop_index >= 0) {
            tree.children[static_cast<std::size_t>(popped->parent_pop_index)]
                .emplace(popped->node.path.back(), idx);
        }
        tree.parent.push_back(popped->parent_pop_index);
        tree.children.emplace_back();
        tree.dists.push_back(popped->dist);
        if (paired) {
            tree.q_probs.push_back(std::exp(-popped->q_value));
        }
        tree.expected_accepted += popped->node.prob;
        tree.nodes.push_back(std::move(popped->node));
    }
    if (tree.nodes.empty()) {
        throw std::logic_error("draft: enumeration produced no nodes");
    }
    if (options.build_frontier) {
        build_frontier(tree);
    }
    return tree;
}

}  // namespace

DraftTree draft_optimal(const FamilySpec& family, std::uint32_t p_capacity,
                        const DraftOptions& options) {
    return draft_impl(family, p_capacity, KeyMode::target, options);
}

DraftTree draft_q_greedy(const FamilySpec& family, std::uint32_t p_capacity,
                         const DraftOptions& options) {
    if (!family.is_paired()) {
        throw std::invalid_argument("draft_q_greedy: requires a paired family");
    }
    return draft_impl(family, p_capacity, KeyMode::drafter, options);
}

}  // namespace speclim
