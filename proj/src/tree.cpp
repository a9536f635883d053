#include "speclim/tree.hpp"

#include <cmath>
#include <stdexcept>

namespace speclim {

namespace {

double child_log_prob(const TokenDistribution& dist, std::uint32_t token) {
    const double p = dist.probs[token];
    return -std::log(p);
}

}  // namespace

bool FrontierQueue::EntryGreater::operator()(const Entry& a, const Entry& b) const {
    if (a.key != b.key) {
        return a.key > b.key;
    }
    return path_less(b.path, a.path);
}

FrontierQueue::FrontierQueue(FamilySpec family, KeyMode mode, TreeLimits limits)
    : family_(std::move(family)), mode_(mode), limits_(limits) {
    family_.validate();
    paired_ = family_.is_paired();
    if (mode_ == KeyMode::drafter && !paired_) {
        throw std::invalid_argument("FrontierQueue: drafter keys require a paired family");
    }
    Entry root;
    root.key = 0.0;
    root.p_value = 0.0;
    root.q_value = paired_ ? 0.0 : std::numeric_limits<double>::quiet_NaN();
    heap_.push(std::move(root));
}

std::uint32_t FrontierQueue::eligible_children(const NodeDistribution& dist,
                                               const std::vector<std::uint32_t>* order) const {
    std::uint32_t n = order ? static_cast<std::uint32_t>(order->size())
                            : static_cast<std::uint32_t>(dist.p.probs.size());
    if (limits_.max_children) {
        n = std::min(n, *limits_.max_children);
    }
    return n;
}

void FrontierQueue::push_child(const std::vector<std::uint32_t>& parent_path,
                               double parent_p_value, double parent_q_value,
                               std::int64_t parent_pop_index,
                               const std::shared_ptr<const NodeDistribution>& parent_dist,
                               const std::shared_ptr<const std::vector<std::uint32_t>>& order,
                               std::uint32_t rank) {
    if (limits_.max_depth && parent_path.size() >= *limits_.max_depth) {
        return;
    }
    if (rank >= eligible_children(*parent_dist, order ? order.get() : nullptr)) {
        return;
    }
    const std::uint32_t token = order ? (*order)[rank] : rank;
    Entry child;
    child.p_value = parent_p_value + child_log_prob(parent_dist->p, token);
    if (paired_) {
        const double q = parent_dist->q->probs[token];
        child.q_value = q > 0.0 ? parent_q_value - std::log(q)
                                : std::numeric_limits<double>::infinity();
    } else {
        child.q_value = std::numeric_limits<double>::quiet_NaN();
    }
    child.key = mode_ == KeyMode::target ? child.p_value : child.q_value;
    child.parent_p_value = parent_p_value;
    child.parent_q_value = parent_q_value;
    child.parent_pop_index = parent_pop_index;
    child.path = parent_path;
    child.path.push_back(token);
    child.parent_dist = parent_dist;
    child.parent_order = order;
    child.sibling_rank = rank;
    heap_.push(std::move(child));
}

std::optional<FrontierQueue::Popped> FrontierQueue::pop_min() {
    if (heap_.empty()) {
        return std::nullopt;
    }
    if (pops_ >= limits_.budget) {
        budget_exhausted_ = true;
        return std::nullopt;
    }
    Entry top = heap_.top();
    heap_.pop();
    const std::int64_t pop_index = static_cast<std::int64_t>(pops_);
    ++pops_;

    auto dist = std::make_shared<const NodeDistribution>(distribution_at(family_, top.path));
    std::shared_ptr<const std::vector<std::uint32_t>> own_order;
    if (mode_ == KeyMode::drafter) {
        own_order = std::make_shared<const std::vector<std::uint32_t>>(
            drafter_child_order(*dist));
    }
    // Lazy insertion: this node's best child, then its own next-best sibling.
    push_child(top.path, top.p_value, top.q_value, pop_index, dist, own_order, 0);
    if (top.parent_dist) {
        std::vector<std::uint32_t> parent_path(top.path.begin(), top.path.end() - 1);
        push_child(parent_path, top.parent_p_value, top.parent_q_value,
                   top.parent_pop_index, top.parent_dist, top.parent_order,
                   top.sibling_rank + 1);
    }

    Popped out;
    out.node.path = std::move(top.path);
    out.node.value = top.p_value;
    out.node.prob = std::exp(-top.p_value);
    out.key_value = top.key;
    out.q_value = top.q_value;
    out.parent_pop_index = top.parent_pop_index;
    out.dist = std::move(dist);
    return out;
}

Enumeration enumerate_lowest(const FamilySpec& family, std::uint64_t k, TreeLimits limits) {
    if (k == 0) {
        throw std::invalid_argument("enumerate_lowest: k must be >= 1");
    }
    FrontierQueue queue(family, KeyMode::target, limits);
    Enumeration result;
    result.nodes.reserve(k);
    while (result.nodes.size() < k) {
        auto popped = queue.pop_min();
        if (!popped) {
            // A drained queue means the (constrained) universe is complete;
            // only a spent budget is a truncation.
            result.truncated = queue.budget_exhausted();
            break;
        }
        result.nodes.push_back(std::move(popped->node));
    }
    return result;
}

CountResult count_below(const FamilySpec& family, double t, std::uint64_t cap,
                        TreeLimits limits) {
    if (t < 0.0) {
        throw std::invalid_argument("count_below: t must be >= 0");
    }
    if (cap == 0) {
        throw std::invalid_argument("count_below: cap must be >= 1");
    }
    FrontierQueue queue(family, KeyMode::target, limits);
    CountResult result;
    for (;;) {
        auto popped = queue.pop_min();
        if (!popped) {
            result.truncated = queue.budget_exhausted();
            break;
        }
        if (popped->node.value > t) {
            break;
        }
        ++result.count;
        if (result.count > cap) {
            result.count = cap;
            result.truncated = true;
            break;
        }
    }
    return result;
}

ValueResult t_p(const FamilySpec& family, std::uint64_t p_capacity, TreeLimits limits) {
    const Enumeration e = enumerate_lowest(family, p_capacity, limits);
    ValueResult result;
    result.truncated = e.truncated;
    if (!e.nodes.empty()) {
        result.value = e.nodes.back().value;
    }
    return result;
}

double spine_step(const FamilySpec& family, RngStream& rng) {
    const NodeDistribution dist = sample_distribution(family, rng);
    const std::size_t idx = sample_index(dist.p.probs, rng);
    return -std::log(dist.p.probs[idx]);
}

}  // namespace speclim
