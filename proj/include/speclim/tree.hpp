#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "speclim/family.hpp"
#include "speclim/node_ref.hpp"
#include "speclim/random.hpp"

namespace speclim {

// Whether best-first order is keyed by the target model's value -ln P(v) or
// by the drafter's value -ln Q(v).
enum class KeyMode { target, drafter };

struct TreeLimits {
    // Enumeration and counting can blow up when beta stays near one;
    // explicit truncation beats a silent hang.
    std::uint64_t budget = 10'000'000;
    // Off by default; mirror practical systems' caps when set.
    std::optional<std::uint32_t> max_depth;
    std::optional<std::uint32_t> max_children;
};

// Best-first expansion of the realized token tree: pop-min returns nodes in
// globally nondecreasing key order (ties to the lexicographically smallest
// path). Popping a node inserts its best child and its own next-best
// sibling, so the queue grows O(pops), not O(pops * vocab).
class FrontierQueue {
public:
    FrontierQueue(FamilySpec family, KeyMode mode = KeyMode::target,
                  TreeLimits limits = {});

    struct Popped {
        NodeRef node;       // value/prob under the target model
        double key_value;   // equals node.value in target mode, -ln Q(v) otherwise
        double q_value;     // -ln Q(v) when the family is paired, else NaN
        std::int64_t parent_pop_index = -1;  // pop index of the parent, -1 for root
        std::shared_ptr<const NodeDistribution> dist;  // this node's child distribution
    };

    // nullopt once the budget is exhausted or the (constrained) tree is
    // fully enumerated.
    std::optional<Popped> pop_min();

    bool budget_exhausted() const { return budget_exhausted_; }
    std::uint64_t pops() const { return pops_; }

private:
    struct Entry {
        double key;
        double p_value;
        double q_value;
        // The parent's values are kept verbatim so the next sibling can be
        // inserted without inverting a possibly infinite edge value.
        double parent_p_value = 0.0;
        double parent_q_value = 0.0;
        std::int64_t parent_pop_index = -1;
        std::vector<std::uint32_t> path;
        std::shared_ptr<const NodeDistribution> parent_dist;
        std::shared_ptr<const std::vector<std::uint32_t>> parent_order;
        std::uint32_t sibling_rank = 0;
    };
    struct EntryGreater {
        bool operator()(const Entry& a, const Entry& b) const;
    };

    void push_child(const std::vector<std::uint32_t>& parent_path, double parent_p_value,
                    double parent_q_value, std::int64_t parent_pop_index,
                    const std::shared_ptr<const NodeDistribution>& parent_dist,
                    const std::shared_ptr<const std::vector<std::uint32_t>>& order,
                    std::uint32_t rank);
    std::uint32_t eligible_children(const NodeDistribution& dist,
                                    const std::vector<std::uint32_t>* order) const;

    FamilySpec family_;
    KeyMode mode_;
    TreeLimits limits_;
    bool paired_ = false;
    std::priority_queue<Entry, std::vector<Entry>, EntryGreater> heap_;
    std::uint64_t pops_ = 0;
    bool budget_exhausted_ = false;
};

struct Enumeration {
    std::vector<NodeRef> nodes;  // nondecreasing value order
    bool truncated = false;
};

// The k nodes of the realized tree with smallest value -ln P(v).
Enumeration enumerate_lowest(const FamilySpec& family, std::uint64_t k,
                             TreeLimits limits = {});

struct CountResult {
    std::uint64_t count = 0;
    bool truncated = false;
};

// Exact N(t) = #{v : -ln P(v) <= t} for this realization, or a truncation
// marker once the count would exceed cap.
CountResult count_below(const FamilySpec& family, double t, std::uint64_t cap,
                        TreeLimits limits = {});

struct ValueResult {
    double value = 0.0;
    bool truncated = false;
};

// Value of the p_capacity-th smallest node: the largest value inside the
// optimal draft tree of that capacity.
ValueResult t_p(const FamilySpec& family, std::uint64_t p_capacity, TreeLimits limits = {});

// One increment of the size-biased spine walk: draw a child distribution,
// pick child u with probability beta_u, return -ln beta_u. Mean mu, second
// moment mu2.
double spine_step(const FamilySpec& family, RngStream& rng);

}  // namespace speclim
