#include "speclim/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "speclim/bounds.hpp"
#include "speclim/drafting.hpp"
#include "speclim/tree.hpp"

namespace speclim::checks {

namespace {

constexpr std::uint64_t kTrialTag = 0x747269616c5f3031ull;
constexpr std::uint64_t kSpineTag = 0x7370696e655f3031ull;
constexpr std::uint64_t kMomentSamples = 100'000;
constexpr std::uint64_t kExpansionCap = 1 << 20;  // per realization
constexpr std::uint64_t kWalkStepCap = 1 << 20;
constexpr double kExactTolerance = 1e-9;

std::uint64_t trial_seed(const FamilySpec& family, std::uint64_t tag, std::uint64_t trial) {
    return hash_combine(mix64(family.seed ^ tag), trial);
}

struct MeanVar {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::uint64_t n = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return sum / static_cast<double>(n); }
    double stderr_of_mean() const {
        if (n < 2) {
            return 0.0;
        }
        const double m = mean();
        const double var =
            std::max(0.0, (sum_sq - sum * m) / static_cast<double>(n - 1));
        return std::sqrt(var / static_cast<double>(n));
    }
};

// Difference test that degrades to an absolute comparison when both sides
// are deterministic.
void score_equality(CheckResult& result, const MeanVar& lhs, const MeanVar& rhs) {
    result.lhs = lhs.mean();
    result.rhs = rhs.mean();
    result.lhs_stderr = lhs.stderr_of_mean();
    result.rhs_stderr = rhs.stderr_of_mean();
    const double se = std::hypot(result.lhs_stderr, result.rhs_stderr);
    const double diff = result.lhs - result.rhs;
    if (se > 0.0) {
        result.z = diff / se;
        result.pass = std::abs(result.z) <= kZThreshold;
    } else {
        result.z = 0.0;
        result.pass = std::abs(diff) <= kExactTolerance * std::max(1.0, std::abs(result.lhs));
    }
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Counts nodes at exactly `depth` with value <= t; exact thanks to value
// monotonicity (a node above t has no descendant below it). The expansion
// cap applies per realization.
std::uint64_t layer_count(const FamilySpec& family, std::uint32_t depth, double t,
                          bool* truncated) {
    struct Item {
        std::vector<std::uint32_t> path;
        double value;
    };
    std::vector<Item> stack;
    stack.push_back({{}, 0.0});
    std::uint64_t count = 0;
    std::uint64_t expansions = 0;
    while (!stack.empty()) {
        Item item = std::move(stack.back());
        stack.pop_back();
        if (item.value > t) {
            continue;
        }
        if (item.path.size() == depth) {
            ++count;
            continue;
        }
        if (++expansions > kExpansionCap) {
            *truncated = true;
            break;
        }
        const NodeDistribution dist = distribution_at(family, item.path);
        for (std::uint32_t token = 0; token < dist.p.probs.size(); ++token) {
            const double child_value = item.value - std::log(dist.p.probs[token]);
            if (child_value <= t) {
                Item child;
                child.path = item.path;
                child.path.push_back(token);
                child.value = child_value;
                stack.push_back(std::move(child));
            }
        }
    }
    return count;
}

}  // namespace

CheckResult check_many_to_one(const FamilySpec& family, std::uint32_t depth, double t,
                              std::uint64_t trials) {
    CheckResult result;
    {
        std::ostringstream name;
        name << "many-to-one/" << family_kind_name(family.kind) << " depth=" << depth
             << " t=" << format_double(t);
        result.name = name.str();
    }
    if (depth < 1 || depth > 6) {
        throw std::invalid_argument("check_many_to_one: depth must be in [1, 6]");
    }
    family.validate();

    MeanVar lhs;
    MeanVar rhs;
    bool truncated = false;
    double worst_mass_error = 0.0;
    for (std::uint64_t r = 0; r < trials; ++r) {
        const FamilySpec realization = family.with_seed(trial_seed(family, kTrialTag, r));
        lhs.add(static_cast<double>(layer_count(realization, depth, t, &truncated)));

        RngStream rng(trial_seed(family, kSpineTag, r));
        double s = 0.0;
        for (std::uint32_t d = 0; d < depth; ++d) {
            s += spine_step(family, rng);
        }
        rhs.add(s <= t ? std::exp(s) : 0.0);

        if (r < 16) {
            // theta = 1 normalization: each draw's probabilities sum to one.
            RngStream probe(trial_seed(family, kSpineTag ^ 0xabcdull, r));
            const NodeDistribution dist = sample_distribution(family, probe);
            worst_mass_error = std::max(worst_mass_error, std::abs(dist.p.sum() - 1.0));
        }
    }
    score_equality(result, lhs, rhs);
    result.truncated = truncated;
    if (worst_mass_error > 1e-9) {
        result.pass = false;
    }
    result.detail = "psi1_mass_error=" + format_double(worst_mass_error);
    if (truncated) {
        result.pass = false;
        result.detail += " (layer expansion truncated)";
    }
    return result;
}

std::vector<CheckResult> check_renewal(const FamilySpec& family,
                                       std::span<const double> x_grid,
                                       std::uint64_t trials) {
    family.validate();
    if (!family.non_arithmetic()) {
        CheckResult refused;
        refused.name = std::string("renewal/") + family_kind_name(family.kind);
        refused.refused = true;
        refused.detail =
            "family is arithmetic: lattice atoms at the boundary break the "
            "renewal identity";
        return {refused};
    }
    const double x_max = *std::max_element(x_grid.begin(), x_grid.end());
    std::vector<MeanVar> counts(x_grid.size());
    bool truncated = false;
    for (std::uint64_t r = 0; r < trials; ++r) {
        RngStream rng(trial_seed(family, kSpineTag, r));
        // U(x) = 1 + E[min{d : S_d >= x}], the quantity the Wald/Lorden
        // sandwich applies to; the walk stops once it reaches the grid
        // maximum.
        std::vector<std::uint64_t> first_passage(x_grid.size(), 0);
        double s = 0.0;
        std::uint64_t steps = 0;
        while (s < x_max) {
            s += spine_step(family, rng);
            ++steps;
            if (steps > kWalkStepCap) {
                truncated = true;
                break;
            }
            for (std::size_t i = 0; i < x_grid.size(); ++i) {
                if (first_passage[i] == 0 && s >= x_grid[i]) {
                    first_passage[i] = steps;
                }
            }
        }
        for (std::size_t i = 0; i < x_grid.size(); ++i) {
            // x = 0 is reached by S_0 already: zero steps.
            const std::uint64_t n_steps = x_grid[i] <= 0.0 ? 0 : first_passage[i];
            counts[i].add(1.0 + static_cast<double>(n_steps));
        }
    }

    const MomentParams moments = family_moments(family, kMomentSamples);
    std::vector<CheckResult> results;
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        const double x = x_grid[i];
        CheckResult result;
        result.name = std::string("renewal/") + family_kind_name(family.kind) +
                      " x=" + format_double(x);
        const RenewalBounds bounds = renewal_bounds(moments, x);
        result.lhs = counts[i].mean();
        result.lhs_stderr = counts[i].stderr_of_mean();
        result.truncated = truncated;
        // Propagate the moment-estimate uncertainty into the bound ends.
        const double mu = moments.mu;
        const double d_low = x / (mu * mu) * moments.stderr_mu;
        const double d_up = std::hypot(
            (x / (mu * mu) + 2.0 * moments.mu2 / (mu * mu * mu)) * moments.stderr_mu,
            moments.stderr_mu2 / (mu * mu));
        const double slack_low = kZThreshold * std::hypot(result.lhs_stderr, d_low);
        const double slack_up = kZThreshold * std::hypot(result.lhs_stderr, d_up);
        result.pass = result.lhs >= bounds.lower - slack_low &&
                      result.lhs <= bounds.upper + slack_up;
        result.z = 0.0;
        result.detail = "bounds=[" + format_double(bounds.lower) + ", " +
                        format_double(bounds.upper) + "]";
        if (truncated) {
            result.pass = false;
            result.detail += " (walk step cap hit)";
        }
        results.push_back(std::move(result));
    }
    return results;
}

CheckResult check_node_count(const FamilySpec& family, double t, std::uint64_t trials) {
    CheckResult result;
    result.name = std::string("node-count/") + family_kind_name(family.kind) +
                  " t=" + format_double(t);
    family.validate();

    MeanVar lhs;
    MeanVar rhs;
    bool truncated = false;
    for (std::uint64_t r = 0; r < trials; ++r) {
        const FamilySpec realization = family.with_seed(trial_seed(family, kTrialTag, r));
        const CountResult count = count_below(realization, t, /*cap=*/1'000'000);
        truncated = truncated || count.truncated;
        lhs.add(static_cast<double>(count.count));

        RngStream rng(trial_seed(family, kSpineTag, r));
        double s = 0.0;
        double weighted = 0.0;
        std::uint64_t steps = 0;
        while (s <= t) {
            weighted += std::exp(s);
            s += spine_step(family, rng);
            if (++steps > kWalkStepCap) {
                truncated = true;
                break;
            }
        }
        rhs.add(weighted);
    }
    score_equality(result, lhs, rhs);
    result.truncated = truncated;
    if (truncated) {
        result.pass = false;
        result.detail = "count or walk truncated";
    }
    return result;
}

CheckResult check_frontier_mass(const FamilySpec& family, std::uint32_t p_capacity,
                                std::uint64_t trials) {
    CheckResult result;
    result.name = std::string("frontier-mass/") + family_kind_name(family.kind) +
                  " P=" + std::to_string(p_capacity);
    family.validate();
    double worst = 0.0;
    std::uint64_t n_truncated = 0;
    for (std::uint64_t r = 0; r < trials; ++r) {
        const FamilySpec realization = family.with_seed(trial_seed(family, kTrialTag, r));
        const DraftTree tree = draft_optimal(realization, p_capacity);
        if (tree.truncated) {
            ++n_truncated;
            continue;
        }
        double mass = 0.0;
        for (const FrontierEntry& entry : tree.frontier) {
            mass += entry.node.prob;
        }
        worst = std::max(worst, std::abs(mass - 1.0));
    }
    result.lhs = worst;
    result.rhs = 0.0;
    result.truncated = n_truncated > 0;
    result.pass = n_truncated < trials && worst <= 1e-6;
    result.detail = "max |mass - 1| = " + format_double(worst) +
                    ", truncated trials = " + std::to_string(n_truncated);
    return result;
}

CheckResult check_optimal_bruteforce(const FamilySpec& family, std::uint32_t p_capacity,
                                     std::uint32_t vocab, std::uint32_t max_depth) {
    CheckResult result;
    result.name = std::string("bruteforce/") + family_kind_name(family.kind) +
                  " P=" + std::to_string(p_capacity) + " depth<=" + std::to_string(max_depth);
    if (vocab > 4 || p_capacity > 8 || max_depth > 8 || p_capacity == 0) {
        throw std::invalid_argument(
            "check_optimal_bruteforce: exhaustive search needs vocab <= 4, P <= 8, "
            "depth <= 8");
    }
    family.validate();

    // Cache of realized child distributions, keyed by path.
    std::map<std::vector<std::uint32_t>, NodeDistribution> dist_cache;
    const auto dist_of = [&](const std::vector<std::uint32_t>& path) -> const NodeDistribution& {
        auto it = dist_cache.find(path);
        if (it == dist_cache.end()) {
            it = dist_cache.emplace(path, distribution_at(family, path)).first;
        }
        return it->second;
    };

    struct Candidate {
        std::vector<std::uint32_t> path;
        double prob;
    };
    std::vector<Candidate> candidates;
    double best = 0.0;

    const auto append_children = [&](const std::vector<std::uint32_t>& path, double prob) {
        if (path.size() >= max_depth) {
            return std::size_t{0};
        }
        const NodeDistribution& dist = dist_of(path);
        if (dist.p.probs.size() > vocab) {
            throw std::invalid_argument("check_optimal_bruteforce: family support exceeds vocab");
        }
        for (std::uint32_t token = 0; token < dist.p.probs.size(); ++token) {
            Candidate child;
            child.path = path;
            child.path.push_back(token);
            child.prob = prob * dist.p.probs[token];
            candidates.push_back(std::move(child));
        }
        return dist.p.probs.size();
    };

    // Canonical enumeration of prefix-closed subtrees: nodes are added in
    // increasing candidate order, children are appended behind the cursor.
    const std::function<void(std::size_t, double, std::uint32_t)> recurse =
        [&](std::size_t start, double sum, std::uint32_t count) {
            best = std::max(best, sum);
            if (count == p_capacity) {
                return;
            }
            for (std::size_t i = start; i < candidates.size(); ++i) {
                const std::size_t base = candidates.size();
                const Candidate chosen = candidates[i];
                append_children(chosen.path, chosen.prob);
                recurse(i + 1, sum + chosen.prob, count + 1);
                candidates.resize(base);
            }
        };
    append_children({}, 1.0);
    recurse(0, 1.0, 1);

    // All node probabilities within the depth cap, for the top-P comparison.
    std::vector<double> all_probs;
    std::vector<std::pair<std::vector<std::uint32_t>, double>> layer{{{}, 1.0}};
    all_probs.push_back(1.0);
    for (std::uint32_t d = 0; d < max_depth; ++d) {
        std::vector<std::pair<std::vector<std::uint32_t>, double>> next;
        for (const auto& [path, prob] : layer) {
            const NodeDistribution& dist = dist_of(path);
            for (std::uint32_t token = 0; token < dist.p.probs.size(); ++token) {
                auto child_path = path;
                child_path.push_back(token);
                const double child_prob = prob * dist.p.probs[token];
                all_probs.push_back(child_prob);
                next.emplace_back(std::move(child_path), child_prob);
            }
        }
        layer = std::move(next);
    }
    std::sort(all_probs.begin(), all_probs.end(), std::greater<double>());
    double top_sum = 0.0;
    for (std::uint32_t i = 0; i < p_capacity && i < all_probs.size(); ++i) {
        top_sum += all_probs[i];
    }

    DraftOptions options;
    options.build_frontier = false;
    options.limits.max_depth = max_depth;
    const DraftTree tree = draft_optimal(family, p_capacity, options);

    std::vector<double> tree_probs;
    tree_probs.reserve(tree.nodes.size());
    for (const NodeRef& node : tree.nodes) {
        tree_probs.push_back(node.prob);
    }
    std::sort(tree_probs.begin(), tree_probs.end(), std::greater<double>());
    bool top_match = tree_probs.size() == std::min<std::size_t>(p_capacity, all_probs.size());
    for (std::size_t i = 0; top_match && i < tree_probs.size(); ++i) {
        top_match = std::abs(tree_probs[i] - all_probs[i]) <= 1e-12;
    }

    result.lhs = tree.expected_accepted;
    result.rhs = best;
    result.pass = std::abs(tree.expected_accepted - best) <= kExactTolerance &&
                  std::abs(top_sum - best) <= kExactTolerance && top_match;
    result.detail = "exhaustive max = " + format_double(best) +
                    ", tree sum = " + format_double(tree.expected_accepted) +
                    ", top-P sum = " + format_double(top_sum);
    return result;
}

CheckResult check_tp_trend(const FamilySpec& family, std::span<const std::uint32_t> p_grid,
                           std::uint64_t trials) {
    CheckResult result;
    result.name = std::string("tp-trend/") + family_kind_name(family.kind);
    family.validate();
    if (!family.non_arithmetic()) {
        result.refused = true;
        result.detail = "family is arithmetic: limit statements need a non-lattice walk";
        return result;
    }
    std::vector<double> means;
    std::vector<double> ses;
    bool truncated = false;
    std::ostringstream detail;
    detail << "E[T_P] vs (ln P - ln ln P):";
    for (std::uint32_t p : p_grid) {
        MeanVar acc;
        for (std::uint64_t r = 0; r < trials; ++r) {
            const FamilySpec realization =
                family.with_seed(trial_seed(family, kTrialTag, r));
            const ValueResult value = t_p(realization, p);
            truncated = truncated || value.truncated;
            acc.add(value.value);
        }
        means.push_back(acc.mean());
        ses.push_back(acc.stderr_of_mean());
        const auto ref = tp_reference(p);
        detail << ' ' << p << ":" << format_double(acc.mean());
        if (ref) {
            detail << "(" << format_double(acc.mean() - *ref) << ")";
        }
    }
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < means.size(); ++i) {
        const double slack = kZThreshold * std::hypot(ses[i], ses[i + 1]);
        if (means[i + 1] < means[i] - slack) {
            monotone = false;
        }
    }
    result.lhs = means.empty() ? 0.0 : means.back();
    result.pass = monotone && !truncated;
    result.truncated = truncated;
    result.detail = detail.str();
    return result;
}

}  // namespace speclim::checks
