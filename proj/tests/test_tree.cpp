#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "speclim/bounds.hpp"
#include "speclim/tree.hpp"
#include "support/oracles.hpp"

using namespace speclim;

namespace {

const double kLn2 = std::log(2.0);

bool prefix_closed(const std::vector<NodeRef>& nodes) {
    std::set<std::vector<std::uint32_t>> seen;
    for (const NodeRef& node : nodes) {
        if (!node.path.empty()) {
            auto parent = node.path;
            parent.pop_back();
            if (seen.find(parent) == seen.end()) {
                return false;
            }
        }
        seen.insert(node.path);
    }
    return true;
}

}  // namespace

TEST_CASE("four lowest nodes of the 0.7/0.3 tree form the greedy chain") {
    const auto family = FamilySpec::make_fixed({0.7, 0.3}, 0);
    const auto result = enumerate_lowest(family, 4);
    REQUIRE(result.nodes.size() == 4);
    CHECK_FALSE(result.truncated);
    CHECK(result.nodes[0].path.empty());
    CHECK(result.nodes[1].path == std::vector<std::uint32_t>{0});
    CHECK(result.nodes[2].path == std::vector<std::uint32_t>{0, 0});
    CHECK(result.nodes[3].path == std::vector<std::uint32_t>{0, 0, 0});
    CHECK(result.nodes[0].prob == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(result.nodes[1].prob == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(result.nodes[2].prob == doctest::Approx(0.49).epsilon(1e-12));
    CHECK(result.nodes[3].prob == doctest::Approx(0.343).epsilon(1e-12));
}

TEST_CASE("uniform V=2 with k=7 yields the complete binary tree of depth 2") {
    const auto family = FamilySpec::make_uniform(2, 0);
    const auto result = enumerate_lowest(family, 7);
    REQUIRE(result.nodes.size() == 7);
    const std::vector<std::vector<std::uint32_t>> expected = {
        {}, {0}, {1}, {0, 0}, {0, 1}, {1, 0}, {1, 1}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(result.nodes[i].path == expected[i]);
    }
    CHECK(result.nodes.back().value == doctest::Approx(2.0 * kLn2).epsilon(1e-12));
}

TEST_CASE("k=1 returns the root alone") {
    const auto family = FamilySpec::make_dirichlet(1.0, 8, 3);
    const auto result = enumerate_lowest(family, 1);
    REQUIRE(result.nodes.size() == 1);
    CHECK(result.nodes[0].path.empty());
    CHECK(result.nodes[0].value == 0.0);
    CHECK(result.nodes[0].prob == 1.0);
}

TEST_CASE("enumeration agrees with the exhaustive sort oracle") {
    RngStream rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        // Random three-token family with the top probability capped so the
        // 12 lowest values provably live within depth 8.
        std::vector<double> probs(3);
        double total = 0.0;
        for (double& p : probs) {
            p = 0.05 + rng.next_unit();
            total += p;
        }
        for (double& p : probs) {
            p /= total;
        }
        const double p_max = *std::max_element(probs.begin(), probs.end());
        if (p_max > 0.75) {
            continue;
        }
        const auto family = FamilySpec::make_fixed(probs, 1000 + trial);
        const std::uint32_t depth = 8;
        const auto oracle = testsupport::k_lowest_by_sort(
            testsupport::all_nodes_to_depth(family, depth), 12);
        REQUIRE(oracle.size() == 12);
        // Completeness guard: anything beyond the explored depth is larger.
        REQUIRE(oracle.back().value < (depth + 1) * -std::log(p_max));

        const auto fast = enumerate_lowest(family, 12);
        REQUIRE(fast.nodes.size() == 12);
        for (std::size_t i = 0; i < 12; ++i) {
            CHECK(fast.nodes[i].path == oracle[i].path);
            CHECK(fast.nodes[i].value == doctest::Approx(oracle[i].value).epsilon(1e-9));
        }
    }
}

TEST_CASE("enumeration is monotone and prefix-closed for random families") {
    for (int trial = 0; trial < 30; ++trial) {
        const auto family = trial % 2 == 0
                                ? FamilySpec::make_dirichlet(0.7, 6, 50 + trial)
                                : FamilySpec::make_fixed({0.5, 0.3, 0.2}, 50 + trial);
        const auto result = enumerate_lowest(family, 50);
        REQUIRE(result.nodes.size() == 50);
        for (std::size_t i = 1; i < result.nodes.size(); ++i) {
            CHECK(result.nodes[i].value >= result.nodes[i - 1].value);
        }
        CHECK(prefix_closed(result.nodes));
        for (const NodeRef& node : result.nodes) {
            CHECK(node.prob == doctest::Approx(std::exp(-node.value)).epsilon(1e-12));
        }
    }
}

TEST_CASE("count_below matches the analytic cases") {
    CHECK(count_below(FamilySpec::make_uniform(2, 0), 2.0 * kLn2, 1000).count == 7);
    CHECK(count_below(FamilySpec::make_fixed({0.7, 0.3}, 0), 0.4, 1000).count == 2);
    CHECK(count_below(FamilySpec::make_dirichlet(1.0, 8, 1), 0.0, 1000).count == 1);
}

TEST_CASE("count_below reports truncation at the cap") {
    const auto result = count_below(FamilySpec::make_uniform(2, 0), 2.0 * kLn2, 3);
    CHECK(result.truncated);
    CHECK(result.count == 3);
}

TEST_CASE("t_p equals the last enumerated value") {
    CHECK(t_p(FamilySpec::make_uniform(2, 0), 7).value ==
          doctest::Approx(2.0 * kLn2).epsilon(1e-12));
    CHECK(t_p(FamilySpec::make_uniform(2, 0), 1).value == 0.0);
    CHECK(t_p(FamilySpec::make_fixed({0.7, 0.3}, 0), 4).value ==
          doctest::Approx(-std::log(0.343)).epsilon(1e-9));
}

TEST_CASE("count_below at t_p covers at least k nodes") {
    for (int trial = 0; trial < 10; ++trial) {
        const auto family = FamilySpec::make_dirichlet(1.0, 6, 300 + trial);
        for (std::uint64_t k : {2ull, 5ull, 17ull, 40ull}) {
            const double value = t_p(family, k).value;
            CHECK(count_below(family, value, 10'000).count >= k);
        }
    }
}

TEST_CASE("budget exhaustion surfaces as truncation with partial results") {
    TreeLimits limits;
    limits.budget = 3;
    const auto result = enumerate_lowest(FamilySpec::make_uniform(2, 0), 10, limits);
    CHECK(result.truncated);
    CHECK(result.nodes.size() == 3);
}

TEST_CASE("depth cap restricts enumeration to the truncated universe") {
    TreeLimits limits;
    limits.max_depth = 1;
    const auto result = enumerate_lowest(FamilySpec::make_uniform(2, 0), 10, limits);
    // Root plus two depth-one children and nothing else.
    CHECK(result.nodes.size() == 3);
    CHECK_FALSE(result.truncated);
}

TEST_CASE("spine steps are deterministic ln 2 for the uniform pair") {
    const auto family = FamilySpec::make_uniform(2, 0);
    RngStream rng(77);
    for (int i = 0; i < 100; ++i) {
        CHECK(spine_step(family, rng) == doctest::Approx(kLn2).epsilon(1e-12));
    }
}

TEST_CASE("degenerate spine of a forced point mass is zero") {
    const auto family = FamilySpec::make_fixed({1.0}, 0, /*allow_point_mass=*/true);
    RngStream rng(1);
    CHECK(spine_step(family, rng) == doctest::Approx(0.0));
}

TEST_CASE("spine moments match family moments to four standard errors") {
    for (const auto& family :
         {FamilySpec::make_fixed({0.7, 0.3}, 9), FamilySpec::make_dirichlet(1.0, 8, 9)}) {
        const auto params = family_moments(family, 100'000);
        RngStream rng(4242);
        const std::uint64_t n = 100'000;
        double sum = 0.0, sum_sq = 0.0, sum_fourth = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double step = spine_step(family, rng);
            sum += step;
            sum_sq += step * step;
            sum_fourth += step * step * step * step;
        }
        const double mean = sum / n;
        const double mean_sq = sum_sq / n;
        const double se_mean = std::sqrt((mean_sq - mean * mean) / n);
        const double var_sq = sum_fourth / n - mean_sq * mean_sq;
        const double se_mean_sq = std::sqrt(std::max(0.0, var_sq) / n);
        CHECK(std::abs(mean - params.mu) <=
              4.0 * std::hypot(se_mean, params.stderr_mu) + 1e-12);
        CHECK(std::abs(mean_sq - params.mu2) <=
              4.0 * std::hypot(se_mean_sq, params.stderr_mu2) + 1e-12);
    }
}

TEST_CASE("mean node counts stay under the closed-form ceiling") {
    for (const auto& family :
         {FamilySpec::make_uniform(2, 31), FamilySpec::make_fixed({0.7, 0.3}, 31),
          FamilySpec::make_dirichlet(1.0, 8, 31)}) {
        const auto params = family_moments(family, 100'000);
        for (const double t : {0.5, 1.0, 2.0, 3.0}) {
            double sum = 0.0, sum_sq = 0.0;
            const std::uint64_t trials = 1000;
            for (std::uint64_t r = 0; r < trials; ++r) {
                const auto realization = family.with_seed(hash_combine(family.seed, r));
                const double count =
                    static_cast<double>(count_below(realization, t, 1'000'000).count);
                sum += count;
                sum_sq += count * count;
            }
            const double mean = sum / trials;
            const double se =
                std::sqrt(std::max(0.0, sum_sq / trials - mean * mean) / trials);
            CHECK(mean <= bound_en_t(params, t) + 4.0 * se + 1e-9);
        }
    }
}
