#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "speclim/checks.hpp"
#include "speclim/drafting.hpp"

using namespace speclim;

TEST_CASE("optimal tree for fixed 0.7/0.3 at P=4 is the greedy chain") {
    const auto family = FamilySpec::make_fixed({0.7, 0.3}, 0);
    const auto tree = draft_optimal(family, 4);
    REQUIRE(tree.size() == 4);
    CHECK(tree.expected_accepted == doctest::Approx(2.533).epsilon(1e-9));
    CHECK(tree.nodes[0].path.empty());
    CHECK(tree.nodes[3].path == std::vector<std::uint32_t>{0, 0, 0});
}

TEST_CASE("complete uniform levels contribute unit mass each") {
    const auto tree = draft_optimal(FamilySpec::make_uniform(2, 0), 7);
    CHECK(tree.expected_accepted == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("a root-only tree always expects one accepted token") {
    const auto tree = draft_optimal(FamilySpec::make_dirichlet(1.0, 8, 5), 1);
    REQUIRE(tree.size() == 1);
    CHECK(tree.expected_accepted == doctest::Approx(1.0));
    // The frontier of the bare root is the whole first layer, mass one.
    double mass = 0.0;
    for (const auto& entry : tree.frontier) {
        mass += entry.node.prob;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("q equal to p reproduces the full-knowledge tree") {
    const auto family = FamilySpec::make_paired_noisy(
        FamilySpec::make_dirichlet(1.0, 8, 77), 1.0, 0.0, 77);
    const auto full = draft_optimal(family, 16);
    const auto greedy = draft_q_greedy(family, 16);
    REQUIRE(full.size() == greedy.size());
    std::set<std::vector<std::uint32_t>> full_paths;
    for (const auto& node : full.nodes) {
        full_paths.insert(node.path);
    }
    for (const auto& node : greedy.nodes) {
        CHECK(full_paths.count(node.path) == 1);
    }
    CHECK(greedy.expected_accepted ==
          doctest::Approx(full.expected_accepted).epsilon(1e-9));
}

TEST_CASE("the drafter follows its own beliefs and pays under the target") {
    const auto family = FamilySpec::make_paired_fixed({0.7, 0.3}, {0.3, 0.7}, 4);
    const auto tree = draft_q_greedy(family, 2);
    REQUIRE(tree.size() == 2);
    CHECK(tree.nodes[0].path.empty());
    CHECK(tree.nodes[1].path == std::vector<std::uint32_t>{1});  // q prefers token 1
    CHECK(tree.expected_accepted == doctest::Approx(1.3).epsilon(1e-9));
    REQUIRE(tree.q_probs.size() == 2);
    CHECK(tree.q_probs[1] == doctest::Approx(0.7).epsilon(1e-9));
}

TEST_CASE("q-zero children never enter the drafted tree but stay in the p-frontier") {
    const auto family = FamilySpec::make_paired_fixed({0.7, 0.3}, {1.0, 0.0}, 4);
    const auto tree = draft_q_greedy(family, 4);
    REQUIRE(tree.size() == 4);
    for (const auto& node : tree.nodes) {
        for (const std::uint32_t token : node.path) {
            CHECK(token == 0);  // token 1 is invisible to the drafter
        }
    }
    CHECK(tree.expected_accepted == doctest::Approx(2.533).epsilon(1e-9));
    // Frontier accounting is under p: token-1 children appear with q_prob 0.
    double mass = 0.0;
    bool has_q_zero_entry = false;
    for (const auto& entry : tree.frontier) {
        mass += entry.node.prob;
        if (entry.node.path.back() == 1) {
            has_q_zero_entry = true;
            CHECK(entry.q_prob == 0.0);
        }
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(has_q_zero_entry);
}

TEST_CASE("full knowledge dominates the drafter view for random paired families") {
    RngStream rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const double temperature = 0.5 + 2.0 * rng.next_unit();
        const double zero_rate = 0.3 * rng.next_unit();
        const auto family = FamilySpec::make_paired_noisy(
            FamilySpec::make_dirichlet(0.8, 8, 5000 + trial), temperature, zero_rate,
            5000 + trial);
        const std::uint32_t p = 2 + static_cast<std::uint32_t>(rng() % 15);
        DraftOptions options;
        options.build_frontier = false;
        const auto full = draft_optimal(family, p, options);
        const auto greedy = draft_q_greedy(family, p, options);
        CHECK(full.expected_accepted >= greedy.expected_accepted - 1e-12);
    }
}

TEST_CASE("expected acceptance is nondecreasing in capacity") {
    const auto family = FamilySpec::make_dirichlet(0.6, 8, 12);
    double last = 0.0;
    for (std::uint32_t p = 1; p <= 64; p *= 2) {
        const auto tree = draft_optimal(family, p, {.build_frontier = false});
        CHECK(tree.expected_accepted >= last - 1e-12);
        last = tree.expected_accepted;
    }
}

TEST_CASE("frontier keys never undercut the worst tree node") {
    const auto paired = FamilySpec::make_paired_noisy(
        FamilySpec::make_dirichlet(1.0, 8, 41), 1.5, 0.1, 41);
    // Target keys: every frontier value is at least the P-th smallest value.
    const auto full = draft_optimal(paired, 12);
    const double worst_value = full.nodes.back().value;
    for (const auto& entry : full.frontier) {
        CHECK(entry.node.value >= worst_value - 1e-12);
    }
    // Drafter keys: compare under Q, where a q-zero child is infinitely bad.
    const auto greedy = draft_q_greedy(paired, 12);
    double max_tree_q = 0.0;
    for (std::size_t i = 0; i < greedy.size(); ++i) {
        max_tree_q = std::max(max_tree_q, -std::log(greedy.q_probs[i]));
    }
    for (const auto& entry : greedy.frontier) {
        const double q_value = entry.q_prob > 0.0
                                   ? -std::log(entry.q_prob)
                                   : std::numeric_limits<double>::infinity();
        CHECK(q_value >= max_tree_q - 1e-12);
    }
}

TEST_CASE("drafter-view enumeration is monotone and prefix-closed under Q") {
    for (int trial = 0; trial < 20; ++trial) {
        const auto family = FamilySpec::make_paired_noisy(
            FamilySpec::make_dirichlet(0.7, 8, 900 + trial), 1.6, 0.15, 900 + trial);
        const auto tree = draft_q_greedy(family, 24, {.build_frontier = false});
        std::set<std::vector<std::uint32_t>> seen;
        double last_q_value = 0.0;
        for (std::size_t i = 0; i < tree.size(); ++i) {
            const double q_value = -std::log(tree.q_probs[i]);
            CHECK(q_value >= last_q_value - 1e-12);
            last_q_value = q_value;
            if (!tree.nodes[i].path.empty()) {
                auto parent = tree.nodes[i].path;
                parent.pop_back();
                CHECK(seen.count(parent) == 1);
            }
            seen.insert(tree.nodes[i].path);
        }
    }
}

TEST_CASE("draft optimality verified against exhaustive search") {
    const auto one = checks::check_optimal_bruteforce(
        FamilySpec::make_fixed({0.7, 0.3}, 0), 4, 2, 5);
    CHECK(one.pass);
    CHECK(one.rhs == doctest::Approx(2.533).epsilon(1e-9));
    const auto two = checks::check_optimal_bruteforce(
        FamilySpec::make_dirichlet(1.0, 3, 8), 6, 3, 6);
    CHECK(two.pass);
}
