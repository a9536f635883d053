#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "speclim/bounds.hpp"
#include "support/quadrature.hpp"

using namespace speclim;

namespace {

MomentParams make_params(double mu, double mu2) {
    MomentParams params;
    params.mu = mu;
    params.mu2 = mu2;
    return params;
}

const double kLn2 = std::log(2.0);

}  // namespace

TEST_CASE("closed form equals quadrature across a moment/capacity grid") {
    // Ten (mu, mu2) pairs spanning measured-model territory, five capacities:
    // a 50-point grid, agreement to 1e-9 relative.
    const std::pair<double, double> pairs[] = {
        {0.279, 0.777}, {0.683, 2.960}, {kLn2, kLn2 * kLn2}, {0.136, 0.238},
        {1.088, 6.654}, {0.153, 0.29},  {0.554, 1.556},      {0.319, 0.697},
        {1.5, 3.0},     {2.0, 5.0},
    };
    const double capacities[] = {16, 60, 256, 4096, 1 << 20};
    int checked = 0;
    for (const auto& [mu, mu2] : pairs) {
        for (const double p : capacities) {
            const auto bound = bound_exact(make_params(mu, mu2), p);
            if (!bound.valid) {
                continue;
            }
            const double oracle = testsupport::accept_ceiling_by_quadrature(mu, mu2, p);
            CHECK(std::abs(bound.value - oracle) <= 1e-9 * std::abs(oracle));
            ++checked;
        }
    }
    CHECK(checked == 50);
}

TEST_CASE("threshold capacity collapses the bound to 1 + mu2/mu^2") {
    const auto params = make_params(0.5, 0.8);
    const double threshold = 1.0 + params.mu2 / (params.mu * params.mu);
    const auto bound = bound_exact(params, threshold);
    REQUIRE(bound.valid);
    CHECK(bound.t_star == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(bound.value == doctest::Approx(threshold).epsilon(1e-9));
}

TEST_CASE("capacities below the threshold are flagged not applicable") {
    const auto params = make_params(0.136, 0.238);  // threshold ~ 13.9
    CHECK_FALSE(bound_exact(params, 8).valid);
    CHECK(bound_exact(params, 16).valid);
    CHECK_FALSE(bound_exact(make_params(0.0, 1.0), 100).valid);
}

TEST_CASE("the measured-parameter example evaluates to about 31.72") {
    const auto bound = bound_exact(make_params(0.279, 0.777), 60);
    REQUIRE(bound.valid);
    CHECK(bound.a == doctest::Approx(13.5661).epsilon(1e-4));
    CHECK(bound.b == doctest::Approx(-2.58423).epsilon(1e-4));
    CHECK(bound.value ==
          doctest::Approx(testsupport::accept_ceiling_by_quadrature(0.279, 0.777, 60))
              .epsilon(1e-9));
    CHECK(bound.value == doctest::Approx(31.7236).epsilon(1e-3));
}

TEST_CASE("limit bound is ln(P)/mu") {
    CHECK(bound_limit(make_params(0.683, 2.96), 60).value ==
          doctest::Approx(std::log(60.0) / 0.683).epsilon(1e-12));
    CHECK(bound_limit(make_params(0.683, 2.96), 60).value ==
          doctest::Approx(5.9947).epsilon(1e-4));
    CHECK(bound_limit(make_params(0.9, 1.0), 1).value == 0.0);
    CHECK(bound_limit(make_params(kLn2, 0.5), 8).value ==
          doctest::Approx(3.0).epsilon(1e-12));
    CHECK_FALSE(bound_limit(make_params(0.0, 1.0), 8).valid);
}

TEST_CASE("imperfect-knowledge floor takes the binding branch") {
    MomentParams params = make_params(0.5, 0.5);
    params.mu_ce = kLn2;
    params.pr_q_zero = 0.0;
    const auto no_miss = bound_ce_lower(params, 8);
    REQUIRE(no_miss.valid);
    CHECK(no_miss.value == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::isinf(no_miss.q_miss_branch));

    params.mu_ce = 1.0;
    params.pr_q_zero = 0.5;
    const auto missy = bound_ce_lower(params, 1'000'000);
    REQUIRE(missy.valid);
    CHECK(missy.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(missy.entropy_branch == doctest::Approx(std::log(1e6)).epsilon(1e-9));

    MomentParams unpaired = make_params(0.5, 0.5);
    CHECK_FALSE(bound_ce_lower(unpaired, 8).valid);
}

TEST_CASE("a drafter with the true distribution recovers the limit bound") {
    MomentParams params = make_params(0.7, 1.1);
    params.mu_ce = params.mu;
    params.pr_q_zero = 0.0;
    for (const double p : {4.0, 64.0, 4096.0}) {
        CHECK(bound_ce_lower(params, p).value ==
              doctest::Approx(bound_limit(params, p).value).epsilon(1e-12));
    }
}

TEST_CASE("renewal bounds substitute directly") {
    const auto at_zero = renewal_bounds(make_params(0.6, 0.9), 0.0);
    CHECK(at_zero.lower == doctest::Approx(1.0));
    CHECK(at_zero.upper == doctest::Approx(1.0 + 0.9 / 0.36).epsilon(1e-12));

    const auto simple = renewal_bounds(make_params(1.0, 2.0), 3.0);
    CHECK(simple.lower == doctest::Approx(4.0));
    CHECK(simple.upper == doctest::Approx(6.0));

    const auto measured = renewal_bounds(make_params(0.683, 2.960), 2.0);
    CHECK(measured.lower == doctest::Approx(3.928).epsilon(1e-3));
    CHECK(measured.upper == doctest::Approx(10.27).epsilon(1e-3));

    CHECK_THROWS_AS(renewal_bounds(make_params(0.0, 1.0), 1.0), std::invalid_argument);
}

TEST_CASE("node-count ceiling: analytic anchors") {
    const auto params = make_params(0.6, 0.9);
    CHECK(bound_en_t(params, 0.0) ==
          doctest::Approx(1.0 + 0.9 / 0.36).epsilon(1e-12));
    // Uniform pair: the realized count at t = 2 ln 2 is exactly 7.
    const auto uniform = make_params(kLn2, kLn2 * kLn2);
    CHECK(bound_en_t(uniform, 2.0 * kLn2) >= 7.0);
    const auto measured = make_params(0.279, 0.777);
    const double a = (0.279 + 0.777) / (0.279 * 0.279);
    CHECK(bound_en_t(measured, 1.0) ==
          doctest::Approx(a * std::exp(1.0) - 1.0 / 0.279 + 1.0).epsilon(1e-12));
}

TEST_CASE("exact bound scales like its slope times ln P asymptotically") {
    const double p = std::pow(2.0, 50);
    for (const auto& [mu, mu2] : {std::pair{0.683, 2.96}, {0.279, 0.777}, {1.5, 3.0}}) {
        const auto params = make_params(mu, mu2);
        const auto exact = bound_exact(params, p);
        REQUIRE(exact.valid);
        const double a = (mu + mu2) / (mu * mu);
        CHECK(exact.value / std::log(p) == doctest::Approx(a).epsilon(0.05));
        CHECK(exact.value / bound_limit(params, p).value ==
              doctest::Approx(a * mu).epsilon(0.05));
    }
}

TEST_CASE("upper bounds are monotone in capacity") {
    const auto params = make_params(0.683, 2.96);
    double last_exact = 0.0;
    double last_limit = 0.0;
    for (double p = 8; p <= (1 << 24); p *= 2) {
        const auto exact = bound_exact(params, p);
        const auto limit = bound_limit(params, p);
        if (exact.valid) {
            CHECK(exact.value >= last_exact);
            last_exact = exact.value;
        }
        CHECK(limit.value >= last_limit);
        last_limit = limit.value;
    }
}

TEST_CASE("lower entropy lifts the ceiling at a fixed dispersion ratio") {
    // Fix mu2/mu^2 = 2 and sweep mu: the bound should fall as mu grows.
    double last = std::numeric_limits<double>::infinity();
    for (const double mu : {0.2, 0.4, 0.8, 1.6}) {
        const auto bound = bound_exact(make_params(mu, 2.0 * mu * mu), 256);
        REQUIRE(bound.valid);
        CHECK(bound.value < last);
        last = bound.value;
    }
}

TEST_CASE("the imperfect-knowledge floor stays under the limit ceiling") {
    for (const double mu : {0.3, 0.7, 1.2}) {
        for (const double ratio : {1.0, 1.3, 2.0}) {
            MomentParams params = make_params(mu, mu);
            params.mu_ce = mu * ratio;
            params.pr_q_zero = 0.0;
            for (const double p : {16.0, 256.0, 65536.0}) {
                CHECK(bound_ce_lower(params, p).value <=
                      bound_limit(params, p).value + 1e-12);
            }
        }
    }
}

TEST_CASE("reference curve for the deepest in-tree value") {
    CHECK_FALSE(tp_reference(1.0).has_value());
    CHECK_FALSE(tp_reference(2.0).has_value());
    const auto ref = tp_reference(std::exp(2.0));
    REQUIRE(ref.has_value());
    CHECK(*ref == doctest::Approx(2.0 - std::log(2.0)).epsilon(1e-12));
}
