#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "speclim/json_io.hpp"
#include "speclim/verify.hpp"

using namespace speclim;
using nlohmann::json;

TEST_CASE("family documents round-trip through JSON") {
    const std::vector<FamilySpec> families = {
        FamilySpec::make_fixed({0.7, 0.3}, 42),
        FamilySpec::make_uniform(4, 43),
        FamilySpec::make_dirichlet(0.5, 16, 44),
        FamilySpec::make_paired_noisy(FamilySpec::make_dirichlet(1.0, 8, 45), 1.5, 0.05, 45),
    };
    const std::vector<std::uint32_t> probe = {0, 1, 0};
    for (const FamilySpec& family : families) {
        const FamilySpec reparsed = family_from_json(family_to_json(family));
        CHECK(reparsed.kind == family.kind);
        CHECK(reparsed.seed == family.seed);
        const auto a = distribution_at(family, probe);
        const auto b = distribution_at(reparsed, probe);
        CHECK(a.p.probs == b.p.probs);
        CHECK(a.paired() == b.paired());
        if (a.paired()) {
            CHECK(a.q->probs == b.q->probs);
        }
    }
}

TEST_CASE("family parsing rejects bad documents") {
    CHECK_THROWS(family_from_json(json::parse(R"({"kind":"nope","params":{}})")));
    CHECK_THROWS(family_from_json(json::parse(R"({"kind":"uniform","params":{}})")));
    CHECK_THROWS_AS(
        family_from_json(json::parse(R"({"kind":"fixed","params":{"probs":[1.0]}})")),
        std::invalid_argument);
    CHECK_THROWS_AS(
        family_from_json(json::parse(
            R"({"kind":"uniform","params":{"vocab":1},"seed":0})")),
        std::invalid_argument);
    // The point-mass override is honored.
    const auto forced = family_from_json(json::parse(
        R"({"kind":"fixed","params":{"probs":[1.0],"allow_point_mass":true},"seed":1})"));
    CHECK(forced.is_point_mass());
}

TEST_CASE("empirical family documents load their trace") {
    const std::string path = "json_io_trace.jsonl";
    {
        std::ofstream out(path);
        out << "{\"p\": [0.6, 0.4], \"q\": [0.5, 0.5]}\n";
    }
    json doc;
    doc["kind"] = "paired-empirical";
    doc["params"] = {{"trace", path}};
    doc["seed"] = 9;
    const auto family = family_from_json(doc);
    CHECK(family.is_paired());
    const std::vector<std::uint32_t> probe{3};
    const auto dist = distribution_at(family, probe);
    CHECK(dist.p.probs == std::vector<double>{0.6, 0.4});
    REQUIRE(dist.paired());
    CHECK(dist.q->probs == std::vector<double>{0.5, 0.5});
    CHECK(family_to_json(family)["params"]["trace"] == path);
    std::remove(path.c_str());
}

TEST_CASE("moment parameters round-trip with optional fields") {
    MomentParams params;
    params.mu = 0.7;
    params.mu2 = 1.3;
    params.stderr_mu = 0.01;
    params.n_samples = 123;
    const auto plain = moment_params_from_json(to_json(params));
    CHECK(plain.mu == params.mu);
    CHECK(plain.n_samples == 123);
    CHECK_FALSE(plain.mu_ce.has_value());

    params.mu_ce = 0.9;
    params.pr_q_zero = 0.05;
    const auto paired = moment_params_from_json(to_json(params));
    CHECK(*paired.mu_ce == 0.9);
    CHECK(*paired.pr_q_zero == 0.05);
}

TEST_CASE("reports serialize with schema versions and validity flags") {
    MomentParams params;
    params.mu = 0.683;
    params.mu2 = 2.96;
    const auto report = to_json(make_bound_report(params, 60, true));
    CHECK(report["schema_version"] == kSchemaVersion);
    CHECK(report["exact_upper"]["valid"] == true);
    CHECK(report["limit_upper"]["o_log_p_neglected"] == true);
    CHECK(report["ce_lower"]["valid"] == false);
    CHECK(report["non_arithmetic"] == true);

    const auto below = to_json(make_bound_report(params, 2, true));
    CHECK(below["exact_upper"]["valid"] == false);
    CHECK_FALSE(below["exact_upper"].contains("value"));

    RunReport run_report;
    run_report.total_tokens = 100;
    run_report.iterations = 40;
    const auto run_doc = to_json(run_report);
    CHECK(run_doc["schema_version"] == kSchemaVersion);
    CHECK(run_doc["total_tokens"] == 100);
}
