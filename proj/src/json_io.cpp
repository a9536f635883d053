#include "speclim/json_io.hpp"

#include <cmath>
#include <stdexcept>

#include "speclim/trace.hpp"

namespace speclim {

namespace {

using nlohmann::json;

FamilyKind kind_from_name(const std::string& name) {
    for (FamilyKind kind :
         {FamilyKind::fixed, FamilyKind::uniform, FamilyKind::dirichlet,
          FamilyKind::empirical, FamilyKind::paired_empirical, FamilyKind::paired_noisy}) {
        if (name == family_kind_name(kind)) {
            return kind;
        }
    }
    throw std::invalid_argument("family: unknown kind '" + name + "'");
}

FamilySpec family_from_parts(FamilyKind kind, const json& params, std::uint64_t seed) {
    switch (kind) {
        case FamilyKind::fixed: {
            auto probs = params.at("probs").get<std::vector<double>>();
            const bool allow = params.value("allow_point_mass", false);
            return FamilySpec::make_fixed(std::move(probs), seed, allow);
        }
        case FamilyKind::uniform:
            return FamilySpec::make_uniform(params.at("vocab").get<std::uint32_t>(), seed);
        case FamilyKind::dirichlet:
            return FamilySpec::make_dirichlet(params.at("alpha").get<double>(),
                                              params.at("vocab").get<std::uint32_t>(), seed);
        case FamilyKind::empirical:
        case FamilyKind::paired_empirical: {
            const auto path = params.at("trace").get<std::string>();
            auto loaded = ingest(path);
            auto records = std::make_shared<std::vector<TraceRecord>>(
                std::move(loaded.records));
            return FamilySpec::make_empirical(std::move(records), seed,
                                              kind == FamilyKind::paired_empirical, path);
        }
        case FamilyKind::paired_noisy: {
            const json& base_doc = params.at("base");
            FamilySpec base = family_from_parts(
                kind_from_name(base_doc.at("kind").get<std::string>()),
                base_doc.at("params"), seed);
            return FamilySpec::make_paired_noisy(std::move(base),
                                                 params.at("q_temperature").get<double>(),
                                                 params.at("q_zero_rate").get<double>(),
                                                 seed);
        }
    }
    throw std::invalid_argument("family: unknown kind");
}

json family_params_json(const FamilySpec& family) {
    json params = json::object();
    switch (family.kind) {
        case FamilyKind::fixed:
            params["probs"] = family.fixed_probs;
            if (family.allow_point_mass) {
                params["allow_point_mass"] = true;
            }
            break;
        case FamilyKind::uniform:
            params["vocab"] = family.vocab;
            break;
        case FamilyKind::dirichlet:
            params["alpha"] = family.alpha;
            params["vocab"] = family.vocab;
            break;
        case FamilyKind::empirical:
        case FamilyKind::paired_empirical:
            params["trace"] = family.trace_path;
            break;
        case FamilyKind::paired_noisy: {
            json base;
            base["kind"] = family_kind_name(family.base->kind);
            base["params"] = family_params_json(*family.base);
            params["base"] = std::move(base);
            params["q_temperature"] = family.q_temperature;
            params["q_zero_rate"] = family.q_zero_rate;
            break;
        }
    }
    return params;
}

}  // namespace

FamilySpec family_from_json(const json& doc) {
    if (!doc.is_object()) {
        throw std::invalid_argument("family: document must be a JSON object");
    }
    const auto kind = kind_from_name(doc.at("kind").get<std::string>());
    const auto seed = doc.value("seed", std::uint64_t{0});
    return family_from_parts(kind, doc.at("params"), seed);
}

json family_to_json(const FamilySpec& family) {
    json doc;
    doc["kind"] = family_kind_name(family.kind);
    doc["params"] = family_params_json(family);
    doc["seed"] = family.seed;
    return doc;
}

json to_json(const MomentParams& params) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["mu"] = params.mu;
    doc["mu2"] = params.mu2;
    doc["stderr_mu"] = params.stderr_mu;
    doc["stderr_mu2"] = params.stderr_mu2;
    doc["n_records"] = params.n_samples;
    if (params.mu_ce) {
        doc["mu_ce"] = *params.mu_ce;
        doc["stderr_mu_ce"] = params.stderr_mu_ce.value_or(0.0);
    }
    if (params.pr_q_zero) {
        doc["pr_q_zero"] = *params.pr_q_zero;
        doc["stderr_pr_q_zero"] = params.stderr_pr_q_zero.value_or(0.0);
    }
    return doc;
}

MomentParams moment_params_from_json(const json& doc) {
    MomentParams params;
    params.mu = doc.at("mu").get<double>();
    params.mu2 = doc.at("mu2").get<double>();
    params.stderr_mu = doc.value("stderr_mu", 0.0);
    params.stderr_mu2 = doc.value("stderr_mu2", 0.0);
    params.n_samples = doc.value("n_records", std::uint64_t{0});
    if (doc.contains("mu_ce")) {
        params.mu_ce = doc.at("mu_ce").get<double>();
        params.stderr_mu_ce = doc.value("stderr_mu_ce", 0.0);
    }
    if (doc.contains("pr_q_zero")) {
        params.pr_q_zero = doc.at("pr_q_zero").get<double>();
        params.stderr_pr_q_zero = doc.value("stderr_pr_q_zero", 0.0);
    }
    return params;
}

json to_json(const BoundReport& report) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["p_capacity"] = report.p_capacity;
    doc["params"] = to_json(report.params);

    json exact;
    exact["valid"] = report.exact.valid;
    exact["threshold_p"] = report.exact.threshold;
    if (report.exact.valid) {
        exact["value"] = report.exact.value;
        exact["a"] = report.exact.a;
        exact["b"] = report.exact.b;
        exact["t_star"] = report.exact.t_star;
    }
    doc["exact_upper"] = std::move(exact);

    json limit;
    limit["valid"] = report.limit.valid;
    if (report.limit.valid) {
        limit["value"] = report.limit.value;
        limit["o_log_p_neglected"] = true;
    }
    doc["limit_upper"] = std::move(limit);

    json ce;
    ce["valid"] = report.ce_lower.valid;
    if (report.ce_lower.valid) {
        ce["value"] = report.ce_lower.value;
        ce["entropy_branch"] = report.ce_lower.entropy_branch;
        if (std::isfinite(report.ce_lower.q_miss_branch)) {
            ce["q_miss_branch"] = report.ce_lower.q_miss_branch;
        }
        ce["o_log_p_neglected"] = true;
    }
    doc["ce_lower"] = std::move(ce);

    if (report.limit_lower_tp) {
        doc["limit_lower_tp"] = *report.limit_lower_tp;
    }
    if (report.non_arithmetic) {
        doc["non_arithmetic"] = *report.non_arithmetic;
    }
    return doc;
}

json to_json(const RunReport& report) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["total_tokens"] = report.total_tokens;
    doc["iterations"] = report.iterations;
    doc["accepted_total"] = report.accepted_total;
    doc["mean_x"] = report.mean_x;
    doc["stderr_x"] = report.stderr_x;
    doc["speedup_inverse_delta"] = report.speedup_inverse_delta;
    doc["seed"] = report.seed;
    doc["truncated"] = report.truncated;
    return doc;
}

json to_json(const checks::CheckResult& result) {
    json doc;
    doc["name"] = result.name;
    doc["pass"] = result.pass;
    doc["refused"] = result.refused;
    doc["truncated"] = result.truncated;
    doc["z"] = result.z;
    doc["lhs"] = result.lhs;
    doc["rhs"] = result.rhs;
    doc["lhs_stderr"] = result.lhs_stderr;
    doc["rhs_stderr"] = result.rhs_stderr;
    doc["detail"] = result.detail;
    return doc;
}

}  // namespace speclim
