// speclim: speed-limit calculator and simulator for speculative decoding
// under an i.i.d. next-token model. Subcommands: estimate, bound, simulate,
// sweep, check. JSON for single reports, CSV for sweeps; exit codes:
// 0 ok, 1 check failure, 2 config/input error, 3 truncated results.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "speclim/bounds.hpp"
#include "speclim/checks.hpp"
#include "speclim/family.hpp"
#include "speclim/json_io.hpp"
#include "speclim/trace.hpp"
#include "speclim/verify.hpp"

namespace {

using nlohmann::json;
using namespace speclim;

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTruncated = 3;

void write_payload(const std::string& payload, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + out_path);
    }
    out << payload;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

// --family accepts a path to a JSON document or the document itself.
FamilySpec load_family(const std::string& arg) {
    std::string text = arg;
    if (!arg.empty() && arg.front() != '{') {
        std::ifstream in(arg);
        if (!in) {
            throw std::invalid_argument("cannot open family file: " + arg);
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        text = buffer.str();
    }
    return family_from_json(json::parse(text));
}

std::string csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string moments_row(const MomentParams& params) {
    std::ostringstream row;
    row << "mu=" << csv_number(params.mu) << " mu2=" << csv_number(params.mu2);
    if (params.mu_ce) {
        row << " mu_ce=" << csv_number(*params.mu_ce);
    }
    if (params.pr_q_zero) {
        row << " pr_q_zero=" << csv_number(*params.pr_q_zero);
    }
    row << " (n=" << params.n_samples << ")";
    return row.str();
}

int cmd_estimate(const std::string& trace_path, const std::string& out_path,
                 double epsilon) {
    const IngestResult loaded = ingest(trace_path, epsilon);
    const MomentParams params = estimate(loaded.records);
    json doc = to_json(params);
    doc["n_malformed"] = loaded.stats.n_malformed;
    doc["n_renormalized"] = loaded.stats.n_renormalized;
    if (epsilon > 0.0) {
        doc["truncate_epsilon"] = epsilon;
    }
    write_payload(dump(doc), out_path);
    std::cerr << moments_row(params) << "\n";
    return kExitOk;
}

int cmd_bound(const MomentParams& params, double p_capacity,
              std::optional<double> renewal_x, std::optional<double> en_t,
              const std::string& out_path) {
    if (!params.usable_for_bounds()) {
        std::cerr << "error: point-mass verifier has no nontrivial bound (mu = 0)\n";
        return kExitConfig;
    }
    const BoundReport report = make_bound_report(params, p_capacity);
    json doc = to_json(report);
    if (renewal_x) {
        const RenewalBounds rb = renewal_bounds(params, *renewal_x);
        doc["renewal"] = {{"x", *renewal_x}, {"lower", rb.lower}, {"upper", rb.upper}};
    }
    if (en_t) {
        doc["en_t"] = {{"t", *en_t}, {"value", bound_en_t(params, *en_t)}};
    }
    write_payload(dump(doc), out_path);
    return kExitOk;
}

json simulate_payload(const FamilySpec& family, std::uint32_t p_capacity,
                      const RunReport& run_report, DraftMode mode,
                      std::uint64_t moment_samples) {
    const MomentParams moments = family_moments(family, moment_samples);
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["family"] = family_to_json(family);
    doc["p_capacity"] = p_capacity;
    doc["mode"] = draft_mode_name(mode);
    doc["run"] = to_json(run_report);
    doc["bounds"] = to_json(make_bound_report(moments, p_capacity, family.non_arithmetic()));
    return doc;
}

int cmd_simulate(const FamilySpec& family, std::uint32_t p_capacity,
                 std::uint64_t n_tokens, DraftMode mode, std::uint64_t seed,
                 std::uint32_t workers, std::uint64_t moment_samples,
                 std::optional<double> latency_ms, const std::string& out_path) {
    const RunReport report = run(family, p_capacity, n_tokens, mode, seed, workers);
    write_payload(dump(simulate_payload(family, p_capacity, report, mode, moment_samples)),
                  out_path);
    std::cerr << "mean_x=" << csv_number(report.mean_x)
              << " stderr=" << csv_number(report.stderr_x)
              << " iterations=" << report.iterations << "\n";
    if (latency_ms) {
        // Display only: constant verifier latency, drafting cost neglected.
        const double naive = static_cast<double>(report.total_tokens) * *latency_ms;
        const double spec = static_cast<double>(report.iterations) * *latency_ms;
        std::cerr << "wall-clock at T=" << *latency_ms << "ms: naive " << csv_number(naive)
                  << "ms, speculative " << csv_number(spec) << "ms (speedup "
                  << csv_number(naive / spec) << "x)\n";
    }
    return report.truncated ? kExitTruncated : kExitOk;
}

int cmd_sweep(const FamilySpec& family, const std::vector<std::uint32_t>& p_grid,
              std::uint64_t n_tokens, const std::vector<DraftMode>& modes,
              std::uint64_t seed, std::uint32_t workers, std::uint64_t moment_samples,
              const std::string& out_path) {
    const MomentParams moments = family_moments(family, moment_samples);
    std::ostringstream csv;
    csv << "P,mode,mean_x,stderr_x,exact_upper,limit_upper,ce_lower,valid\n";
    bool truncated = false;
    for (std::uint32_t p : p_grid) {
        for (DraftMode mode : modes) {
            const RunReport report = run(family, p, n_tokens, mode, seed, workers);
            truncated = truncated || report.truncated;
            const ExactBound exact = bound_exact(moments, p);
            const LimitBound limit = bound_limit(moments, p);
            const CeLowerBound ce = bound_ce_lower(moments, p);
            csv << p << ',' << draft_mode_name(mode) << ','
                << csv_number(report.mean_x) << ',' << csv_number(report.stderr_x) << ',';
            if (exact.valid) {
                csv << csv_number(exact.value);
            }
            csv << ',';
            if (limit.valid) {
                csv << csv_number(limit.value);
            }
            csv << ',';
            if (ce.valid) {
                csv << csv_number(ce.value);
            }
            csv << ',' << (exact.valid ? 1 : 0) << '\n';
        }
    }
    write_payload(csv.str(), out_path);
    return truncated ? kExitTruncated : kExitOk;
}

struct SuiteReport {
    std::vector<checks::CheckResult> results;

    void add(checks::CheckResult result) { results.push_back(std::move(result)); }
    void add(std::vector<checks::CheckResult> batch) {
        for (auto& r : batch) {
            results.push_back(std::move(r));
        }
    }
};

std::vector<double> default_x_grid() { return {0.5, 1.0, 2.0, 4.0}; }

// The fixed roster exercises an exact lattice case, an exact two-point case
// and continuous dirichlet families of two shapes.
void run_suite(const std::string& suite, std::uint64_t seed, std::uint64_t trials,
               const std::optional<FamilySpec>& override_family, SuiteReport& report) {
    const auto fixed73 = [&] {
        return FamilySpec::make_fixed({0.7, 0.3}, hash_combine(seed, 1));
    };
    const auto uniform2 = [&] { return FamilySpec::make_uniform(2, hash_combine(seed, 2)); };
    const auto dir8 = [&] {
        return FamilySpec::make_dirichlet(1.0, 8, hash_combine(seed, 3));
    };
    const auto dir16 = [&] {
        return FamilySpec::make_dirichlet(0.5, 16, hash_combine(seed, 4));
    };
    const double two_ln2 = 2.0 * std::log(2.0);

    if (suite == "many-to-one") {
        if (override_family) {
            report.add(checks::check_many_to_one(*override_family, 2, 1.5, trials));
            return;
        }
        report.add(checks::check_many_to_one(uniform2(), 2, two_ln2,
                                             std::min<std::uint64_t>(trials, 2000)));
        report.add(checks::check_many_to_one(fixed73(), 1, 1.0, trials));
        for (std::uint32_t depth = 1; depth <= 3; ++depth) {
            report.add(checks::check_many_to_one(dir8(), depth,
                                                 std::min(0.8 * depth, 2.5), trials));
        }
    } else if (suite == "renewal") {
        const auto grid = default_x_grid();
        if (override_family) {
            report.add(checks::check_renewal(*override_family, grid, trials));
            return;
        }
        report.add(checks::check_renewal(fixed73(), grid, trials));
        report.add(checks::check_renewal(dir8(), grid, trials));
        report.add(checks::check_renewal(dir16(), grid, trials));
    } else if (suite == "claim-nt") {
        if (override_family) {
            report.add(checks::check_node_count(*override_family, 1.5, trials));
            return;
        }
        report.add(checks::check_node_count(uniform2(), two_ln2,
                                            std::min<std::uint64_t>(trials, 2000)));
        report.add(checks::check_node_count(fixed73(), 1.1, trials));
        report.add(checks::check_node_count(dir8(), 1.5, trials));
    } else if (suite == "frontier") {
        const std::uint64_t n = std::max<std::uint64_t>(trials / 100, 20);
        if (override_family) {
            report.add(checks::check_frontier_mass(*override_family, 16, n));
            return;
        }
        report.add(checks::check_frontier_mass(fixed73(), 1, n));
        report.add(checks::check_frontier_mass(uniform2(), 7, n));
        report.add(checks::check_frontier_mass(dir16(), 64, n));
    } else if (suite == "bruteforce") {
        if (override_family) {
            report.add(checks::check_optimal_bruteforce(*override_family, 6, 3, 6));
            return;
        }
        report.add(checks::check_optimal_bruteforce(fixed73(), 4, 2, 5));
        report.add(checks::check_optimal_bruteforce(fixed73(), 1, 2, 2));
        report.add(checks::check_optimal_bruteforce(uniform2(), 3, 2, 3));
        report.add(checks::check_optimal_bruteforce(
            FamilySpec::make_fixed({0.5, 0.3, 0.2}, hash_combine(seed, 5)), 8, 3, 7));
        RngStream rng(hash_combine(seed, 6));
        for (int i = 0; i < 3; ++i) {
            std::vector<double> probs(3);
            double total = 0.0;
            for (double& p : probs) {
                p = 0.05 + rng.next_unit();
                total += p;
            }
            for (double& p : probs) {
                p /= total;
            }
            report.add(checks::check_optimal_bruteforce(
                FamilySpec::make_fixed(probs, hash_combine(seed, 100 + i)), 6, 3, 6));
        }
    } else if (suite == "tp-trend") {
        const std::vector<std::uint32_t> grid{1, 4, 16, 64, 256};
        const std::uint64_t n = std::max<std::uint64_t>(trials / 50, 50);
        if (override_family) {
            report.add(checks::check_tp_trend(*override_family, grid, n));
            return;
        }
        report.add(checks::check_tp_trend(dir8(), grid, n));
    } else {
        throw std::invalid_argument("unknown check suite: " + suite);
    }
}

int cmd_check(const std::string& suite, std::uint64_t seed, std::uint64_t trials,
              const std::optional<FamilySpec>& override_family,
              const std::string& out_path) {
    SuiteReport report;
    if (suite == "all") {
        for (const char* name :
             {"many-to-one", "renewal", "claim-nt", "frontier", "bruteforce", "tp-trend"}) {
            run_suite(name, seed, trials, override_family, report);
        }
    } else {
        run_suite(suite, seed, trials, override_family, report);
    }

    json results = json::array();
    bool any_fail = false;
    bool any_refused = false;
    for (const auto& result : report.results) {
        results.push_back(to_json(result));
        any_fail = any_fail || (!result.pass && !result.refused);
        any_refused = any_refused || result.refused;
        std::cerr << (result.refused ? "REFUSED" : (result.pass ? "pass" : "FAIL")) << "  "
                  << result.name;
        if (!result.refused) {
            std::cerr << "  z=" << csv_number(result.z) << "  lhs=" << csv_number(result.lhs)
                      << "  rhs=" << csv_number(result.rhs);
        }
        if (!result.detail.empty()) {
            std::cerr << "  [" << result.detail << "]";
        }
        std::cerr << "\n";
    }
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["suite"] = suite;
    doc["seed"] = seed;
    doc["results"] = std::move(results);
    write_payload(dump(doc), out_path);
    if (any_fail) {
        return kExitCheckFailed;
    }
    if (any_refused && override_family) {
        // An explicitly requested family the suite gates off is a
        // configuration error, not a statistical failure.
        return kExitConfig;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"speed limits of speculative decoding: bounds, simulation, checks"};
    app.require_subcommand(1);

    // estimate
    std::string est_trace;
    std::string est_out;
    double est_epsilon = 0.0;
    auto* est = app.add_subcommand("estimate", "estimate moment parameters from a trace");
    est->add_option("trace", est_trace, "line-delimited JSON trace file")->required();
    est->add_option("--out", est_out, "write the JSON report here instead of stdout");
    est->add_option("--epsilon", est_epsilon, "drop probabilities below this and renormalize");

    // bound
    double b_mu = 0.0, b_mu2 = 0.0, b_p = 0.0;
    std::optional<double> b_mu_ce, b_pr_q_zero, b_renewal_x, b_en_t;
    std::string b_out;
    auto* bnd = app.add_subcommand("bound", "evaluate closed-form bounds for given moments");
    bnd->add_option("--mu", b_mu, "expected entropy (nats)")->required();
    bnd->add_option("--mu2", b_mu2, "expected second log-moment (nats^2)")->required();
    bnd->add_option("--p", b_p, "parallel token capacity")->required();
    bnd->add_option("--mu-ce", b_mu_ce, "expected cross-entropy (nats)");
    bnd->add_option("--pr-q-zero", b_pr_q_zero, "expected drafter zero-mass rate");
    bnd->add_option("--renewal-x", b_renewal_x, "also report renewal bounds at this x");
    bnd->add_option("--en-t", b_en_t, "also report the expected node-count bound at this t");
    bnd->add_option("--out", b_out, "write the JSON report here instead of stdout");

    // simulate
    std::string sim_family, sim_out, sim_mode = "full";
    std::uint32_t sim_p = 0, sim_workers = 1;
    std::uint64_t sim_tokens = 0, sim_moment_samples = 100'000;
    std::optional<std::uint64_t> sim_seed;
    std::optional<double> sim_latency;
    auto* sim = app.add_subcommand("simulate", "run the draft/verify loop for one family");
    sim->add_option("--family", sim_family, "family JSON document or path")->required();
    sim->add_option("--p", sim_p, "parallel token capacity")->required();
    sim->add_option("--n-tokens", sim_tokens, "tokens to generate")->required();
    sim->add_option("--mode", sim_mode, "full or q-greedy")
        ->check(CLI::IsMember({"full", "q-greedy"}));
    sim->add_option("--seed", sim_seed, "master seed (default: the family's seed)");
    sim->add_option("--workers", sim_workers, "worker threads (does not change results)");
    sim->add_option("--moment-samples", sim_moment_samples,
                    "samples for the attached bound estimates");
    sim->add_option("--verifier-latency-ms", sim_latency,
                    "display wall-clock timing at this constant verifier latency");
    sim->add_option("--out", sim_out, "write the JSON report here instead of stdout");

    // sweep
    std::string sw_family, sw_out, sw_grid, sw_modes = "full";
    std::uint32_t sw_workers = 1;
    std::uint64_t sw_tokens = 0, sw_moment_samples = 100'000;
    std::optional<std::uint64_t> sw_seed;
    auto* sw = app.add_subcommand("sweep", "sweep P and emit one CSV row per (P, mode)");
    sw->add_option("--family", sw_family, "family JSON document or path")->required();
    sw->add_option("--p-grid", sw_grid, "comma-separated ascending capacities")->required();
    sw->add_option("--n-tokens", sw_tokens, "tokens to generate per cell")->required();
    sw->add_option("--modes", sw_modes, "comma-separated subset of full,q-greedy");
    sw->add_option("--seed", sw_seed, "master seed (default: the family's seed)");
    sw->add_option("--workers", sw_workers, "worker threads (does not change results)");
    sw->add_option("--moment-samples", sw_moment_samples,
                   "samples for the attached bound estimates");
    sw->add_option("--out", sw_out, "write the CSV here instead of stdout");

    // check
    std::string chk_suite, chk_family, chk_out;
    std::uint64_t chk_seed = 20240901;
    std::uint64_t chk_trials = 20'000;
    auto* chk = app.add_subcommand("check", "run Monte Carlo verification suites");
    chk->add_option("suite", chk_suite,
                    "many-to-one, renewal, claim-nt, frontier, bruteforce, tp-trend, or all")
        ->required()
        ->check(CLI::IsMember({"many-to-one", "renewal", "claim-nt", "frontier",
                               "bruteforce", "tp-trend", "all"}));
    chk->add_option("--seed", chk_seed, "master seed for the roster");
    chk->add_option("--trials", chk_trials, "Monte Carlo trials per check");
    chk->add_option("--family", chk_family, "run the suite on this family instead");
    chk->add_option("--out", chk_out, "write the JSON report here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (est->parsed()) {
            return cmd_estimate(est_trace, est_out, est_epsilon);
        }
        if (bnd->parsed()) {
            MomentParams params;
            params.mu = b_mu;
            params.mu2 = b_mu2;
            params.mu_ce = b_mu_ce;
            params.pr_q_zero = b_pr_q_zero;
            return cmd_bound(params, b_p, b_renewal_x, b_en_t, b_out);
        }
        if (sim->parsed()) {
            const FamilySpec family = load_family(sim_family);
            const DraftMode mode = sim_mode == "full" ? DraftMode::full : DraftMode::q_greedy;
            return cmd_simulate(family, sim_p, sim_tokens, mode,
                                sim_seed.value_or(family.seed), sim_workers,
                                sim_moment_samples, sim_latency, sim_out);
        }
        if (sw->parsed()) {
            const FamilySpec family = load_family(sw_family);
            std::vector<std::uint32_t> grid;
            {
                std::stringstream ss(sw_grid);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    grid.push_back(static_cast<std::uint32_t>(std::stoul(item)));
                }
            }
            if (grid.empty() || !std::is_sorted(grid.begin(), grid.end())) {
                throw std::invalid_argument("--p-grid must be nonempty and ascending");
            }
            std::vector<DraftMode> modes;
            {
                std::stringstream ss(sw_modes);
                std::string item;
                while (std::getline(ss, item, ',')) {
                    if (item == "full") {
                        modes.push_back(DraftMode::full);
                    } else if (item == "q-greedy") {
                        modes.push_back(DraftMode::q_greedy);
                    } else {
                        throw std::invalid_argument("unknown mode: " + item);
                    }
                }
            }
            if (modes.empty()) {
                throw std::invalid_argument("--modes must name at least one mode");
            }
            return cmd_sweep(family, grid, sw_tokens, modes,
                             sw_seed.value_or(family.seed), sw_workers, sw_moment_samples,
                             sw_out);
        }
        if (chk->parsed()) {
            std::optional<FamilySpec> override_family;
            if (!chk_family.empty()) {
                override_family = load_family(chk_family);
            }
            return cmd_check(chk_suite, chk_seed, chk_trials, override_family, chk_out);
        }
    } catch (const IngestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitOk;
}
