#include "speclim/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "speclim/distribution.hpp"

namespace speclim {

namespace {

constexpr double kRecordSumTolerance = 1e-3;
constexpr std::size_t kMaxReportedLines = 16;

bool parse_prob_array(const nlohmann::json& j, std::vector<double>& out) {
    if (!j.is_array() || j.empty()) {
        return false;
    }
    out.clear();
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) {
            return false;
        }
        const double x = v.get<double>();
        if (!(x >= 0.0) || !std::isfinite(x)) {
            return false;
        }
        out.push_back(x);
    }
    return true;
}

// Returns false when the line cannot be made a valid record.
bool parse_record(const std::string& line, double truncate_epsilon, TraceRecord& rec,
                  bool& renormalized) {
    const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || !j.contains("p")) {
        return false;
    }
    std::vector<double> p;
    if (!parse_prob_array(j.at("p"), p)) {
        return false;
    }
    std::vector<double> q;
    const bool has_q = j.contains("q") && !j.at("q").is_null();
    if (has_q) {
        if (!parse_prob_array(j.at("q"), q) || q.size() != p.size()) {
            return false;
        }
        const double q_sum = std::accumulate(q.begin(), q.end(), 0.0);
        if (q_sum > 1.0 + kRecordSumTolerance) {
            return false;
        }
    }

    if (truncate_epsilon > 0.0) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (p[i] < truncate_epsilon) {
                p[i] = 0.0;
            }
        }
    }
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    if (sum <= 0.0 ||
        (truncate_epsilon <= 0.0 && std::abs(sum - 1.0) > kRecordSumTolerance)) {
        return false;
    }
    renormalized = std::abs(sum - 1.0) > kSumTolerance;
    for (double& x : p) {
        x /= sum;
    }

    // Keep p descending with q index-aligned.
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&p](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    rec.p.clear();
    rec.p.reserve(p.size());
    for (std::size_t idx : order) {
        if (p[idx] > 0.0) {
            rec.p.push_back(p[idx]);
        }
    }
    if (has_q) {
        std::vector<double> q_sorted;
        q_sorted.reserve(rec.p.size());
        for (std::size_t idx : order) {
            if (p[idx] > 0.0) {
                q_sorted.push_back(q[idx]);
            }
        }
        rec.q = std::move(q_sorted);
    } else {
        rec.q.reset();
    }
    return true;
}

struct Accumulator {
    std::vector<double> values;

    void add(double v) { values.push_back(v); }

    // Order-independent: sums run over the sorted multiset.
    double mean() const {
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
        return total / static_cast<double>(sorted.size());
    }

    double stderr_of_mean() const {
        const std::size_t n = values.size();
        if (n < 2) {
            return 0.0;
        }
        const double m = mean();
        std::vector<double> sq;
        sq.reserve(n);
        for (double v : values) {
            sq.push_back((v - m) * (v - m));
        }
        std::sort(sq.begin(), sq.end());
        const double ss = std::accumulate(sq.begin(), sq.end(), 0.0);
        return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    }
};

}  // namespace

IngestResult ingest_stream(std::istream& in, double truncate_epsilon) {
    IngestResult result;
    result.stats.truncate_epsilon = truncate_epsilon;
    std::string line;
    std::uint64_t line_no = 0;
    std::uint64_t considered = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        ++considered;
        TraceRecord rec;
        bool renormalized = false;
        if (parse_record(line, truncate_epsilon, rec, renormalized)) {
            result.records.push_back(std::move(rec));
            if (renormalized) {
                ++result.stats.n_renormalized;
            }
        } else {
            ++result.stats.n_malformed;
            if (result.stats.malformed_lines.size() < kMaxReportedLines) {
                result.stats.malformed_lines.push_back(line_no);
            }
        }
    }
    result.stats.n_records = result.records.size();
    if (considered == 0 || result.records.empty()) {
        throw IngestError("trace ingest: no valid records");
    }
    if (result.stats.n_malformed * 100 > considered) {
        std::ostringstream msg;
        msg << "trace ingest: " << result.stats.n_malformed << " of " << considered
            << " lines malformed (limit 1%); first bad lines:";
        for (std::uint64_t ln : result.stats.malformed_lines) {
            msg << ' ' << ln;
        }
        throw IngestError(msg.str());
    }
    return result;
}

IngestResult ingest(const std::string& path, double truncate_epsilon) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("trace ingest: cannot open " + path);
    }
    return ingest_stream(in, truncate_epsilon);
}

MomentParams estimate(std::span<const TraceRecord> records) {
    if (records.empty()) {
        throw std::invalid_argument("estimate: no records");
    }
    Accumulator h;
    Accumulator m2;
    Accumulator zero_mass;
    Accumulator cross_entropy;
    for (const TraceRecord& rec : records) {
        const auto stats = paired_stats(rec.p, rec.q ? &*rec.q : nullptr);
        h.add(stats.entropy);
        m2.add(stats.second_log_moment);
        if (stats.q_zero_mass) {
            zero_mass.add(*stats.q_zero_mass);
        }
        if (stats.cross_entropy) {
            cross_entropy.add(*stats.cross_entropy);
        }
    }
    MomentParams params;
    params.n_samples = records.size();
    params.mu = h.mean();
    params.stderr_mu = h.stderr_of_mean();
    params.mu2 = m2.mean();
    params.stderr_mu2 = m2.stderr_of_mean();
    if (!zero_mass.values.empty()) {
        params.pr_q_zero = zero_mass.mean();
        params.stderr_pr_q_zero = zero_mass.stderr_of_mean();
    }
    if (!cross_entropy.values.empty()) {
        params.mu_ce = cross_entropy.mean();
        params.stderr_mu_ce = cross_entropy.stderr_of_mean();
    }
    return params;
}

}  // namespace speclim
