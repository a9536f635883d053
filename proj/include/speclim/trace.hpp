#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "speclim/moment_params.hpp"

namespace speclim {

// One line of a probability trace: the target model's next-token
// probabilities, sorted descending after ingest, optionally paired with the
// drafter's probabilities for the same token indices. Token identities are
// never stored; every statistic in scope depends on probability values only.
struct TraceRecord {
    std::vector<double> p;
    std::optional<std::vector<double>> q;
};

struct IngestStats {
    std::uint64_t n_records = 0;
    std::uint64_t n_malformed = 0;
    std::uint64_t n_renormalized = 0;
    double truncate_epsilon = 0.0;
    std::vector<std::uint64_t> malformed_lines;  // first few, 1-based
};

struct IngestResult {
    std::vector<TraceRecord> records;
    IngestStats stats;
};

class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Line-delimited JSON records: {"p": [...], "q": [...], "meta": {...}} with
// q and meta optional. Malformed lines are counted and skipped; more than 1%
// malformed (or an empty file) raises IngestError listing the offending line
// numbers. p is renormalized when its sum is within 1e-3 of one; entries
// below truncate_epsilon are dropped before renormalization when set.
IngestResult ingest(const std::string& path, double truncate_epsilon = 0.0);
IngestResult ingest_stream(std::istream& in, double truncate_epsilon = 0.0);

// Per-record moment functionals averaged uniformly over all records.
// Requires at least one record; per-value sums are computed over sorted
// copies so the result is independent of record order, exactly.
MomentParams estimate(std::span<const TraceRecord> records);

}  // namespace speclim
