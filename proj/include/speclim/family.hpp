#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "speclim/distribution.hpp"
#include "speclim/moment_params.hpp"
#include "speclim/random.hpp"
#include "speclim/trace.hpp"

namespace speclim {

enum class FamilyKind {
    fixed,
    uniform,
    dirichlet,
    empirical,
    paired_empirical,
    paired_noisy,
};

const char* family_kind_name(FamilyKind kind);

// Generator of i.i.d. per-node child distributions. The realized infinite
// tree is a deterministic function of (seed, node path): any expansion order
// observes the same tree.
struct FamilySpec {
    FamilyKind kind = FamilyKind::uniform;
    std::uint64_t seed = 0;

    // fixed
    std::vector<double> fixed_probs;
    bool allow_point_mass = false;

    // uniform / dirichlet
    std::uint32_t vocab = 2;
    double alpha = 1.0;

    // empirical / paired-empirical
    std::string trace_path;  // provenance only; records carry the data
    std::shared_ptr<const std::vector<TraceRecord>> records;

    // paired-noisy: drafter view q ~ p^(1/temperature) with independent
    // per-token zero-outs at rate q_zero_rate, renormalized.
    std::shared_ptr<const FamilySpec> base;
    double q_temperature = 1.0;
    double q_zero_rate = 0.0;

    // Fast path for node-independent kinds; set by the factories.
    std::shared_ptr<const NodeDistribution> cached_dist;

    bool is_paired() const;
    // True when every draw is a point mass (no nontrivial speculation).
    bool is_point_mass() const;
    // False for families whose per-edge values -ln(beta) live on a lattice
    // (e.g. uniform); renewal-limit identities break at lattice atoms.
    bool non_arithmetic() const;
    // Throws std::invalid_argument on an unusable configuration.
    void validate() const;
    FamilySpec with_seed(std::uint64_t new_seed) const;

    static FamilySpec make_fixed(std::vector<double> probs, std::uint64_t seed,
                                 bool allow_point_mass = false);
    static FamilySpec make_uniform(std::uint32_t vocab, std::uint64_t seed);
    static FamilySpec make_dirichlet(double alpha, std::uint32_t vocab, std::uint64_t seed);
    static FamilySpec make_empirical(std::shared_ptr<const std::vector<TraceRecord>> records,
                                     std::uint64_t seed, bool paired,
                                     std::string trace_path = {});
    static FamilySpec make_paired_noisy(FamilySpec base, double q_temperature,
                                        double q_zero_rate, std::uint64_t seed);
    // Single-record paired family; handy for exact paired test cases.
    static FamilySpec make_paired_fixed(std::vector<double> p, std::vector<double> q,
                                        std::uint64_t seed);
};

// The child distribution of the node addressed by `path`, as a pure function
// of (family.seed, path). Distinct nodes receive statistically independent
// draws.
NodeDistribution distribution_at(const FamilySpec& family,
                                 std::span<const std::uint32_t> path);

// A fresh i.i.d. draw from the family on the caller's stream; used for
// moment estimation and spine-walk sampling.
NodeDistribution sample_distribution(const FamilySpec& family, RngStream& rng);

// Monte Carlo estimates of mu, mu2 and, for paired families, mu_ce and
// E[Pr[q=0]]. Exact with zero standard error for unpaired fixed and uniform
// families.
MomentParams family_moments(const FamilySpec& family, std::uint64_t n_samples);

}  // namespace speclim
