#pragma once

#include <cstdint>
#include <optional>

namespace speclim {

// Moment parameters of the verifier's next-token distribution, in nats:
// mu is the expected entropy, mu2 the expected second log-moment. The
// cross-entropy block is present only for paired (drafter-aware) sources.
struct MomentParams {
    double mu = 0.0;
    double mu2 = 0.0;
    double stderr_mu = 0.0;
    double stderr_mu2 = 0.0;

    std::optional<double> mu_ce;
    std::optional<double> pr_q_zero;
    std::optional<double> stderr_mu_ce;
    std::optional<double> stderr_pr_q_zero;

    std::uint64_t n_samples = 0;

    // All bound formulas require mu > 0 (a point-mass verifier admits no
    // nontrivial bound).
    bool usable_for_bounds() const { return mu > 0.0; }
};

}  // namespace speclim
