#pragma once

#include <optional>

#include "speclim/moment_params.hpp"

namespace speclim {

// E[X] <= a*ln((P-b)/a) + a + b with a = (mu+mu2)/mu^2, b = 1 - 1/mu.
// Applicable for mu > 0 and P >= 1 + mu2/mu^2 (exactly where t_star >= 0).
struct ExactBound {
    bool valid = false;
    double value = 0.0;
    double a = 0.0;
    double b = 0.0;
    double t_star = 0.0;
    double threshold = 0.0;  // 1 + mu2/mu^2
};

ExactBound bound_exact(const MomentParams& params, double p_capacity);

// ln(P)/mu; the o(ln P) term is neglected and flagged as such.
struct LimitBound {
    bool valid = false;
    double value = 0.0;
    bool o_log_p_neglected = true;
};

LimitBound bound_limit(const MomentParams& params, double p_capacity);

// min(1/E[Pr[q=0]], ln(P)/mu_ce), the imperfect-knowledge floor; the
// o(ln P) term is neglected and flagged.
struct CeLowerBound {
    bool valid = false;
    double value = 0.0;
    double q_miss_branch = 0.0;   // 1/E[Pr[q=0]] (inf when the rate is zero)
    double entropy_branch = 0.0;  // ln(P)/mu_ce
    bool o_log_p_neglected = true;
};

CeLowerBound bound_ce_lower(const MomentParams& params, double p_capacity);

// Two-sided bounds on the renewal function of the spine walk:
// x/mu + 1 <= U(x) <= x/mu + 1 + mu2/mu^2.
struct RenewalBounds {
    double lower = 0.0;
    double upper = 0.0;
};

RenewalBounds renewal_bounds(const MomentParams& params, double x);

// Upper bound on the expected node count E[N(t)]:
// ((mu+mu2)/mu^2) e^t - 1/mu + 1.
double bound_en_t(const MomentParams& params, double t);

// Reference curve ln P - ln ln P for the P-th smallest value; carries an
// unquantified O(1) offset, so it is reported, never asserted.
std::optional<double> tp_reference(double p_capacity);

// Everything above for one (params, P) pair, for self-contained reports.
struct BoundReport {
    double p_capacity = 0.0;
    MomentParams params;
    ExactBound exact;
    LimitBound limit;
    CeLowerBound ce_lower;
    std::optional<double> limit_lower_tp;
    std::optional<bool> non_arithmetic;  // nullopt when the source is unknown
};

BoundReport make_bound_report(const MomentParams& params, double p_capacity,
                              std::optional<bool> non_arithmetic = std::nullopt);

}  // namespace speclim
