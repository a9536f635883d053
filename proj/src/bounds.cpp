#include "speclim/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace speclim {

namespace {

void require_valid_moments(const MomentParams& params) {
    if (!std::isfinite(params.mu) || !std::isfinite(params.mu2) || params.mu2 < 0.0) {
        throw std::invalid_argument("bounds: non-finite moment parameters");
    }
}

}  // namespace

ExactBound bound_exact(const MomentParams& params, double p_capacity) {
    require_valid_moments(params);
    ExactBound bound;
    if (params.mu <= 0.0) {
        return bound;
    }
    bound.a = (params.mu + params.mu2) / (params.mu * params.mu);
    bound.b = 1.0 - 1.0 / params.mu;
    bound.threshold = 1.0 + params.mu2 / (params.mu * params.mu);
    const double t_star = std::log((p_capacity - bound.b) / bound.a);
    // t_star crosses zero exactly at the applicability threshold; tolerate
    // rounding at the boundary.
    if (!(t_star >= -1e-12)) {
        return bound;
    }
    bound.t_star = std::max(t_star, 0.0);
    bound.value = bound.a * bound.t_star + bound.a + bound.b;
    bound.valid = true;
    return bound;
}

LimitBound bound_limit(const MomentParams& params, double p_capacity) {
    require_valid_moments(params);
    LimitBound bound;
    if (params.mu <= 0.0 || p_capacity < 1.0) {
        return bound;
    }
    bound.value = std::log(p_capacity) / params.mu;
    bound.valid = true;
    return bound;
}

CeLowerBound bound_ce_lower(const MomentParams& params, double p_capacity) {
    CeLowerBound bound;
    if (!params.mu_ce || !params.pr_q_zero || !(*params.mu_ce > 0.0) || p_capacity < 1.0) {
        return bound;
    }
    bound.q_miss_branch = *params.pr_q_zero > 0.0
                              ? 1.0 / *params.pr_q_zero
                              : std::numeric_limits<double>::infinity();
    bound.entropy_branch = std::log(p_capacity) / *params.mu_ce;
    bound.value = std::min(bound.q_miss_branch, bound.entropy_branch);
    bound.valid = true;
    return bound;
}

RenewalBounds renewal_bounds(const MomentParams& params, double x) {
    require_valid_moments(params);
    if (params.mu <= 0.0) {
        throw std::invalid_argument("renewal_bounds: mu must be positive");
    }
    if (x < 0.0) {
        throw std::invalid_argument("renewal_bounds: x must be >= 0");
    }
    RenewalBounds bounds;
    bounds.lower = x / params.mu + 1.0;
    bounds.upper = bounds.lower + params.mu2 / (params.mu * params.mu);
    return bounds;
}

double bound_en_t(const MomentParams& params, double t) {
    require_valid_moments(params);
    if (params.mu <= 0.0) {
        throw std::invalid_argument("bound_en_t: mu must be positive");
    }
    if (t < 0.0) {
        throw std::invalid_argument("bound_en_t: t must be >= 0");
    }
    const double a = (params.mu + params.mu2) / (params.mu * params.mu);
    return a * std::exp(t) - 1.0 / params.mu + 1.0;
}

std::optional<double> tp_reference(double p_capacity) {
    if (p_capacity < 3.0) {
        return std::nullopt;  // ln ln P is not meaningful yet
    }
    return std::log(p_capacity) - std::log(std::log(p_capacity));
}

BoundReport make_bound_report(const MomentParams& params, double p_capacity,
                              std::optional<bool> non_arithmetic) {
    BoundReport report;
    report.p_capacity = p_capacity;
    report.params = params;
    report.exact = bound_exact(params, p_capacity);
    report.limit = bound_limit(params, p_capacity);
    report.ce_lower = bound_ce_lower(params, p_capacity);
    report.limit_lower_tp = tp_reference(p_capacity);
    report.non_arithmetic = non_arithmetic;
    return report;
}

}  // namespace speclim
