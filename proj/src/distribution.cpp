#include "speclim/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace speclim {

std::size_t TokenDistribution::support_size() const {
    return static_cast<std::size_t>(
        std::count_if(probs.begin(), probs.end(), [](double p) { return p > 0.0; }));
}

double TokenDistribution::sum() const {
    return std::accumulate(probs.begin(), probs.end(), 0.0);
}

double TokenDistribution::entropy() const {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return h;
}

double TokenDistribution::second_log_moment() const {
    double m = 0.0;
    for (double p : probs) {
        if (p > 0.0) {
            const double l = std::log(p);
            m += p * l * l;
        }
    }
    return m;
}

bool TokenDistribution::is_point_mass() const {
    return support_size() == 1;
}

TokenDistribution make_distribution(std::vector<double> probs) {
    if (probs.empty()) {
        throw std::invalid_argument("distribution: empty probability vector");
    }
    for (double p : probs) {
        if (!(p >= 0.0) || p > 1.0 + kSumTolerance) {
            throw std::invalid_argument("distribution: entry outside [0, 1]");
        }
    }
    std::sort(probs.begin(), probs.end(), std::greater<double>());
    const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-6) {
        throw std::invalid_argument("distribution: probabilities do not sum to one");
    }
    while (probs.size() > 1 && probs.back() < kProbTruncation) {
        probs.pop_back();
    }
    const double kept = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (kept <= 0.0) {
        throw std::invalid_argument("distribution: no positive mass");
    }
    for (double& p : probs) {
        p /= kept;
    }
    return TokenDistribution{std::move(probs)};
}

std::vector<std::uint32_t> drafter_child_order(const NodeDistribution& dist) {
    const auto& q = dist.q ? dist.q->probs : dist.p.probs;
    std::vector<std::uint32_t> order;
    order.reserve(q.size());
    for (std::uint32_t i = 0; i < q.size(); ++i) {
        if (q[i] > 0.0) {
            order.push_back(i);
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&q](std::uint32_t a, std::uint32_t b) { return q[a] > q[b]; });
    return order;
}

PairedStats paired_stats(std::span<const double> p, const std::vector<double>* q) {
    PairedStats out;
    for (double pi : p) {
        if (pi > 0.0) {
            const double l = std::log(pi);
            out.entropy -= pi * l;
            out.second_log_moment += pi * l * l;
        }
    }
    if (q != nullptr) {
        double zero_mass = 0.0;
        double covered_mass = 0.0;
        double ce_num = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double qi = i < q->size() ? (*q)[i] : 0.0;
            if (qi > 0.0) {
                covered_mass += p[i];
                ce_num -= p[i] * std::log(qi);
            } else {
                zero_mass += p[i];
            }
        }
        out.q_zero_mass = zero_mass;
        if (covered_mass > 0.0) {
            out.cross_entropy = ce_num / covered_mass;
        }
    }
    return out;
}

}  // namespace speclim
