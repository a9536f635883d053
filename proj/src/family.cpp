#include "speclim/family.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace speclim {

namespace {

constexpr std::uint64_t kMomentsTag = 0x6d6f6d656e747331ull;
constexpr std::uint32_t kMaxUniformVocab = 1 << 16;
constexpr std::uint32_t kMaxDirichletVocab = 1024;

std::uint64_t bounded_index(std::uint64_t r, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(r) * static_cast<unsigned __int128>(n)) >> 64);
}

TokenDistribution renormalized_q(std::vector<double> q, std::size_t support) {
    double total = std::accumulate(q.begin(), q.end(), 0.0);
    if (total <= 0.0) {
        // A drafter with no usable signal falls back to ignorance over the
        // known support.
        q.assign(q.size(), 1.0 / static_cast<double>(support));
        return TokenDistribution{std::move(q)};
    }
    for (double& x : q) {
        x /= total;
    }
    return TokenDistribution{std::move(q)};
}

NodeDistribution draw_impl(const FamilySpec& family, RngStream& rng) {
    switch (family.kind) {
        case FamilyKind::fixed:
        case FamilyKind::uniform: {
            if (family.cached_dist) {
                return *family.cached_dist;
            }
            if (family.kind == FamilyKind::fixed) {
                return NodeDistribution{make_distribution(family.fixed_probs), std::nullopt};
            }
            std::vector<double> probs(family.vocab,
                                      1.0 / static_cast<double>(family.vocab));
            return NodeDistribution{TokenDistribution{std::move(probs)}, std::nullopt};
        }
        case FamilyKind::dirichlet: {
            std::vector<double> probs(family.vocab, 0.0);
            for (;;) {
                double total = 0.0;
                for (double& x : probs) {
                    x = rng.next_gamma(family.alpha);
                    total += x;
                }
                if (total > 0.0 && std::isfinite(total)) {
                    for (double& x : probs) {
                        x /= total;
                    }
                    break;
                }
            }
            return NodeDistribution{make_distribution(std::move(probs)), std::nullopt};
        }
        case FamilyKind::empirical:
        case FamilyKind::paired_empirical: {
            const auto& records = *family.records;
            const TraceRecord& rec = records[bounded_index(rng(), records.size())];
            NodeDistribution out{TokenDistribution{rec.p}, std::nullopt};
            if (family.kind == FamilyKind::paired_empirical) {
                out.q = renormalized_q(rec.q ? *rec.q : std::vector<double>(rec.p.size(), 0.0),
                                       rec.p.size());
            }
            return out;
        }
        case FamilyKind::paired_noisy: {
            NodeDistribution out = draw_impl(*family.base, rng);
            const auto& p = out.p.probs;
            std::vector<double> q(p.size());
            const double inv_temp = 1.0 / family.q_temperature;
            for (std::size_t i = 0; i < p.size(); ++i) {
                q[i] = std::pow(p[i], inv_temp);
            }
            if (family.q_zero_rate > 0.0) {
                bool any_alive = false;
                for (double& x : q) {
                    if (rng.next_unit() < family.q_zero_rate) {
                        x = 0.0;
                    } else {
                        any_alive = true;
                    }
                }
                if (!any_alive) {
                    q[0] = 1.0;  // p is descending; keep the drafter's best guess
                }
            }
            out.q = renormalized_q(std::move(q), p.size());
            return out;
        }
    }
    throw std::logic_error("draw_impl: unknown family kind");
}

// Greatest common divisor of real values up to tolerance; returns 0 when the
// values are incommensurable at that tolerance.
double real_gcd(std::vector<double> values, double tol) {
    double g = 0.0;
    for (double v : values) {
        double a = std::max(g, v);
        double b = std::min(g, v);
        while (b > tol) {
            const double r = std::fmod(a, b);
            a = b;
            b = (r > b - tol) ? 0.0 : r;  // residual within tol of b means it divides
        }
        g = a;
        if (g <= tol) {
            return 0.0;
        }
    }
    return g;
}

bool values_on_lattice(const TokenDistribution& dist) {
    std::vector<double> values;
    for (double p : dist.probs) {
        if (p > 0.0 && p < 1.0) {
            values.push_back(-std::log(p));
        }
    }
    if (values.empty()) {
        return true;  // point mass: degenerate lattice
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 values.end());
    const double lambda = real_gcd(values, 1e-9);
    if (lambda < 1e-6) {
        return false;
    }
    for (double v : values) {
        const double k = std::round(v / lambda);
        if (std::abs(v - k * lambda) > 1e-9 * (1.0 + v)) {
            return false;
        }
    }
    return true;
}

}  // namespace

const char* family_kind_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::fixed: return "fixed";
        case FamilyKind::uniform: return "uniform";
        case FamilyKind::dirichlet: return "dirichlet";
        case FamilyKind::empirical: return "empirical";
        case FamilyKind::paired_empirical: return "paired-empirical";
        case FamilyKind::paired_noisy: return "paired-noisy";
    }
    return "?";
}

bool FamilySpec::is_paired() const {
    return kind == FamilyKind::paired_empirical || kind == FamilyKind::paired_noisy;
}

bool FamilySpec::is_point_mass() const {
    switch (kind) {
        case FamilyKind::fixed:
            return cached_dist ? cached_dist->p.is_point_mass()
                               : make_distribution(fixed_probs).is_point_mass();
        case FamilyKind::uniform:
        case FamilyKind::dirichlet:
            return false;
        case FamilyKind::empirical:
        case FamilyKind::paired_empirical:
            return std::all_of(records->begin(), records->end(), [](const TraceRecord& r) {
                return std::count_if(r.p.begin(), r.p.end(),
                                     [](double p) { return p > 0.0; }) <= 1;
            });
        case FamilyKind::paired_noisy:
            return base->is_point_mass();
    }
    return false;
}

bool FamilySpec::non_arithmetic() const {
    switch (kind) {
        case FamilyKind::uniform:
            return false;
        case FamilyKind::fixed:
            return !values_on_lattice(cached_dist ? cached_dist->p
                                                  : make_distribution(fixed_probs));
        case FamilyKind::dirichlet:
            return true;
        case FamilyKind::empirical:
        case FamilyKind::paired_empirical:
            if (records->size() == 1) {
                return !values_on_lattice(TokenDistribution{records->front().p});
            }
            return true;
        case FamilyKind::paired_noisy:
            return base->non_arithmetic();
    }
    return true;
}

void FamilySpec::validate() const {
    switch (kind) {
        case FamilyKind::fixed: {
            const TokenDistribution dist = make_distribution(fixed_probs);
            if (dist.is_point_mass() && !allow_point_mass) {
                throw std::invalid_argument(
                    "fixed family: point mass distribution (mu = 0 admits no bound); "
                    "set allow_point_mass to force");
            }
            return;
        }
        case FamilyKind::uniform:
            if (vocab < 2 || vocab > kMaxUniformVocab) {
                throw std::invalid_argument("uniform family: vocab must be in [2, 65536]");
            }
            return;
        case FamilyKind::dirichlet:
            if (vocab < 2 || vocab > kMaxDirichletVocab) {
                throw std::invalid_argument("dirichlet family: vocab must be in [2, 1024]");
            }
            if (!(alpha > 0.0) || !std::isfinite(alpha)) {
                throw std::invalid_argument("dirichlet family: alpha must be positive");
            }
            return;
        case FamilyKind::empirical:
        case FamilyKind::paired_empirical:
            if (!records || records->empty()) {
                throw std::invalid_argument("empirical family: no records loaded");
            }
            if (kind == FamilyKind::paired_empirical) {
                for (const TraceRecord& r : *records) {
                    if (!r.q) {
                        throw std::invalid_argument(
                            "paired-empirical family: record without q vector");
                    }
                }
            }
            return;
        case FamilyKind::paired_noisy:
            if (!base) {
                throw std::invalid_argument("paired-noisy family: missing base family");
            }
            if (base->is_paired()) {
                throw std::invalid_argument("paired-noisy family: base must be unpaired");
            }
            base->validate();
            if (!(q_temperature > 0.0) || !std::isfinite(q_temperature)) {
                throw std::invalid_argument("paired-noisy family: temperature must be > 0");
            }
            if (!(q_zero_rate >= 0.0) || q_zero_rate >= 1.0) {
                throw std::invalid_argument("paired-noisy family: zero rate must be in [0, 1)");
            }
            return;
    }
    throw std::invalid_argument("family: unknown kind");
}

FamilySpec FamilySpec::with_seed(std::uint64_t new_seed) const {
    FamilySpec copy = *this;
    copy.seed = new_seed;
    return copy;
}

FamilySpec FamilySpec::make_fixed(std::vector<double> probs, std::uint64_t seed,
                                  bool allow_point_mass) {
    FamilySpec spec;
    spec.kind = FamilyKind::fixed;
    spec.seed = seed;
    spec.fixed_probs = std::move(probs);
    spec.allow_point_mass = allow_point_mass;
    spec.validate();
    spec.cached_dist = std::make_shared<const NodeDistribution>(
        NodeDistribution{make_distribution(spec.fixed_probs), std::nullopt});
    return spec;
}

FamilySpec FamilySpec::make_uniform(std::uint32_t vocab, std::uint64_t seed) {
    FamilySpec spec;
    spec.kind = FamilyKind::uniform;
    spec.seed = seed;
    spec.vocab = vocab;
    spec.validate();
    std::vector<double> probs(vocab, 1.0 / static_cast<double>(vocab));
    spec.cached_dist = std::make_shared<const NodeDistribution>(
        NodeDistribution{TokenDistribution{std::move(probs)}, std::nullopt});
    return spec;
}

FamilySpec FamilySpec::make_dirichlet(double alpha, std::uint32_t vocab, std::uint64_t seed) {
    FamilySpec spec;
    spec.kind = FamilyKind::dirichlet;
    spec.seed = seed;
    spec.alpha = alpha;
    spec.vocab = vocab;
    spec.validate();
    return spec;
}

FamilySpec FamilySpec::make_empirical(std::shared_ptr<const std::vector<TraceRecord>> records,
                                      std::uint64_t seed, bool paired, std::string trace_path) {
    FamilySpec spec;
    spec.kind = paired ? FamilyKind::paired_empirical : FamilyKind::empirical;
    spec.seed = seed;
    spec.records = std::move(records);
    spec.trace_path = std::move(trace_path);
    spec.validate();
    return spec;
}

FamilySpec FamilySpec::make_paired_noisy(FamilySpec base, double q_temperature,
                                         double q_zero_rate, std::uint64_t seed) {
    FamilySpec spec;
    spec.kind = FamilyKind::paired_noisy;
    spec.seed = seed;
    spec.base = std::make_shared<const FamilySpec>(std::move(base));
    spec.q_temperature = q_temperature;
    spec.q_zero_rate = q_zero_rate;
    spec.validate();
    return spec;
}

FamilySpec FamilySpec::make_paired_fixed(std::vector<double> p, std::vector<double> q,
                                         std::uint64_t seed) {
    if (p.size() != q.size()) {
        throw std::invalid_argument("paired fixed family: p and q lengths differ");
    }
    // Records bypass ingest here, so apply the same normalization: p sorted
    // descending and renormalized, q index-aligned.
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&p](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (total <= 0.0) {
        throw std::invalid_argument("paired fixed family: p has no mass");
    }
    TraceRecord rec;
    rec.q.emplace();
    for (std::size_t idx : order) {
        if (p[idx] > 0.0) {
            rec.p.push_back(p[idx] / total);
            rec.q->push_back(q[idx]);
        }
    }
    auto records = std::make_shared<std::vector<TraceRecord>>();
    records->push_back(std::move(rec));
    return make_empirical(std::move(records), seed, /*paired=*/true);
}

NodeDistribution distribution_at(const FamilySpec& family,
                                 std::span<const std::uint32_t> path) {
    if (family.cached_dist) {
        return *family.cached_dist;
    }
    RngStream rng(path_key(family.seed, path));
    return draw_impl(family, rng);
}

NodeDistribution sample_distribution(const FamilySpec& family, RngStream& rng) {
    return draw_impl(family, rng);
}

MomentParams family_moments(const FamilySpec& family, std::uint64_t n_samples) {
    if (n_samples == 0) {
        throw std::invalid_argument("family_moments: n_samples must be >= 1");
    }
    family.validate();
    const bool exact = (family.kind == FamilyKind::fixed || family.kind == FamilyKind::uniform);
    if (exact) {
        const NodeDistribution dist =
            family.cached_dist ? *family.cached_dist : distribution_at(family, {});
        MomentParams params;
        params.mu = dist.p.entropy();
        params.mu2 = dist.p.second_log_moment();
        params.n_samples = n_samples;
        return params;
    }

    RngStream rng(hash_combine(mix64(family.seed ^ kMomentsTag), 1));
    double sum_h = 0.0, sum_h2 = 0.0;
    double sum_m = 0.0, sum_m2 = 0.0;
    double sum_z = 0.0, sum_z2 = 0.0;
    double sum_ce = 0.0, sum_ce2 = 0.0;
    std::uint64_t n_ce = 0;
    const bool paired = family.is_paired();
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        const NodeDistribution dist = draw_impl(family, rng);
        const auto stats = paired_stats(dist.p.probs, dist.q ? &dist.q->probs : nullptr);
        sum_h += stats.entropy;
        sum_h2 += stats.entropy * stats.entropy;
        sum_m += stats.second_log_moment;
        sum_m2 += stats.second_log_moment * stats.second_log_moment;
        if (paired) {
            const double z = stats.q_zero_mass.value_or(0.0);
            sum_z += z;
            sum_z2 += z * z;
            if (stats.cross_entropy) {
                sum_ce += *stats.cross_entropy;
                sum_ce2 += *stats.cross_entropy * *stats.cross_entropy;
                ++n_ce;
            }
        }
    }
    const auto finalize = [](double s, double s2, std::uint64_t n, double& mean,
                             double& stderr_out) {
        mean = s / static_cast<double>(n);
        if (n < 2) {
            stderr_out = 0.0;
            return;
        }
        const double var =
            std::max(0.0, (s2 - s * mean) / static_cast<double>(n - 1));
        stderr_out = std::sqrt(var / static_cast<double>(n));
    };
    MomentParams params;
    params.n_samples = n_samples;
    finalize(sum_h, sum_h2, n_samples, params.mu, params.stderr_mu);
    finalize(sum_m, sum_m2, n_samples, params.mu2, params.stderr_mu2);
    if (paired) {
        double mean = 0.0, se = 0.0;
        finalize(sum_z, sum_z2, n_samples, mean, se);
        params.pr_q_zero = mean;
        params.stderr_pr_q_zero = se;
        if (n_ce > 0) {
            finalize(sum_ce, sum_ce2, n_ce, mean, se);
            params.mu_ce = mean;
            params.stderr_mu_ce = se;
        }
    }
    return params;
}

}  // namespace speclim
