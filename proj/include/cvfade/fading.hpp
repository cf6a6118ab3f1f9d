// Stochastic transmittivity model: log-normal fading truncated to (eps, 1],
// plus the deterministic quadrature / seeded Monte Carlo expectation engines.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace cvfade {

namespace detail {

inline constexpr double kLnSqrt2Pi = 0.9189385332046727;  // ln sqrt(2 pi)

inline double norm_tail_series(double z) {
    const double z2 = z * z;
    return 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) +
           105.0 / (z2 * z2 * z2 * z2);
}

// ln Phi(z) for the standard normal CDF, stable into the deep left tail.
inline double log_norm_cdf(double z) {
    if (z > -36.0) return std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
    return -0.5 * z * z - std::log(-z) - kLnSqrt2Pi + std::log(norm_tail_series(z));
}

// ln Phi(z - shift) - ln Phi(z) for shift >= 0, free of the catastrophic
// cancellation the plain difference suffers when -z^2/2 dominates both terms.
inline double log_norm_cdf_shift(double z, double shift) {
    if (shift <= 0.0) return 0.0;
    if (z > -36.0) return log_norm_cdf(z - shift) - log_norm_cdf(z);
    return z * shift - 0.5 * shift * shift - std::log1p(shift / (-z)) +
           std::log(norm_tail_series(z - shift)) - std::log(norm_tail_series(z));
}

// ln(Phi(b) - Phi(a)) for a < b.
inline double log_norm_cdf_diff(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("log_norm_cdf_diff: need a < b");
    if (a >= 0.0) return log_norm_cdf_diff(-b, -a);  // mirror to the better-conditioned tail
    return log_norm_cdf(b) + std::log1p(-std::exp(log_norm_cdf_shift(b, b - a)));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based stream: one independent, fully specified generator per
// (seed, index) pair, so draws do not depend on evaluation order.
class NormalStream {
  public:
    NormalStream(std::uint64_t seed, std::uint64_t index)
        : state_(splitmix64(seed ^ splitmix64(index ^ 0x5bf0364f6c1f3a51ULL))) {}

    double next_normal() {
        // Box-Muller on (0,1] uniforms from a splitmix64 stream.
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238 * u2);
    }

  private:
    double next_uniform() {
        state_ = splitmix64(state_);
        return ((state_ >> 11) + 1.0) * 0x1p-53;  // in (0, 1]
    }
    std::uint64_t state_;
};

// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(3.141592653589793238 * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

inline void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t, std::int64_t)>& body) {
    if (workers <= 1 || count < 2) {
        body(0, count);
        return;
    }
    const int used = static_cast<int>(std::min<std::int64_t>(workers, count));
    std::vector<std::thread> threads;
    threads.reserve(used);
    for (int w = 0; w < used; ++w) {
        const std::int64_t lo = count * w / used;
        const std::int64_t hi = count * (w + 1) / used;
        threads.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& t : threads) t.join();
}

}  // namespace detail

// Truncated log-normal law for a channel transmittivity: ln T ~ N(mu, sigma^2)
// conditioned on T in (eps, 1].
class FadingModel {
  public:
    FadingModel(double mu, double sigma, double eps = 1e-6)
        : mu_(mu), sigma_(sigma), eps_(eps) {
        if (!(sigma > 0.0)) throw std::invalid_argument("FadingModel: sigma_T must be > 0");
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("FadingModel: truncation floor must lie in (0, 1)");
        z_lo_ = (std::log(eps_) - mu_) / sigma_;
        z_hi_ = (0.0 - mu_) / sigma_;
        ln_mass_ = detail::log_norm_cdf_diff(z_lo_, z_hi_);
        if (!std::isfinite(ln_mass_))
            throw std::invalid_argument("FadingModel: truncated support carries no probability mass");
    }

    double mu() const { return mu_; }
    double sigma() const { return sigma_; }
    double truncation_floor() const { return eps_; }
    double ln_truncation_mass() const { return ln_mass_; }

    // Renormalized density on (eps, 1].
    double pdf(double transmittivity) const {
        if (!(transmittivity > 0.0)) throw std::invalid_argument("pdf: T must be > 0");
        if (transmittivity <= eps_ || transmittivity > 1.0) return 0.0;
        const double z = (std::log(transmittivity) - mu_) / sigma_;
        const double ln_pdf = -0.5 * z * z - std::log(transmittivity * sigma_) -
                              detail::kLnSqrt2Pi - ln_mass_;
        return std::exp(ln_pdf);
    }

    // Mean of the truncated distribution. The ratio of the two shifted CDF
    // differences is assembled from stable shift terms so that deep-tail
    // parameterizations (tiny sigma, off-center mu) stay accurate. The two
    // branches expand around whichever support endpoint carries the mass.
    double truncated_mean() const {
        const double width = z_hi_ - z_lo_;
        double ln_ratio;
        if (z_lo_ < 8.0) {
            ln_ratio =
                detail::log_norm_cdf_shift(z_hi_, sigma_) +
                std::log1p(-std::exp(detail::log_norm_cdf_shift(z_hi_ - sigma_, width))) -
                std::log1p(-std::exp(detail::log_norm_cdf_shift(z_hi_, width)));
        } else {
            // Support in the right normal tail: expand around z_lo using the
            // upper-tail CDF, Phi(b) - Phi(a) = Phi(-a) - Phi(-b).
            ln_ratio =
                -detail::log_norm_cdf_shift(sigma_ - z_lo_, sigma_) +
                std::log1p(-std::exp(detail::log_norm_cdf_shift(sigma_ - z_lo_, width))) -
                std::log1p(-std::exp(detail::log_norm_cdf_shift(-z_lo_, width)));
        }
        return std::exp(mu_ + sigma_ * sigma_ / 2.0 + ln_ratio);
    }

    // Solve for mu so the truncated mean hits the target (bisection over
    // [ln eps, 10], tolerance 1e-6 on the mean).
    static FadingModel from_mean(double target_mean, double sigma, double eps = 1e-6) {
        if (!(target_mean > 0.0 && target_mean < 1.0))
            throw std::invalid_argument("from_mean: target mean transmittivity must lie in (0, 1)");
        double lo = std::log(eps), hi = 10.0;
        const auto mean_at = [&](double mu) { return FadingModel(mu, sigma, eps).truncated_mean(); };
        if (mean_at(lo) > target_mean || mean_at(hi) < target_mean)
            throw std::invalid_argument(
                "from_mean: target mean " + std::to_string(target_mean) +
                " is not attainable at sigma_T = " + std::to_string(sigma) +
                " under truncation");
        for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
            const double mid = 0.5 * (lo + hi);
            (mean_at(mid) < target_mean ? lo : hi) = mid;
        }
        FadingModel model(0.5 * (lo + hi), sigma, eps);
        if (std::abs(model.truncated_mean() - target_mean) > 1e-6)
            throw std::invalid_argument("from_mean: bisection failed to reach the target mean");
        return model;
    }

    // One draw of exp(mu + sigma z), z standard normal, rejected until it
    // lands in (eps, 1]. Bit-reproducible for a given (seed, index).
    double sample(std::uint64_t seed, std::uint64_t index) const {
        if (ln_mass_ < std::log(1e-6))
            throw std::invalid_argument(
                "sample: rejection acceptance probability below 1e-6 (degenerate truncation); "
                "use quadrature");
        detail::NormalStream stream(seed, index);
        for (long attempt = 0; attempt < 20'000'000L; ++attempt) {
            const double t = std::exp(mu_ + sigma_ * stream.next_normal());
            if (t > eps_ && t <= 1.0) return t;
        }
        throw std::runtime_error("sample: rejection sampling failed to accept");
    }

    double z_lo() const { return z_lo_; }
    double z_hi() const { return z_hi_; }

  private:
    double mu_;
    double sigma_;
    double eps_;
    double z_lo_;
    double z_hi_;
    double ln_mass_;
};

enum class IntegrationMethod { kQuadrature, kMonteCarlo };

struct ExpectationPlan {
    IntegrationMethod method = IntegrationMethod::kQuadrature;
    int node_count = 64;          // per dimension (quadrature)
    long sample_count = 100'000;  // Monte Carlo
    std::uint64_t seed = 0;

    void validate() const {
        if (node_count < 2) throw std::invalid_argument("ExpectationPlan: node_count must be >= 2");
        if (sample_count < 1)
            throw std::invalid_argument("ExpectationPlan: sample_count must be >= 1");
    }
};

struct Expectation {
    double value = 0.0;
    double std_error = 0.0;
};

namespace detail {

struct DimRule {
    std::vector<double> transmittivity;
    std::vector<double> weight;
};

// Integration window in z-space. The standard +-8.5 window covers the mass
// whenever it overlaps the support; when the support sits entirely in one
// normal tail, use a boundary layer against the dominating endpoint.
inline std::pair<double, double> z_window(const FadingModel& m) {
    constexpr double kWin = 8.5;
    double a = std::max(m.z_lo(), -kWin);
    double b = std::min(m.z_hi(), kWin);
    if (a < b) return {a, b};
    if (m.z_hi() < -kWin) {
        const double width = 45.0 / (-m.z_hi());
        return {std::max(m.z_lo(), m.z_hi() - width), m.z_hi()};
    }
    const double width = 45.0 / m.z_lo();
    return {m.z_lo(), std::min(m.z_hi(), m.z_lo() + width)};
}

inline DimRule dim_rule(const FadingModel& m, int nodes) {
    const auto [a, b] = z_window(m);
    if (!(a < b)) throw std::invalid_argument("expect: degenerate integration window");
    std::vector<double> x, w;
    gauss_legendre(nodes, x, w);
    DimRule rule;
    rule.transmittivity.resize(nodes);
    rule.weight.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double z = 0.5 * (b - a) * x[i] + 0.5 * (a + b);
        rule.transmittivity[i] = std::exp(m.mu() + m.sigma() * z);
        rule.weight[i] = w[i] * 0.5 * (b - a) *
                         std::exp(-0.5 * z * z - kLnSqrt2Pi - m.ln_truncation_mass());
    }
    return rule;
}

template <class F>
double quadrature_pass(const std::vector<FadingModel>& models, F&& g, int nodes) {
    const std::size_t dims = models.size();
    std::vector<DimRule> rules;
    rules.reserve(dims);
    for (const auto& m : models) rules.push_back(dim_rule(m, nodes));

    std::vector<double> point(dims);
    double sum = 0.0;
    std::vector<int> idx(dims, 0);
    while (true) {
        double weight = 1.0;
        for (std::size_t d = 0; d < dims; ++d) {
            point[d] = rules[d].transmittivity[idx[d]];
            weight *= rules[d].weight[idx[d]];
        }
        sum += weight * g(std::span<const double>(point));
        std::size_t d = 0;
        for (; d < dims; ++d) {
            if (++idx[d] < nodes) break;
            idx[d] = 0;
        }
        if (d == dims) break;
    }
    return sum;
}

}  // namespace detail

// Expectation of g(T_1, ..., T_N) over independent fading draws. Quadrature
// uses a tensor Gauss-Legendre rule in z-space against the truncated density
// (error estimate: difference to the half-order rule). Monte Carlo uses the
// per-index seeded streams, so the result is independent of worker count.
template <class F>
Expectation expect(const std::vector<FadingModel>& models, F&& g, const ExpectationPlan& plan,
                   int workers = 1) {
    if (models.empty()) throw std::invalid_argument("expect: need at least one fading model");
    plan.validate();

    if (plan.method == IntegrationMethod::kQuadrature) {
        if (models.size() > 3)
            throw std::invalid_argument(
                "expect: quadrature supports at most 3 joint dimensions; use monte-carlo");
        const double full = detail::quadrature_pass(models, g, plan.node_count);
        const double half = detail::quadrature_pass(models, g, std::max(2, plan.node_count / 2));
        return {full, std::abs(full - half)};
    }

    const std::size_t dims = models.size();
    const long n = plan.sample_count;
    std::vector<double> values(static_cast<std::size_t>(n));
    detail::parallel_for(n, workers, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> point(dims);
        for (std::int64_t i = lo; i < hi; ++i) {
            for (std::size_t d = 0; d < dims; ++d)
                point[d] = models[d].sample(plan.seed,
                                            static_cast<std::uint64_t>(i) * dims + d);
            values[static_cast<std::size_t>(i)] = g(std::span<const double>(point));
        }
    });

    double sum = 0.0, comp = 0.0;  // Kahan, summed in index order
    for (double v : values) {
        const double y = v - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    const double stderr_ = n > 1 ? std::sqrt(sq / (static_cast<double>(n) * (n - 1.0))) : 0.0;
    return {mean, stderr_};
}

}  // namespace cvfade
