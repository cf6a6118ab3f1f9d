// CV-QKD secret-key machinery for the diversity / multiplexing comparison:
// mutual information, environment covariance, Holevo bound, per-realization
// and fading-averaged rates.
//
// Default unit convention is shot-noise (vacuum variance 1, thermal variance
// W = 2 n_th + 1, entropy of a mode with symplectic eigenvalue nu is
// g((nu-1)/2)). The paper-faithful mode (W = n_th + 1/2, entropy g(nu - 1/2))
// is kept behind a switch for auditing the printed formulas; it rejects
// parameters that drive the environment correlation imaginary.

#pragma once

#include "cvfade/fading.hpp"
#include "cvfade/gaussian.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace cvfade {

enum class Detection { kHomodyne, kHeterodyne };
enum class UnitConvention { kShotNoise, kPaperFaithful };
enum class TeffRule { kArithmetic, kAmplitude };

struct KeyRateConfig {
    double modulation_variance = 10.0;      // V_in, shot-noise units, >= 1
    double thermal_occupation = 0.0;        // n_th >= 0
    double reconciliation_efficiency = 1.0; // beta in [0, 1]
    Detection detection = Detection::kHeterodyne;
    UnitConvention units = UnitConvention::kShotNoise;
    TeffRule t_eff_rule = TeffRule::kArithmetic;

    void validate() const {
        if (!(modulation_variance >= 1.0))
            throw std::invalid_argument("KeyRateConfig: modulation_variance must be >= 1");
        if (!(thermal_occupation >= 0.0))
            throw std::invalid_argument("KeyRateConfig: thermal_occupation must be >= 0");
        if (!(reconciliation_efficiency >= 0.0 && reconciliation_efficiency <= 1.0))
            throw std::invalid_argument("KeyRateConfig: reconciliation efficiency must lie in [0, 1]");
    }

    double detection_nu() const { return detection == Detection::kHeterodyne ? 2.0 : 1.0; }
    double thermal_variance() const {
        return units == UnitConvention::kShotNoise ? 2.0 * thermal_occupation + 1.0
                                                   : thermal_occupation + 0.5;
    }
};

struct EffectiveChannel {
    double transmittivity = 1.0;  // T_eff in (0, 1]
    double thermal_variance = 1.0;
};

// Combines the per-channel transmittivities of an N-diversity link into one
// effective value. Arithmetic: mean(T_i). Amplitude: (mean(sqrt(T_i)))^2.
inline double effective_transmittance(std::span<const double> transmittivities, TeffRule rule) {
    if (transmittivities.empty())
        throw std::invalid_argument("effective_transmittance: need at least one channel");
    for (double t : transmittivities)
        if (!(t > 0.0 && t <= 1.0))
            throw std::invalid_argument("effective_transmittance: T must lie in (0, 1]");
    double acc = 0.0;
    for (double t : transmittivities)
        acc += rule == TeffRule::kArithmetic ? t : std::sqrt(t);
    acc /= static_cast<double>(transmittivities.size());
    return rule == TeffRule::kArithmetic ? acc : acc * acc;
}

// I(A:B) = (nu/2) log2[1 + nu T (V_in - 1) / (1 + (1/nu)(1 - T)(2 n_th - 1))].
inline double mutual_information(const KeyRateConfig& cfg, double t_eff) {
    cfg.validate();
    if (!(t_eff > 0.0 && t_eff <= 1.0))
        throw std::invalid_argument("mutual_information: T_eff must lie in (0, 1]");
    const double nu = cfg.detection_nu();
    const double denom =
        1.0 + (1.0 / nu) * (1.0 - t_eff) * (2.0 * cfg.thermal_occupation - 1.0);
    if (!(denom > 0.0))
        throw std::invalid_argument(
            "mutual_information: non-positive SNR denominator (n_th < 1/2 at this T_eff)");
    const double snr = nu * t_eff * (cfg.modulation_variance - 1.0) / denom;
    return (nu / 2.0) * std::log2(1.0 + snr);
}

struct EnvCovariance {
    double a = 1.0;  // environment-mode variance
    double b = 1.0;  // purifying-mode variance (thermal)
    double c = 0.0;  // cross correlation (sigma_z block)
};

// V_E of the cloning-attack environment: a = (1 - T) V_in + T W, b = W,
// c = sqrt(T (W^2 - 1)).
inline EnvCovariance environment_covariance(const KeyRateConfig& cfg, double t_eff) {
    cfg.validate();
    if (!(t_eff >= 0.0 && t_eff <= 1.0))
        throw std::invalid_argument("environment_covariance: T_eff must lie in [0, 1]");
    const double w = cfg.thermal_variance();
    if (w * w - 1.0 < 0.0) {
        if (cfg.units == UnitConvention::kPaperFaithful)
            throw std::invalid_argument(
                "environment_covariance: paper-faithful units give W < 1 for n_th < 1/2, making "
                "the environment correlation imaginary; use shot-noise units");
        throw std::invalid_argument("environment_covariance: thermal variance below vacuum");
    }
    EnvCovariance env;
    env.a = (1.0 - t_eff) * cfg.modulation_variance + t_eff * w;
    env.b = w;
    env.c = std::sqrt(t_eff * (w * w - 1.0));
    return env;
}

namespace detail {

// Closed-form symplectic pair of [[a I, c sigma_z], [c sigma_z, b I]].
inline std::pair<double, double> env_symplectic_pair(const EnvCovariance& env) {
    const double z =
        std::sqrt((env.a + env.b) * (env.a + env.b) - 4.0 * env.c * env.c);
    return {0.5 * (z + (env.b - env.a)), 0.5 * (z - (env.b - env.a))};
}

inline double entropy_of_nu(const KeyRateConfig& cfg, double nu, const char* what) {
    const double vac = cfg.units == UnitConvention::kShotNoise ? 1.0 : kVacuumVariance;
    if (nu < vac - kPhysicalitySlack)
        throw std::invalid_argument(std::string("holevo_information: ") + what +
                                    " symplectic eigenvalue below the vacuum bound");
    const double arg = cfg.units == UnitConvention::kShotNoise ? (nu - 1.0) / 2.0
                                                               : nu - kVacuumVariance;
    return entropy_g(std::max(0.0, arg));
}

}  // namespace detail

// chi(E:B) = S(E) - S(E|B), with S(E|B) evaluated through V_{A|B} (entropic
// equality for the pure global state).
inline double holevo_information(const KeyRateConfig& cfg, double t_eff) {
    const EnvCovariance env = environment_covariance(cfg, t_eff);
    const auto [nu_plus, nu_minus] = detail::env_symplectic_pair(env);
    const double entropy_env = detail::entropy_of_nu(cfg, nu_plus, "environment") +
                               detail::entropy_of_nu(cfg, nu_minus, "environment");

    const double k = cfg.modulation_variance;
    const double w = cfg.thermal_variance();
    const double g2 = t_eff * (k * k - 1.0);
    const double h = t_eff * (k - 1.0) + (w - 1.0) * (1.0 - t_eff) + 1.0;
    if (!(h > 0.0)) throw std::invalid_argument("holevo_information: non-positive receiver variance");

    double nu_cond = 0.0;
    if (cfg.detection == Detection::kHeterodyne) {
        nu_cond = k - g2 / (h + 1.0);
    } else {
        const double reduced = k - g2 / h;
        if (!(reduced > 0.0))
            throw std::invalid_argument("holevo_information: conditional variance non-positive");
        nu_cond = std::sqrt(k * reduced);
    }
    const double entropy_cond = detail::entropy_of_nu(cfg, nu_cond, "conditional");
    return entropy_env - entropy_cond;
}

// K = beta I(A:B) - chi(E:B) at the effective transmittance of the draw.
// The raw (possibly negative) value is returned; callers clamp as needed.
inline double key_rate_realization(const KeyRateConfig& cfg,
                                   std::span<const double> transmittivities) {
    const double t_eff = effective_transmittance(transmittivities, cfg.t_eff_rule);
    return cfg.reconciliation_efficiency * mutual_information(cfg, t_eff) -
           holevo_information(cfg, t_eff);
}

struct KeyRateAverage {
    double raw = 0.0;
    double raw_error = 0.0;
    double clamped = 0.0;
    double clamped_error = 0.0;
};

// Fading-averaged key rate of an N-diversity link (i.i.d. channels). Both the
// raw integral and E[max(0, K)] are reported. N = 1 is the single-channel
// baseline.
inline KeyRateAverage average_key_rate_diversity(const KeyRateConfig& cfg,
                                                 const FadingModel& fading, int diversity_order,
                                                 const ExpectationPlan& plan, int workers = 1) {
    cfg.validate();
    if (diversity_order < 1)
        throw std::invalid_argument("average_key_rate_diversity: diversity order must be >= 1");
    const std::vector<FadingModel> models(static_cast<std::size_t>(diversity_order), fading);
    const auto raw = expect(
        models, [&](std::span<const double> ts) { return key_rate_realization(cfg, ts); }, plan,
        workers);
    const auto clamped = expect(
        models,
        [&](std::span<const double> ts) { return std::max(0.0, key_rate_realization(cfg, ts)); },
        plan, workers);
    return {raw.value, raw.std_error, clamped.value, clamped.std_error};
}

// N independently keyed channels: exactly N times the single-channel average
// under the same plan.
inline KeyRateAverage average_key_rate_multiplexing(const KeyRateConfig& cfg,
                                                    const FadingModel& fading, int channel_count,
                                                    const ExpectationPlan& plan, int workers = 1) {
    if (channel_count < 1)
        throw std::invalid_argument("average_key_rate_multiplexing: channel count must be >= 1");
    KeyRateAverage avg = average_key_rate_diversity(cfg, fading, 1, plan, workers);
    const double n = static_cast<double>(channel_count);
    return {n * avg.raw, n * avg.raw_error, n * avg.clamped, n * avg.clamped_error};
}

// Diversity averages for several N under common random numbers: one draw
// matrix of max(N) columns per sample, each order using its first N columns.
// Monte Carlo only; this is the matched-seed estimator for N-sweeps.
inline std::vector<KeyRateAverage> average_key_rate_diversity_sweep(
    const KeyRateConfig& cfg, const FadingModel& fading, std::span<const int> orders,
    const ExpectationPlan& plan, int workers = 1) {
    cfg.validate();
    plan.validate();
    if (orders.empty())
        throw std::invalid_argument("average_key_rate_diversity_sweep: need at least one order");
    int max_order = 0;
    for (int n : orders) {
        if (n < 1)
            throw std::invalid_argument("average_key_rate_diversity_sweep: orders must be >= 1");
        max_order = std::max(max_order, n);
    }
    if (plan.method != IntegrationMethod::kMonteCarlo)
        throw std::invalid_argument(
            "average_key_rate_diversity_sweep: coupled sweep requires the monte-carlo method");

    const long samples = plan.sample_count;
    const std::size_t k = orders.size();
    std::vector<double> raw(static_cast<std::size_t>(samples) * k);
    std::vector<double> clamped(raw.size());

    detail::parallel_for(samples, workers, [&](std::int64_t lo, std::int64_t hi) {
        std::vector<double> draws(static_cast<std::size_t>(max_order));
        for (std::int64_t i = lo; i < hi; ++i) {
            for (int d = 0; d < max_order; ++d)
                draws[d] = fading.sample(plan.seed,
                                         static_cast<std::uint64_t>(i) * max_order + d);
            for (std::size_t oi = 0; oi < k; ++oi) {
                const double value = key_rate_realization(
                    cfg, std::span<const double>(draws.data(), static_cast<std::size_t>(orders[oi])));
                raw[static_cast<std::size_t>(i) * k + oi] = value;
                clamped[static_cast<std::size_t>(i) * k + oi] = std::max(0.0, value);
            }
        }
    });

    std::vector<KeyRateAverage> result(k);
    for (std::size_t oi = 0; oi < k; ++oi) {
        double sum_r = 0.0, sum_c = 0.0;
        for (long i = 0; i < samples; ++i) {
            sum_r += raw[static_cast<std::size_t>(i) * k + oi];
            sum_c += clamped[static_cast<std::size_t>(i) * k + oi];
        }
        const double mean_r = sum_r / samples, mean_c = sum_c / samples;
        double sq_r = 0.0, sq_c = 0.0;
        for (long i = 0; i < samples; ++i) {
            const double dr = raw[static_cast<std::size_t>(i) * k + oi] - mean_r;
            const double dc = clamped[static_cast<std::size_t>(i) * k + oi] - mean_c;
            sq_r += dr * dr;
            sq_c += dc * dc;
        }
        const double norm = samples > 1 ? static_cast<double>(samples) * (samples - 1.0) : 1.0;
        result[oi] = {mean_r, std::sqrt(sq_r / norm), mean_c, std::sqrt(sq_c / norm)};
    }
    return result;
}

}  // namespace cvfade
