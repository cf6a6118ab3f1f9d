// Spatial-mode diversity pipelines over fading thermal-loss channels.
//
// Two redundant evaluation routes are kept deliberately: run_primitive builds
// each pipeline from the phase-space primitives, run_closed_form evaluates the
// scalar block formulas for the same circuits. Their agreement is the central
// oracle of this module.
//
// Port conventions: the transmitter split feeds every arm with the same sign
// (+amplitude/sqrt(N)); the combiner keeps the constructive port, which for
// the two-arm combiner B(eta) is the second port (weight sqrt(eta) on arm 2).

#pragma once

#include "cvfade/fading.hpp"
#include "cvfade/gaussian.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace cvfade {

enum class Placement {
    kPostprocessing,     // classical rescale of the measured quadratures
    kPostAmplification,  // phase-insensitive amplifier at the receiver
    kPreAmplification,   // phase-insensitive amplifier at the transmitter
    kNone,               // bare channel, no compensation
};

enum class GainPolicy { kAverageInverse, kFixed };

struct SchemeConfig {
    Placement placement = Placement::kPostprocessing;
    double combine_eta = 0.5;
    std::optional<double> crosstalk_eta;  // absent = no crosstalk
    GainPolicy gain_policy = GainPolicy::kAverageInverse;
    std::vector<double> fixed_gains;  // used when gain_policy == kFixed
    int diversity_order = 2;

    void validate() const {
        if (diversity_order < 1)
            throw std::invalid_argument("SchemeConfig: diversity_order must be >= 1");
        if (!(combine_eta >= 0.0 && combine_eta <= 1.0))
            throw std::invalid_argument("SchemeConfig: combine_eta must lie in [0, 1]");
        if (crosstalk_eta && !(*crosstalk_eta >= 0.0 && *crosstalk_eta <= 1.0))
            throw std::invalid_argument("SchemeConfig: crosstalk_eta must lie in [0, 1]");
        if (diversity_order > 2 && combine_eta != 0.5)
            throw std::invalid_argument(
                "SchemeConfig: combine_eta must be 0.5 for diversity_order > 2 "
                "(the combining tree is balanced)");
        if (gain_policy == GainPolicy::kFixed) {
            if (static_cast<int>(fixed_gains.size()) != diversity_order)
                throw std::invalid_argument("SchemeConfig: fixed gain list must have one entry per arm");
            for (double g : fixed_gains)
                if (!(g >= 1.0))
                    throw std::invalid_argument("SchemeConfig: fixed gains must be >= 1");
        }
    }
};

struct CoherentInput {
    double x = 1.0;
    double p = 1.0;
};

// One draw of the channel ensemble plus the resolved compensation.
// For active placements `gains` holds amplifier gains G_i; for postprocessing
// it holds the per-output rescale factors r_i. For the 0-diversity baseline
// inside a crosstalk medium, `transmittivities` carries a second entry: the
// fading draw of the idle neighbour core.
struct Realization {
    std::vector<double> transmittivities;
    double thermal_occupation = 0.0;
    std::vector<double> gains;
};

// Average-CSI compensation: active placements invert the mean power loss,
// postprocessing rescales by the mean amplitude loss.
inline std::vector<double> resolve_gains(const SchemeConfig& cfg,
                                         std::span<const double> mean_transmittivities) {
    cfg.validate();
    if (static_cast<int>(mean_transmittivities.size()) != cfg.diversity_order)
        throw std::invalid_argument("resolve_gains: need one mean transmittivity per arm");
    for (double m : mean_transmittivities)
        if (!(m > 0.0 && m <= 1.0))
            throw std::invalid_argument("resolve_gains: mean transmittivities must lie in (0, 1]");

    if (cfg.gain_policy == GainPolicy::kFixed) return cfg.fixed_gains;

    std::vector<double> gains(mean_transmittivities.size());
    for (std::size_t i = 0; i < gains.size(); ++i) {
        switch (cfg.placement) {
            case Placement::kPostprocessing:
                gains[i] = 1.0 / std::sqrt(mean_transmittivities[i]);
                break;
            case Placement::kPostAmplification:
            case Placement::kPreAmplification:
                gains[i] = 1.0 / mean_transmittivities[i];
                break;
            case Placement::kNone:
                gains[i] = 1.0;
                break;
        }
    }
    return gains;
}

namespace detail {

inline void check_realization(const SchemeConfig& cfg, const Realization& r) {
    const bool ct_baseline = cfg.diversity_order == 1 && cfg.crosstalk_eta.has_value();
    const std::size_t want = ct_baseline ? 2 : static_cast<std::size_t>(cfg.diversity_order);
    if (r.transmittivities.size() != want)
        throw std::invalid_argument("Realization: wrong number of transmittivities");
    for (double t : r.transmittivities)
        if (!(t > 0.0 && t <= 1.0))
            throw std::invalid_argument("Realization: transmittivities must lie in (0, 1]");
    if (!(r.thermal_occupation >= 0.0))
        throw std::invalid_argument("Realization: thermal occupation must be >= 0");
    if (r.gains.size() != static_cast<std::size_t>(cfg.diversity_order))
        throw std::invalid_argument("Realization: wrong number of gains");
    const double min_gain = cfg.placement == Placement::kNone ? 0.0 : 1.0;
    for (double g : r.gains)
        if (!(g >= min_gain) || !(g > 0.0))
            throw std::invalid_argument("Realization: invalid gain value");
}

// Variance of one arm after its loss channel and (where active) amplifier,
// in vacuum-1/2 units. These are the per-arm diagonal blocks of the paper's
// pipeline covariances.
inline double arm_variance(Placement placement, double t, double n_th, double gain) {
    const double loss = t * kVacuumVariance + (1.0 - t) * (n_th + kVacuumVariance);
    switch (placement) {
        case Placement::kPostprocessing:
        case Placement::kNone:
            return loss;
        case Placement::kPostAmplification:
            return gain * loss + (gain - 1.0) / 2.0;
        case Placement::kPreAmplification:
            return (2.0 * gain - 1.0) * t / 2.0 + (1.0 - t) * (n_th + kVacuumVariance);
    }
    throw std::logic_error("arm_variance: unreachable");
}

// Mean amplitude factor of one arm (before any postprocessing rescale).
inline double arm_mean_factor(Placement placement, double t, double gain) {
    switch (placement) {
        case Placement::kPostprocessing:
        case Placement::kNone:
            return std::sqrt(t);
        case Placement::kPostAmplification:
        case Placement::kPreAmplification:
            return std::sqrt(t * gain);
    }
    throw std::logic_error("arm_mean_factor: unreachable");
}

struct KeptMode {
    double variance = 0.0;
    double mean_factor = 0.0;  // multiplies (x, p)
};

// Scalar evaluation of the kept output mode for diversity_order <= 2 (and the
// 0-diversity-in-crosstalk-medium baseline). Exactly the printed block
// algebra; shared by run_closed_form and the fidelity averages.
inline KeptMode closed_form_kept_mode(const SchemeConfig& cfg, const Realization& r) {
    check_realization(cfg, r);
    const double n_th = r.thermal_occupation;

    if (cfg.diversity_order == 1) {
        const double t = r.transmittivities[0];
        const double gain = cfg.placement == Placement::kPostprocessing ? 1.0 : r.gains[0];
        double variance = arm_variance(cfg.placement, t, n_th, gain);
        double mean = arm_mean_factor(cfg.placement, t, gain);
        if (cfg.crosstalk_eta) {
            // Single active core next to an idle one: B(eta_ct) couples them,
            // the signal keeps its own (first) port.
            const double ect = *cfg.crosstalk_eta;
            const double idle =
                arm_variance(Placement::kNone, r.transmittivities[1], n_th, 1.0);
            variance = ect * variance + (1.0 - ect) * idle;
            mean *= std::sqrt(ect);
        }
        if (cfg.placement == Placement::kPostprocessing) mean *= r.gains[0];
        return {variance, mean};
    }

    if (cfg.diversity_order != 2)
        throw std::invalid_argument("run_closed_form: closed forms cover diversity_order <= 2");

    const double g1 = cfg.placement == Placement::kPostprocessing ? 1.0 : r.gains[0];
    const double g2 = cfg.placement == Placement::kPostprocessing ? 1.0 : r.gains[1];
    double v1 = arm_variance(cfg.placement, r.transmittivities[0], n_th, g1);
    double v2 = arm_variance(cfg.placement, r.transmittivities[1], n_th, g2);
    double v12 = 0.0;
    // 50:50 transmitter split puts amplitude (x,p)/sqrt(2) on each arm.
    double m1 = arm_mean_factor(cfg.placement, r.transmittivities[0], g1) / std::sqrt(2.0);
    double m2 = arm_mean_factor(cfg.placement, r.transmittivities[1], g2) / std::sqrt(2.0);

    if (cfg.crosstalk_eta) {
        const double c = std::sqrt(*cfg.crosstalk_eta);
        const double s = std::sqrt(1.0 - *cfg.crosstalk_eta);
        const double w1 = c * c * v1 - 2.0 * c * s * v12 + s * s * v2;
        const double w12 = c * s * v1 + (c * c - s * s) * v12 - c * s * v2;
        const double w2 = s * s * v1 + 2.0 * c * s * v12 + c * c * v2;
        v1 = w1;
        v12 = w12;
        v2 = w2;
        const double n1 = c * m1 - s * m2;
        const double n2 = s * m1 + c * m2;
        m1 = n1;
        m2 = n2;
    }

    const double c = std::sqrt(cfg.combine_eta);
    const double s = std::sqrt(1.0 - cfg.combine_eta);
    KeptMode kept;
    kept.variance = s * s * v1 + 2.0 * c * s * v12 + c * c * v2;
    kept.mean_factor = s * m1 + c * m2;
    if (cfg.placement == Placement::kPostprocessing) kept.mean_factor *= r.gains[1];
    return kept;
}

inline void check_kept_physical(const KeptMode& kept) {
    if (kept.variance < kVacuumVariance - kPhysicalitySlack)
        throw std::runtime_error("diversity pipeline produced an unphysical output variance");
}

}  // namespace detail

// Closed-form pipeline output (the kept mode only). diversity_order <= 2.
inline GaussianState run_closed_form(const SchemeConfig& cfg, const Realization& r,
                                     const CoherentInput& in) {
    const auto kept = detail::closed_form_kept_mode(cfg, r);
    detail::check_kept_physical(kept);
    Eigen::VectorXd mean(2);
    mean << kept.mean_factor * in.x, kept.mean_factor * in.p;
    return GaussianState(mean, kept.variance * Eigen::MatrixXd::Identity(2, 2));
}

namespace detail {

// Balanced combining tree over arms [lo, hi): each node's transmittivity is
// the right subtree's share, so equal inputs recombine constructively with
// weight 1/sqrt(N). Returns the mode index of the kept port.
inline int combine_tree(GaussianState& state, int lo, int hi, const SchemeConfig& cfg,
                        bool root) {
    if (hi - lo == 1) return lo;
    const int mid = lo + (hi - lo + 1) / 2;
    const int left = combine_tree(state, lo, mid, cfg, false);
    const int right = combine_tree(state, mid, hi, cfg, false);
    const double eta = (root && cfg.diversity_order == 2)
                           ? cfg.combine_eta
                           : static_cast<double>(hi - mid) / static_cast<double>(hi - lo);
    state = apply_beamsplitter(state, {eta, left, right});
    assert_physical(state, "run_primitive/combine");
    return right;
}

}  // namespace detail

// Primitive-composition pipeline: transmitter split, per-arm processing,
// optional pairwise crosstalk, combining tree, discard, rescale. Covers any
// diversity order; every intermediate state is physicality-checked.
inline GaussianState run_primitive(const SchemeConfig& cfg, const Realization& r,
                                   const CoherentInput& in) {
    cfg.validate();
    detail::check_realization(cfg, r);
    const int order = cfg.diversity_order;

    // 0-diversity: no split, no combine.
    if (order == 1) {
        GaussianState state = GaussianState::coherent(in.x, in.p);
        if (cfg.placement == Placement::kPreAmplification)
            state = apply_amplifier(state, 0, {r.gains[0]});
        state = apply_loss(state, 0, {r.transmittivities[0], r.thermal_occupation});
        if (cfg.placement == Placement::kPostAmplification)
            state = apply_amplifier(state, 0, {r.gains[0]});
        assert_physical(state, "run_primitive/baseline");
        if (cfg.crosstalk_eta) {
            state = tensor(state, GaussianState::vacuum(1));
            state = apply_loss(state, 1, {r.transmittivities[1], r.thermal_occupation});
            state = apply_beamsplitter(state, {*cfg.crosstalk_eta, 0, 1});
            assert_physical(state, "run_primitive/baseline-crosstalk");
            state = discard_mode(state, 1);
        }
        if (cfg.placement == Placement::kPostprocessing)
            state = rescale_mean(state, std::array{r.gains[0]});
        return state;
    }

    GaussianState state = GaussianState::coherent(in.x, in.p);
    for (int k = 1; k < order; ++k) state = tensor(state, GaussianState::vacuum(1));

    // Split cascade: arm k keeps amplitude 1/sqrt(order), the remainder moves on.
    for (int k = 0; k + 1 < order; ++k) {
        state = apply_beamsplitter(state, {1.0 / static_cast<double>(order - k), k, k + 1});
        assert_physical(state, "run_primitive/split");
    }

    for (int k = 0; k < order; ++k) {
        if (cfg.placement == Placement::kPreAmplification)
            state = apply_amplifier(state, k, {r.gains[k]});
        state = apply_loss(state, k, {r.transmittivities[k], r.thermal_occupation});
        if (cfg.placement == Placement::kPostAmplification)
            state = apply_amplifier(state, k, {r.gains[k]});
        assert_physical(state, "run_primitive/arm");
    }

    if (cfg.crosstalk_eta) {
        for (int k = 0; k + 1 < order; k += 2) {
            state = apply_beamsplitter(state, {*cfg.crosstalk_eta, k, k + 1});
            assert_physical(state, "run_primitive/crosstalk");
        }
    }

    const int kept = detail::combine_tree(state, 0, order, cfg, true);
    for (int m = order - 1; m >= 0; --m)
        if (m != kept) state = discard_mode(state, m);

    if (cfg.placement == Placement::kPostprocessing)
        state = rescale_mean(state, std::array{r.gains[static_cast<std::size_t>(order) - 1]});
    assert_physical(state, "run_primitive/output");
    return state;
}

namespace detail {

inline double fidelity_to_input(const KeptMode& kept, const CoherentInput& in) {
    const double s = kept.variance + kVacuumVariance;
    const double dx = (kept.mean_factor - 1.0) * in.x;
    const double dp = (kept.mean_factor - 1.0) * in.p;
    return std::exp(-0.5 * (dx * dx + dp * dp) / s) / s;
}

}  // namespace detail

// Average fidelity between the kept output mode and the transmitted coherent
// state, over i.i.d. fading draws of every involved channel.
inline Expectation average_fidelity(const SchemeConfig& cfg, const FadingModel& fading,
                                    double n_th, const CoherentInput& in,
                                    const ExpectationPlan& plan, int workers = 1) {
    cfg.validate();
    if (!(n_th >= 0.0)) throw std::invalid_argument("average_fidelity: n_th must be >= 0");

    const int order = cfg.diversity_order;
    const std::vector<double> means(order, fading.truncated_mean());
    const std::vector<double> gains = resolve_gains(cfg, means);
    const bool ct_baseline = order == 1 && cfg.crosstalk_eta.has_value();
    const std::size_t draw_count = ct_baseline ? 2 : static_cast<std::size_t>(order);
    const std::vector<FadingModel> models(draw_count, fading);

    const auto g = [&](std::span<const double> ts) {
        Realization r;
        r.transmittivities.assign(ts.begin(), ts.end());
        r.thermal_occupation = n_th;
        r.gains = gains;
        if (order <= 2) {
            const auto kept = detail::closed_form_kept_mode(cfg, r);
            detail::check_kept_physical(kept);
            return detail::fidelity_to_input(kept, in);
        }
        const GaussianState out = run_primitive(cfg, r, in);
        return fidelity(out, GaussianState::coherent(in.x, in.p));
    };
    return expect(models, g, plan, workers);
}

// log10 of the 2-diversity / 0-diversity average-fidelity ratio at one
// parameter point. The baseline shares the placement, the gain rule, and --
// when crosstalk is present -- the crosstalk medium (idle neighbour core).
inline double log10_fidelity_ratio(Placement placement, double mean_transmittivity, double n_th,
                                   double sigma, std::optional<double> crosstalk_eta,
                                   const CoherentInput& in, const ExpectationPlan& plan,
                                   double truncation_eps = 1e-6, int workers = 1) {
    const FadingModel fading = FadingModel::from_mean(mean_transmittivity, sigma, truncation_eps);
    SchemeConfig div2;
    div2.placement = placement;
    div2.crosstalk_eta = crosstalk_eta;
    div2.diversity_order = 2;
    SchemeConfig div0 = div2;
    div0.diversity_order = 1;
    const double f2 = average_fidelity(div2, fading, n_th, in, plan, workers).value;
    const double f0 = average_fidelity(div0, fading, n_th, in, plan, workers).value;
    return std::log10(f2 / f0);
}

// Fidelity-ratio surface over a mean-transmittivity x thermal-occupation grid
// (row-major: ratios[i * n_th_axis.size() + j]).
struct FidelityRatioGrid {
    std::vector<double> mean_transmittivity_axis;
    std::vector<double> n_th_axis;
    std::vector<double> ratios;
};

inline FidelityRatioGrid fidelity_ratio_grid(Placement placement,
                                             std::vector<double> mean_transmittivity_axis,
                                             std::vector<double> n_th_axis, double sigma,
                                             std::optional<double> crosstalk_eta,
                                             const CoherentInput& in, const ExpectationPlan& plan,
                                             double truncation_eps = 1e-6, int workers = 1) {
    if (mean_transmittivity_axis.empty() || n_th_axis.empty())
        throw std::invalid_argument("fidelity_ratio_grid: axes must be non-empty");
    FidelityRatioGrid grid;
    grid.mean_transmittivity_axis = std::move(mean_transmittivity_axis);
    grid.n_th_axis = std::move(n_th_axis);
    grid.ratios.resize(grid.mean_transmittivity_axis.size() * grid.n_th_axis.size());
    const std::int64_t cells = static_cast<std::int64_t>(grid.ratios.size());
    const std::size_t nj = grid.n_th_axis.size();
    detail::parallel_for(cells, plan.method == IntegrationMethod::kQuadrature ? workers : 1,
                         [&](std::int64_t lo, std::int64_t hi) {
                             for (std::int64_t c = lo; c < hi; ++c) {
                                 const std::size_t i = static_cast<std::size_t>(c) / nj;
                                 const std::size_t j = static_cast<std::size_t>(c) % nj;
                                 grid.ratios[c] = log10_fidelity_ratio(
                                     placement, grid.mean_transmittivity_axis[i],
                                     grid.n_th_axis[j], sigma, crosstalk_eta, in, plan,
                                     truncation_eps,
                                     plan.method == IntegrationMethod::kQuadrature ? 1 : workers);
                             }
                         });
    return grid;
}

}  // namespace cvfade
