// Batch experiment driver: figure presets and custom sweeps over the
// diversity and key-rate engines, emitted as plot-ready CSV with a '#'
// metadata preamble recording every resolved parameter.

#pragma once

#include "cvfade/diversity.hpp"
#include "cvfade/fading.hpp"
#include "cvfade/key_rates.hpp"
#include "cvfade/version.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cvfade {

enum class ExperimentKind {
    kFidelitySweep,
    kFidelityRatioGrid,
    kCrosstalkGrid,
    kSkrVsLoss,
    kSkrVsN,
};

inline const char* to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::kFidelitySweep: return "fidelity-sweep";
        case ExperimentKind::kFidelityRatioGrid: return "fidelity-ratio-grid";
        case ExperimentKind::kCrosstalkGrid: return "crosstalk-grid";
        case ExperimentKind::kSkrVsLoss: return "skr-vs-loss";
        case ExperimentKind::kSkrVsN: return "skr-vs-N";
    }
    return "?";
}

inline const char* to_string(Placement p) {
    switch (p) {
        case Placement::kPostprocessing: return "postprocessing";
        case Placement::kPostAmplification: return "post-amplification";
        case Placement::kPreAmplification: return "pre-amplification";
        case Placement::kNone: return "none";
    }
    return "?";
}

inline double transmittivity_from_db(double loss_db) { return std::pow(10.0, -loss_db / 10.0); }

inline std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) throw std::invalid_argument("linspace: count must be >= 1");
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = count == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(count - 1);
    return out;
}

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::kFidelitySweep;
    std::string preset;  // empty when hand-assembled

    // scheme
    Placement placement = Placement::kPostprocessing;
    double combine_eta = 0.5;
    std::optional<double> crosstalk_eta;  // fixed value (sweep / ratio grid)

    // axes
    std::vector<double> mean_transmittivity_axis;
    std::vector<double> n_th_axis;     // fidelity-ratio-grid
    std::vector<double> eta_ct_axis;   // crosstalk-grid
    std::vector<double> loss_db_axis;  // skr-vs-loss
    std::vector<int> diversity_orders; // skr-vs-N
    double loss_db = 4.0;              // skr-vs-N operating point

    // channel / fading
    double n_th = 0.0;
    double sigma_T = 0.5;
    double truncation_eps = 1e-6;
    CoherentInput input{1.0, 1.0};

    // key-rate
    double modulation_variance = 10.0;
    double reconciliation_efficiency = 1.0;
    Detection detection = Detection::kHeterodyne;
    UnitConvention units = UnitConvention::kShotNoise;
    TeffRule t_eff_rule = TeffRule::kArithmetic;

    ExpectationPlan plan;
    int workers = 1;
    std::string out_path;  // empty = stdout

    void validate() const {
        const auto check_axis = [](const std::vector<double>& axis, const char* key, double lo,
                                   double hi, bool open_lo) {
            if (axis.empty()) throw std::invalid_argument(std::string(key) + ": axis must be non-empty");
            for (double v : axis) {
                const bool ok = open_lo ? (v > lo && v <= hi) : (v >= lo && v <= hi);
                if (!ok)
                    throw std::invalid_argument(std::string(key) + ": value " + std::to_string(v) +
                                                " outside its domain");
            }
        };
        switch (kind) {
            case ExperimentKind::kFidelitySweep:
                check_axis(mean_transmittivity_axis, "avg-t", 0.0, 1.0, true);
                break;
            case ExperimentKind::kFidelityRatioGrid:
                check_axis(mean_transmittivity_axis, "avg-t", 0.0, 1.0, true);
                check_axis(n_th_axis, "nth", 0.0, 1e9, false);
                break;
            case ExperimentKind::kCrosstalkGrid:
                check_axis(mean_transmittivity_axis, "avg-t", 0.0, 1.0, true);
                check_axis(eta_ct_axis, "eta-ct", 0.0, 1.0, false);
                break;
            case ExperimentKind::kSkrVsLoss:
                check_axis(loss_db_axis, "loss-db", 0.0, 200.0, false);
                break;
            case ExperimentKind::kSkrVsN:
                if (diversity_orders.empty())
                    throw std::invalid_argument("orders: axis must be non-empty");
                for (int n : diversity_orders)
                    if (n < 1) throw std::invalid_argument("orders: diversity order must be >= 1");
                if (!(loss_db >= 0.0)) throw std::invalid_argument("loss-db: must be >= 0");
                break;
        }
        if (!(n_th >= 0.0)) throw std::invalid_argument("nth: must be >= 0");
        if (!(sigma_T > 0.0)) throw std::invalid_argument("sigma-t: must be > 0");
        if (!(combine_eta >= 0.0 && combine_eta <= 1.0))
            throw std::invalid_argument("eta: must lie in [0, 1]");
        if (crosstalk_eta && !(*crosstalk_eta >= 0.0 && *crosstalk_eta <= 1.0))
            throw std::invalid_argument("eta-ct: must lie in [0, 1]");
        if (!(truncation_eps > 0.0 && truncation_eps < 1.0))
            throw std::invalid_argument("eps: must lie in (0, 1)");
        if (workers < 1) throw std::invalid_argument("workers: must be >= 1");
        if (kind == ExperimentKind::kSkrVsLoss || kind == ExperimentKind::kSkrVsN) {
            KeyRateConfig kr = key_rate_config();
            kr.validate();
        }
        plan.validate();
    }

    KeyRateConfig key_rate_config() const {
        KeyRateConfig kr;
        kr.modulation_variance = modulation_variance;
        kr.thermal_occupation = n_th;
        kr.reconciliation_efficiency = reconciliation_efficiency;
        kr.detection = detection;
        kr.units = units;
        kr.t_eff_rule = t_eff_rule;
        return kr;
    }
};

// Figure presets. Values the source figures leave unstated (sigma_T, input
// amplitude, n_th for the key-rate plots) are fixed here and recorded in the
// output metadata.
inline ExperimentSpec preset_spec(const std::string& name) {
    ExperimentSpec spec;
    spec.preset = name;
    const auto fidelity_sweep = [&](Placement pl, double n_th) {
        spec.kind = ExperimentKind::kFidelitySweep;
        spec.placement = pl;
        spec.n_th = n_th;
        spec.mean_transmittivity_axis = linspace(0.05, 0.95, 19);
    };
    const auto ratio_grid = [&](Placement pl, double n_th_hi) {
        spec.kind = ExperimentKind::kFidelityRatioGrid;
        spec.placement = pl;
        spec.mean_transmittivity_axis = linspace(0.05, 0.95, 20);
        spec.n_th_axis = linspace(0.0, n_th_hi, 20);
    };
    const auto crosstalk_grid = [&](Placement pl) {
        spec.kind = ExperimentKind::kCrosstalkGrid;
        spec.placement = pl;
        spec.n_th = 0.2;
        spec.input = {2.0, 2.0};
        spec.mean_transmittivity_axis = linspace(0.05, 0.95, 15);
        spec.eta_ct_axis = linspace(0.5, 0.9, 15);
    };
    const auto skr_loss = [&](Detection det, double v_in) {
        spec.kind = ExperimentKind::kSkrVsLoss;
        spec.detection = det;
        spec.modulation_variance = v_in;
        spec.n_th = 0.2;
        // 0 dB would pin the truncated mean at exactly 1, which no fading
        // law with sigma_T > 0 can reach.
        spec.loss_db_axis = linspace(1.0, 20.0, 20);
    };
    const auto skr_n = [&](Detection det, double v_in, double db) {
        spec.kind = ExperimentKind::kSkrVsN;
        spec.detection = det;
        spec.modulation_variance = v_in;
        spec.n_th = 0.2;
        spec.sigma_T = 1.0;
        spec.loss_db = db;
        spec.diversity_orders = {1, 2, 3, 4, 5, 6};
        spec.plan.method = IntegrationMethod::kMonteCarlo;
        spec.plan.sample_count = 200'000;
        spec.plan.seed = 424242;
    };

    if (name == "fig2") fidelity_sweep(Placement::kPostprocessing, 0.9);
    else if (name == "fig3") ratio_grid(Placement::kPostprocessing, 1.0);
    else if (name == "fig4") fidelity_sweep(Placement::kPostAmplification, 0.7);
    else if (name == "fig5") ratio_grid(Placement::kPostAmplification, 1.0);
    else if (name == "fig6") fidelity_sweep(Placement::kPreAmplification, 0.7);
    else if (name == "fig7") ratio_grid(Placement::kPreAmplification, 1.0);
    else if (name == "ct-postprocessing") crosstalk_grid(Placement::kPostprocessing);
    else if (name == "ct-postamplification") crosstalk_grid(Placement::kPostAmplification);
    else if (name == "ct-preamplification") crosstalk_grid(Placement::kPreAmplification);
    else if (name == "fig8a") skr_loss(Detection::kHeterodyne, 10.0);
    else if (name == "fig8b") skr_loss(Detection::kHomodyne, 5.0);
    else if (name == "fig9a") skr_n(Detection::kHeterodyne, 10.0, 4.0);
    else if (name == "fig9b") skr_n(Detection::kHomodyne, 5.0, 2.0);
    else throw std::invalid_argument("unknown preset: " + name);
    return spec;
}

inline std::vector<std::string> preset_names() {
    return {"fig2", "fig3", "fig4", "fig5", "fig6", "fig7",
            "ct-postprocessing", "ct-postamplification", "ct-preamplification",
            "fig8a", "fig8b", "fig9a", "fig9b"};
}

struct ResultTable {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline void add_common_metadata(ResultTable& table, const ExperimentSpec& spec) {
    auto& md = table.metadata;
    md.emplace_back("tool", "cvfade " + std::string(kVersion));
    md.emplace_back("experiment", to_string(spec.kind));
    if (!spec.preset.empty()) md.emplace_back("preset", spec.preset);
    md.emplace_back("placement", to_string(spec.placement));
    md.emplace_back("combine_eta", format_value(spec.combine_eta));
    if (spec.crosstalk_eta) md.emplace_back("crosstalk_eta", format_value(*spec.crosstalk_eta));
    md.emplace_back("gain_policy", "average-inverse");
    md.emplace_back("sigma_T", format_value(spec.sigma_T));
    md.emplace_back("truncation_eps", format_value(spec.truncation_eps));
    md.emplace_back("input_x", format_value(spec.input.x));
    md.emplace_back("input_p", format_value(spec.input.p));
    md.emplace_back("n_th", format_value(spec.n_th));
    if (spec.kind == ExperimentKind::kSkrVsLoss || spec.kind == ExperimentKind::kSkrVsN) {
        md.emplace_back("V_in", format_value(spec.modulation_variance));
        md.emplace_back("beta", format_value(spec.reconciliation_efficiency));
        md.emplace_back("detection",
                        spec.detection == Detection::kHeterodyne ? "heterodyne" : "homodyne");
        md.emplace_back("units",
                        spec.units == UnitConvention::kShotNoise ? "shot-noise" : "paper");
        md.emplace_back("t_eff_rule",
                        spec.t_eff_rule == TeffRule::kArithmetic ? "arithmetic" : "amplitude");
        md.emplace_back("db_convention", "avg_T = 10^(-dB/10)");
    }
    md.emplace_back("method",
                    spec.plan.method == IntegrationMethod::kQuadrature ? "quad" : "mc");
    md.emplace_back("nodes", std::to_string(spec.plan.node_count));
    md.emplace_back("samples", std::to_string(spec.plan.sample_count));
    md.emplace_back("seed", std::to_string(spec.plan.seed));
}

}  // namespace detail

inline ResultTable run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    ResultTable table;
    detail::add_common_metadata(table, spec);
    const int workers = spec.workers;

    const auto fading_at = [&](double mean_t) {
        return FadingModel::from_mean(mean_t, spec.sigma_T, spec.truncation_eps);
    };
    const auto scheme_at = [&](int order, std::optional<double> eta_ct) {
        SchemeConfig cfg;
        cfg.placement = spec.placement;
        cfg.combine_eta = spec.combine_eta;
        cfg.crosstalk_eta = eta_ct;
        cfg.diversity_order = order;
        return cfg;
    };

    switch (spec.kind) {
        case ExperimentKind::kFidelitySweep: {
            table.columns = {"avg_T",         "F_avg_div2",     "F_avg_div2_err",
                             "F_avg_div0",    "F_avg_div0_err", "log10_ratio"};
            const auto& axis = spec.mean_transmittivity_axis;
            table.rows.resize(axis.size());
            detail::parallel_for(
                static_cast<std::int64_t>(axis.size()),
                spec.plan.method == IntegrationMethod::kQuadrature ? workers : 1,
                [&](std::int64_t lo, std::int64_t hi) {
                    const int inner =
                        spec.plan.method == IntegrationMethod::kQuadrature ? 1 : workers;
                    for (std::int64_t i = lo; i < hi; ++i) {
                        const FadingModel fading = fading_at(axis[i]);
                        const auto f2 = average_fidelity(scheme_at(2, spec.crosstalk_eta), fading,
                                                         spec.n_th, spec.input, spec.plan, inner);
                        const auto f0 = average_fidelity(scheme_at(1, spec.crosstalk_eta), fading,
                                                         spec.n_th, spec.input, spec.plan, inner);
                        table.rows[i] = {axis[i],  f2.value, f2.std_error,
                                         f0.value, f0.std_error, std::log10(f2.value / f0.value)};
                    }
                });
            break;
        }
        case ExperimentKind::kFidelityRatioGrid: {
            table.columns = {"avg_T", "n_th", "log10_ratio"};
            const auto grid = fidelity_ratio_grid(spec.placement, spec.mean_transmittivity_axis,
                                                  spec.n_th_axis, spec.sigma_T, spec.crosstalk_eta,
                                                  spec.input, spec.plan, spec.truncation_eps,
                                                  workers);
            for (std::size_t i = 0; i < grid.mean_transmittivity_axis.size(); ++i)
                for (std::size_t j = 0; j < grid.n_th_axis.size(); ++j)
                    table.rows.push_back({grid.mean_transmittivity_axis[i], grid.n_th_axis[j],
                                          grid.ratios[i * grid.n_th_axis.size() + j]});
            break;
        }
        case ExperimentKind::kCrosstalkGrid: {
            table.columns = {"avg_T", "eta_ct", "log10_ratio"};
            const auto& taxis = spec.mean_transmittivity_axis;
            const auto& eaxis = spec.eta_ct_axis;
            table.rows.resize(taxis.size() * eaxis.size());
            detail::parallel_for(
                static_cast<std::int64_t>(table.rows.size()),
                spec.plan.method == IntegrationMethod::kQuadrature ? workers : 1,
                [&](std::int64_t lo, std::int64_t hi) {
                    const int inner =
                        spec.plan.method == IntegrationMethod::kQuadrature ? 1 : workers;
                    for (std::int64_t c = lo; c < hi; ++c) {
                        const std::size_t i = static_cast<std::size_t>(c) / eaxis.size();
                        const std::size_t j = static_cast<std::size_t>(c) % eaxis.size();
                        const double ratio = log10_fidelity_ratio(
                            spec.placement, taxis[i], spec.n_th, spec.sigma_T, eaxis[j],
                            spec.input, spec.plan, spec.truncation_eps, inner);
                        table.rows[c] = {taxis[i], eaxis[j], ratio};
                    }
                });
            break;
        }
        case ExperimentKind::kSkrVsLoss: {
            table.columns = {"loss_db",       "avg_T",
                             "K_div2_raw",    "K_div2_raw_err",
                             "K_div2_clamped","K_div2_clamped_err",
                             "K_mux2_raw",    "K_mux2_raw_err",
                             "K_mux2_clamped","K_mux2_clamped_err"};
            const KeyRateConfig kr = spec.key_rate_config();
            const auto& axis = spec.loss_db_axis;
            table.rows.resize(axis.size());
            detail::parallel_for(
                static_cast<std::int64_t>(axis.size()),
                spec.plan.method == IntegrationMethod::kQuadrature ? workers : 1,
                [&](std::int64_t lo, std::int64_t hi) {
                    const int inner =
                        spec.plan.method == IntegrationMethod::kQuadrature ? 1 : workers;
                    for (std::int64_t i = lo; i < hi; ++i) {
                        const double mean_t = transmittivity_from_db(axis[i]);
                        const FadingModel fading = fading_at(mean_t);
                        const auto div = average_key_rate_diversity(kr, fading, 2, spec.plan, inner);
                        const auto mux =
                            average_key_rate_multiplexing(kr, fading, 2, spec.plan, inner);
                        table.rows[i] = {axis[i],      mean_t,
                                         div.raw,      div.raw_error,
                                         div.clamped,  div.clamped_error,
                                         mux.raw,      mux.raw_error,
                                         mux.clamped,  mux.clamped_error};
                    }
                });
            break;
        }
        case ExperimentKind::kSkrVsN: {
            table.columns = {"N",
                             "K_div_raw",    "K_div_raw_err",
                             "K_div_clamped","K_div_clamped_err",
                             "K_mux_raw",    "K_mux_raw_err",
                             "K_mux_clamped","K_mux_clamped_err"};
            table.metadata.emplace_back("loss_db", detail::format_value(spec.loss_db));
            const KeyRateConfig kr = spec.key_rate_config();
            const FadingModel fading = fading_at(transmittivity_from_db(spec.loss_db));
            const auto div = average_key_rate_diversity_sweep(kr, fading, spec.diversity_orders,
                                                              spec.plan, workers);
            const auto single = average_key_rate_diversity(kr, fading, 1, spec.plan, workers);
            for (std::size_t i = 0; i < spec.diversity_orders.size(); ++i) {
                const double n = spec.diversity_orders[i];
                table.rows.push_back({n,
                                      div[i].raw, div[i].raw_error,
                                      div[i].clamped, div[i].clamped_error,
                                      n * single.raw, n * single.raw_error,
                                      n * single.clamped, n * single.clamped_error});
            }
            break;
        }
    }
    return table;
}

inline void emit_csv(const ResultTable& table, std::ostream& os) {
    for (const auto& [key, value] : table.metadata) os << "# " << key << " = " << value << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        os << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
    os << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            os << detail::format_value(row[c]) << (c + 1 < row.size() ? "," : "");
        os << "\n";
    }
}

inline void emit_csv(const ResultTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot open '" + path + "' for writing");
    emit_csv(table, out);
    out.flush();
    if (!out) throw std::runtime_error("emit_csv: write failed for '" + path + "'");
}

}  // namespace cvfade
