// cvfade command line: one subcommand per experiment kind, figure presets,
// flat key=value config files (flags override), deterministic CSV output.
//
// Exit codes: 0 success, 1 I/O error, 2 domain/usage error.

#include "cvfade/cvfade.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cvfade;

// Axis syntax: "a,b,c" or "lo:hi:count" (inclusive linspace).
std::vector<double> parse_axis(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double lo = 0.0, hi = 0.0;
        int count = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(text);
        if (!(in >> lo >> c1 >> hi >> c2 >> count) || c1 != ':' || c2 != ':' || count < 1)
            throw std::invalid_argument("axis '" + text + "': expected lo:hi:count");
        return linspace(lo, hi, count);
    }
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        out.push_back(std::stod(item, &pos));
        if (pos != item.size()) throw std::invalid_argument("axis '" + text + "': bad number '" + item + "'");
    }
    if (out.empty()) throw std::invalid_argument("axis '" + text + "': no values");
    return out;
}

std::vector<int> parse_int_axis(const std::string& text) {
    std::vector<int> out;
    for (double v : parse_axis(text)) {
        const int n = static_cast<int>(v);
        if (v != n) throw std::invalid_argument("axis '" + text + "': expected integers");
        out.push_back(n);
    }
    return out;
}

struct RawOptions {
    std::string preset;
    std::string placement = "postprocessing";
    double eta = 0.5;
    double eta_ct = -1.0;  // <0 = absent
    std::string avg_t, nth_axis, eta_ct_axis, loss_db_axis, orders;
    double nth = 0.0;
    double sigma_t = 0.5;
    double eps = 1e-6;
    double x = 1.0, p = 1.0;
    double vin = 10.0;
    double beta = 1.0;
    std::string detection = "heterodyne";
    std::string units = "shot-noise";
    std::string teff_rule = "arithmetic";
    std::string method = "quad";
    int nodes = 64;
    long samples = 100'000;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out;
};

Placement parse_placement(const std::string& name) {
    if (name == "postprocessing") return Placement::kPostprocessing;
    if (name == "post-amplification" || name == "postamplification")
        return Placement::kPostAmplification;
    if (name == "pre-amplification" || name == "preamplification")
        return Placement::kPreAmplification;
    if (name == "none") return Placement::kNone;
    throw std::invalid_argument("placement: unknown value '" + name + "'");
}

// Applies flags on top of the preset (when given) or a fresh spec.
ExperimentSpec build_spec(ExperimentKind kind, const RawOptions& raw, const CLI::App& cmd) {
    ExperimentSpec spec;
    if (!raw.preset.empty()) {
        spec = preset_spec(raw.preset);
        if (spec.kind != kind)
            throw std::invalid_argument("preset '" + raw.preset + "' belongs to subcommand '" +
                                        std::string(to_string(spec.kind)) + "'");
    } else {
        spec.kind = kind;
    }

    const auto given = [&](const std::string& flag) { return cmd.count(flag) > 0; };
    if (given("--placement")) spec.placement = parse_placement(raw.placement);
    if (given("--eta")) spec.combine_eta = raw.eta;
    if (given("--eta-ct")) {
        if (kind == ExperimentKind::kCrosstalkGrid)
            spec.eta_ct_axis = parse_axis(raw.eta_ct_axis);
        else
            spec.crosstalk_eta = raw.eta_ct;
    }
    if (given("--avg-t")) spec.mean_transmittivity_axis = parse_axis(raw.avg_t);
    if (given("--nth-axis")) spec.n_th_axis = parse_axis(raw.nth_axis);
    if (given("--loss-db")) {
        if (kind == ExperimentKind::kSkrVsLoss)
            spec.loss_db_axis = parse_axis(raw.loss_db_axis);
        else
            spec.loss_db = std::stod(raw.loss_db_axis);
    }
    if (given("--orders")) spec.diversity_orders = parse_int_axis(raw.orders);
    if (given("--nth")) spec.n_th = raw.nth;
    if (given("--sigma-t")) spec.sigma_T = raw.sigma_t;
    if (given("--eps")) spec.truncation_eps = raw.eps;
    if (given("--x")) spec.input.x = raw.x;
    if (given("--p")) spec.input.p = raw.p;
    if (given("--vin")) spec.modulation_variance = raw.vin;
    if (given("--beta")) spec.reconciliation_efficiency = raw.beta;
    if (given("--detection")) {
        if (raw.detection == "heterodyne") spec.detection = Detection::kHeterodyne;
        else if (raw.detection == "homodyne") spec.detection = Detection::kHomodyne;
        else throw std::invalid_argument("detection: unknown value '" + raw.detection + "'");
    }
    if (given("--units")) {
        if (raw.units == "shot-noise") spec.units = UnitConvention::kShotNoise;
        else if (raw.units == "paper") spec.units = UnitConvention::kPaperFaithful;
        else throw std::invalid_argument("units: unknown value '" + raw.units + "'");
    }
    if (given("--teff-rule")) {
        if (raw.teff_rule == "arithmetic") spec.t_eff_rule = TeffRule::kArithmetic;
        else if (raw.teff_rule == "amplitude") spec.t_eff_rule = TeffRule::kAmplitude;
        else throw std::invalid_argument("teff-rule: unknown value '" + raw.teff_rule + "'");
    }
    if (given("--method")) {
        if (raw.method == "quad") spec.plan.method = IntegrationMethod::kQuadrature;
        else if (raw.method == "mc") spec.plan.method = IntegrationMethod::kMonteCarlo;
        else throw std::invalid_argument("method: unknown value '" + raw.method + "'");
    }
    if (given("--nodes")) spec.plan.node_count = raw.nodes;
    if (given("--samples")) spec.plan.sample_count = raw.samples;
    if (given("--seed")) spec.plan.seed = raw.seed;
    if (given("--workers")) spec.workers = raw.workers;
    if (given("--out")) spec.out_path = raw.out;
    return spec;
}

void add_common_flags(CLI::App* cmd, RawOptions& raw) {
    cmd->add_option("--preset", raw.preset, "figure preset name");
    cmd->add_option("--placement", raw.placement,
                    "postprocessing | post-amplification | pre-amplification | none");
    cmd->add_option("--eta", raw.eta, "combiner transmittivity");
    cmd->add_option("--sigma-t", raw.sigma_t, "fading strength sigma_T");
    cmd->add_option("--eps", raw.eps, "truncation floor of the fading law");
    cmd->add_option("--x", raw.x, "input coherent amplitude, x quadrature");
    cmd->add_option("--p", raw.p, "input coherent amplitude, p quadrature");
    cmd->add_option("--method", raw.method, "quad | mc");
    cmd->add_option("--nodes", raw.nodes, "quadrature nodes per dimension");
    cmd->add_option("--samples", raw.samples, "monte-carlo sample count");
    cmd->add_option("--seed", raw.seed, "monte-carlo seed");
    cmd->add_option("--workers", raw.workers, "parallel worker threads");
    cmd->add_option("--out", raw.out, "output CSV path (default: stdout)");
    cmd->set_config("--config", "", "flat key=value config file; flags override");
}

void add_keyrate_flags(CLI::App* cmd, RawOptions& raw) {
    cmd->add_option("--vin", raw.vin, "modulation variance V_in (shot-noise units)");
    cmd->add_option("--beta", raw.beta, "reconciliation efficiency");
    cmd->add_option("--detection", raw.detection, "heterodyne | homodyne");
    cmd->add_option("--units", raw.units, "shot-noise | paper");
    cmd->add_option("--teff-rule", raw.teff_rule, "arithmetic | amplitude");
    cmd->add_option("--nth", raw.nth, "thermal occupation n_th");
}

int run(ExperimentKind kind, const RawOptions& raw, const CLI::App& cmd) {
    const ExperimentSpec spec = build_spec(kind, raw, cmd);
    const ResultTable table = run_experiment(spec);
    if (spec.out_path.empty() || spec.out_path == "-")
        emit_csv(table, std::cout);
    else
        emit_csv(table, spec.out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cvfade: diversity and key-rate simulation over fading thermal-loss channels"};
    app.require_subcommand(1);

    RawOptions raw;
    ExperimentKind kind = ExperimentKind::kFidelitySweep;

    auto* sweep = app.add_subcommand("fidelity-sweep",
                                     "average fidelity of 2- vs 0-diversity over mean transmittivity");
    sweep->add_option("--avg-t", raw.avg_t, "mean transmittivity axis (a,b,c or lo:hi:count)");
    sweep->add_option("--nth", raw.nth, "thermal occupation n_th");
    sweep->add_option("--eta-ct", raw.eta_ct, "optional crosstalk transmittivity");
    add_common_flags(sweep, raw);
    sweep->callback([&] { kind = ExperimentKind::kFidelitySweep; });

    auto* grid = app.add_subcommand("fidelity-ratio-grid",
                                    "log10 fidelity ratio over mean transmittivity x n_th");
    grid->add_option("--avg-t", raw.avg_t, "mean transmittivity axis");
    grid->add_option("--nth-axis", raw.nth_axis, "thermal occupation axis");
    grid->add_option("--eta-ct", raw.eta_ct, "optional crosstalk transmittivity");
    add_common_flags(grid, raw);
    grid->callback([&] { kind = ExperimentKind::kFidelityRatioGrid; });

    auto* ct = app.add_subcommand("crosstalk-grid",
                                  "log10 fidelity ratio over mean transmittivity x crosstalk");
    ct->add_option("--avg-t", raw.avg_t, "mean transmittivity axis");
    ct->add_option("--eta-ct", raw.eta_ct_axis, "crosstalk transmittivity axis");
    ct->add_option("--nth", raw.nth, "thermal occupation n_th");
    add_common_flags(ct, raw);
    ct->callback([&] { kind = ExperimentKind::kCrosstalkGrid; });

    auto* skr = app.add_subcommand("skr-vs-loss",
                                   "2-diversity vs 2-multiplexing key rates over channel loss");
    skr->add_option("--loss-db", raw.loss_db_axis, "mean loss axis in dB");
    add_keyrate_flags(skr, raw);
    add_common_flags(skr, raw);
    skr->callback([&] { kind = ExperimentKind::kSkrVsLoss; });

    auto* skrn = app.add_subcommand("skr-vs-N", "diversity key rate versus the number of channels");
    skrn->add_option("--orders", raw.orders, "diversity orders (a,b,c or lo:hi:count)");
    skrn->add_option("--loss-db", raw.loss_db_axis, "mean loss in dB");
    add_keyrate_flags(skrn, raw);
    add_common_flags(skrn, raw);
    skrn->callback([&] { kind = ExperimentKind::kSkrVsN; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const CLI::App* active = app.get_subcommands().front();
        return run(kind, raw, *active);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
