#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mrb/errors.hpp"
#include "mrb/scenario.hpp"
#include "mrb/verify.hpp"
#include "mrb/waveform_analytics.hpp"
#include "mrb/waveform_oracle.hpp"

namespace {

using namespace mrb;

int cmd_simulate(const std::string& config, const std::string& out_dir, const std::string& mode) {
    ScenarioConfig cfg = load_scenario(config);
    if (mode == "literal") {
        cfg.control.coupling = CouplingMode::Literal;
        cfg.resolved["control"]["coupling"] = "literal";
    } else if (mode == "dc-consistent") {
        cfg.control.coupling = CouplingMode::DcConsistent;
        cfg.resolved["control"]["coupling"] = "dc_consistent";
    } else if (mode == "oracle") {
        cfg.control.profile_source = ProfileSource::Oracle;
        cfg.resolved["control"]["profile_source"] = "oracle";
    }
    const ScenarioResult result = simulate_to(cfg, out_dir);
    std::cout << cfg.name << ": " << result.series.samples.size() << " samples in " << std::fixed
              << std::setprecision(2) << result.elapsed_s << " s\n";
    std::cout << "window            v_dc1 ripple %  v_dc1 sse %  v_dc2 ripple %  v_dc2 sse %\n";
    for (const auto& w : result.windows) {
        std::cout << std::setprecision(3) << std::setw(7) << w.t0 << '-' << std::left << std::setw(10) << w.t1
                  << std::right << std::setw(14) << w.v_dc1.ripple_pct << std::setw(13)
                  << w.v_dc1.steady_state_error_pct << std::setw(16) << w.v_dc2.ripple_pct << std::setw(13)
                  << w.v_dc2.steady_state_error_pct << '\n';
    }
    std::cout << "wrote " << (std::filesystem::path(out_dir) / cfg.outputs.timeseries).string() << '\n';
    return 0;
}

int cmd_gain_profile(std::size_t n_c, std::size_t L, double v_m, double ratio, double step,
                     const std::string& source, const std::string& out) {
    const auto grid = unit_grid(step);
    const GainProfile profile = source == "oracle" ? gain_profile_oracle(L, n_c, v_m, ratio, grid)
                                                   : gain_profile(L, n_c, v_m, ratio, grid);
    if (out.empty() || out == "-") {
        write_gain_profile_csv(std::cout, profile);
        return 0;
    }
    std::ofstream os(out);
    if (!os) throw std::runtime_error("cannot write " + out);
    write_gain_profile_csv(os, profile);
    std::cout << "wrote " << out << " (layout=" << to_string(profile.layout) << ")\n";
    return 0;
}

void print_row(const std::string& name, std::optional<double> literal, double oracle) {
    // Adding 0.0 turns -0 into 0.
    std::cout << std::left << std::setw(10) << name << std::right << ' ' << std::setw(16);
    if (literal) {
        std::cout << *literal + 0.0 << ' ' << std::setw(16) << oracle + 0.0 << ' ' << std::setw(16)
                  << *literal - oracle + 0.0;
    } else {
        std::cout << "-" << ' ' << std::setw(16) << oracle + 0.0 << ' ' << std::setw(16) << "-";
    }
    std::cout << '\n';
}

int cmd_characterize(double m, std::size_t n_c, std::size_t L, double v_m, double ratio) {
    const ModuleSpan span{0, L};
    const bool symmetric = L > 0 && L <= n_c && n_c % L == 0;
    const PulseCharacterization literal =
        symmetric ? characterize_symmetric(m, L, v_m, ratio) : characterize_asymmetric(m, L, n_c, v_m, ratio);
    const auto carriers = build_carriers(n_c, {span}, 1.0, symmetric ? SlotPolicy::InterleaveDivisors
                                                                     : SlotPolicy::Consecutive);
    const OracleResult oracle =
        waveform_oracle(m, carriers, span, v_m, ratio, symmetric ? DutyFrame::Port : DutyFrame::String);

    std::cout << "m=" << m << " n_c=" << n_c << " L=" << L << " v_m=" << v_m << " ratio=" << ratio
              << " layout=" << (symmetric ? "symmetric" : "asymmetric") << "\n\n";
    std::cout << std::setprecision(8);
    std::cout << std::left << std::setw(10) << "quantity" << std::right << ' ' << std::setw(16) << "closed form"
              << ' ' << std::setw(16) << "oracle" << ' ' << std::setw(16) << "diff" << '\n';
    const auto& o = oracle.pulse;
    print_row("V_dc", literal.v_dc, o.v_dc);
    print_row("V_base", literal.v_base, o.v_base);
    print_row("D", literal.duty, o.duty);
    print_row("V_max", literal.v_max, o.v_max);
    print_row("V_min", literal.v_min, o.v_min);
    print_row("V_p+", literal.v_p_plus, o.v_p_plus);
    print_row("V_p-", literal.v_p_minus, o.v_p_minus);
    print_row("V_dc2", literal.v_dc2, o.v_dc2);

    // Conduction times in units of T_sw.
    std::cout << "\nconduction (times per T_sw)\n";
    const ConductionProfile& oc = oracle.conduction;
    std::optional<ConductionProfile> lc;
    if (symmetric) {
        std::cout << "no closed form for an interleaved port; oracle only\n";
    } else {
        try {
            lc = asymmetric_conduction(m, L, n_c, 1.0, AnalysisMode::Literal);
        } catch (const std::exception& e) {
            std::cout << "closed form unavailable: " << e.what() << '\n';
        }
    }
    const auto pick = [&](auto field) -> std::optional<double> {
        if (!lc) return std::nullopt;
        return static_cast<double>(field(*lc));
    };
    print_row("n_p", pick([](const auto& c) { return c.n_p; }), static_cast<double>(oc.n_p));
    print_row("n_n", pick([](const auto& c) { return c.n_n; }), static_cast<double>(oc.n_n));
    print_row("delta_p", pick([](const auto& c) { return c.delta_p; }), oc.delta_p);
    print_row("delta_n", pick([](const auto& c) { return c.delta_n; }), oc.delta_n);
    print_row("delta_t", pick([](const auto& c) { return c.delta_t; }), oc.delta_t);
    print_row("d_eff", pick([](const auto& c) { return c.d_eff; }), oc.d_eff);
    return 0;
}

int cmd_verify(const VerifyOptions& options, std::size_t rows) {
    const VerifyReport report = run_verify(options);
    write_verify_report(std::cout, report, rows);
    return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiport reconfigurable battery string simulator"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = ".";
    std::string mode = "config";
    auto* simulate = app.add_subcommand("simulate", "Run a scenario file");
    simulate->add_option("-c,--config", config, "Scenario INI file")->required()->check(CLI::ExistingFile);
    simulate->add_option("-o,--out", out_dir, "Output directory");
    simulate->add_option("--mode", mode, "Override: literal or dc-consistent coupling, oracle gain profile")
        ->check(CLI::IsMember({"config", "literal", "oracle", "dc-consistent"}));

    std::size_t n_c = 9;
    std::size_t L = 9;
    double v_m = 96.0;
    double ratio = 1.0;
    double step = 0.001;
    std::string source = "oracle";
    std::string out;
    auto* profile = app.add_subcommand("gain-profile", "Write a normalized gain-profile CSV");
    profile->add_option("--n-c", n_c, "Modules in the string")->check(CLI::PositiveNumber);
    profile->add_option("--L", L, "Modules in the port")->check(CLI::PositiveNumber);
    profile->add_option("--v-m", v_m, "Module voltage, V");
    profile->add_option("--ratio", ratio, "Transformer ratio N2/N1");
    profile->add_option("--step", step, "Grid step in m");
    profile->add_option("--source", source, "analytic or oracle")->check(CLI::IsMember({"analytic", "oracle"}));
    profile->add_option("-o,--out", out, "CSV path, stdout when omitted");

    double m = 0.0;
    auto* characterize = app.add_subcommand("characterize", "Closed form and oracle side by side");
    characterize->add_option("--m", m, "Modulation index")->required();
    characterize->add_option("--n-c", n_c, "Modules in the string");
    characterize->add_option("--L", L, "Modules in the port");
    characterize->add_option("--v-m", v_m, "Module voltage, V");
    characterize->add_option("--ratio", ratio, "Transformer ratio N2/N1");

    VerifyOptions vopt;
    bool include_boundaries = false;
    std::size_t rows = 20;
    auto* verify = app.add_subcommand("verify", "Check the closed forms against the oracle");
    verify->add_option("--n-c-min", vopt.n_c_min, "Smallest string");
    verify->add_option("--n-c-max", vopt.n_c_max, "Largest string");
    verify->add_option("--step", vopt.m_step, "Grid step in m");
    verify->add_option("--tolerance", vopt.tolerance, "Relative tolerance");
    verify->add_option("--les-points", vopt.les_points, "Leakage-bound points to simulate (0 to 4)");
    verify->add_flag("--symmetric-only", vopt.symmetric_only, "Skip asymmetric ports");
    verify->add_flag("--include-boundaries", include_boundaries, "Keep branch-boundary grid points");
    verify->add_option("--rows", rows, "Rows printed per table");

    CLI11_PARSE(app, argc, argv);
    vopt.exclude_boundaries = !include_boundaries;

    try {
        if (*simulate) return cmd_simulate(config, out_dir, mode);
        if (*profile) return cmd_gain_profile(n_c, L, v_m, ratio, step, source, out);
        if (*characterize) return cmd_characterize(m, n_c, L, v_m, ratio);
        if (*verify) return cmd_verify(vopt, rows);
    } catch (const mrb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const mrb::InstabilityError& e) {
        std::cerr << "simulation unstable: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
