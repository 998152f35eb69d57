#include "mrb/verify.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <future>
#include <iomanip>
#include <map>
#include <ostream>

#include "mrb/circuit_sim.hpp"
#include "mrb/waveform_analytics.hpp"
#include "mrb/waveform_oracle.hpp"

namespace mrb {

namespace {

constexpr double kModuleVoltage = 96.0;

struct Partial {
    std::size_t points = 0;
    std::vector<Witness> failures;
    std::vector<Divergence> divergences;
};

bool near_integer(double x, double eps) { return std::abs(x - std::round(x)) < eps; }

bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), kModuleVoltage});
}

void compare_pulse(const PulseCharacterization& a, const PulseCharacterization& o, const char* property, double m,
                   std::size_t L, std::size_t n_c, double tol, Partial& out) {
    const std::array<std::pair<const char*, std::pair<double, double>>, 7> rows{{
        {"V_dc", {a.v_dc, o.v_dc}},
        {"V_base", {a.v_base, o.v_base}},
        {"D", {a.duty * kModuleVoltage, o.duty * kModuleVoltage}},
        {"V_max", {a.v_max, o.v_max}},
        {"V_min", {a.v_min, o.v_min}},
        {"V_p+", {a.v_p_plus, o.v_p_plus}},
        {"V_p-", {a.v_p_minus, o.v_p_minus}},
    }};
    for (const auto& [name, values] : rows) {
        if (!close(values.first, values.second, tol)) {
            const double scale = std::string(name) == "D" ? 1.0 / kModuleVoltage : 1.0;
            out.failures.push_back({property, name, m, L, n_c, values.first * scale, values.second * scale});
        }
    }
}

/// Conduction time recomputed from the oracle's own counts and gaps.
double conduction_identity(const OracleResult& o, double t_eff) {
    const auto& c = o.conduction;
    const double d = o.pulse.duty;
    const double pos = o.pulse.v_p_plus;
    const double neg = -o.pulse.v_p_minus;
    const double positive = static_cast<double>(c.n_p) * d * t_eff + c.delta_p;
    const double negative = static_cast<double>(c.n_n) * (1.0 - d) * t_eff + c.delta_n;
    const double tol = 1e-9 * kModuleVoltage;
    if (pos > neg + tol) return positive;
    if (neg > pos + tol) return negative;
    return positive + negative;
}

void check_symmetric(std::size_t n_c, const VerifyOptions& opt, const std::vector<double>& grid, Partial& out) {
    for (std::size_t L = 1; L <= n_c; ++L) {
        if (n_c % L != 0) continue;
        const ModuleSpan span{0, L};
        const auto carriers = build_carriers(n_c, {span}, 1.0, SlotPolicy::InterleaveDivisors);
        const auto l = static_cast<double>(L);
        for (double m : grid) {
            if (opt.exclude_boundaries && near_integer(m * l, opt.boundary_eps)) continue;
            const auto a = characterize_symmetric(m, L, kModuleVoltage, 1.0);
            const auto o = waveform_oracle(m, carriers, span, kModuleVoltage, 1.0, DutyFrame::Port);
            ++out.points;
            compare_pulse(a, o.pulse, "oracle equivalence (symmetric)", m, L, n_c, opt.tolerance, out);

            if (a.duty > opt.boundary_eps && a.duty < 1.0 - opt.boundary_eps) {
                const double gain = o.pulse.v_dc2 / kModuleVoltage;
                if (gain < 0.5 - opt.tolerance || gain > 1.0 + opt.tolerance) {
                    out.failures.push_back({"gain law", "V_dc2/v_m", m, L, n_c, a.v_dc2 / kModuleVoltage, gain});
                }
                const double mirror = (std::floor(m * l) + 1.0 - a.duty) / l;
                if (mirror <= 1.0) {
                    const auto am = characterize_symmetric(mirror, L, kModuleVoltage, 1.0);
                    const auto om = waveform_oracle(mirror, carriers, span, kModuleVoltage, 1.0, DutyFrame::Port);
                    if (!close(am.v_dc2, a.v_dc2, opt.tolerance) || !close(om.pulse.v_dc2, o.pulse.v_dc2, opt.tolerance)) {
                        out.failures.push_back({"duty mirror", "V_dc2", m, L, n_c, am.v_dc2, om.pulse.v_dc2});
                    }
                }
            }
        }
    }
}

void check_asymmetric(std::size_t n_c, const VerifyOptions& opt, const std::vector<double>& grid, Partial& out) {
    const auto nc = static_cast<double>(n_c);
    for (std::size_t L = 1; L <= n_c; ++L) {
        const ModuleSpan span{0, L};
        const auto carriers = build_carriers(n_c, {span}, 1.0, SlotPolicy::Consecutive);
        const double t_eff = carriers.t_sw_eff();
        std::vector<double> v_dc2(grid.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double m = grid[k];
            if (opt.exclude_boundaries && near_integer(m * nc, opt.boundary_eps)) continue;
            const auto a = characterize_asymmetric(m, L, n_c, kModuleVoltage, 1.0);
            const auto o = waveform_oracle(m, carriers, span, kModuleVoltage, 1.0, DutyFrame::String);
            ++out.points;
            v_dc2[k] = o.pulse.v_dc2;
            compare_pulse(a, o.pulse, "oracle equivalence (asymmetric)", m, L, n_c, opt.tolerance, out);

            if (o.pulse.v_max == o.pulse.v_min) continue;
            const double identity = conduction_identity(o, t_eff);
            if (std::abs(identity - o.conduction.delta_t) > opt.tolerance * carriers.t_sw()) {
                out.failures.push_back({"conduction identity", "delta_t", m, L, n_c, identity, o.conduction.delta_t});
            }
            const auto lit = asymmetric_conduction(m, L, n_c, carriers.t_sw(), AnalysisMode::Literal);
            const auto& orc = o.conduction;
            if (lit.n_p != orc.n_p) {
                out.divergences.push_back({"n_p", m, L, n_c, static_cast<double>(lit.n_p), static_cast<double>(orc.n_p)});
            }
            if (lit.n_n != orc.n_n) {
                out.divergences.push_back({"n_n", m, L, n_c, static_cast<double>(lit.n_n), static_cast<double>(orc.n_n)});
            }
            if (std::abs(lit.delta_p - orc.delta_p) > 1e-9 * carriers.t_sw()) {
                out.divergences.push_back({"delta_p", m, L, n_c, lit.delta_p, orc.delta_p});
            }
            if (std::abs(lit.delta_n - orc.delta_n) > 1e-9 * carriers.t_sw()) {
                out.divergences.push_back({"delta_n", m, L, n_c, lit.delta_n, orc.delta_n});
            }
            if (std::abs(lit.delta_t - orc.delta_t) > 1e-9 * carriers.t_sw()) {
                out.divergences.push_back({"delta_t", m, L, n_c, lit.delta_t, orc.delta_t});
            }
        }
        // Isolated gain is symmetric about m = 0.5.
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const std::size_t mirror = grid.size() - 1 - k;
            if (std::isnan(v_dc2[k]) || std::isnan(v_dc2[mirror])) continue;
            if (!close(v_dc2[k], v_dc2[mirror], opt.tolerance)) {
                out.failures.push_back({"gain symmetry about m = 0.5", "V_dc2", grid[k], L, n_c, v_dc2[mirror], v_dc2[k]});
            }
        }
    }
}

Partial check_string(std::size_t n_c, const VerifyOptions& opt) {
    Partial out;
    const auto grid = unit_grid(opt.m_step);
    check_symmetric(n_c, opt, grid, out);
    if (!opt.symmetric_only) check_asymmetric(n_c, opt, grid, out);
    return out;
}

/// Leakage bound: closed form as printed against the simulated 5 % gain loss.
void check_leakage(const VerifyOptions& opt, std::vector<Divergence>& out) {
    struct Point {
        double m;
        std::size_t L;
    };
    static constexpr std::array<Point, 4> points{{{0.3, 2}, {0.7, 2}, {0.35, 5}, {0.6, 7}}};
    constexpr std::size_t n_c = 9;
    constexpr double p_load2 = 5000.0;
    constexpr double f_sw_eff = 18000.0;
    IsolatedParams params;
    params.c_dc2 = 225e-6;
    params.c_dc3 = 9.6e-3;
    params.diode_resistance = 1e-3;
    params.l_m = 50e-3;
    for (std::size_t k = 0; k < std::min(opt.les_points, points.size()); ++k) {
        const auto [m, L] = points[k];
        const auto pulse = characterize_asymmetric(m, L, n_c, kModuleVoltage, 1.0);
        const auto cond = asymmetric_conduction(m, L, n_c, static_cast<double>(n_c) / f_sw_eff);
        const double literal = asymmetric_ratings(pulse, cond, p_load2, f_sw_eff).l_es_bound;
        const double simulated = simulated_les_bound(m, L, n_c, kModuleVoltage, params, p_load2, f_sw_eff);
        out.push_back({"L_es bound", m, L, n_c, literal, simulated});
    }
}

std::vector<CouplingCheck> check_coupling() {
    constexpr std::size_t n_c = 9;
    constexpr std::size_t L = 2;
    const auto carriers =
        build_carriers(n_c, {ModuleSpan{0, n_c}, ModuleSpan{0, L}}, 1.0, SlotPolicy::Consecutive);
    std::vector<CouplingCheck> out;
    for (CouplingMode mode : {CouplingMode::Literal, CouplingMode::DcConsistent}) {
        CouplingCheck check;
        check.mode = mode;
        for (int a = 6; a <= 14; ++a) {
            const double m_opt = 0.05 * a;
            for (int b = 2; b <= 8; ++b) {
                const double m2 = 0.1 * b;
                const double m1 = coupled_index(m_opt, m2, n_c, L, mode);
                if (m1 < 0.0 || m1 > 1.0) continue;
                Eigen::VectorXd m = Eigen::VectorXd::Constant(n_c, m1);
                m.head(L).setConstant(m2);
                const double v_dc = series_fraction(m, carriers, 0.0, carriers.t_sw()).sum() * kModuleVoltage;
                const double ref = m_opt * static_cast<double>(n_c) * kModuleVoltage;
                check.max_relative_error = std::max(check.max_relative_error, std::abs(v_dc - ref) / ref);
            }
        }
        check.holds = check.max_relative_error < 1e-6;
        out.push_back(check);
    }
    return out;
}

}  // namespace

VerifyReport run_verify(const VerifyOptions& opt) {
    if (opt.n_c_min < 1 || opt.n_c_max < opt.n_c_min) throw DomainError("invalid n_c range");
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::future<Partial>> jobs;
    for (std::size_t n_c = opt.n_c_min; n_c <= opt.n_c_max; ++n_c) {
        jobs.push_back(std::async(std::launch::async, check_string, n_c, opt));
    }
    VerifyReport report;
    for (auto& job : jobs) {
        Partial p = job.get();
        report.points += p.points;
        report.failures.insert(report.failures.end(), p.failures.begin(), p.failures.end());
        report.divergences.insert(report.divergences.end(), p.divergences.begin(), p.divergences.end());
    }
    if (!opt.symmetric_only) check_leakage(opt, report.divergences);
    report.coupling = check_coupling();
    report.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

void write_verify_report(std::ostream& os, const VerifyReport& report, std::size_t max_rows) {
    os << "grid points checked: " << report.points << '\n';
    os << "property failures:   " << report.failures.size() << '\n';
    os << "elapsed:             " << std::fixed << std::setprecision(2) << report.elapsed_s << " s\n";
    os << std::defaultfloat << std::setprecision(10);

    if (!report.failures.empty()) {
        os << "\nwitnesses (property, quantity, n_c, L, m, closed form, oracle):\n";
        for (std::size_t k = 0; k < std::min(max_rows, report.failures.size()); ++k) {
            const auto& w = report.failures[k];
            os << "  " << w.property << ", " << w.quantity << ", " << w.n_c << ", " << w.L << ", " << w.m << ", "
               << w.expected << ", " << w.measured << '\n';
        }
    }

    std::map<std::string, std::size_t> counts;
    for (const auto& d : report.divergences) ++counts[d.quantity];
    os << "\nliteral vs oracle divergences: " << report.divergences.size() << '\n';
    for (const auto& [q, n] : counts) os << "  " << q << ": " << n << '\n';
    if (!report.divergences.empty()) {
        os << "\nquantity,n_c,L,m,literal,oracle\n";
        std::map<std::string, std::size_t> shown;
        for (const auto& d : report.divergences) {
            if (shown[d.quantity]++ >= max_rows) continue;
            os << d.quantity << ',' << d.n_c << ',' << d.L << ',' << d.m << ',' << d.literal << ',' << d.oracle << '\n';
        }
    }

    os << "\ncoupling modes (string dc component vs v_dc1_ref):\n";
    for (const auto& c : report.coupling) {
        os << "  " << (c.mode == CouplingMode::Literal ? "literal      " : "dc_consistent") << "  max rel. error "
           << c.max_relative_error << (c.holds ? "  holds" : "  does not hold") << '\n';
    }
    os << '\n' << (report.passed() ? "PASS" : "FAIL") << '\n';
}

}  // namespace mrb
