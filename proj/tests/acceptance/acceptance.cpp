// Acceptance suite: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "mrb/control.hpp"
#include "mrb/scenario.hpp"
#include "mrb/verify.hpp"
#include "mrb/waveform_analytics.hpp"
#include "mrb/waveform_oracle.hpp"

using namespace mrb;
namespace fs = std::filesystem;

namespace {

const fs::path kSource{MRB_SOURCE_DIR};
constexpr double kVm = 96.0;

int g_failed = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::size_t count_property(const VerifyReport& r, const std::string& prefix) {
    return static_cast<std::size_t>(std::count_if(r.failures.begin(), r.failures.end(), [&](const Witness& w) {
        return w.property.rfind(prefix, 0) == 0;
    }));
}

void criterion_1(const VerifyReport& r) {
    const std::size_t bad = count_property(r, "oracle equivalence");
    std::string detail = fmt("%zu grid points, %zu mismatches at 1e-9 relative, %.1f s (limit 60 s)", r.points, bad,
                             r.elapsed_s);
    if (bad > 0) {
        const auto& w = r.failures.front();
        detail += fmt("; first: %s n_c=%zu L=%zu m=%.6f", w.quantity.c_str(), w.n_c, w.L, w.m);
    }
    report(1, "oracle equivalence", bad == 0 && r.elapsed_s < 60.0, detail);
}

void criterion_2(const VerifyReport& r) {
    // Symmetric nine-module port, D from 0.001 to 0.999, measured by the oracle.
    const double ratio = 1.2;
    const auto carriers = build_carriers(9, {ModuleSpan{0, 9}}, 1.0);
    double lo = 1e9;
    double hi = -1e9;
    double mirror_err = 0.0;
    for (int k = 1; k < 1000; ++k) {
        const double d = k / 1000.0;
        const double g = waveform_oracle((4.0 + d) / 9.0, carriers, {0, 9}, kVm, ratio).pulse.v_dc2 / (kVm * ratio);
        const double gm =
            waveform_oracle((5.0 - d) / 9.0, carriers, {0, 9}, kVm, ratio).pulse.v_dc2 / (kVm * ratio);
        lo = std::min(lo, g);
        hi = std::max(hi, g);
        mirror_err = std::max(mirror_err, std::abs(g - gm));
    }
    const std::size_t grid_bad = count_property(r, "gain law") + count_property(r, "duty mirror");
    const bool ok = lo >= 0.5 - 1e-12 && hi <= 1.0 + 1e-12 && mirror_err < 1e-12 && grid_bad == 0;
    report(2, "symmetric gain law", ok,
           fmt("gain in [%.6f, %.6f], max |g(D) - g(1-D)| = %.2e, %zu grid violations", lo, hi, mirror_err, grid_bad));
}

void criterion_3() {
    const auto grid = unit_grid(0.001);
    std::size_t mismatches = 0;
    std::size_t golden_diffs = 0;
    for (std::size_t L : {9u, 2u, 4u, 5u, 7u, 8u}) {
        const auto oracle = gain_profile_oracle(L, 9, kVm, 1.0, grid);
        const auto analytic = gain_profile(L, 9, kVm, 1.0, grid);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const auto& a = analytic.entries[k];
            const auto& o = oracle.entries[k];
            const double tol = 1e-9 * std::max({std::abs(a.v_dc2), std::abs(o.v_dc2), kVm});
            if (std::abs(a.v_dc1 - o.v_dc1) > tol || std::abs(a.v_dc2 - o.v_dc2) > tol) ++mismatches;
        }
        std::ostringstream fresh;
        write_gain_profile_csv(fresh, oracle);
        std::ifstream is(kSource / "data" / "gain_profiles" / ("gain_n9_L" + std::to_string(L) + ".csv"));
        std::ostringstream stored;
        stored << is.rdbuf();
        if (fresh.str() != stored.str()) ++golden_diffs;
    }
    // Period 1/9 of the nine-module profile, off the grid so no boundary is hit.
    const auto carriers = build_carriers(9, {ModuleSpan{0, 9}}, 1.0);
    double period_err = 0.0;
    for (int k = 0; k < 800; ++k) {
        const double m = 0.0005 + k * (8.0 / 9.0 - 0.001) / 800.0;
        const double a = waveform_oracle(m, carriers, {0, 9}, kVm, 1.0).pulse.v_dc2;
        const double b = waveform_oracle(m + 1.0 / 9.0, carriers, {0, 9}, kVm, 1.0).pulse.v_dc2;
        period_err = std::max(period_err, std::abs(a - b) / kVm);
    }
    report(3, "gain profiles", mismatches == 0 && golden_diffs == 0 && period_err < 1e-9,
           fmt("%zu analytic/oracle mismatches over 6 profiles, %zu golden CSVs differ, period-1/9 error %.2e",
               mismatches, golden_diffs, period_err));
}

void criterion_4() {
    const auto carriers = build_carriers(9, {ModuleSpan{0, 9}}, 1.0);
    bool counts_ok = true;
    double duty_err = 0.0;
    double worst_dc = 0.0;
    for (int k = 0; k <= 6; ++k) {
        const double d = 0.2 + 0.05 * k;
        const auto c = symmetric_candidates(d, 9);
        counts_ok = counts_ok && c.size() == 18;
        for (double m : c) {
            const double measured = waveform_oracle(m, carriers, {0, 9}, kVm, 1.0).pulse.duty;
            duty_err = std::max(duty_err, std::min(std::abs(measured - d), std::abs(measured - (1.0 - d))));
        }
        for (int r = 0; r <= 864; ++r) {
            const double ref = r;
            const auto dec = select_symmetric(d, ref, 9, kVm);
            worst_dc = std::max(worst_dc, std::abs(dec.m_main * 9.0 * kVm - ref));
        }
    }
    report(4, "symmetric candidate set", counts_ok && duty_err <= 1e-9 && worst_dc <= 0.5 * kVm + 1e-9,
           fmt("18 candidates for every D: %s, max duty error %.2e, max |v_dc1 - ref| = %.2f V (limit %.1f V)",
               counts_ok ? "yes" : "no", duty_err, worst_dc, 0.5 * kVm));
}

struct ScenarioRun {
    ScenarioConfig cfg;
    ScenarioResult result;
    double wall_s = 0.0;
};

ScenarioRun run_bundled(const std::string& name) {
    ScenarioRun r;
    r.cfg = load_scenario(kSource / "scenarios" / (name + ".ini"));
    const auto t0 = std::chrono::steady_clock::now();
    r.result = run_scenario(r.cfg);
    r.wall_s = seconds_since(t0);
    return r;
}

void criterion_5(const ScenarioRun& s) {
    double r1 = 0.0, r2 = 0.0, e2 = 0.0, dev1 = 0.0;
    for (const auto& w : s.result.windows) {
        r1 = std::max(r1, w.v_dc1.ripple_pct);
        r2 = std::max(r2, w.v_dc2.ripple_pct);
        e2 = std::max(e2, w.v_dc2.steady_state_error_pct);
        dev1 = std::max(dev1, w.v_dc1.max_deviation_pct);
    }
    const bool ok = s.cfg.sim.duration >= 0.5 && r1 < 1.0 && r2 < 0.5 && e2 < 0.2 && dev1 <= 6.0 && s.wall_s < 120.0;
    report(5, "scenario I", ok,
           fmt("%.2f s simulated in %.1f s; v_dc1 ripple %.3f %% (<1), v_dc2 ripple %.3f %% (<0.5), v_dc2 error %.4f %% "
               "(<0.2), v_dc1 deviation %.2f %% (<=6) over %zu windows",
               s.cfg.sim.duration, s.wall_s, r1, r2, e2, dev1, s.result.windows.size()));
}

void criterion_6(const ScenarioRun& s) {
    double e1 = 0.0, e2 = 0.0;
    for (const auto& w : s.result.windows) {
        e1 = std::max(e1, w.v_dc1.steady_state_error_pct);
        e2 = std::max(e2, w.v_dc2.steady_state_error_pct);
    }
    std::string over;
    for (const auto& t : s.result.transients) {
        over += fmt(" %s@%.1fs=%.1f%%", t.signal == Signal::VDc1 ? "v1" : "v2", t.t_step, t.overshoot_pct);
    }
    const bool ok = s.cfg.control.coupling == CouplingMode::DcConsistent && s.cfg.topology.ports.size() == 2 &&
                    s.cfg.topology.ports[1].span.count == 2 && e1 < 0.5 && e2 < 0.5;
    report(6, "scenario II", ok,
           fmt("v_dc1 error %.4f %%, v_dc2 error %.4f %% (<0.5) over %zu windows incl. after the load step; "
               "overshoot (not gated):",
               e1, e2, s.result.windows.size()) +
               over);
}

void criterion_7(const ScenarioRun& a, const ScenarioRun& b) {
    double charge = 0.0;
    double power = 0.0;
    for (const auto* s : {&a, &b}) {
        for (const auto& w : s->result.windows) {
            charge = std::max({charge, w.charge_cdc1, w.charge_cdc2, w.charge_cdc3});
            power = std::max(power, w.power);
        }
    }
    report(7, "conservation", charge < 5e-3 && power < 1e-2,
           fmt("worst charge imbalance %.2e (<5e-3), worst power imbalance %.2e (<1e-2)", charge, power));
}

void criterion_8(const VerifyReport& r) {
    std::set<std::string> quantities;
    for (const auto& d : r.divergences) quantities.insert(d.quantity);
    // Re-derive the conduction identity from fresh oracle runs for the listed points.
    std::set<std::tuple<std::size_t, std::size_t, double>> points;
    for (const auto& d : r.divergences) {
        if (d.quantity != "L_es bound") points.insert({d.n_c, d.L, d.m});
    }
    double worst = 0.0;
    std::size_t checked = 0;
    for (const auto& [n_c, L, m] : points) {
        if (checked++ % 7 != 0) continue;
        const auto carriers = build_carriers(n_c, {ModuleSpan{0, L}}, 1.0, SlotPolicy::Consecutive);
        const auto o = waveform_oracle(m, carriers, {0, L}, kVm, 1.0, DutyFrame::String);
        const auto& c = o.conduction;
        const double t_eff = carriers.t_sw_eff();
        const double pos = static_cast<double>(c.n_p) * o.pulse.duty * t_eff + c.delta_p;
        const double neg = static_cast<double>(c.n_n) * (1.0 - o.pulse.duty) * t_eff + c.delta_n;
        const double vp = o.pulse.v_p_plus;
        const double vn = -o.pulse.v_p_minus;
        const double expected = std::abs(vp - vn) <= 1e-9 * kVm ? pos + neg : (vp > vn ? pos : neg);
        worst = std::max(worst, std::abs(expected - c.delta_t));
    }
    std::string listed;
    for (const auto& q : quantities) listed += (listed.empty() ? "" : ", ") + q;
    const bool ok = !r.divergences.empty() && count_property(r, "conduction identity") == 0 && worst < 1e-9 &&
                    quantities.count("L_es bound") == 1;
    report(8, "known-ambiguity report", ok,
           fmt("%zu divergence rows (%s); conduction identity error %.2e over %zu oracle points", r.divergences.size(),
               listed.c_str(), worst, (points.size() + 6) / 7));
}

}  // namespace

int main() {
    try {
        VerifyOptions opt;  // n_c 2..12, every L, step 0.001, boundaries excluded
        const VerifyReport verify = run_verify(opt);
        criterion_1(verify);
        criterion_2(verify);
        criterion_3();
        criterion_4();
        const auto s1 = run_bundled("scenario1");
        criterion_5(s1);
        const auto s2 = run_bundled("scenario2");
        criterion_6(s2);
        criterion_7(s1, s2);
        criterion_8(verify);
    } catch (const std::exception& e) {
        std::printf("[FAIL] acceptance aborted: %s\n", e.what());
        return 1;
    }
    std::printf("%d criteria failed\n", g_failed);
    return g_failed == 0 ? 0 : 1;
}
