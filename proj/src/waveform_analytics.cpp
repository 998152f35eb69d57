#include "mrb/waveform_analytics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "mrb/waveform_oracle.hpp"

namespace mrb {

SymmetricRatings symmetric_ratings(const PulseCharacterization& pulse, double p_load2, double f_sw_eff) {
    const double d = pulse.duty;
    if (!(d > 0.0 && d < 1.0)) {
        throw UnboundedCurrentError("diode-bridge current is unbounded at D = 0 or D = 1");
    }
    if (!(p_load2 > 0.0) || !(f_sw_eff > 0.0)) {
        throw DomainError("load power and effective switching frequency must be > 0");
    }
    const double short_pulse = std::min(d, 1.0 - d);
    SymmetricRatings r;
    r.i_d_vdc = p_load2 / (pulse.v_dc * short_pulse);
    r.i_d_vdc2 = p_load2 / (pulse.v_dc2 * short_pulse);
    const double scale = pulse.v_dc2 * pulse.v_dc2 / (4.0 * f_sw_eff * p_load2);
    if (d <= 0.5) {
        r.l_es_bound = d * (1.0 - d) * scale;
    } else {
        r.high_duty_branch = true;
        r.l_es_bound = (1.0 - d) * (2.0 * d - 1.0) * scale;
    }
    return r;
}

ConductionProfile asymmetric_conduction(double m, std::size_t L, std::size_t n_c, double t_sw, AnalysisMode mode) {
    detail::check_unit_interval(m);
    if (L == 0 || L > n_c) {
        throw DomainError("port length must be in [1, n_c]");
    }
    if (!(t_sw > 0.0)) {
        throw DomainError("switching period must be > 0");
    }
    if (mode == AnalysisMode::Oracle) {
        const auto carriers = build_carriers(n_c, {ModuleSpan{0, L}}, 1.0 / t_sw, SlotPolicy::Consecutive);
        return waveform_oracle(m, carriers, ModuleSpan{0, L}, 1.0, 1.0, DutyFrame::String).conduction;
    }

    const auto nc = static_cast<double>(n_c);
    const auto l = static_cast<double>(L);
    const double t_eff = t_sw / nc;
    const double fl_m = std::floor(m * nc);
    const double d = m * nc - fl_m;

    ConductionProfile c;
    c.n_p = m * nc < l ? static_cast<long>(l - fl_m)
                       : static_cast<long>(std::floor(m + 1.0 / nc) * (l - 1.0));
    c.n_n = m * nc <= nc - l ? static_cast<long>(-std::floor(m - 1.0 / nc) * (l - 1.0))
                             : static_cast<long>(l - std::floor((1.0 - m) * nc));
    c.delta_p = m * nc < l ? 0.0 : (m * nc - l + 1.0) * t_eff;
    c.delta_n = m * nc < nc - l ? (m * nc - l + 1.0) * t_eff : 0.0;

    const auto pulse = characterize_asymmetric(m, L, n_c, 1.0, 1.0);
    const double pos = pulse.v_p_plus;
    const double neg = -pulse.v_p_minus;
    const double positive_time = static_cast<double>(c.n_p) * d * t_eff + c.delta_p;
    const double negative_time = static_cast<double>(c.n_n) * (1.0 - d) * t_eff + c.delta_n;
    if (pos > neg + 1e-9) {
        c.delta_t = positive_time;
    } else if (neg > pos + 1e-9) {
        c.delta_t = negative_time;
    } else {
        c.delta_t = positive_time + negative_time;
    }
    c.d_eff = c.delta_t / t_sw;
    return c;
}

AsymmetricRatings asymmetric_ratings(const PulseCharacterization& pulse, const ConductionProfile& conduction,
                                     double p_load2, double f_sw_eff) {
    if (!(conduction.d_eff > 0.0)) {
        throw UnboundedCurrentError("diode-bridge current is unbounded at D_eff = 0");
    }
    if (!(p_load2 > 0.0) || !(f_sw_eff > 0.0)) {
        throw DomainError("load power and effective switching frequency must be > 0");
    }
    const double pos = pulse.v_p_plus;
    const double neg = -pulse.v_p_minus;
    const double larger = std::max(pos, neg);

    AsymmetricRatings r;
    r.i_d_min = p_load2 / (pulse.v_dc2 * conduction.d_eff);
    const double scale =
        conduction.d_eff * conduction.d_eff * pulse.v_dc2 * pulse.v_dc2 / (4.0 * f_sw_eff * p_load2);
    r.l_es_bound = scale * ((pos >= neg ? pos : neg) - larger);
    return r;
}

std::vector<double> unit_grid(double step) {
    if (!(step > 0.0 && step <= 1.0)) {
        throw DomainError("grid step must be in (0, 1]");
    }
    const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
    std::vector<double> grid(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        grid[k] = static_cast<double>(k) / static_cast<double>(n);
    }
    return grid;
}

namespace {

CarrierLayout profile_layout(std::size_t L, std::size_t n_c, SlotPolicy policy) {
    if (L == n_c) return CarrierLayout::Symmetric;
    if (policy == SlotPolicy::InterleaveDivisors && n_c % L == 0) return CarrierLayout::Symmetric;
    return CarrierLayout::Asymmetric;
}

void check_profile_args(std::size_t L, std::size_t n_c, std::span<const double> grid) {
    if (L == 0 || L > n_c) {
        throw DomainError("port length must be in [1, n_c]");
    }
    for (double m : grid) {
        detail::check_unit_interval(m);
    }
}

}  // namespace

GainProfile gain_profile(std::size_t L, std::size_t n_c, double v_m, double ratio, std::span<const double> m_grid,
                         SlotPolicy policy) {
    check_profile_args(L, n_c, m_grid);
    GainProfile g{{}, L, n_c, v_m, ratio, profile_layout(L, n_c, policy)};
    g.entries.reserve(m_grid.size());
    for (double m : m_grid) {
        const auto c = g.layout == CarrierLayout::Symmetric ? characterize_symmetric(m, L, v_m, ratio)
                                                            : characterize_asymmetric(m, L, n_c, v_m, ratio);
        g.entries.push_back({m, c.v_dc, c.v_dc2});
    }
    return g;
}

GainProfile gain_profile_oracle(std::size_t L, std::size_t n_c, double v_m, double ratio,
                                std::span<const double> m_grid, SlotPolicy policy) {
    check_profile_args(L, n_c, m_grid);
    const ModuleSpan span{0, L};
    const auto carriers = build_carriers(n_c, {ModuleSpan{0, n_c}, span}, 1.0, policy);
    GainProfile g{{}, L, n_c, v_m, ratio, span_layout(carriers, span)};
    g.entries.reserve(m_grid.size());
    for (double m : m_grid) {
        const auto r = waveform_oracle(m, carriers, span, v_m, ratio);
        g.entries.push_back({m, r.pulse.v_dc, r.pulse.v_dc2});
    }
    return g;
}

void write_gain_profile_csv(std::ostream& os, const GainProfile& profile) {
    os << "# schema_version=1\n"
       << "# n_c=" << profile.n_c << " L=" << profile.L << " v_m_V=" << profile.v_m << " ratio=" << profile.ratio
       << " layout=" << to_string(profile.layout) << "\n"
       << "# v_dc1_norm = v_dc1 / (L * v_m); v_dc2_norm = v_dc2 / (v_m * N2/N1)\n"
       << "m,v_dc1_norm,v_dc2_norm\n";
    const double n1 = static_cast<double>(profile.L) * profile.v_m;
    const double n2 = profile.v_m * profile.ratio;
    const auto old_flags = os.flags();
    const auto old_precision = os.precision();
    os << std::setprecision(12);
    for (const auto& e : profile.entries) {
        os << e.m << ',' << e.v_dc1 / n1 << ',' << e.v_dc2 / n2 << '\n';
    }
    os.flags(old_flags);
    os.precision(old_precision);
}

Interval transformer_ratio_bounds(double v_dc2_ref, double v_m) {
    if (!(v_m > 0.0) || v_dc2_ref < 0.0) {
        throw DomainError("module voltage must be > 0 and reference >= 0");
    }
    return {v_dc2_ref / (0.75 * v_m), v_dc2_ref / (0.5 * v_m)};
}

const char* to_string(CarrierLayout layout) {
    return layout == CarrierLayout::Symmetric ? "Symmetric" : "Asymmetric";
}

}  // namespace mrb
