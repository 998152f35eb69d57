#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mrb/errors.hpp"
#include "mrb/modulation.hpp"

namespace mrb {

/// Closed-form description of a port's terminal voltage under PSC modulation.
///
/// `v_p_minus` is signed: the negative pulse after dc removal, so
/// v_p_plus - v_p_minus is the peak-to-peak of the pulsating component.
/// `v_base` is the lowest level the port voltage visits.
template <typename Scalar>
struct BasicPulseCharacterization {
    Scalar v_dc{0};
    Scalar v_base{0};
    Scalar duty{0};
    Scalar v_p_plus{0};
    Scalar v_p_minus{0};
    Scalar v_max{0};
    Scalar v_min{0};
    Scalar v_dc2{0};
};

using PulseCharacterization = BasicPulseCharacterization<double>;

/// Diode-bridge conduction over one module switching period T_sw.
///
/// `d_eff` is the conducting fraction of T_sw, so it reduces to D for a
/// symmetric port and stays in [0, 1].
struct ConductionProfile {
    long n_p = 0;
    long n_n = 0;
    double delta_p = 0.0;  // s
    double delta_n = 0.0;  // s
    double delta_t = 0.0;  // s
    double d_eff = 0.0;
};

enum class AnalysisMode { Literal, Oracle };

namespace detail {

template <typename Scalar>
void check_unit_interval(Scalar m) {
    if (!(m >= Scalar(0) && m <= Scalar(1))) {
        throw DomainError("modulation index outside [0, 1]");
    }
}

}  // namespace detail

/// Two-level (symmetric PSC) port of L evenly spread carriers.
template <typename Scalar>
[[nodiscard]] BasicPulseCharacterization<Scalar> characterize_symmetric(Scalar m, std::size_t L, Scalar v_m,
                                                                        Scalar ratio) {
    using std::floor;
    detail::check_unit_interval(m);
    if (L == 0) {
        throw DomainError("port needs at least one module");
    }
    const Scalar mL = m * static_cast<Scalar>(L);
    const Scalar levels = floor(mL);
    const Scalar d = mL - levels;

    BasicPulseCharacterization<Scalar> c;
    c.v_dc = mL * v_m;
    c.v_base = levels * v_m;
    c.duty = d;
    c.v_min = c.v_base;
    if (d == Scalar(0)) {
        // mL integral: the port voltage is flat.
        c.v_max = c.v_base;
        return c;
    }
    c.v_max = c.v_base + v_m;
    c.v_p_plus = (Scalar(1) - d) * v_m;
    c.v_p_minus = -d * v_m;
    c.v_dc2 = (d <= Scalar(0.5) ? (Scalar(1) - d) : d) * v_m * ratio;
    return c;
}

/// Port of L consecutive carriers out of n_c (gap of n_c - L slots).
template <typename Scalar>
[[nodiscard]] BasicPulseCharacterization<Scalar> characterize_asymmetric(Scalar m, std::size_t L, std::size_t n_c,
                                                                         Scalar v_m, Scalar ratio) {
    using std::floor;
    detail::check_unit_interval(m);
    if (L == 0 || L > n_c) {
        throw DomainError("port length must be in [1, n_c]");
    }
    const auto nc = static_cast<Scalar>(n_c);
    const auto l = static_cast<Scalar>(L);
    const Scalar fl_m = floor(m * nc);
    const Scalar fl_1m = floor((Scalar(1) - m) * nc);

    BasicPulseCharacterization<Scalar> c;
    c.v_dc = m * l * v_m;
    c.v_max = std::min(l, nc - fl_1m) * v_m;
    c.v_min = std::max(l - nc + fl_m, Scalar(0)) * v_m;
    c.v_base = c.v_min;
    c.duty = m * nc - fl_m;
    c.v_p_plus = (m * nc < l) ? (nc - fl_1m - m * l) * v_m : (Scalar(1) - m) * l * v_m;
    const Scalar neg = (m * nc <= nc - l) ? m * l * v_m : (nc - fl_m - (Scalar(1) - m) * l) * v_m;
    c.v_p_minus = -neg;
    c.v_dc2 = std::max(c.v_p_plus, neg) * ratio;
    return c;
}

struct SymmetricRatings {
    double i_d_vdc = 0.0;   // diode-bridge current with the dc component in the denominator (as printed)
    double i_d_vdc2 = 0.0;  // same with the isolated output voltage in the denominator
    double l_es_bound = 0.0;
    bool high_duty_branch = false;  // true when the D > 0.5 inductance bound was applied
};

/// Diode current and leakage-inductance bound of a symmetric isolated port.
/// Throws UnboundedCurrentError when D is 0 or 1.
[[nodiscard]] SymmetricRatings symmetric_ratings(const PulseCharacterization& pulse, double p_load2,
                                                 double f_sw_eff);

/// Conduction profile of an asymmetric port, from the closed-form pulse
/// counts (Literal) or measured by carrier enumeration (Oracle).
[[nodiscard]] ConductionProfile asymmetric_conduction(double m, std::size_t L, std::size_t n_c, double t_sw,
                                                      AnalysisMode mode = AnalysisMode::Literal);

struct AsymmetricRatings {
    double i_d_min = 0.0;
    double l_es_bound = 0.0;
};

/// Closed-form ratings. The leakage bound keeps the printed factor
/// (V_p,larger - max[V_p+, V_p-]), which vanishes or goes negative.
[[nodiscard]] AsymmetricRatings asymmetric_ratings(const PulseCharacterization& pulse,
                                                   const ConductionProfile& conduction, double p_load2,
                                                   double f_sw_eff);

struct GainProfile {
    struct Entry {
        double m = 0.0;
        double v_dc1 = 0.0;  // dc component of the profiled port
        double v_dc2 = 0.0;  // isolated output
    };
    std::vector<Entry> entries;
    std::size_t L = 0;
    std::size_t n_c = 0;
    double v_m = 0.0;
    double ratio = 1.0;
    CarrierLayout layout = CarrierLayout::Symmetric;
};

/// Evenly spaced grid over [0, 1] including both ends.
[[nodiscard]] std::vector<double> unit_grid(double step);

/// Analytic gain profile of a port of length L in an n_c string. The slot
/// policy decides whether divisor-length ports are interleaved (symmetric).
[[nodiscard]] GainProfile gain_profile(std::size_t L, std::size_t n_c, double v_m, double ratio,
                                       std::span<const double> m_grid,
                                       SlotPolicy policy = SlotPolicy::InterleaveDivisors);

/// The same profile measured by carrier enumeration.
[[nodiscard]] GainProfile gain_profile_oracle(std::size_t L, std::size_t n_c, double v_m, double ratio,
                                              std::span<const double> m_grid,
                                              SlotPolicy policy = SlotPolicy::InterleaveDivisors);

/// CSV with columns m, v_dc1_norm, v_dc2_norm. v_dc1 is normalized by L*v_m,
/// v_dc2 by v_m*ratio.
void write_gain_profile_csv(std::ostream& os, const GainProfile& profile);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Admissible transformer ratios N2/N1 for an isolated output reference.
[[nodiscard]] Interval transformer_ratio_bounds(double v_dc2_ref, double v_m);

[[nodiscard]] const char* to_string(CarrierLayout layout);

}  // namespace mrb
