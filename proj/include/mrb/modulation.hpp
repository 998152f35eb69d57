#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "mrb/core_model.hpp"

namespace mrb {

enum class CarrierLayout { Symmetric, Asymmetric };

/// How build_carriers places the carriers of a sub-string port.
enum class SlotPolicy {
    /// A port whose length divides N_C gets every (N_C/L)-th slot; other ports
    /// keep consecutive slots in string order.
    InterleaveDivisors,
    /// Slot i for module i; a short port sees L consecutive slots and an
    /// (N_C - L)-slot gap.
    Consecutive,
};

/// Phase-shifted triangular carriers, one per module.
///
/// Phases are stored as integer slots on the N_C-point lattice; the phase of
/// module i is 2*pi*slot[i]/N_C. Trough (value 0) sits at phase 0.
struct CarrierSet {
    std::vector<std::size_t> slots;
    std::size_t n_slots = 0;  // N_C
    double f_sw = 0.0;        // per-module switching frequency
    CarrierLayout layout = CarrierLayout::Symmetric;

    [[nodiscard]] std::size_t size() const noexcept { return slots.size(); }
    [[nodiscard]] double phase(std::size_t module) const {
        return 2.0 * std::numbers::pi * static_cast<double>(slots.at(module)) / static_cast<double>(n_slots);
    }
    [[nodiscard]] Eigen::VectorXd phases() const;
    [[nodiscard]] double t_sw() const { return 1.0 / f_sw; }
    [[nodiscard]] double f_sw_eff() const { return static_cast<double>(n_slots) * f_sw; }
    [[nodiscard]] double t_sw_eff() const { return t_sw() / static_cast<double>(n_slots); }
};

/// Carrier set for a string of n_modules with the given port spans.
/// The set layout is Asymmetric when any span sees an uneven carrier spread.
[[nodiscard]] CarrierSet build_carriers(std::size_t n_modules, const std::vector<ModuleSpan>& port_spans,
                                        double f_sw, SlotPolicy policy = SlotPolicy::InterleaveDivisors);

/// Carrier set from an explicit slot assignment (a permutation of 0..N-1).
[[nodiscard]] CarrierSet carriers_from_slots(std::vector<std::size_t> slots, double f_sw,
                                             const std::vector<ModuleSpan>& port_spans = {});

/// Layout seen from the terminals of a port covering `span`.
[[nodiscard]] CarrierLayout span_layout(const CarrierSet& carriers, const ModuleSpan& span);

/// Symmetric triangle on [0, 1]: x = frac(t*f_sw + phase/2pi), 2x below 0.5, 2(1-x) above.
template <typename Scalar>
[[nodiscard]] Scalar carrier_value(Scalar phase, Scalar f_sw, Scalar t) {
    using std::floor;
    const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    Scalar x = t * f_sw + phase / two_pi;
    x -= floor(x);
    return x < Scalar(0.5) ? Scalar(2) * x : Scalar(2) * (Scalar(1) - x);
}

/// Carrier of one module at time t, evaluated from its lattice slot.
[[nodiscard]] double carrier_at(const CarrierSet& carriers, std::size_t module, double t);

/// s_i = 1 iff m_i > carrier_i(t). Ties bypass.
[[nodiscard]] ConnectionVector modulate(const Eigen::Ref<const Eigen::VectorXd>& m, const CarrierSet& carriers,
                                        double t);

/// Fraction of [t0, t1] each module spends in series, integrated exactly
/// over the piecewise-linear carrier.
[[nodiscard]] Eigen::VectorXd series_fraction(const Eigen::Ref<const Eigen::VectorXd>& m, const CarrierSet& carriers,
                                              double t0, double t1);

/// Ideal (lossless, equal-module) port voltage sampled every dt over [0, duration).
/// Requires dt <= T_sw,eff / 50.
[[nodiscard]] Eigen::VectorXd sample_port_voltage(const Eigen::Ref<const Eigen::VectorXd>& m,
                                                  const CarrierSet& carriers, const ModuleSpan& span, double v_m,
                                                  double duration, double dt);

}  // namespace mrb
