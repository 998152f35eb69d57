#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "mrb/core_model.hpp"
#include "mrb/modulation.hpp"

namespace mrb {

/// Dynamic state of both ports.
struct CircuitState {
    double t = 0.0;
    double i_l1 = 0.0;     // dc-link filter inductor
    double v_cdc1 = 0.0;   // dc-link capacitor
    double i_load1 = 0.0;  // dc-link load current (state for RL loads)
    double v_cdc2 = 0.0;   // dc-block capacitor
    double i_m = 0.0;      // magnetizing current
    double i_prim = 0.0;   // primary winding current (charges C_dc2)
    double i_sec = 0.0;    // secondary winding current, signed
    double v_cdc3 = 0.0;   // isolated output capacitor
    double i_load2 = 0.0;  // isolated load current
    int bridge_polarity = 0;  // +1 / -1 while the diode bridge conducts, 0 when blocking

    [[nodiscard]] bool bridge_conducting() const noexcept { return bridge_polarity != 0; }
    /// Current rectified into C_dc3 (never negative).
    [[nodiscard]] double i_bridge() const noexcept { return static_cast<double>(bridge_polarity) * i_sec; }
};

/// Per-step power flows, for conservation checks.
struct StepPower {
    double battery = 0.0;  // sum of ideal source powers
    double losses = 0.0;   // ohmic and diode-drop losses
    double loads = 0.0;    // delivered to both loads
    double stored = 0.0;   // energy in every reactive element
};

struct SimConfig {
    double dt = 0.0;        // s, <= T_sw,eff / 200
    double duration = 0.0;  // s
    double f_sw = 0.0;      // per-module switching frequency
    SlotPolicy slot_policy = SlotPolicy::InterleaveDivisors;
    double control_period = 0.0;  // s, 0 selects one T_sw
    double sample_period = 0.0;   // s, 0 records every step
    /// Rate limits applied to the references handed to the controller, V/s;
    /// 0 passes schedule steps through. Metrics still use the schedule.
    double ref_slew_v_dc1 = 0.0;
    double ref_slew_v_dc2 = 0.0;
    /// Windows recorded at every step regardless of sample_period.
    std::vector<std::pair<double, double>> dense_windows;

    [[nodiscard]] std::size_t step_count() const;
};

/// Backward-Euler solver of the string and its (up to) two ports.
///
/// Unknowns per step: i_L1, v_Cdc1, i_load1, v_Cdc2, i_m, i_prim, v_prim,
/// i_sec, v_Cdc3. Every element is linear between switching events, so a step
/// is one 9x9 solve; factorizations are cached per (series-module pattern,
/// bridge polarity) and invalidated when a load changes. Constant-power loads
/// are linearized on the previous step's voltage.
class CircuitSolver {
public:
    CircuitSolver(const StringTopology& topology, double dt);

    /// Advance one dt with connection vector s held over the step.
    [[nodiscard]] CircuitState step(const CircuitState& state, const ConnectionVector& s);

    /// Advance one dt where module i is in series for a fraction duty[i] of
    /// the step. Module voltages enter averaged over the step; the resistive
    /// network follows s.
    [[nodiscard]] CircuitState step(const CircuitState& state, const ConnectionVector& s,
                                    const Eigen::Ref<const Eigen::VectorXd>& duty);

    /// Power bookkeeping of a state reached with connection vector s.
    [[nodiscard]] StepPower power(const CircuitState& state, const ConnectionVector& s) const;
    [[nodiscard]] StepPower power(const CircuitState& state, const ConnectionVector& s,
                                  const Eigen::Ref<const Eigen::VectorXd>& duty) const;

    void set_main_load(const LoadModel& load);
    void set_isolated_load(const LoadModel& load);

    [[nodiscard]] bool has_main() const noexcept { return main_.has_value(); }
    [[nodiscard]] bool has_isolated() const noexcept { return iso_.has_value(); }
    [[nodiscard]] const ModuleSpan& main_span() const { return main_span_; }
    [[nodiscard]] const ModuleSpan& isolated_span() const { return iso_span_; }
    [[nodiscard]] const NonIsolatedParams& main_params() const { return *main_; }
    [[nodiscard]] const IsolatedParams& isolated_params() const { return *iso_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }

private:
    using Matrix = Eigen::Matrix<double, 9, 9>;
    using Vector = Eigen::Matrix<double, 9, 1>;

    const Eigen::PartialPivLU<Matrix>& factor(const ConnectionVector& s, int polarity);
    Vector solve(const CircuitState& state, const ConnectionVector& s, const Eigen::VectorXd& duty, int polarity);
    [[nodiscard]] double module_resistance(std::size_t i, const ConnectionVector& s) const;

    std::vector<BatteryModule> modules_;
    std::optional<NonIsolatedParams> main_;
    std::optional<IsolatedParams> iso_;
    ModuleSpan main_span_;
    ModuleSpan iso_span_;
    double dt_;
    std::unordered_map<std::uint64_t, Eigen::PartialPivLU<Matrix>> cache_;
};

/// One solver step for callers that do not keep a solver around.
[[nodiscard]] CircuitState step(const CircuitState& state, const ConnectionVector& s,
                                const StringTopology& topology, const SimConfig& cfg);

/// Piecewise-constant schedule: value of the last step at or before t.
struct StepSeries {
    std::vector<std::pair<double, double>> steps;  // (t_s, value), time-sorted

    [[nodiscard]] double at(double t) const;
    [[nodiscard]] bool empty() const noexcept { return steps.empty(); }
};

/// References and load values over time. Load values are resistances for
/// resistive/RL loads and powers for constant-power loads.
struct ReferenceSchedule {
    StepSeries v_dc1_ref;
    StepSeries v_dc2_ref;
    StepSeries load1;
    StepSeries load2;
};

/// Period-averaged port measurements handed to a controller.
struct Measurements {
    double t = 0.0;
    double v_dc1 = 0.0;
    double v_dc2 = 0.0;
};

struct References {
    double v_dc1 = 0.0;
    double v_dc2 = 0.0;
};

/// Closed-loop source of per-module modulation indices.
class Controller {
public:
    virtual ~Controller() = default;
    /// Called once per control period; returns one index per module.
    virtual Eigen::VectorXd update(const Measurements& meas, const References& refs, double period) = 0;
};

struct Sample {
    double t = 0.0;
    double v_dc1 = 0.0;
    double i_dc1 = 0.0;
    double v_dc2 = 0.0;
    double i_d = 0.0;
    double m_1 = 0.0;
    double m_2 = 0.0;
    double v_dc1_ref = 0.0;
    double v_dc2_ref = 0.0;
    double v_cdc2 = 0.0;
    double i_c1 = 0.0;
    double i_c2 = 0.0;
    double i_c3 = 0.0;
    StepPower power;
};

struct TimeSeries {
    std::vector<Sample> samples;
    double dt = 0.0;  // solver step, for window integrals over dense samples
};

/// Closed-loop time-domain run. Deterministic for a given input.
[[nodiscard]] TimeSeries run(const StringTopology& topology, Controller& controller, const SimConfig& cfg,
                             const ReferenceSchedule& schedule, const CircuitState& initial = {});

/// Writes t_s, v_dc1_V, i_dc1_A, v_dc2_V, i_d_A, m_1, m_2.
void write_time_series_csv(std::ostream& os, const TimeSeries& series);

enum class Signal { VDc1, VDc2 };

struct WindowMetrics {
    double ripple_pct = 0.0;
    double mean = 0.0;
    double max_deviation_pct = 0.0;
    double steady_state_error_pct = 0.0;
};

/// Ripple and reference tracking of one output over [t0, t1].
[[nodiscard]] WindowMetrics metrics(const TimeSeries& series, Signal signal, double t0, double t1);

enum class Capacitor { Cdc1, Cdc2, Cdc3 };

/// |net charge change| / charge pumped in, over [t0, t1] (dense samples).
[[nodiscard]] double charge_balance(const TimeSeries& series, Capacitor cap, double capacitance, double t0, double t1);

/// |P_battery - P_loads - P_losses - dE/dt| / P_battery, averaged over [t0, t1].
[[nodiscard]] double power_balance(const TimeSeries& series, double t0, double t1);

/// Largest leakage inductance at which the isolated output of an open-loop port
/// (uniform m, L consecutive carriers of n_c, ideal modules of v_m) stays above 95 %
/// of the closed-form gain, found by simulation with a resistive load
/// drawing p_load2 at the closed-form voltage.
[[nodiscard]] double simulated_les_bound(double m, std::size_t L, std::size_t n_c, double v_m,
                                         const IsolatedParams& params, double p_load2, double f_sw_eff);

/// Mean isolated output of an open-loop port, for a given leakage inductance.
[[nodiscard]] double simulated_isolated_output(double m, std::size_t L, std::size_t n_c, double v_m,
                                               const IsolatedParams& params, double f_sw_eff);

}  // namespace mrb
