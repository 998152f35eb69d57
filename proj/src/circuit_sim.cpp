#include "mrb/circuit_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "mrb/waveform_analytics.hpp"

namespace mrb {

namespace {

enum Unknown : int { kIL1 = 0, kVc1, kILoad1, kVc2, kIm, kIPrim, kVPrim, kISec, kVc3 };

// Constant-power loads behave as a resistor below this voltage.
constexpr double kConstantPowerFloor = 1.0;
constexpr double kRunawayLimit = 1e9;

double constant_power_current(double power, double v) {
    const double floor_v = std::max(std::abs(v), kConstantPowerFloor);
    return power * (std::abs(v) < kConstantPowerFloor ? v / (floor_v * floor_v) : 1.0 / v);
}

bool magnetizing_finite(const IsolatedParams& p) { return std::isfinite(p.l_m); }

}  // namespace

std::size_t SimConfig::step_count() const {
    if (!(dt > 0.0) || !(duration > 0.0)) return 0;
    return static_cast<std::size_t>(std::llround(duration / dt));
}

CircuitSolver::CircuitSolver(const StringTopology& topology, double dt) : modules_(topology.modules), dt_(dt) {
    if (!(dt > 0.0)) {
        throw ConfigError("dt", "solver step must be > 0");
    }
    if (modules_.size() > 62) {
        throw DomainError("at most 62 modules are supported");
    }
    for (const auto& port : topology.ports) {
        if (port.span.count == 0 || port.span.last() > modules_.size()) {
            throw DomainError("port span outside the string");
        }
        if (port.kind == PortKind::NonIsolated) {
            if (main_) throw DomainError("solver supports a single non-isolated port");
            main_ = std::get<NonIsolatedParams>(port.params);
            main_span_ = port.span;
        } else {
            if (iso_) throw DomainError("solver supports a single isolated port");
            iso_ = std::get<IsolatedParams>(port.params);
            iso_span_ = port.span;
            if (!(iso_->c_dc2 > 0.0)) throw ConfigError("C_dc2", "dc-block capacitance must be > 0");
        }
    }
}

void CircuitSolver::set_main_load(const LoadModel& load) {
    if (!main_) return;
    main_->load = load;
    cache_.clear();
}

void CircuitSolver::set_isolated_load(const LoadModel& load) {
    if (!iso_) return;
    iso_->load = load;
    cache_.clear();
}

double CircuitSolver::module_resistance(std::size_t i, const ConnectionVector& s) const {
    const auto& mod = modules_[i];
    return mod.r_switch + (s[static_cast<Eigen::Index>(i)] != 0 ? mod.r_int : 0.0);
}

const Eigen::PartialPivLU<CircuitSolver::Matrix>& CircuitSolver::factor(const ConnectionVector& s, int polarity) {
    std::uint64_t mask = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] != 0) mask |= std::uint64_t{1} << i;
    }
    const std::uint64_t key = mask * 3 + static_cast<std::uint64_t>(polarity + 1);
    if (auto it = cache_.find(key); it != cache_.end()) {
        return it->second;
    }

    double r11 = 0.0, r12 = 0.0, r22 = 0.0;
    for (std::size_t i = 0; i < modules_.size(); ++i) {
        const double r = module_resistance(i, s);
        const bool in1 = main_ && main_span_.contains(i);
        const bool in2 = iso_ && iso_span_.contains(i);
        if (in1) r11 += r;
        if (in2) r22 += r;
        if (in1 && in2) r12 += r;
    }

    const double h = dt_;
    Matrix a = Matrix::Zero();
    if (main_) {
        const auto& p = *main_;
        a(0, kIL1) = p.l1 / h + r11 + p.r_ldc;
        a(0, kIPrim) = r12;
        a(0, kVc1) = 1.0;
        a(1, kVc1) = p.c_dc1 / h;
        a(1, kIL1) = -1.0;
        a(1, kILoad1) = 1.0;
        switch (p.load.kind) {
        case LoadKind::Resistive:
            a(2, kVc1) = 1.0;
            a(2, kILoad1) = -p.load.resistance;
            break;
        case LoadKind::ResistiveInductive:
            a(2, kILoad1) = p.load.inductance / h + p.load.resistance;
            a(2, kVc1) = -1.0;
            break;
        case LoadKind::ConstantPower:
            a(2, kILoad1) = 1.0;
            break;
        }
    } else {
        a(0, kIL1) = 1.0;
        a(1, kVc1) = 1.0;
        a(2, kILoad1) = 1.0;
    }

    if (iso_) {
        const auto& p = *iso_;
        const double n = p.turns_ratio;
        a(3, kVc2) = p.c_dc2 / h;
        a(3, kIPrim) = -1.0;
        if (magnetizing_finite(p)) {
            a(4, kIm) = p.l_m / h;
            a(4, kVPrim) = -1.0;
        } else {
            a(4, kIm) = 1.0;
        }
        a(5, kIPrim) = 1.0;
        a(5, kIm) = -1.0;
        a(5, kISec) = -n;
        a(6, kIL1) = r12;
        a(6, kIPrim) = r22;
        a(6, kVc2) = 1.0;
        a(6, kVPrim) = 1.0;
        if (polarity != 0) {
            a(7, kISec) = p.l_es / h + p.diode_resistance;
            a(7, kVPrim) = -n;
            a(7, kVc3) = static_cast<double>(polarity);
        } else {
            a(7, kISec) = 1.0;
        }
        a(8, kVc3) = p.c_dc3 / h;
        a(8, kISec) = -static_cast<double>(polarity);
        if (p.load.kind != LoadKind::ConstantPower) {
            a(8, kVc3) += 1.0 / p.load.resistance;
        }
    } else {
        for (int k = kVc2; k <= kVc3; ++k) a(k, k) = 1.0;
    }
    return cache_.emplace(key, Eigen::PartialPivLU<Matrix>(a)).first->second;
}

CircuitSolver::Vector CircuitSolver::solve(const CircuitState& x, const ConnectionVector& s,
                                           const Eigen::VectorXd& duty, int polarity) {
    const double h = dt_;
    Vector b = Vector::Zero();
    if (main_) {
        const auto& p = *main_;
        double e1 = 0.0;
        for (std::size_t i = main_span_.first; i < main_span_.last(); ++i) {
            e1 += duty[static_cast<Eigen::Index>(i)] * modules_[i].v_nom;
        }
        b[0] = e1 + p.l1 / h * x.i_l1;
        b[1] = p.c_dc1 / h * x.v_cdc1;
        if (p.load.kind == LoadKind::ResistiveInductive) {
            b[2] = p.load.inductance / h * x.i_load1;
        } else if (p.load.kind == LoadKind::ConstantPower) {
            b[2] = constant_power_current(p.load.power, x.v_cdc1);
        }
    }
    if (iso_) {
        const auto& p = *iso_;
        double e2 = 0.0;
        for (std::size_t i = iso_span_.first; i < iso_span_.last(); ++i) {
            e2 += duty[static_cast<Eigen::Index>(i)] * modules_[i].v_nom;
        }
        b[3] = p.c_dc2 / h * x.v_cdc2;
        if (magnetizing_finite(p)) b[4] = p.l_m / h * x.i_m;
        b[6] = e2;
        if (polarity != 0) {
            b[7] = -2.0 * static_cast<double>(polarity) * p.diode_drop + p.l_es / h * x.i_sec;
        }
        b[8] = p.c_dc3 / h * x.v_cdc3;
        if (p.load.kind == LoadKind::ConstantPower) {
            b[8] -= constant_power_current(p.load.power, x.v_cdc3);
        }
    }
    return factor(s, polarity).solve(b);
}

CircuitState CircuitSolver::step(const CircuitState& state, const ConnectionVector& s) {
    return step(state, s, s.cast<double>());
}

CircuitState CircuitSolver::step(const CircuitState& state, const ConnectionVector& s,
                                 const Eigen::Ref<const Eigen::VectorXd>& duty_in) {
    if (static_cast<std::size_t>(s.size()) != modules_.size() || duty_in.size() != s.size()) {
        throw DimensionError("connection vector length does not match module count");
    }
    const Eigen::VectorXd duty = duty_in;
    int polarity = 0;
    if (iso_ && iso_->l_es > 0.0 && state.bridge_polarity != 0) {
        polarity = state.bridge_polarity;
    }
    Vector x = solve(state, s, duty, polarity);
    if (iso_) {
        const double n = iso_->turns_ratio;
        for (int iter = 0; iter < 4; ++iter) {
            int next = polarity;
            if (polarity != 0) {
                if (static_cast<double>(polarity) * x[kISec] < 0.0) next = 0;
            } else {
                const double v_open = n * x[kVPrim];
                const double threshold = x[kVc3] + 2.0 * iso_->diode_drop;
                if (v_open > threshold) {
                    next = 1;
                } else if (v_open < -threshold) {
                    next = -1;
                }
            }
            if (next == polarity) break;
            polarity = next;
            x = solve(state, s, duty, polarity);
        }
        if (polarity != 0 && static_cast<double>(polarity) * x[kISec] < 0.0) {
            polarity = 0;
            x = solve(state, s, duty, polarity);
        }
    }

    CircuitState out;
    out.t = state.t + dt_;
    out.i_l1 = x[kIL1];
    out.v_cdc1 = x[kVc1];
    out.i_load1 = x[kILoad1];
    out.v_cdc2 = x[kVc2];
    out.i_m = x[kIm];
    out.i_prim = x[kIPrim];
    out.i_sec = x[kISec];
    out.v_cdc3 = x[kVc3];
    out.bridge_polarity = polarity;
    if (iso_) {
        out.i_load2 = iso_->load.kind == LoadKind::ConstantPower
                          ? constant_power_current(iso_->load.power, state.v_cdc3)
                          : out.v_cdc3 / iso_->load.resistance;
    }

    static constexpr const char* names[] = {"i_L1", "v_Cdc1", "i_load1", "v_Cdc2", "i_m",
                                            "i_prim", "v_prim", "i_sec", "v_Cdc3"};
    for (int k = 0; k < 9; ++k) {
        if (!std::isfinite(x[k]) || std::abs(x[k]) > kRunawayLimit) {
            throw InstabilityError(names[k], out.t);
        }
    }
    return out;
}

StepPower CircuitSolver::power(const CircuitState& x, const ConnectionVector& s) const {
    return power(x, s, s.cast<double>());
}

StepPower CircuitSolver::power(const CircuitState& x, const ConnectionVector& s,
                               const Eigen::Ref<const Eigen::VectorXd>& duty) const {
    StepPower p;
    for (std::size_t i = 0; i < modules_.size(); ++i) {
        double current = 0.0;
        if (main_ && main_span_.contains(i)) current += x.i_l1;
        if (iso_ && iso_span_.contains(i)) current += x.i_prim;
        p.battery += duty[static_cast<Eigen::Index>(i)] * modules_[i].v_nom * current;
        p.losses += module_resistance(i, s) * current * current;
    }
    if (main_) {
        const auto& m = *main_;
        p.losses += m.r_ldc * x.i_l1 * x.i_l1;
        p.loads += x.v_cdc1 * x.i_load1;
        p.stored += 0.5 * m.l1 * x.i_l1 * x.i_l1 + 0.5 * m.c_dc1 * x.v_cdc1 * x.v_cdc1;
    }
    if (iso_) {
        const auto& q = *iso_;
        const double i_rect = x.i_bridge();
        p.losses += q.diode_resistance * x.i_sec * x.i_sec + 2.0 * q.diode_drop * i_rect;
        p.loads += x.v_cdc3 * x.i_load2;
        p.stored += 0.5 * q.c_dc2 * x.v_cdc2 * x.v_cdc2 + 0.5 * q.l_es * x.i_sec * x.i_sec +
                    0.5 * q.c_dc3 * x.v_cdc3 * x.v_cdc3;
        if (magnetizing_finite(q)) p.stored += 0.5 * q.l_m * x.i_m * x.i_m;
    }
    return p;
}

CircuitState step(const CircuitState& state, const ConnectionVector& s, const StringTopology& topology,
                  const SimConfig& cfg) {
    CircuitSolver solver(topology, cfg.dt);
    return solver.step(state, s);
}

double StepSeries::at(double t) const {
    if (steps.empty()) return 0.0;
    double v = steps.front().second;
    for (const auto& [ts, value] : steps) {
        if (ts <= t) {
            v = value;
        } else {
            break;
        }
    }
    return v;
}

namespace {

LoadModel with_value(LoadModel load, double value) {
    if (load.kind == LoadKind::ConstantPower) {
        load.power = value;
    } else {
        load.resistance = value;
    }
    return load;
}

double slew(double current, double target, double max_step) {
    if (!(max_step > 0.0)) return target;
    return current + std::clamp(target - current, -max_step, max_step);
}

struct WindowSet {
    std::vector<std::pair<double, double>> windows;
    [[nodiscard]] bool contains(double t) const {
        return std::any_of(windows.begin(), windows.end(),
                           [t](const auto& w) { return t >= w.first && t <= w.second; });
    }
};

}  // namespace

TimeSeries run(const StringTopology& topology, Controller& controller, const SimConfig& cfg,
               const ReferenceSchedule& schedule, const CircuitState& initial) {
    const std::size_t n_modules = topology.module_count();
    std::vector<ModuleSpan> spans;
    for (const auto& p : topology.ports) spans.push_back(p.span);
    const CarrierSet carriers = build_carriers(n_modules, spans, cfg.f_sw, cfg.slot_policy);
    if (!(cfg.dt > 0.0) || cfg.dt > carriers.t_sw_eff() / 200.0 * (1.0 + 1e-12)) {
        throw ConfigError("dt_s", "solver step must be in (0, T_sw,eff/200]");
    }
    const double control_period = cfg.control_period > 0.0 ? cfg.control_period : carriers.t_sw();
    if (control_period < cfg.dt) {
        throw ConfigError("control_period_s", "controller period must be >= dt");
    }

    CircuitSolver solver(topology, cfg.dt);
    TimeSeries series;
    series.dt = cfg.dt;
    const std::size_t n_steps = cfg.step_count();
    if (n_steps == 0) {
        return series;
    }

    const auto steps_per_update = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(control_period / cfg.dt)));
    const std::size_t steps_per_sample =
        cfg.sample_period > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.sample_period / cfg.dt)))
                                : 1;
    const WindowSet dense{cfg.dense_windows};

    std::size_t first_outside = 0;
    bool found_outside = false;
    for (std::size_t i = 0; i < n_modules; ++i) {
        if (!(solver.has_isolated() && solver.isolated_span().contains(i))) {
            first_outside = i;
            found_outside = true;
            break;
        }
    }
    const std::size_t shared = solver.has_isolated() ? solver.isolated_span().first : first_outside;
    if (!found_outside) first_outside = shared;

    double load1 = std::numeric_limits<double>::quiet_NaN();
    double load2 = std::numeric_limits<double>::quiet_NaN();
    auto apply_loads = [&](double t) {
        if (solver.has_main() && !schedule.load1.empty()) {
            const double v = schedule.load1.at(t);
            if (v != load1) {
                load1 = v;
                solver.set_main_load(with_value(solver.main_params().load, v));
            }
        }
        if (solver.has_isolated() && !schedule.load2.empty()) {
            const double v = schedule.load2.at(t);
            if (v != load2) {
                load2 = v;
                solver.set_isolated_load(with_value(solver.isolated_params().load, v));
            }
        }
    };

    CircuitState state = initial;
    state.t = 0.0;
    apply_loads(0.0);

    ConnectionVector s = modulate(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_modules)), carriers, 0.0);
    Eigen::VectorXd duty = s.cast<double>();
    auto record = [&](const CircuitState& x, const Eigen::VectorXd& m) {
        Sample smp;
        smp.t = x.t;
        smp.v_dc1 = x.v_cdc1;
        smp.i_dc1 = x.i_l1;
        smp.v_dc2 = x.v_cdc3;
        smp.i_d = x.i_bridge();
        smp.m_1 = m[static_cast<Eigen::Index>(first_outside)];
        smp.m_2 = m[static_cast<Eigen::Index>(shared)];
        smp.v_dc1_ref = schedule.v_dc1_ref.at(x.t);
        smp.v_dc2_ref = schedule.v_dc2_ref.at(x.t);
        smp.v_cdc2 = x.v_cdc2;
        smp.i_c1 = x.i_l1 - x.i_load1;
        smp.i_c2 = x.i_prim;
        smp.i_c3 = x.i_bridge() - x.i_load2;
        smp.power = solver.power(x, s, duty);
        series.samples.push_back(smp);
    };

    double acc_v1 = 0.0;
    double acc_v2 = 0.0;
    std::size_t acc_n = 0;
    References refs{schedule.v_dc1_ref.at(0.0), schedule.v_dc2_ref.at(0.0)};
    Eigen::VectorXd m = controller.update({0.0, state.v_cdc1, state.v_cdc3}, refs, control_period);
    if (static_cast<std::size_t>(m.size()) != n_modules) {
        throw DimensionError("controller returned the wrong number of modulation indices");
    }
    s = modulate(m, carriers, 0.0);
    duty = s.cast<double>();
    record(state, m);

    for (std::size_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * cfg.dt;
        if (k > 0 && k % steps_per_update == 0) {
            const Measurements meas{t, acc_v1 / static_cast<double>(acc_n), acc_v2 / static_cast<double>(acc_n)};
            refs.v_dc1 = slew(refs.v_dc1, schedule.v_dc1_ref.at(t), cfg.ref_slew_v_dc1 * control_period);
            refs.v_dc2 = slew(refs.v_dc2, schedule.v_dc2_ref.at(t), cfg.ref_slew_v_dc2 * control_period);
            m = controller.update(meas, refs, control_period);
            acc_v1 = acc_v2 = 0.0;
            acc_n = 0;
        }
        apply_loads(t);
        s = modulate(m, carriers, t + 0.5 * cfg.dt);
        duty = series_fraction(m, carriers, t, t + cfg.dt);
        state = solver.step(state, s, duty);
        state.t = static_cast<double>(k + 1) * cfg.dt;
        acc_v1 += state.v_cdc1;
        acc_v2 += state.v_cdc3;
        ++acc_n;
        if ((k + 1) % steps_per_sample == 0 || dense.contains(state.t)) {
            record(state, m);
        }
    }
    return series;
}

void write_time_series_csv(std::ostream& os, const TimeSeries& series) {
    os << "# schema_version=1\n";
    os << "t_s,v_dc1_V,i_dc1_A,v_dc2_V,i_d_A,m_1,m_2\n";
    const auto old_precision = os.precision();
    os << std::setprecision(10);
    for (const auto& s : series.samples) {
        os << s.t << ',' << s.v_dc1 << ',' << s.i_dc1 << ',' << s.v_dc2 << ',' << s.i_d << ',' << s.m_1 << ','
           << s.m_2 << '\n';
    }
    os.precision(old_precision);
}

namespace {

std::pair<std::size_t, std::size_t> window_range(const TimeSeries& series, double t0, double t1) {
    const auto& v = series.samples;
    const auto lo = std::lower_bound(v.begin(), v.end(), t0, [](const Sample& s, double t) { return s.t < t; });
    const auto hi = std::upper_bound(v.begin(), v.end(), t1, [](double t, const Sample& s) { return t < s.t; });
    if (!(t1 > t0) || hi - lo < 2) {
        throw DomainError("metrics window holds fewer than two samples");
    }
    return {static_cast<std::size_t>(lo - v.begin()), static_cast<std::size_t>(hi - v.begin())};
}

void require_dense(const TimeSeries& series, std::size_t first, std::size_t last) {
    for (std::size_t k = first + 1; k < last; ++k) {
        const double gap = series.samples[k].t - series.samples[k - 1].t;
        if (std::abs(gap - series.dt) > 1e-6 * series.dt) {
            throw DomainError("window is not sampled at every solver step");
        }
    }
}

}  // namespace

WindowMetrics metrics(const TimeSeries& series, Signal signal, double t0, double t1) {
    const auto [first, last] = window_range(series, t0, t1);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    double ref_sum = 0.0;
    double max_dev = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        const auto& s = series.samples[k];
        const double v = signal == Signal::VDc1 ? s.v_dc1 : s.v_dc2;
        const double ref = signal == Signal::VDc1 ? s.v_dc1_ref : s.v_dc2_ref;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
        ref_sum += ref;
        if (ref != 0.0) max_dev = std::max(max_dev, std::abs(v - ref) / std::abs(ref));
    }
    const auto n = static_cast<double>(last - first);
    WindowMetrics out;
    out.mean = sum / n;
    out.ripple_pct = out.mean != 0.0 ? (hi - lo) / std::abs(out.mean) * 100.0 : 0.0;
    out.max_deviation_pct = max_dev * 100.0;
    const double ref_mean = ref_sum / n;
    out.steady_state_error_pct = ref_mean != 0.0 ? std::abs(out.mean - ref_mean) / std::abs(ref_mean) * 100.0 : 0.0;
    return out;
}

double charge_balance(const TimeSeries& series, Capacitor cap, double capacitance, double t0, double t1) {
    const auto [first, last] = window_range(series, t0, t1);
    require_dense(series, first, last);
    auto voltage = [cap](const Sample& s) {
        switch (cap) {
        case Capacitor::Cdc1: return s.v_dc1;
        case Capacitor::Cdc2: return s.v_cdc2;
        case Capacitor::Cdc3: return s.v_dc2;
        }
        return 0.0;
    };
    auto current = [cap](const Sample& s) {
        switch (cap) {
        case Capacitor::Cdc1: return s.i_c1;
        case Capacitor::Cdc2: return s.i_c2;
        case Capacitor::Cdc3: return s.i_c3;
        }
        return 0.0;
    };
    double pumped = 0.0;
    for (std::size_t k = first + 1; k < last; ++k) {
        pumped += std::max(current(series.samples[k]), 0.0) * series.dt;
    }
    const double net = capacitance * (voltage(series.samples[last - 1]) - voltage(series.samples[first]));
    return pumped > 0.0 ? std::abs(net) / pumped : 0.0;
}

double power_balance(const TimeSeries& series, double t0, double t1) {
    const auto [first, last] = window_range(series, t0, t1);
    require_dense(series, first, last);
    double battery = 0.0;
    double sinks = 0.0;
    for (std::size_t k = first + 1; k < last; ++k) {
        const auto& p = series.samples[k].power;
        battery += p.battery * series.dt;
        sinks += (p.losses + p.loads) * series.dt;
    }
    const double stored = series.samples[last - 1].power.stored - series.samples[first].power.stored;
    return battery != 0.0 ? std::abs(battery - sinks - stored) / std::abs(battery) : 0.0;
}

double simulated_isolated_output(double m, std::size_t L, std::size_t n_c, double v_m, const IsolatedParams& params,
                                 double f_sw_eff) {
    if (L == 0 || L > n_c) throw DomainError("port length must be in [1, n_c]");
    StringTopology topo;
    topo.modules.assign(n_c, BatteryModule{v_m, 0.0, 0.0, ConnectionMode::Series});
    topo.ports.push_back({PortKind::Isolated, ModuleSpan{0, L}, params});

    const double f_sw = f_sw_eff / static_cast<double>(n_c);
    const auto carriers = build_carriers(n_c, {ModuleSpan{0, L}}, f_sw, SlotPolicy::Consecutive);
    const double dt = carriers.t_sw_eff() / 200.0;
    const auto pulse = L == n_c ? characterize_symmetric(m, L, v_m, params.turns_ratio)
                                : characterize_asymmetric(m, L, n_c, v_m, params.turns_ratio);

    CircuitState x;
    x.v_cdc2 = pulse.v_dc;
    x.v_cdc3 = pulse.v_dc2;
    double r_load = params.load.kind == LoadKind::ConstantPower && params.load.power > 0.0
                        ? pulse.v_dc2 * pulse.v_dc2 / params.load.power
                        : params.load.resistance;
    if (!(r_load > 0.0)) throw DomainError("isolated load needs a resistance or a power > 0");
    const double i_out = pulse.v_dc2 / r_load;
    x.i_m = (pulse.v_p_plus >= -pulse.v_p_minus ? -1.0 : 1.0) * params.turns_ratio * i_out;

    CircuitSolver solver(topo, dt);
    const double t_sw = carriers.t_sw();
    const double settle = std::min(0.2, std::max(40.0 * t_sw, 5.0 * r_load * params.c_dc3));
    const auto settle_steps = static_cast<std::size_t>(std::ceil(settle / t_sw)) * static_cast<std::size_t>(std::llround(t_sw / dt));
    const auto window_steps = 10 * static_cast<std::size_t>(std::llround(t_sw / dt));
    const Eigen::VectorXd mv = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_c), m);
    double acc = 0.0;
    for (std::size_t k = 0; k < settle_steps + window_steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        x = solver.step(x, modulate(mv, carriers, t + 0.5 * dt), series_fraction(mv, carriers, t, t + dt));
        if (k >= settle_steps) acc += x.v_cdc3;
    }
    return acc / static_cast<double>(window_steps);
}

double simulated_les_bound(double m, std::size_t L, std::size_t n_c, double v_m, const IsolatedParams& params,
                           double p_load2, double f_sw_eff) {
    if (!(p_load2 > 0.0)) throw DomainError("load power must be > 0");
    const auto pulse = L == n_c ? characterize_symmetric(m, L, v_m, params.turns_ratio)
                                : characterize_asymmetric(m, L, n_c, v_m, params.turns_ratio);
    if (!(pulse.v_dc2 > 0.0)) throw DomainError("isolated output is zero at this operating point");
    IsolatedParams p = params;
    p.load = LoadModel{LoadKind::Resistive, pulse.v_dc2 * pulse.v_dc2 / p_load2, 0.0, 0.0};
    const double target = 0.95 * pulse.v_dc2;

    auto output = [&](double l_es) {
        p.l_es = l_es;
        return simulated_isolated_output(m, L, n_c, v_m, p, f_sw_eff);
    };
    // A vanishing leakage lets the dc-block capacitor swing within each pulse,
    // so the search starts at a small finite value and walks up to the first
    // inductance that meets the gain, then on to the first that does not.
    double lo = 0.0;
    double hi = 1e-8;
    bool met = false;
    for (; hi <= 1.0; hi *= 2.0) {
        const bool ok = output(hi) >= target;
        if (ok) {
            met = true;
            lo = hi;
        } else if (met) {
            break;
        }
    }
    if (!met) return 0.0;
    if (hi > 1.0) return std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 6; ++iter) {
        const double mid = std::sqrt(lo * hi);
        if (output(mid) >= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

}  // namespace mrb
