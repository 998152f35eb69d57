#include "mrb/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "mrb/errors.hpp"
#include "mrb/waveform_analytics.hpp"

namespace mrb {

namespace pt = boost::property_tree;

namespace {

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(trim(item));
    return out;
}

double parse_double(const std::string& text, const std::string& field) {
    const std::string t = trim(text);
    if (t.empty()) throw ConfigError(field, "expected a number");
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || std::isnan(v)) {
        throw ConfigError(field, "'" + t + "' is not a number");
    }
    return v;
}

/// Reads typed values out of the INI tree and remembers what it resolved.
class Reader {
public:
    Reader(const pt::ptree& tree, ScenarioConfig& cfg) : tree_(tree), cfg_(cfg) {}

    [[nodiscard]] bool has_section(const std::string& sec) const { return tree_.get_child_optional(sec).has_value(); }

    /// Value in the file's unit, times `scale`. A missing key takes `fallback` (in file units).
    double number(const std::string& sec, const std::string& key, std::optional<double> fallback, double scale = 1.0,
                  bool allow_inf = false) {
        const std::string field = sec + "." + key;
        double v = 0.0;
        if (auto raw = raw_value(sec, key)) {
            v = parse_double(*raw, field);
        } else if (fallback) {
            v = *fallback;
        } else {
            throw ConfigError(field, "required key is missing");
        }
        if (!allow_inf && !std::isfinite(v)) throw ConfigError(field, "must be finite");
        record(sec, key, format_number(v));
        return v * scale;
    }

    std::size_t count(const std::string& sec, const std::string& key, std::optional<double> fallback) {
        const double v = number(sec, key, fallback);
        if (v < 0.0 || v != std::floor(v)) throw ConfigError(sec + "." + key, "must be a non-negative integer");
        return static_cast<std::size_t>(v);
    }

    std::string word(const std::string& sec, const std::string& key, const std::string& fallback,
                     std::initializer_list<const char*> allowed) {
        const std::string field = sec + "." + key;
        const std::string v = trim(raw_value(sec, key).value_or(fallback));
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return v == a; });
        if (!ok) {
            std::string list;
            for (const char* a : allowed) list += (list.empty() ? "" : "|") + std::string(a);
            throw ConfigError(field, "'" + v + "' is not one of " + list);
        }
        record(sec, key, v);
        return v;
    }

    std::string text(const std::string& sec, const std::string& key, const std::string& fallback) {
        const std::string v = trim(raw_value(sec, key).value_or(fallback));
        if (v.empty()) throw ConfigError(sec + "." + key, "must not be empty");
        record(sec, key, v);
        return v;
    }

    std::vector<std::pair<double, double>> pairs(const std::string& sec, const std::string& key,
                                                 std::optional<std::string> fallback) {
        const std::string field = sec + "." + key;
        auto raw = raw_value(sec, key);
        if (!raw && !fallback) throw ConfigError(field, "required key is missing");
        const std::string text = raw ? *raw : *fallback;
        std::vector<std::pair<double, double>> out;
        std::string normalized;
        for (const auto& item : split(text, ',')) {
            if (item.empty()) continue;
            const auto parts = split(item, ':');
            if (parts.size() != 2) throw ConfigError(field, "expected 'a:b' pairs separated by commas");
            out.emplace_back(parse_double(parts[0], field), parse_double(parts[1], field));
            normalized += (normalized.empty() ? "" : ", ") + format_number(out.back().first) + ":" +
                          format_number(out.back().second);
        }
        record(sec, key, normalized);
        return out;
    }

    StepSeries schedule(const std::string& sec, const std::string& key, std::optional<std::string> fallback) {
        StepSeries s;
        s.steps = pairs(sec, key, std::move(fallback));
        const std::string field = sec + "." + key;
        for (std::size_t k = 0; k < s.steps.size(); ++k) {
            if (s.steps[k].first < 0.0) throw ConfigError(field, "step times must be >= 0");
            if (k > 0 && !(s.steps[k].first > s.steps[k - 1].first)) {
                throw ConfigError(field, "step times must be strictly increasing");
            }
        }
        return s;
    }

    std::vector<double> list(const std::string& sec, const std::string& key) {
        const std::string field = sec + "." + key;
        std::vector<double> out;
        auto raw = raw_value(sec, key);
        if (!raw) return out;
        std::string normalized;
        for (const auto& item : split(*raw, ',')) {
            if (item.empty()) continue;
            out.push_back(parse_double(item, field));
            normalized += (normalized.empty() ? "" : ", ") + format_number(out.back());
        }
        record(sec, key, normalized);
        return out;
    }

    /// Every key in the file must have been read; catches misspelled units.
    void reject_unknown() const {
        for (const auto& [sec, body] : tree_) {
            if (body.empty() && !body.data().empty()) throw ConfigError(sec, "key outside any section");
            for (const auto& [key, value] : body) {
                if (!used_.count(sec + "." + key)) throw ConfigError(sec + "." + key, "unknown key");
            }
        }
    }

private:
    std::optional<std::string> raw_value(const std::string& sec, const std::string& key) {
        used_.insert(sec + "." + key);
        auto section = tree_.get_child_optional(sec);
        if (!section) return std::nullopt;
        auto v = section->get_optional<std::string>(key);
        if (!v) return std::nullopt;
        return *v;
    }

    void record(const std::string& sec, const std::string& key, std::string value) {
        cfg_.resolved[sec][key] = std::move(value);
    }

    const pt::ptree& tree_;
    ScenarioConfig& cfg_;
    std::set<std::string> used_;
};

LoadModel read_load(Reader& r, const std::string& sec, StepSeries& schedule, bool allow_rl) {
    LoadModel load;
    const std::string kind = allow_rl ? r.word(sec, "load", "resistive", {"resistive", "rl", "constant_power"})
                                      : r.word(sec, "load", "resistive", {"resistive", "constant_power"});
    if (kind == "constant_power") {
        load.kind = LoadKind::ConstantPower;
        schedule = r.schedule(sec, "load_P_W", std::nullopt);
        load.power = schedule.steps.empty() ? 0.0 : schedule.steps.front().second;
    } else {
        load.kind = kind == "rl" ? LoadKind::ResistiveInductive : LoadKind::Resistive;
        schedule = r.schedule(sec, "load_R_Ohm", std::nullopt);
        load.resistance = schedule.steps.empty() ? 0.0 : schedule.steps.front().second;
        if (load.kind == LoadKind::ResistiveInductive) load.inductance = r.number(sec, "load_L_mH", std::nullopt, 1e-3);
    }
    if (schedule.steps.empty()) throw ConfigError(sec + ".load", "load schedule is empty");
    for (const auto& [t, v] : schedule.steps) {
        if (load.kind == LoadKind::ConstantPower ? v < 0.0 : !(v > 0.0)) {
            throw ConfigError(sec + ".load", "load values must be > 0 (resistance) or >= 0 (power)");
        }
    }
    return load;
}

PIState read_pi(Reader& r, const std::string& prefix, const PIState& fallback) {
    PIState pi;
    pi.kp = r.number("control", prefix + "_kp", fallback.kp);
    pi.ki = r.number("control", prefix + "_ki", fallback.ki);
    pi.out_min = r.number("control", prefix + "_min", fallback.out_min);
    pi.out_max = r.number("control", prefix + "_max", fallback.out_max);
    if (!(pi.out_min <= pi.out_max)) throw ConfigError("control." + prefix + "_min", "must be <= " + prefix + "_max");
    return pi;
}

pt::ptree read_ini_stripped(std::istream& is) {
    // Inline comments are allowed after values.
    std::ostringstream clean;
    std::string line;
    while (std::getline(is, line)) {
        const auto cut = line.find_first_of(";#");
        clean << (cut == std::string::npos ? line : line.substr(0, cut)) << '\n';
    }
    std::istringstream in(clean.str());
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("file", e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return tree;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& is) {
    const pt::ptree tree = read_ini_stripped(is);
    ScenarioConfig cfg;
    Reader r(tree, cfg);

    cfg.name = r.text("scenario", "name", "scenario");

    const std::size_t n = r.count("string", "modules", std::nullopt);
    const double v_module = r.number("string", "v_module_V", std::nullopt);
    const double r_int = r.number("string", "r_internal_mOhm", 0.0, 1e-3);
    const double r_switch = r.number("string", "r_switch_mOhm", 0.0, 1e-3);
    cfg.topology.modules.assign(n, BatteryModule{v_module, r_int, r_switch, ConnectionMode::Series});

    cfg.sim.f_sw = r.number("modulation", "f_sw_Hz", std::nullopt);
    cfg.sim.slot_policy = r.word("modulation", "slot_policy", "interleave", {"interleave", "consecutive"}) == "interleave"
                              ? SlotPolicy::InterleaveDivisors
                              : SlotPolicy::Consecutive;

    if (r.has_section("main_port")) {
        const std::string sec = "main_port";
        PortBinding port;
        port.kind = PortKind::NonIsolated;
        port.span.first = r.count(sec, "first_module", 0.0);
        port.span.count = r.count(sec, "module_count", static_cast<double>(n));
        NonIsolatedParams p;
        p.l1 = r.number(sec, "L_dc_uH", std::nullopt, 1e-6);
        p.c_dc1 = r.number(sec, "C_dc1_uF", std::nullopt, 1e-6);
        p.r_ldc = r.number(sec, "R_ldc_mOhm", 0.0, 1e-3);
        p.load = read_load(r, sec, cfg.schedule.load1, true);
        port.params = p;
        cfg.topology.ports.push_back(port);
    }
    if (r.has_section("isolated_port")) {
        const std::string sec = "isolated_port";
        PortBinding port;
        port.kind = PortKind::Isolated;
        port.span.first = r.count(sec, "first_module", 0.0);
        port.span.count = r.count(sec, "module_count", static_cast<double>(n));
        IsolatedParams p;
        p.c_dc2 = r.number(sec, "C_dc2_uF", std::nullopt, 1e-6);
        p.c_dc3 = r.number(sec, "C_dc3_mF", std::nullopt, 1e-3);
        p.turns_ratio = r.number(sec, "turns_ratio", 1.0);
        p.l_es = r.number(sec, "L_es_uH", 0.0, 1e-6);
        p.l_m = r.number(sec, "L_m_mH", std::numeric_limits<double>::infinity(), 1e-3, true);
        p.diode_resistance = r.number(sec, "R_d_mOhm", 0.0, 1e-3);
        p.diode_drop = r.number(sec, "V_f_V", 0.0);
        p.load = read_load(r, sec, cfg.schedule.load2, false);
        port.params = p;
        cfg.topology.ports.push_back(port);
    }

    cfg.schedule.v_dc1_ref = r.schedule("references", "v_dc1_V", std::string("0:0"));
    cfg.schedule.v_dc2_ref = r.schedule("references", "v_dc2_V", std::string("0:0"));
    cfg.sim.ref_slew_v_dc1 = r.number("references", "slew_v_dc1_V_per_s", 0.0);
    cfg.sim.ref_slew_v_dc2 = r.number("references", "slew_v_dc2_V_per_s", 0.0);

    auto& c = cfg.control;
    const std::string mode = r.word("control", "mode", "symmetric", {"symmetric", "asymmetric", "open_loop"});
    c.mode = mode == "symmetric" ? ControlMode::Symmetric
             : mode == "asymmetric" ? ControlMode::Asymmetric
                                    : ControlMode::OpenLoop;
    cfg.sim.control_period = r.number("control", "period_s", 0.0);
    c.candidate_form = r.word("control", "candidate_form", "duty_exact", {"duty_exact", "literal"}) == "literal"
                           ? CandidateForm::Literal
                           : CandidateForm::DutyExact;
    c.coupling = r.word("control", "coupling", "dc_consistent", {"dc_consistent", "literal"}) == "literal"
                     ? CouplingMode::Literal
                     : CouplingMode::DcConsistent;
    c.profile_source = r.word("control", "profile_source", "analytic", {"analytic", "oracle"}) == "oracle"
                           ? ProfileSource::Oracle
                           : ProfileSource::Analytic;
    c.profile_step = r.number("control", "profile_step", 0.001);
    c.pi = read_pi(r, "pi", c.pi);
    c.pi1 = read_pi(r, "pi1", c.pi1);
    c.pi2 = read_pi(r, "pi2", c.pi2);
    c.open_loop_m = r.list("control", "open_loop_m");

    cfg.sim.dt = r.number("simulation", "dt_s", std::nullopt);
    cfg.sim.duration = r.number("simulation", "duration_s", std::nullopt);
    cfg.sim.sample_period = r.number("simulation", "sample_period_s", 0.0);

    cfg.initial.v_cdc1 = r.number("initial", "v_cdc1_V", 0.0);
    cfg.initial.v_cdc2 = r.number("initial", "v_cdc2_V", 0.0);
    cfg.initial.v_cdc3 = r.number("initial", "v_cdc3_V", 0.0);

    cfg.metric_windows = r.pairs("metrics", "windows_s", std::string(""));

    cfg.outputs.timeseries = r.text("output", "timeseries", "timeseries.csv");
    cfg.outputs.metrics = r.text("output", "metrics", "metrics.json");
    cfg.outputs.manifest = r.text("output", "manifest", "manifest.ini");

    r.reject_unknown();
    validate(cfg);
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("file", "cannot open " + path.string());
    return parse_scenario(is);
}

void write_manifest(std::ostream& os, const ScenarioConfig& cfg) {
    os << "; schema_version=1\n";
    os << "; resolved configuration of scenario '" << cfg.name << "'\n";
    for (const auto& [sec, keys] : cfg.resolved) {
        os << "\n[" << sec << "]\n";
        for (const auto& [key, value] : keys) os << key << " = " << value << '\n';
    }
}

void validate(const ScenarioConfig& cfg) {
    const auto problems = validate_topology(cfg.topology);
    if (!problems.empty()) {
        std::string all;
        for (const auto& p : problems) all += (all.empty() ? "" : "; ") + p;
        throw ConfigError("topology", all);
    }
    if (!(cfg.sim.f_sw > 0.0)) throw ConfigError("modulation.f_sw_Hz", "must be > 0");

    std::vector<ModuleSpan> spans;
    for (const auto& p : cfg.topology.ports) spans.push_back(p.span);
    const auto carriers = build_carriers(cfg.topology.module_count(), spans, cfg.sim.f_sw, cfg.sim.slot_policy);
    const double dt_max = carriers.t_sw_eff() / 200.0;
    if (!(cfg.sim.dt > 0.0) || cfg.sim.dt > dt_max * (1.0 + 1e-12)) {
        throw ConfigError("simulation.dt_s", "must be in (0, T_sw,eff/200] = (0, " + format_number(dt_max) + "]");
    }
    if (!(cfg.sim.duration >= 0.0)) throw ConfigError("simulation.duration_s", "must be >= 0");
    if (cfg.sim.sample_period < 0.0) throw ConfigError("simulation.sample_period_s", "must be >= 0");
    const double period = cfg.sim.control_period > 0.0 ? cfg.sim.control_period : carriers.t_sw();
    if (period < cfg.sim.dt) throw ConfigError("control.period_s", "must be >= dt");
    if (cfg.sim.ref_slew_v_dc1 < 0.0) throw ConfigError("references.slew_v_dc1_V_per_s", "must be >= 0");
    if (cfg.sim.ref_slew_v_dc2 < 0.0) throw ConfigError("references.slew_v_dc2_V_per_s", "must be >= 0");

    for (const auto& [t0, t1] : cfg.metric_windows) {
        if (!(t1 > t0) || t0 < 0.0 || t1 > cfg.sim.duration) {
            throw ConfigError("metrics.windows_s", "windows must satisfy 0 <= t0 < t1 <= duration");
        }
    }

    const PortBinding* iso = find_port(cfg.topology, PortKind::Isolated);
    const double n = static_cast<double>(cfg.topology.module_count());
    const double v_m = mean_module_voltage(cfg.topology.modules);
    for (const auto& [t, v] : cfg.schedule.v_dc1_ref.steps) {
        if (v < 0.0 || v > n * v_m) throw ConfigError("references.v_dc1_V", "references must lie in [0, n * v_module]");
    }
    const auto& c = cfg.control;
    switch (c.mode) {
    case ControlMode::Symmetric:
        if (!iso) throw ConfigError("control.mode", "symmetric control needs an isolated port");
        if (iso->span.count != cfg.topology.module_count()) {
            throw ConfigError("control.mode", "symmetric control needs the isolated port on every module");
        }
        break;
    case ControlMode::Asymmetric:
        if (!iso) throw ConfigError("control.mode", "asymmetric control needs an isolated port");
        if (iso->span.count >= cfg.topology.module_count()) {
            throw ConfigError("control.mode", "asymmetric control needs a shared span shorter than the string");
        }
        if (!(c.profile_step > 0.0 && c.profile_step <= 0.1)) {
            throw ConfigError("control.profile_step", "must be in (0, 0.1]");
        }
        break;
    case ControlMode::OpenLoop:
        if (c.open_loop_m.size() != 1 && c.open_loop_m.size() != cfg.topology.module_count()) {
            throw ConfigError("control.open_loop_m", "give one index or one per module");
        }
        for (double m : c.open_loop_m) {
            if (!(m >= 0.0 && m <= 1.0)) throw ConfigError("control.open_loop_m", "indices must lie in [0, 1]");
        }
        break;
    }
}

std::unique_ptr<Controller> make_controller(const ScenarioConfig& cfg) {
    const auto& c = cfg.control;
    const std::size_t n = cfg.topology.module_count();
    const double v_m = mean_module_voltage(cfg.topology.modules);
    switch (c.mode) {
    case ControlMode::Symmetric: {
        const auto& iso = std::get<IsolatedParams>(find_port(cfg.topology, PortKind::Isolated)->params);
        return std::make_unique<SymmetricController>(n, v_m, iso.turns_ratio, c.pi, cfg.schedule.v_dc2_ref.at(0.0),
                                                     c.candidate_form);
    }
    case ControlMode::Asymmetric: {
        const PortBinding* port = find_port(cfg.topology, PortKind::Isolated);
        const auto& iso = std::get<IsolatedParams>(port->params);
        const auto grid = unit_grid(c.profile_step);
        GainProfile profile = c.profile_source == ProfileSource::Oracle
                                  ? gain_profile_oracle(port->span.count, n, v_m, iso.turns_ratio, grid,
                                                        cfg.sim.slot_policy)
                                  : gain_profile(port->span.count, n, v_m, iso.turns_ratio, grid, cfg.sim.slot_policy);
        return std::make_unique<AsymmetricController>(n, port->span, v_m, std::move(profile), c.pi1, c.pi2,
                                                      c.coupling);
    }
    case ControlMode::OpenLoop: {
        Eigen::VectorXd m(static_cast<Eigen::Index>(n));
        if (c.open_loop_m.size() == 1) {
            m.setConstant(c.open_loop_m.front());
        } else {
            for (std::size_t i = 0; i < n; ++i) m[static_cast<Eigen::Index>(i)] = c.open_loop_m[i];
        }
        return std::make_unique<OpenLoopController>(m);
    }
    }
    throw ConfigError("control.mode", "unsupported mode");
}

namespace {

std::vector<TransientReport> transients(const TimeSeries& series, const StepSeries& refs, Signal signal) {
    std::vector<TransientReport> out;
    for (std::size_t k = 1; k < refs.steps.size(); ++k) {
        const auto [t_step, ref] = refs.steps[k];
        const double prev = refs.steps[k - 1].second;
        const double t_end = k + 1 < refs.steps.size() ? refs.steps[k + 1].first
                                                       : std::numeric_limits<double>::infinity();
        if (ref == 0.0) continue;
        const double dir = ref >= prev ? 1.0 : -1.0;
        double worst = 0.0;
        for (const auto& s : series.samples) {
            if (s.t < t_step || s.t >= t_end) continue;
            const double v = signal == Signal::VDc1 ? s.v_dc1 : s.v_dc2;
            worst = std::max(worst, dir * (v - ref) / ref * 100.0);
        }
        out.push_back({signal, t_step, ref, worst});
    }
    return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg_in) {
    validate(cfg_in);
    SimConfig sim = cfg_in.sim;
    for (const auto& w : cfg_in.metric_windows) sim.dense_windows.push_back(w);

    ScenarioResult result;
    const auto controller = make_controller(cfg_in);
    const auto start = std::chrono::steady_clock::now();
    result.series = run(cfg_in.topology, *controller, sim, cfg_in.schedule, cfg_in.initial);
    result.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const PortBinding* main = find_port(cfg_in.topology, PortKind::NonIsolated);
    const PortBinding* iso = find_port(cfg_in.topology, PortKind::Isolated);
    for (const auto& [t0, t1] : cfg_in.metric_windows) {
        WindowReport w;
        w.t0 = t0;
        w.t1 = t1;
        if (main) {
            w.v_dc1 = metrics(result.series, Signal::VDc1, t0, t1);
            w.charge_cdc1 = charge_balance(result.series, Capacitor::Cdc1,
                                           std::get<NonIsolatedParams>(main->params).c_dc1, t0, t1);
        }
        if (iso) {
            const auto& p = std::get<IsolatedParams>(iso->params);
            w.v_dc2 = metrics(result.series, Signal::VDc2, t0, t1);
            w.charge_cdc2 = charge_balance(result.series, Capacitor::Cdc2, p.c_dc2, t0, t1);
            w.charge_cdc3 = charge_balance(result.series, Capacitor::Cdc3, p.c_dc3, t0, t1);
        }
        w.power = power_balance(result.series, t0, t1);
        result.windows.push_back(w);
    }
    if (main) {
        auto t = transients(result.series, cfg_in.schedule.v_dc1_ref, Signal::VDc1);
        result.transients.insert(result.transients.end(), t.begin(), t.end());
    }
    if (iso) {
        auto t = transients(result.series, cfg_in.schedule.v_dc2_ref, Signal::VDc2);
        result.transients.insert(result.transients.end(), t.begin(), t.end());
    }
    return result;
}

void write_metrics_json(std::ostream& os, const ScenarioConfig& cfg, const ScenarioResult& result) {
    using nlohmann::json;
    auto window_metrics = [](const WindowMetrics& m) {
        return json{{"mean_V", m.mean},
                    {"ripple_pct", m.ripple_pct},
                    {"max_deviation_pct", m.max_deviation_pct},
                    {"steady_state_error_pct", m.steady_state_error_pct}};
    };
    json j;
    j["schema_version"] = 1;
    j["scenario"] = cfg.name;
    j["control_mode"] = to_string(cfg.control.mode);
    j["coupling"] = to_string(cfg.control.coupling);
    j["runtime_s"] = result.elapsed_s;
    j["samples"] = result.series.samples.size();
    json windows = json::array();
    json summary{{"v_dc1_ripple_pct", 0.0},
                 {"v_dc2_ripple_pct", 0.0},
                 {"v_dc1_max_deviation_pct", 0.0},
                 {"v_dc1_steady_state_error_pct", 0.0},
                 {"v_dc2_steady_state_error_pct", 0.0},
                 {"charge_imbalance", 0.0},
                 {"power_imbalance", 0.0}};
    auto raise = [&summary](const char* key, double v) { summary[key] = std::max(summary[key].get<double>(), v); };
    for (const auto& w : result.windows) {
        windows.push_back({{"t0_s", w.t0},
                           {"t1_s", w.t1},
                           {"v_dc1", window_metrics(w.v_dc1)},
                           {"v_dc2", window_metrics(w.v_dc2)},
                           {"charge_imbalance", {{"C_dc1", w.charge_cdc1}, {"C_dc2", w.charge_cdc2}, {"C_dc3", w.charge_cdc3}}},
                           {"power_imbalance", w.power}});
        raise("v_dc1_ripple_pct", w.v_dc1.ripple_pct);
        raise("v_dc2_ripple_pct", w.v_dc2.ripple_pct);
        raise("v_dc1_max_deviation_pct", w.v_dc1.max_deviation_pct);
        raise("v_dc1_steady_state_error_pct", w.v_dc1.steady_state_error_pct);
        raise("v_dc2_steady_state_error_pct", w.v_dc2.steady_state_error_pct);
        raise("charge_imbalance", std::max({w.charge_cdc1, w.charge_cdc2, w.charge_cdc3}));
        raise("power_imbalance", w.power);
    }
    j["windows"] = windows;
    json tr = json::array();
    for (const auto& t : result.transients) {
        tr.push_back({{"signal", t.signal == Signal::VDc1 ? "v_dc1" : "v_dc2"},
                      {"t_step_s", t.t_step},
                      {"ref_V", t.ref},
                      {"overshoot_pct", t.overshoot_pct}});
    }
    j["transients"] = tr;
    j["summary"] = summary;
    os << j.dump(2) << '\n';
}

ScenarioResult simulate_to(const ScenarioConfig& cfg, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ScenarioResult result = run_scenario(cfg);
    auto open = [&](const std::string& name) {
        std::ofstream os(out_dir / name);
        if (!os) throw ConfigError("output", "cannot write " + (out_dir / name).string());
        return os;
    };
    {
        auto os = open(cfg.outputs.timeseries);
        write_time_series_csv(os, result.series);
    }
    {
        auto os = open(cfg.outputs.metrics);
        write_metrics_json(os, cfg, result);
    }
    {
        auto os = open(cfg.outputs.manifest);
        write_manifest(os, cfg);
    }
    return result;
}

const char* to_string(ControlMode mode) {
    switch (mode) {
    case ControlMode::Symmetric: return "symmetric";
    case ControlMode::Asymmetric: return "asymmetric";
    case ControlMode::OpenLoop: return "open_loop";
    }
    return "?";
}

const char* to_string(CouplingMode mode) {
    return mode == CouplingMode::Literal ? "literal" : "dc_consistent";
}

}  // namespace mrb
