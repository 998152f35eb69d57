#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mrb/circuit_sim.hpp"
#include "mrb/control.hpp"
#include "mrb/core_model.hpp"

namespace mrb {

enum class ControlMode { Symmetric, Asymmetric, OpenLoop };
enum class ProfileSource { Analytic, Oracle };

struct ControlConfig {
    ControlMode mode = ControlMode::Symmetric;
    CandidateForm candidate_form = CandidateForm::DutyExact;
    CouplingMode coupling = CouplingMode::DcConsistent;
    ProfileSource profile_source = ProfileSource::Analytic;
    double profile_step = 0.001;
    PIState pi{0.0, 0.2, 0.0, 0.2, 0.5};          // symmetric: output is D
    PIState pi1{0.0, 0.01, 0.0, -0.05, 0.05};     // asymmetric: correction of m_opt
    PIState pi2{0.0, 0.02, 0.0, -0.1, 0.1};       // asymmetric: shift of m_2 along the profile
    std::vector<double> open_loop_m;              // one value, or one per module
};

struct ScenarioOutputs {
    std::string timeseries = "timeseries.csv";
    std::string metrics = "metrics.json";
    std::string manifest = "manifest.ini";
};

/// Everything a run needs, in SI units.
struct ScenarioConfig {
    std::string name = "scenario";
    StringTopology topology;
    SimConfig sim;
    ReferenceSchedule schedule;
    CircuitState initial;
    ControlConfig control;
    std::vector<std::pair<double, double>> metric_windows;
    ScenarioOutputs outputs;

    /// Every key as resolved, in the file's units, for the manifest.
    std::map<std::string, std::map<std::string, std::string>> resolved;
};

/// Parses an INI scenario. Keys carry their unit as a suffix (_V, _uF, _mOhm, ...).
/// Throws ConfigError naming the offending "section.key".
[[nodiscard]] ScenarioConfig parse_scenario(std::istream& is);
[[nodiscard]] ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Writes the resolved configuration; loading it back reproduces the run bit for bit.
void write_manifest(std::ostream& os, const ScenarioConfig& cfg);

/// Rejects inconsistent configurations (topology, dt bound, schedules, windows).
void validate(const ScenarioConfig& cfg);

[[nodiscard]] std::unique_ptr<Controller> make_controller(const ScenarioConfig& cfg);

struct WindowReport {
    double t0 = 0.0;
    double t1 = 0.0;
    WindowMetrics v_dc1;
    WindowMetrics v_dc2;
    double charge_cdc1 = 0.0;
    double charge_cdc2 = 0.0;
    double charge_cdc3 = 0.0;
    double power = 0.0;
};

/// Largest excursion past a new reference between one step and the next.
struct TransientReport {
    Signal signal = Signal::VDc1;
    double t_step = 0.0;
    double ref = 0.0;
    double overshoot_pct = 0.0;
};

struct ScenarioResult {
    TimeSeries series;
    std::vector<WindowReport> windows;
    std::vector<TransientReport> transients;
    double elapsed_s = 0.0;
};

/// Validates, runs and evaluates every metrics window.
[[nodiscard]] ScenarioResult run_scenario(const ScenarioConfig& cfg);

void write_metrics_json(std::ostream& os, const ScenarioConfig& cfg, const ScenarioResult& result);

/// Runs a scenario and writes the time series, metrics and manifest into out_dir.
ScenarioResult simulate_to(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

[[nodiscard]] const char* to_string(ControlMode mode);
[[nodiscard]] const char* to_string(CouplingMode mode);

}  // namespace mrb
