#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "mrb/errors.hpp"

namespace mrb {

/// Half-bridge module state. Parallel behaves as Bypass for voltage and current.
enum class ConnectionMode { Series, Bypass, Parallel };

struct BatteryModule {
    double v_nom = 0.0;     // V
    double r_int = 0.0;     // Ohm, in the current path only when Series
    double r_switch = 0.0;  // Ohm, conducting switch, in the path in every mode
    ConnectionMode mode = ConnectionMode::Series;
};

/// One entry per module: 1 = series, 0 = bypass/parallel.
using ConnectionVector = Eigen::VectorXi;

/// Contiguous module index range [first, first + count).
struct ModuleSpan {
    std::size_t first = 0;
    std::size_t count = 0;

    [[nodiscard]] std::size_t last() const noexcept { return first + count; }
    [[nodiscard]] bool contains(std::size_t i) const noexcept { return i >= first && i < last(); }
    friend bool operator==(const ModuleSpan&, const ModuleSpan&) = default;
};

enum class LoadKind { Resistive, ResistiveInductive, ConstantPower };

struct LoadModel {
    LoadKind kind = LoadKind::Resistive;
    double resistance = 0.0;  // Ohm (Resistive, ResistiveInductive)
    double inductance = 0.0;  // H (ResistiveInductive)
    double power = 0.0;       // W (ConstantPower)
};

/// LC-filtered dc link: string -> R_ldc + L_1 -> C_dc1 || load.
struct NonIsolatedParams {
    double l1 = 0.0;
    double c_dc1 = 0.0;
    double r_ldc = 0.0;
    LoadModel load;
};

/// dc-block capacitor -> transformer -> full diode bridge -> C_dc3 || load.
struct IsolatedParams {
    double c_dc2 = 0.0;
    double turns_ratio = 1.0;  // N2/N1
    double c_dc3 = 0.0;
    double diode_drop = 0.0;        // V_f per diode, two diodes conduct
    double diode_resistance = 0.0;  // R_d, total bridge path
    double l_es = 0.0;              // series leakage referred to the secondary
    double l_m = std::numeric_limits<double>::infinity();  // magnetizing inductance, primary side
    LoadModel load;
};

enum class PortKind { NonIsolated, Isolated };

struct PortBinding {
    PortKind kind = PortKind::NonIsolated;
    ModuleSpan span;
    std::variant<NonIsolatedParams, IsolatedParams> params;

    [[nodiscard]] std::size_t length() const noexcept { return span.count; }
};

struct StringTopology {
    std::vector<BatteryModule> modules;
    std::vector<PortBinding> ports;

    [[nodiscard]] std::size_t module_count() const noexcept { return modules.size(); }
};

/// Instantaneous port voltage: sum of series-connected module voltages.
template <typename DerivedS, typename DerivedV>
[[nodiscard]] typename DerivedV::Scalar string_voltage(const Eigen::MatrixBase<DerivedS>& s,
                                                       const Eigen::MatrixBase<DerivedV>& v) {
    if (s.size() != v.size()) {
        throw DimensionError("connection vector has " + std::to_string(s.size()) +
                             " entries, voltage vector has " + std::to_string(v.size()));
    }
    using Scalar = typename DerivedV::Scalar;
    return s.template cast<Scalar>().dot(v);
}

[[nodiscard]] Eigen::VectorXd module_voltages(const std::vector<BatteryModule>& modules);
[[nodiscard]] double mean_module_voltage(const std::vector<BatteryModule>& modules);
[[nodiscard]] ConnectionVector connection_from_modes(const std::vector<BatteryModule>& modules);

/// String voltage with each series module's ohmic drop at the given current.
[[nodiscard]] double terminal_voltage_under_load(const std::vector<BatteryModule>& modules,
                                                 const ConnectionVector& s, double i_load);

/// All invariant violations; an empty result means the topology is usable.
[[nodiscard]] std::vector<std::string> validate_topology(const StringTopology& topology);

/// First port spanning every module.
[[nodiscard]] const PortBinding* main_port(const StringTopology& topology);
/// First port of the given kind, if any.
[[nodiscard]] const PortBinding* find_port(const StringTopology& topology, PortKind kind);

}  // namespace mrb
