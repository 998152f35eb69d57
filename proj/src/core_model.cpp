#include "mrb/core_model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace mrb {

Eigen::VectorXd module_voltages(const std::vector<BatteryModule>& modules) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(modules.size()));
    for (std::size_t i = 0; i < modules.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = modules[i].v_nom;
    }
    return v;
}

double mean_module_voltage(const std::vector<BatteryModule>& modules) {
    if (modules.empty()) {
        return 0.0;
    }
    return module_voltages(modules).mean();
}

ConnectionVector connection_from_modes(const std::vector<BatteryModule>& modules) {
    ConnectionVector s(static_cast<Eigen::Index>(modules.size()));
    for (std::size_t i = 0; i < modules.size(); ++i) {
        s[static_cast<Eigen::Index>(i)] = modules[i].mode == ConnectionMode::Series ? 1 : 0;
    }
    return s;
}

double terminal_voltage_under_load(const std::vector<BatteryModule>& modules,
                                   const ConnectionVector& s, double i_load) {
    if (static_cast<std::size_t>(s.size()) != modules.size()) {
        throw DimensionError("connection vector length does not match module count");
    }
    double v = 0.0;
    for (std::size_t i = 0; i < modules.size(); ++i) {
        if (s[static_cast<Eigen::Index>(i)] != 0) {
            v += modules[i].v_nom - i_load * modules[i].r_int;
        }
    }
    return v;
}

namespace {

void check_load(const LoadModel& load, const std::string& where, std::vector<std::string>& out) {
    switch (load.kind) {
    case LoadKind::Resistive:
        if (!(load.resistance > 0.0)) out.push_back(where + ": load resistance must be > 0");
        break;
    case LoadKind::ResistiveInductive:
        if (!(load.resistance > 0.0)) out.push_back(where + ": load resistance must be > 0");
        if (!(load.inductance >= 0.0)) out.push_back(where + ": load inductance must be >= 0");
        break;
    case LoadKind::ConstantPower:
        if (!(load.power >= 0.0)) out.push_back(where + ": load power must be >= 0");
        break;
    }
}

}  // namespace

std::vector<std::string> validate_topology(const StringTopology& topology) {
    std::vector<std::string> out;
    const std::size_t n = topology.module_count();
    if (n == 0) {
        out.emplace_back("string has no modules");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = topology.modules[i];
        if (!(m.v_nom > 0.0)) out.push_back("module " + std::to_string(i) + ": v_nom must be > 0");
        if (!(m.r_int >= 0.0)) out.push_back("module " + std::to_string(i) + ": r_int must be >= 0");
        if (!(m.r_switch >= 0.0)) out.push_back("module " + std::to_string(i) + ": r_switch must be >= 0");
    }

    bool has_main = false;
    for (std::size_t p = 0; p < topology.ports.size(); ++p) {
        const auto& port = topology.ports[p];
        const std::string where = "port " + std::to_string(p);
        if (port.span.count == 0) {
            out.push_back(where + ": empty span");
        } else if (port.span.last() > n) {
            out.push_back(where + ": span exceeds string length");
        } else if (port.span.first == 0 && port.span.count == n) {
            has_main = true;
        }
        for (std::size_t q = 0; q < p; ++q) {
            if (topology.ports[q].span == port.span && topology.ports[q].kind == port.kind) {
                out.push_back(where + ": duplicates port " + std::to_string(q));
            }
        }
        if (port.kind == PortKind::NonIsolated) {
            const auto* prm = std::get_if<NonIsolatedParams>(&port.params);
            if (prm == nullptr) {
                out.push_back(where + ": non-isolated port carries isolated parameters");
                continue;
            }
            if (!(prm->l1 >= 0.0) || !(prm->c_dc1 >= 0.0) || !(prm->r_ldc >= 0.0)) {
                out.push_back(where + ": L_1, C_dc1, R_ldc must be >= 0");
            }
            check_load(prm->load, where, out);
        } else {
            const auto* prm = std::get_if<IsolatedParams>(&port.params);
            if (prm == nullptr) {
                out.push_back(where + ": isolated port carries non-isolated parameters");
                continue;
            }
            if (!(prm->c_dc2 >= 0.0) || !(prm->c_dc3 >= 0.0) || !(prm->l_es >= 0.0) || !(prm->l_m > 0.0)) {
                out.push_back(where + ": capacitances and inductances must be >= 0");
            }
            if (!(prm->turns_ratio > 0.0)) out.push_back(where + ": turns ratio must be > 0");
            if (!(prm->diode_drop >= 0.0) || !(prm->diode_resistance >= 0.0)) {
                out.push_back(where + ": diode parameters must be >= 0");
            }
            check_load(prm->load, where, out);
        }
    }
    if (!has_main) {
        out.emplace_back("no port spans all modules");
    }
    return out;
}

const PortBinding* main_port(const StringTopology& topology) {
    for (const auto& p : topology.ports) {
        if (p.span.first == 0 && p.span.count == topology.module_count()) {
            return &p;
        }
    }
    return nullptr;
}

const PortBinding* find_port(const StringTopology& topology, PortKind kind) {
    for (const auto& p : topology.ports) {
        if (p.kind == kind) {
            return &p;
        }
    }
    return nullptr;
}

}  // namespace mrb
