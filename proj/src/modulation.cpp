#include "mrb/modulation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace mrb {

Eigen::VectorXd CarrierSet::phases() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(slots.size()));
    for (std::size_t i = 0; i < slots.size(); ++i) {
        out[static_cast<Eigen::Index>(i)] = phase(i);
    }
    return out;
}

namespace {

CarrierLayout overall_layout(const CarrierSet& set, const std::vector<ModuleSpan>& spans) {
    for (const auto& span : spans) {
        if (span_layout(set, span) == CarrierLayout::Asymmetric) {
            return CarrierLayout::Asymmetric;
        }
    }
    return CarrierLayout::Symmetric;
}

}  // namespace

CarrierSet build_carriers(std::size_t n_modules, const std::vector<ModuleSpan>& port_spans, double f_sw,
                          SlotPolicy policy) {
    if (n_modules == 0) {
        throw DomainError("carrier set needs at least one module");
    }
    std::vector<std::size_t> slots(n_modules);
    std::iota(slots.begin(), slots.end(), std::size_t{0});

    if (policy == SlotPolicy::InterleaveDivisors) {
        // Interleave the first sub-string port whose length divides N_C.
        for (const auto& span : port_spans) {
            if (span.count <= 1 || span.count >= n_modules || n_modules % span.count != 0 ||
                span.last() > n_modules) {
                continue;
            }
            const std::size_t k = n_modules / span.count;
            std::vector<bool> taken(n_modules, false);
            for (std::size_t j = 0; j < span.count; ++j) {
                slots[span.first + j] = j * k;
                taken[j * k] = true;
            }
            std::size_t next = 0;
            for (std::size_t i = 0; i < n_modules; ++i) {
                if (span.contains(i)) continue;
                while (taken[next]) ++next;
                slots[i] = next;
                taken[next] = true;
            }
            break;
        }
    }
    return carriers_from_slots(std::move(slots), f_sw, port_spans);
}

CarrierSet carriers_from_slots(std::vector<std::size_t> slots, double f_sw, const std::vector<ModuleSpan>& port_spans) {
    const std::size_t n = slots.size();
    if (n == 0) {
        throw DomainError("carrier set needs at least one module");
    }
    if (!(f_sw > 0.0)) {
        throw DomainError("switching frequency must be > 0");
    }
    std::vector<bool> seen(n, false);
    for (auto s : slots) {
        if (s >= n || seen[s]) {
            throw DomainError("carrier slots must be a permutation of 0.." + std::to_string(n - 1));
        }
        seen[s] = true;
    }
    CarrierSet set{std::move(slots), n, f_sw, CarrierLayout::Symmetric};
    set.layout = overall_layout(set, port_spans);
    return set;
}

CarrierLayout span_layout(const CarrierSet& carriers, const ModuleSpan& span) {
    if (span.count == 0 || span.last() > carriers.size()) {
        throw DomainError("span outside carrier set");
    }
    const std::size_t n = carriers.n_slots;
    if (n % span.count != 0) {
        return CarrierLayout::Asymmetric;
    }
    std::vector<std::size_t> s(carriers.slots.begin() + static_cast<std::ptrdiff_t>(span.first),
                               carriers.slots.begin() + static_cast<std::ptrdiff_t>(span.last()));
    std::sort(s.begin(), s.end());
    const std::size_t gap = n / span.count;
    for (std::size_t j = 0; j < s.size(); ++j) {
        const std::size_t next = j + 1 < s.size() ? s[j + 1] : s[0] + n;
        if (next - s[j] != gap) {
            return CarrierLayout::Asymmetric;
        }
    }
    return CarrierLayout::Symmetric;
}

double carrier_at(const CarrierSet& carriers, std::size_t module, double t) {
    double x = t * carriers.f_sw + static_cast<double>(carriers.slots[module]) / static_cast<double>(carriers.n_slots);
    x -= std::floor(x);
    return x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
}

ConnectionVector modulate(const Eigen::Ref<const Eigen::VectorXd>& m, const CarrierSet& carriers, double t) {
    if (static_cast<std::size_t>(m.size()) != carriers.size()) {
        throw DimensionError("one modulation index per module required");
    }
    ConnectionVector s(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        s[i] = m[i] > carrier_at(carriers, static_cast<std::size_t>(i), t) ? 1 : 0;
    }
    return s;
}

Eigen::VectorXd series_fraction(const Eigen::Ref<const Eigen::VectorXd>& m, const CarrierSet& carriers, double t0,
                                double t1) {
    if (static_cast<std::size_t>(m.size()) != carriers.size()) {
        throw DimensionError("one modulation index per module required");
    }
    if (!(t1 > t0)) throw DomainError("series_fraction needs t1 > t0");
    const double span = (t1 - t0) * carriers.f_sw;  // in carrier periods
    Eigen::VectorXd out(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double half = 0.5 * m[i];
        double x = t0 * carriers.f_sw +
                   static_cast<double>(carriers.slots[static_cast<std::size_t>(i)]) / static_cast<double>(carriers.n_slots);
        x -= std::floor(x);
        double left = span;
        double on = 0.0;
        while (left > 0.0) {
            // Rising half below 0.5 (on while x < m/2), falling half above (on while x > 1 - m/2).
            const double edge = x < 0.5 ? 0.5 : 1.0;
            const double len = std::min(left, edge - x);
            const double end = x + len;
            if (x < 0.5) {
                on += std::max(0.0, std::min(end, half) - x);
            } else {
                on += std::max(0.0, end - std::max(x, 1.0 - half));
            }
            left -= len;
            x = end >= 1.0 ? 0.0 : end;
        }
        out[i] = on / span;
    }
    return out;
}

Eigen::VectorXd sample_port_voltage(const Eigen::Ref<const Eigen::VectorXd>& m, const CarrierSet& carriers,
                                    const ModuleSpan& span, double v_m, double duration, double dt) {
    if (!(dt > 0.0) || dt > carriers.t_sw_eff() / 50.0) {
        throw ConfigError("dt", "sample step must be in (0, T_sw,eff/50]");
    }
    if (span.count == 0 || span.last() > carriers.size()) {
        throw DomainError("span outside carrier set");
    }
    const auto n = static_cast<Eigen::Index>(std::max(0.0, std::ceil(duration / dt - 1e-12)));
    Eigen::VectorXd out(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        const ConnectionVector s = modulate(m, carriers, t);
        out[k] = v_m * static_cast<double>(s.segment(static_cast<Eigen::Index>(span.first),
                                                     static_cast<Eigen::Index>(span.count)).sum());
    }
    return out;
}

}  // namespace mrb
