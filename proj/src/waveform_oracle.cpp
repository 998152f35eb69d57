#include "mrb/waveform_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace mrb {

namespace {

constexpr double kTimeTol = 1e-9;  // fraction of T_sw

double frac(double x) { return x - std::floor(x); }

double triangle(double x) {
    x = frac(x);
    return x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
}

struct Run {
    double begin;  // normalized to T_sw
    double length;
    long level;
};

// Span voltage over one period, as maximal constant runs (normalized time).
std::vector<Run> enumerate_runs(double m, const CarrierSet& carriers, const ModuleSpan& span) {
    const auto n = static_cast<double>(carriers.n_slots);
    std::vector<double> events{0.0, 1.0};
    events.reserve(2 * span.count + 2);
    // At m = 0 or 1 the modules never or always conduct (up to single instants).
    for (std::size_t j = span.first; m > 0.0 && m < 1.0 && j < span.last(); ++j) {
        const double offset = static_cast<double>(carriers.slots[j]) / n;
        // Module j conducts where frac(tau + offset) lies within m/2 of an
        // integer, i.e. on an arc of width m centred at -offset.
        events.push_back(frac(-offset - 0.5 * m));
        events.push_back(frac(-offset + 0.5 * m));
    }
    std::sort(events.begin(), events.end());
    // Events that coincide in exact arithmetic can differ by rounding; merging
    // them keeps zero-width slivers out of the level set.
    constexpr double kCoincident = 1e-12;
    events.erase(std::unique(events.begin(), events.end(),
                             [](double a, double b) { return b - a < kCoincident; }),
                 events.end());
    if (events.back() < 1.0) events.back() = 1.0;

    std::vector<Run> runs;
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
        const double a = events[k];
        const double b = events[k + 1];
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b);
        long level = 0;
        for (std::size_t j = span.first; j < span.last(); ++j) {
            const double offset = static_cast<double>(carriers.slots[j]) / n;
            if (m >= 1.0 || m > triangle(mid + offset)) ++level;
        }
        if (!runs.empty() && runs.back().level == level) {
            runs.back().length += b - a;
        } else {
            runs.push_back({a, b - a, level});
        }
    }
    if (runs.size() > 1 && runs.front().level == runs.back().level) {
        // The period wraps: the last run continues into the first.
        runs.front().begin = runs.back().begin;
        runs.front().length += runs.back().length;
        runs.pop_back();
    }
    return runs;
}

// Fraction of the period spent on the upper level of a waveform.
double upper_fraction(const std::vector<Run>& runs) {
    long hi = runs.front().level;
    long lo = hi;
    for (const auto& r : runs) {
        hi = std::max(hi, r.level);
        lo = std::min(lo, r.level);
    }
    if (hi == lo) return 0.0;
    double t = 0.0;
    for (const auto& r : runs) {
        if (r.level == hi) t += r.length;
    }
    return t;
}

}  // namespace

OracleResult waveform_oracle(double m, const CarrierSet& carriers, const ModuleSpan& span, double v_m, double ratio,
                             DutyFrame frame) {
    if (!(m >= 0.0 && m <= 1.0)) {
        throw DomainError("modulation index outside [0, 1]");
    }
    if (span.count == 0 || span.last() > carriers.size()) {
        throw DomainError("span outside carrier set");
    }
    const double t_sw = carriers.t_sw();
    const auto runs = enumerate_runs(m, carriers, span);

    OracleResult out;
    long hi = runs.front().level;
    long lo = hi;
    double mean_level = 0.0;
    for (const auto& r : runs) {
        hi = std::max(hi, r.level);
        lo = std::min(lo, r.level);
        mean_level += static_cast<double>(r.level) * r.length;
        out.waveform.push_back({r.begin * t_sw, (r.begin + r.length) * t_sw, r.level});
    }

    auto& p = out.pulse;
    p.v_dc = mean_level * v_m;
    p.v_max = static_cast<double>(hi) * v_m;
    p.v_min = static_cast<double>(lo) * v_m;
    p.v_base = p.v_min;
    p.v_p_plus = p.v_max - p.v_dc;
    p.v_p_minus = p.v_min - p.v_dc;
    p.v_dc2 = std::max(p.v_p_plus, -p.v_p_minus) * ratio;

    // Pulse duty: upper-level fraction of T_sw (one D*T_eff pulse per
    // effective period), measured on the port itself when its carriers are
    // evenly spread and on the complete carrier set otherwise.
    const bool symmetric = frame == DutyFrame::Auto ? span_layout(carriers, span) == CarrierLayout::Symmetric
                                                    : frame == DutyFrame::Port;
    if (symmetric && span_layout(carriers, span) != CarrierLayout::Symmetric) {
        throw DomainError("port duty frame needs evenly spread span carriers");
    }
    const double d = symmetric ? upper_fraction(runs)
                               : upper_fraction(enumerate_runs(m, carriers, ModuleSpan{0, carriers.size()}));
    const double carriers_per_period = static_cast<double>(symmetric ? span.count : carriers.n_slots);
    p.duty = d;

    auto& c = out.conduction;
    if (hi == lo) {
        return out;
    }
    const double t_eff = 1.0 / carriers_per_period;
    for (const auto& r : runs) {
        if (r.level == hi) {
            out.time_at_max += r.length;
            if (std::abs(r.length - d * t_eff) <= kTimeTol) {
                ++c.n_p;
            } else {
                c.delta_p += r.length;
            }
        } else if (r.level == lo) {
            out.time_at_min += r.length;
            if (std::abs(r.length - (1.0 - d) * t_eff) <= kTimeTol) {
                ++c.n_n;
            } else {
                c.delta_n += r.length;
            }
        }
    }
    const double pos = p.v_p_plus;
    const double neg = -p.v_p_minus;
    const double tol = 1e-9 * v_m;
    double dt = 0.0;
    if (pos > neg + tol) {
        dt = out.time_at_max;
    } else if (neg > pos + tol) {
        dt = out.time_at_min;
    } else {
        dt = out.time_at_max + out.time_at_min;
    }
    c.delta_p *= t_sw;
    c.delta_n *= t_sw;
    c.delta_t = dt * t_sw;
    c.d_eff = dt;
    out.time_at_max *= t_sw;
    out.time_at_min *= t_sw;
    return out;
}

}  // namespace mrb
