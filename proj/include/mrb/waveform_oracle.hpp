#pragma once

#include <cstddef>
#include <vector>

#include "mrb/modulation.hpp"
#include "mrb/waveform_analytics.hpp"

namespace mrb {

/// Maximal constant-level run of the port voltage, in seconds. A run that
/// crosses the period boundary is kept whole: it starts late in the period
/// and ends past T_sw.
struct WaveformSegment {
    double t_begin = 0.0;
    double t_end = 0.0;
    long level = 0;  // number of series modules in the span
};

struct OracleResult {
    PulseCharacterization pulse;
    ConductionProfile conduction;
    std::vector<WaveformSegment> waveform;
    double time_at_max = 0.0;  // s per T_sw
    double time_at_min = 0.0;  // s per T_sw
};

/// Which effective switching period the pulse duty D refers to.
enum class DutyFrame {
    Auto,    // Port when the span's carriers are evenly spread, String otherwise
    Port,    // D = frac(m*L), T_eff = T_sw/L
    String,  // D = frac(m*N_C), T_eff = T_sw/N_C (the asymmetric analysis)
};

/// Brute-force reference for the closed forms.
///
/// Every carrier crossing of a uniform index m over one T_sw is solved
/// exactly (each module conducts on an arc of width m*T_sw centred on its
/// carrier trough), the piecewise-constant span voltage is rebuilt from those
/// event times and every characterized quantity is measured on it. Nothing
/// here reuses the closed-form expressions.
[[nodiscard]] OracleResult waveform_oracle(double m, const CarrierSet& carriers, const ModuleSpan& span, double v_m,
                                           double ratio, DutyFrame frame = DutyFrame::Auto);

}  // namespace mrb
