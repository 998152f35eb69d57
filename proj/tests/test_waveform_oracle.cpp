#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mrb/waveform_oracle.hpp"

using namespace mrb;

namespace {

void check_same(const PulseCharacterization& a, const PulseCharacterization& b) {
    CHECK(a.v_dc == doctest::Approx(b.v_dc).epsilon(1e-12));
    CHECK(a.v_base == doctest::Approx(b.v_base).epsilon(1e-12));
    CHECK(a.duty == doctest::Approx(b.duty).epsilon(1e-12));
    CHECK(a.v_max == doctest::Approx(b.v_max).epsilon(1e-12));
    CHECK(a.v_min == doctest::Approx(b.v_min).epsilon(1e-12));
    CHECK(a.v_p_plus == doctest::Approx(b.v_p_plus).epsilon(1e-12));
    CHECK(a.v_p_minus == doctest::Approx(b.v_p_minus).epsilon(1e-12));
}

}  // namespace

TEST_CASE("oracle matches the symmetric closed form at m = 0.35") {
    const auto carriers = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
    const auto r = waveform_oracle(0.35, carriers, {0, 9}, 96.0, 1.0);
    check_same(r.pulse, characterize_symmetric(0.35, 9, 96.0, 1.0));
    // Frozen from tests/oracles/derive.py.
    CHECK(r.pulse.v_dc == doctest::Approx(302.4));
    CHECK(r.pulse.duty == doctest::Approx(0.15));
    CHECK(r.pulse.v_dc2 == doctest::Approx(81.6));
}

TEST_CASE("oracle matches the asymmetric closed form at m = 0.5") {
    const auto carriers = build_carriers(9, {ModuleSpan{0, 2}}, 2000.0, SlotPolicy::Consecutive);
    const auto r = waveform_oracle(0.5, carriers, {0, 2}, 96.0, 1.0, DutyFrame::String);
    check_same(r.pulse, characterize_asymmetric(0.5, 2, 9, 96.0, 1.0));
    CHECK(r.pulse.v_p_plus == doctest::Approx(96.0));
    CHECK(r.pulse.v_p_minus == doctest::Approx(-96.0));
}

TEST_CASE("m = 0 gives a zero waveform and zero counts") {
    const auto carriers = build_carriers(9, {ModuleSpan{0, 2}}, 2000.0, SlotPolicy::Consecutive);
    const auto r = waveform_oracle(0.0, carriers, {0, 2}, 96.0, 1.0);
    CHECK(r.pulse.v_dc == 0.0);
    CHECK(r.pulse.v_max == 0.0);
    CHECK(r.conduction.n_p == 0);
    CHECK(r.conduction.n_n == 0);
    CHECK(r.conduction.delta_t == 0.0);
    for (const auto& seg : r.waveform) CHECK(seg.level == 0);
}

TEST_CASE("waveform runs tile one period") {
    const auto carriers = build_carriers(9, {ModuleSpan{0, 4}}, 1000.0, SlotPolicy::Consecutive);
    const auto r = waveform_oracle(0.41, carriers, {0, 4}, 96.0, 1.0);
    REQUIRE(r.waveform.size() > 1);
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t k = 0; k < r.waveform.size(); ++k) {
        const auto& s = r.waveform[k];
        CHECK(s.t_end > s.t_begin);
        if (k > 1) CHECK(s.t_begin == doctest::Approx(r.waveform[k - 1].t_end));
        if (k > 0) CHECK(s.level != r.waveform[k - 1].level);
        total += s.t_end - s.t_begin;
        mean += static_cast<double>(s.level) * (s.t_end - s.t_begin);
    }
    CHECK(total == doctest::Approx(carriers.t_sw()));
    CHECK(mean / carriers.t_sw() * 96.0 == doctest::Approx(0.41 * 4 * 96.0));
}

TEST_CASE("oracle agrees with both closed forms on a coarse grid") {
    for (std::size_t n_c : {5u, 9u, 12u}) {
        for (std::size_t L = 1; L <= n_c; ++L) {
            const bool divisor = n_c % L == 0;
            const auto carriers = build_carriers(n_c, {ModuleSpan{0, L}}, 1.0,
                                                 divisor ? SlotPolicy::InterleaveDivisors : SlotPolicy::Consecutive);
            for (int k = 1; k < 50; ++k) {
                const double m = k / 50.0 + 0.0031;
                if (m >= 1.0) continue;
                if (divisor) {
                    check_same(waveform_oracle(m, carriers, {0, L}, 96.0, 1.0, DutyFrame::Port).pulse,
                               characterize_symmetric(m, L, 96.0, 1.0));
                } else {
                    check_same(waveform_oracle(m, carriers, {0, L}, 96.0, 1.0, DutyFrame::String).pulse,
                               characterize_asymmetric(m, L, n_c, 96.0, 1.0));
                }
            }
        }
    }
}

TEST_CASE("conduction time is consistent with the pulse counts") {
    const auto carriers = build_carriers(9, {ModuleSpan{0, 2}}, 1.0, SlotPolicy::Consecutive);
    const double t_eff = carriers.t_sw_eff();
    for (double m : {0.05, 0.3, 0.45, 0.62, 0.93}) {
        const auto r = waveform_oracle(m, carriers, {0, 2}, 96.0, 1.0, DutyFrame::String);
        const auto& c = r.conduction;
        const double pos = static_cast<double>(c.n_p) * r.pulse.duty * t_eff + c.delta_p;
        const double neg = static_cast<double>(c.n_n) * (1.0 - r.pulse.duty) * t_eff + c.delta_n;
        const double expected = r.pulse.v_p_plus > -r.pulse.v_p_minus ? pos : neg;
        CHECK(c.delta_t == doctest::Approx(expected).epsilon(1e-9));
    }
}
