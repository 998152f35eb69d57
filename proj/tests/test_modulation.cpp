#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "mrb/modulation.hpp"

using namespace mrb;

TEST_CASE("triangle carrier convention") {
    constexpr double f = 1000.0;
    CHECK(carrier_value(0.0, f, 0.0) == 0.0);
    CHECK(carrier_value(0.0, f, 0.5 / f) == doctest::Approx(1.0));
    CHECK(carrier_value(std::numbers::pi, f, 0.0) == doctest::Approx(1.0));
    CHECK(carrier_value(0.0, f, 0.25 / f) == doctest::Approx(0.5));
    CHECK(carrier_value(0.0, f, 0.75 / f) == doctest::Approx(0.5));
}

TEST_CASE("symmetric carrier layout for a full string") {
    const auto c = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
    CHECK(c.layout == CarrierLayout::Symmetric);
    CHECK(c.n_slots == 9);
    CHECK(c.phase(1) - c.phase(0) == doctest::Approx(2.0 * std::numbers::pi / 9.0));
    CHECK(c.f_sw_eff() == doctest::Approx(18000.0));
    CHECK(span_layout(c, {0, 9}) == CarrierLayout::Symmetric);
}

TEST_CASE("divisor-length port gets every third slot") {
    const auto c = build_carriers(9, {ModuleSpan{0, 9}, ModuleSpan{0, 3}}, 2000.0);
    CHECK(span_layout(c, {0, 3}) == CarrierLayout::Symmetric);
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < 3; ++i) seen.insert(c.slots[i] % 3);
    CHECK(seen.size() == 1);
}

TEST_CASE("two consecutive slots leave a seven-slot gap") {
    const auto c = build_carriers(9, {ModuleSpan{0, 9}, ModuleSpan{0, 2}}, 2000.0);
    CHECK(span_layout(c, {0, 2}) == CarrierLayout::Asymmetric);
    CHECK(c.layout == CarrierLayout::Asymmetric);
    const auto a = static_cast<long>(c.slots[0]);
    const auto b = static_cast<long>(c.slots[1]);
    const long forward = ((b - a) % 9 + 9) % 9;
    CHECK(std::min(forward, 9 - forward) == 1);
}

TEST_CASE("explicit slots must form a permutation") {
    CHECK_NOTHROW(carriers_from_slots({2, 0, 1}, 1000.0));
    CHECK_THROWS(carriers_from_slots({0, 0, 1}, 1000.0));
}

TEST_CASE("modulate uses a strict comparison") {
    const auto c = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
    CHECK(modulate(Eigen::VectorXd::Zero(9), c, 0.0).sum() == 0);
    CHECK(modulate(Eigen::VectorXd::Zero(9), c, 1.3e-4).sum() == 0);
    // Slightly off the lattice so no carrier sits at its peak.
    CHECK(modulate(Eigen::VectorXd::Ones(9), c, 1.0e-5).sum() == 9);
}

TEST_CASE("uniform m = 0.5 alternates between four and five series modules") {
    const auto c = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
    const Eigen::VectorXd m = Eigen::VectorXd::Constant(9, 0.5);
    const auto v = sample_port_voltage(m, c, {0, 9}, 96.0, c.t_sw(), c.t_sw_eff() / 400.0);
    std::set<long> levels;
    for (double x : v) levels.insert(std::lround(x));
    CHECK(levels == std::set<long>{384, 480});
}

TEST_CASE("sampled port voltage") {
    SUBCASE("two levels for the full string") {
        const auto c = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
        const auto v = sample_port_voltage(Eigen::VectorXd::Constant(9, 0.35), c, {0, 9}, 96.0, c.t_sw(),
                                           c.t_sw_eff() / 200.0);
        CHECK(v.minCoeff() == doctest::Approx(288.0));
        CHECK(v.maxCoeff() == doctest::Approx(384.0));
    }
    SUBCASE("asymmetric two-module port spans zero to two modules") {
        const auto c = build_carriers(9, {ModuleSpan{0, 9}, ModuleSpan{0, 2}}, 2000.0, SlotPolicy::Consecutive);
        const auto v = sample_port_voltage(Eigen::VectorXd::Constant(9, 0.5), c, {0, 2}, 96.0, c.t_sw(),
                                           c.t_sw_eff() / 200.0);
        CHECK(v.minCoeff() == 0.0);
        CHECK(v.maxCoeff() == doctest::Approx(192.0));
    }
    SUBCASE("m = 0 is identically zero") {
        const auto c = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
        const auto v = sample_port_voltage(Eigen::VectorXd::Zero(9), c, {0, 9}, 96.0, c.t_sw(), c.t_sw_eff() / 200.0);
        CHECK(v.cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("too coarse a step is rejected") {
        const auto c = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
        CHECK_THROWS(sample_port_voltage(Eigen::VectorXd::Zero(9), c, {0, 9}, 96.0, c.t_sw(), c.t_sw_eff() / 10.0));
    }
}

TEST_CASE("series fraction integrates the carrier exactly") {
    const auto c = build_carriers(9, {ModuleSpan{0, 9}}, 2000.0);
    const Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(9, 0.05, 0.95);
    SUBCASE("one full period gives m") {
        const auto f = series_fraction(m, c, 0.0, c.t_sw());
        CHECK((f - m).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("split intervals add up") {
        const double t1 = 0.37 * c.t_sw();
        const auto whole = series_fraction(m, c, 0.0, c.t_sw());
        const auto a = series_fraction(m, c, 0.0, t1);
        const auto b = series_fraction(m, c, t1, c.t_sw());
        const Eigen::VectorXd sum = a * (t1 / c.t_sw()) + b * (1.0 - t1 / c.t_sw());
        CHECK((sum - whole).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("agrees with modulate on a short interval") {
        const double t = 0.123 * c.t_sw();
        const auto f = series_fraction(m, c, t, t + 1e-9);
        CHECK((f - modulate(m, c, t + 5e-10).cast<double>()).cwiseAbs().maxCoeff() < 1e-9);
    }
}
