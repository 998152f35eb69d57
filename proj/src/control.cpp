#include "mrb/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrb/errors.hpp"

namespace mrb {

namespace {

constexpr double kTieMargin = 1e-12;

}  // namespace

PIOutput pi_step(double err, const PIState& st, double dt) {
    if (!(dt > 0.0)) throw DomainError("pi_step: dt must be > 0");
    PIOutput out;
    out.state = st;
    double integ = st.integ + err * dt;
    if (st.ki != 0.0) {
        const double term = std::clamp(st.ki * integ, st.out_min, st.out_max);
        integ = term / st.ki;
    }
    out.state.integ = integ;
    out.u = std::clamp(st.kp * err + st.ki * integ, st.out_min, st.out_max);
    return out;
}

std::vector<double> symmetric_candidates(double d, std::size_t n_c, CandidateForm form) {
    if (n_c == 0) throw DomainError("n_c must be >= 1");
    if (!(d >= 0.0 && d <= 1.0)) throw DomainError("duty must be in [0, 1]");
    const double offset = form == CandidateForm::DutyExact ? 0.5 - d : d;
    std::vector<double> out;
    out.reserve(2 * n_c);
    const auto n = static_cast<double>(n_c);
    for (std::size_t i = 0; i < n_c; ++i) {
        const double centre = static_cast<double>(i) + 0.5;
        out.push_back(std::clamp((centre - offset) / n, 0.0, 1.0));
        out.push_back(std::clamp((centre + offset) / n, 0.0, 1.0));
    }
    std::sort(out.begin(), out.end());
    return out;
}

ControlDecision select_symmetric(double d, double v_dc1_ref, std::size_t n_c, double v_m, CandidateForm form) {
    if (!(v_m > 0.0)) throw DomainError("v_m must be > 0");
    const double m_opt = v_dc1_ref / (static_cast<double>(n_c) * v_m);
    ControlDecision dec;
    dec.d_requested = d;
    double best = std::numeric_limits<double>::infinity();
    for (double m : symmetric_candidates(d, n_c, form)) {
        const double score = std::abs(m - m_opt);
        dec.candidates.push_back({m, m, score});
        // Candidates are ascending, so a strict comparison keeps the smaller m on
        // ties. The margin absorbs rounding: mirrored candidates around m_opt
        // would otherwise alternate from one update to the next.
        if (score < best - kTieMargin) {
            best = score;
            dec.m_main = m;
        }
    }
    return dec;
}

ControlDecision symmetric_controller_step(double v_dc2_meas, double v_dc2_ref, double v_dc1_ref, std::size_t n_c,
                                          double v_m, PIState& pi, double dt, CandidateForm form) {
    if (v_dc1_ref > static_cast<double>(n_c) * v_m) {
        throw UnreachableSetpointError("v_dc1_ref exceeds n_c * v_m");
    }
    const auto r = pi_step(v_dc2_meas - v_dc2_ref, pi, dt);
    pi = r.state;
    return select_symmetric(r.u, v_dc1_ref, n_c, v_m, form);
}

double coupled_index(double m_opt, double m_shared, std::size_t n_c, std::size_t L, CouplingMode mode) {
    if (L == 0 || L >= n_c) throw DomainError("coupling needs 0 < L < n_c");
    const auto n = static_cast<double>(n_c);
    const auto l = static_cast<double>(L);
    if (mode == CouplingMode::Literal) {
        return m_opt * (n + l) / n - m_shared * l / n;
    }
    return (m_opt * n - m_shared * l) / (n - l);
}

std::vector<ProfileCrossing> invert_gain_profile(const GainProfile& profile, double v_dc2_ref) {
    const auto& e = profile.entries;
    if (e.size() < 2) throw DomainError("gain profile needs at least two points");
    // Between branch boundaries the isolated output moves at most L*v_m*ratio
    // per unit m. A segment that moves faster straddles a jump and holds no
    // reachable crossing.
    const double max_slope = 1.5 * static_cast<double>(profile.L) * profile.v_m * profile.ratio;
    std::vector<ProfileCrossing> out;
    for (std::size_t k = 0; k + 1 < e.size(); ++k) {
        const double a = e[k].v_dc2 - v_dc2_ref;
        const double b = e[k + 1].v_dc2 - v_dc2_ref;
        if (a == 0.0 && b == 0.0) continue;
        if (std::abs(b - a) > max_slope * (e[k + 1].m - e[k].m)) continue;
        // Half-open segments so a grid point on the reference is reported once.
        const bool hit = (a <= 0.0 && b > 0.0) || (a >= 0.0 && b < 0.0);
        if (!hit) continue;
        const double w = a / (a - b);
        out.push_back({e[k].m + w * (e[k + 1].m - e[k].m), b > a ? 1 : -1});
    }
    if (out.empty()) {
        throw UnreachableSetpointError("v_dc2_ref outside the gain profile range");
    }
    return out;
}

ControlDecision asymmetric_controller_step(double v_dc1_meas, double v_dc2_meas, const AsymmetricRefs& refs,
                                           const GainProfile& profile, std::size_t n_c, std::size_t L, double v_m,
                                           PIState& pi1, PIState& pi2, double dt, CouplingMode mode) {
    if (profile.L != L || profile.n_c != n_c) throw DomainError("gain profile does not match the port");
    const auto crossings = invert_gain_profile(profile, refs.v_dc2);

    const auto r2 = pi_step(refs.v_dc2 - v_dc2_meas, pi2, dt);
    const auto r1 = pi_step(refs.v_dc1 - v_dc1_meas, pi1, dt);
    pi2 = r2.state;
    pi1 = r1.state;
    const double m_opt = refs.v_dc1 / (static_cast<double>(n_c) * v_m) + r1.u;

    ControlDecision dec;
    dec.d_requested = r2.u;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : crossings) {
        const double m2 = std::clamp(c.m + static_cast<double>(c.slope) * r2.u, 0.0, 1.0);
        const double m1 = coupled_index(m_opt, m2, n_c, L, mode);
        if (m1 < 0.0 || m1 > 1.0) continue;
        const double score = std::abs(m1 - m2);
        dec.candidates.push_back({m1, m2, score});
        if (score < best - kTieMargin || (score <= best + kTieMargin && m2 < *dec.m_shared)) {
            best = score;
            dec.m_main = m1;
            dec.m_shared = m2;
        }
    }
    if (!dec.m_shared) {
        throw UnreachableSetpointError("no candidate keeps m_1 inside [0, 1]");
    }
    return dec;
}

SymmetricController::SymmetricController(std::size_t n_c, double v_m, double ratio, PIState pi,
                                         double v_dc2_ref_initial, CandidateForm form)
    : n_c_(n_c), v_m_(v_m), pi_(pi), form_(form) {
    if (pi_.ki != 0.0) {
        const double d_ff = std::clamp(1.0 - v_dc2_ref_initial / (v_m * ratio), pi_.out_min, pi_.out_max);
        pi_.integ = d_ff / pi_.ki;
    }
}

Eigen::VectorXd SymmetricController::update(const Measurements& meas, const References& refs, double period) {
    last_ = symmetric_controller_step(meas.v_dc2, refs.v_dc2, refs.v_dc1, n_c_, v_m_, pi_, period, form_);
    return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_c_), last_.m_main);
}

AsymmetricController::AsymmetricController(std::size_t n_c, ModuleSpan shared, double v_m, GainProfile profile,
                                           PIState pi1, PIState pi2, CouplingMode mode)
    : n_c_(n_c), shared_(shared), v_m_(v_m), profile_(std::move(profile)), pi1_(pi1), pi2_(pi2), mode_(mode) {
    if (shared_.count != profile_.L || profile_.n_c != n_c_ || shared_.last() > n_c_) {
        throw DomainError("shared span does not match the gain profile");
    }
}

Eigen::VectorXd AsymmetricController::update(const Measurements& meas, const References& refs, double period) {
    last_ = asymmetric_controller_step(meas.v_dc1, meas.v_dc2, {refs.v_dc1, refs.v_dc2}, profile_, n_c_, shared_.count,
                                       v_m_, pi1_, pi2_, period, mode_);
    Eigen::VectorXd m = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n_c_), last_.m_main);
    m.segment(static_cast<Eigen::Index>(shared_.first), static_cast<Eigen::Index>(shared_.count))
        .setConstant(*last_.m_shared);
    return m;
}

}  // namespace mrb
