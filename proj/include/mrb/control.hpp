#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mrb/circuit_sim.hpp"
#include "mrb/core_model.hpp"
#include "mrb/waveform_analytics.hpp"

namespace mrb {

/// Discrete PI with clamping anti-windup.
struct PIState {
    double kp = 0.0;
    double ki = 0.0;
    double integ = 0.0;
    double out_min = 0.0;
    double out_max = 1.0;
};

struct PIOutput {
    double u = 0.0;
    PIState state;
};

/// u = clamp(kp*err + ki*integ'). The integral is held back so the
/// unclamped output never leaves [out_min, out_max].
[[nodiscard]] PIOutput pi_step(double err, const PIState& st, double dt);

struct Candidate {
    double m = 0.0;        // m for the symmetric case, m_1 otherwise
    double m_shared = 0.0; // m_2, asymmetric case only
    double score = 0.0;    // distance minimized by the selection
};

struct ControlDecision {
    double m_main = 0.0;
    std::optional<double> m_shared;
    double d_requested = 0.0;
    std::vector<Candidate> candidates;
};

/// How the symmetric candidate set is formed.
enum class CandidateForm {
    /// m = (i + 0.5 +- (0.5 - D)) / n_c: every candidate has pulse duty D or 1 - D.
    DutyExact,
    /// m = (i + 0.5 +- D) / n_c as printed: duty 0.5 -+ D.
    Literal,
};

/// The 2*n_c symmetric operating points for a requested duty, sorted ascending.
[[nodiscard]] std::vector<double> symmetric_candidates(double d, std::size_t n_c,
                                                       CandidateForm form = CandidateForm::DutyExact);

/// Candidate nearest to v_dc1_ref / (n_c v_m); ties go to the smaller m.
[[nodiscard]] ControlDecision select_symmetric(double d, double v_dc1_ref, std::size_t n_c, double v_m,
                                               CandidateForm form = CandidateForm::DutyExact);

/// One update of the symmetric dual-port controller. The PI acts on
/// v_dc2_meas - v_dc2_ref because the isolated gain falls as D rises on [0, 0.5].
[[nodiscard]] ControlDecision symmetric_controller_step(double v_dc2_meas, double v_dc2_ref, double v_dc1_ref,
                                                        std::size_t n_c, double v_m, PIState& pi, double dt,
                                                        CandidateForm form = CandidateForm::DutyExact);

enum class CouplingMode {
    /// m_1 = m_opt (n_c + L)/n_c - m_2 L/n_c
    Literal,
    /// m_1 = (m_opt n_c - m_2 L)/(n_c - L), keeps the string dc component at m_opt n_c v_m
    DcConsistent,
};

/// m_1 for the non-shared modules given the shared index m_2.
[[nodiscard]] double coupled_index(double m_opt, double m_shared, std::size_t n_c, std::size_t L, CouplingMode mode);

/// A crossing of the isolated gain profile with a reference.
struct ProfileCrossing {
    double m = 0.0;
    int slope = 0;  // sign of d v_dc2 / d m at the crossing
};

/// Every m where the piecewise-linear profile meets v_dc2_ref. Segments that
/// straddle a jump of the profile are skipped. Throws
/// UnreachableSetpointError when the reference is outside the profile range.
[[nodiscard]] std::vector<ProfileCrossing> invert_gain_profile(const GainProfile& profile, double v_dc2_ref);

struct AsymmetricRefs {
    double v_dc1 = 0.0;
    double v_dc2 = 0.0;
};

/// One update of the asymmetric controller. PI_1 corrects m_opt on the
/// v_dc1 error, PI_2 moves each open-loop m_2 along the local profile slope
/// on the v_dc2 error. Among the candidates with m_1 in [0, 1] the pair with
/// the smallest |m_1 - m_2| wins.
[[nodiscard]] ControlDecision asymmetric_controller_step(double v_dc1_meas, double v_dc2_meas,
                                                         const AsymmetricRefs& refs, const GainProfile& profile,
                                                         std::size_t n_c, std::size_t L, double v_m, PIState& pi1,
                                                         PIState& pi2, double dt, CouplingMode mode);

/// Fixed indices, for open-loop runs.
class OpenLoopController final : public Controller {
public:
    explicit OpenLoopController(Eigen::VectorXd m) : m_(std::move(m)) {}
    Eigen::VectorXd update(const Measurements&, const References&, double) override { return m_; }

private:
    Eigen::VectorXd m_;
};

/// Uniform index over the whole string from the symmetric controller.
class SymmetricController final : public Controller {
public:
    /// The integrator starts at the duty that gives v_dc2_ref with ideal modules.
    SymmetricController(std::size_t n_c, double v_m, double ratio, PIState pi, double v_dc2_ref_initial,
                        CandidateForm form = CandidateForm::DutyExact);
    Eigen::VectorXd update(const Measurements& meas, const References& refs, double period) override;

    [[nodiscard]] const ControlDecision& last() const noexcept { return last_; }

private:
    std::size_t n_c_;
    double v_m_;
    PIState pi_;
    CandidateForm form_;
    ControlDecision last_;
};

/// m_2 on the isolated span, m_1 on every other module.
class AsymmetricController final : public Controller {
public:
    AsymmetricController(std::size_t n_c, ModuleSpan shared, double v_m, GainProfile profile, PIState pi1, PIState pi2,
                         CouplingMode mode);
    Eigen::VectorXd update(const Measurements& meas, const References& refs, double period) override;

    [[nodiscard]] const ControlDecision& last() const noexcept { return last_; }

private:
    std::size_t n_c_;
    ModuleSpan shared_;
    double v_m_;
    GainProfile profile_;
    PIState pi1_;
    PIState pi2_;
    CouplingMode mode_;
    ControlDecision last_;
};

}  // namespace mrb
