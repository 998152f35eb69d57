#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "mrb/control.hpp"

namespace mrb {

struct VerifyOptions {
    std::size_t n_c_min = 2;
    std::size_t n_c_max = 12;
    double m_step = 0.001;
    bool symmetric_only = false;
    /// Skip m within boundary_eps of a branch boundary (m*L or m*n_c integral).
    bool exclude_boundaries = true;
    double boundary_eps = 1e-9;
    double tolerance = 1e-9;  // relative to max(|a|, |b|, v_m)
    /// Operating points whose leakage bound is also found by simulation (slow).
    std::size_t les_points = 1;
};

/// A property that failed at one grid point.
struct Witness {
    std::string property;
    std::string quantity;
    double m = 0.0;
    std::size_t L = 0;
    std::size_t n_c = 0;
    double expected = 0.0;  // closed form
    double measured = 0.0;  // oracle
};

/// A closed form that disagrees with the oracle by construction; reported, not failed.
struct Divergence {
    std::string quantity;
    double m = 0.0;
    std::size_t L = 0;
    std::size_t n_c = 0;
    double literal = 0.0;
    double oracle = 0.0;
};

struct CouplingCheck {
    CouplingMode mode = CouplingMode::DcConsistent;
    double max_relative_error = 0.0;
    bool holds = false;  // string dc component at v_dc1_ref within 1e-6
};

struct VerifyReport {
    std::size_t points = 0;
    std::vector<Witness> failures;
    std::vector<Divergence> divergences;
    std::vector<CouplingCheck> coupling;
    double elapsed_s = 0.0;

    [[nodiscard]] bool passed() const noexcept { return failures.empty(); }
};

/// Oracle-equivalence, symmetry and gain-law properties over the grid, plus
/// the divergence table of the conduction counts and leakage bound.
[[nodiscard]] VerifyReport run_verify(const VerifyOptions& options);

/// Human-readable report: summary, divergence counts, the first max_rows rows of each table.
void write_verify_report(std::ostream& os, const VerifyReport& report, std::size_t max_rows = 20);

}  // namespace mrb
