#pragma once

namespace noisyor {

/// Numerical tolerances shared by every module.
struct Tolerances {
    /// U^T U = Id and projector-basis checks.
    static constexpr double orthonormality = 1e-8;
    /// Symmetry checks, relative to the largest entry (absolute below 1).
    static constexpr double symmetry = 1e-8;
    /// A rank-m operation requires sigma_m > relative_rank * sigma_1.
    static constexpr double relative_rank = 1e-12;
    /// Slack allowed in semidefinite-order checks.
    static constexpr double psd_slack = 1e-6;
    /// Numerical-rank cutoff used by diagnostics (relative to sigma_1).
    static constexpr double diagnostic_rank = 1e-10;
};

}  // namespace noisyor
