#pragma once

#include <optional>
#include <vector>

#include "noisyor/linalg.hpp"
#include "noisyor/model.hpp"
#include "noisyor/partition.hpp"

namespace noisyor {

/// mu = (n / m) max_i ||U_i||^2 over rows of the left singular factor of F.
/// Throws RankError when F is rank deficient (relative tolerance rank_tol).
double incoherence(const DenseMatrix& F, double rank_tol = 1e-10);

/// Optimal column matching of W_hat to W_true.
struct ColumnError {
    DenseVector errors;              ///< ||W_hat_{perm[i]} - W_true_i|| for each true column i
    DenseVector relative;            ///< errors scaled by ||W_true_i|| (absolute when that norm is 0)
    std::vector<int> permutation;    ///< true column i is matched with W_hat column permutation[i]
    double eta_max = 0;
    double eta_median = 0;
    bool exact = true;               ///< false when the greedy fallback was used (m > 64)
};

ColumnError column_error(const DenseMatrix& W_true, const DenseMatrix& W_hat);

/// Minimum-cost perfect matching of a square cost matrix: result[i] is the
/// column assigned to row i.
std::vector<int> solve_assignment(const DenseMatrix& cost);

struct ModelDiagnostics {
    double tau_G = 0, tau_H = 0, tau_L = 0;
    double mu = 0;
    DenseVector sigma_min_F_blocks;  ///< sigma_m of F restricted to S_a, S_b, S_c
    double rho_pm = 0;
    std::optional<double> eta_hat;
};

/// tau of G G^T, H H^T, L L^T against F on block S_a, incoherence of F and
/// block conditioning. Rank is numerical, so degenerate weight patterns
/// still produce finite values.
ModelDiagnostics model_report(const NoisyOrModel& model, const Partition& part);

}  // namespace noisyor
