#include "noisyor/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include "noisyor/config.hpp"

namespace noisyor {

namespace {

Eigen::Index numerical_rank(const DenseVector& singular_values, double rel_tol) {
    if (singular_values.size() == 0 || !(singular_values(0) > 0)) return 0;
    Eigen::Index r = 0;
    while (r < singular_values.size() && singular_values(r) > rel_tol * singular_values(0)) ++r;
    return r;
}

double incoherence_of_rank(const Eigen::BDCSVD<DenseMatrix>& svd, Eigen::Index rows, Eigen::Index rank) {
    const DenseMatrix U = svd.matrixU().leftCols(rank);
    return static_cast<double>(rows) / static_cast<double>(rank) * U.rowwise().squaredNorm().maxCoeff();
}

DenseMatrix rows_of(const DenseMatrix& M, const std::vector<int>& rows) {
    DenseMatrix out(static_cast<Eigen::Index>(rows.size()), M.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(rows[i]);
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2;
}

std::vector<int> hungarian(const DenseMatrix& cost) {
    // Potentials-based O(m^3) shortest augmenting path, 1-indexed internally.
    const int m = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(m + 1, 0), v(m + 1, 0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= m; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> result(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j) result[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    return result;
}

std::vector<int> greedy_assignment(const DenseMatrix& cost) {
    const int m = static_cast<int>(cost.rows());
    std::vector<std::tuple<double, int, int>> entries;
    entries.reserve(static_cast<std::size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) entries.emplace_back(cost(i, j), i, j);
    std::sort(entries.begin(), entries.end());
    std::vector<int> result(static_cast<std::size_t>(m), -1);
    std::vector<char> taken(static_cast<std::size_t>(m), 0);
    for (const auto& [c, i, j] : entries) {
        if (result[static_cast<std::size_t>(i)] >= 0 || taken[static_cast<std::size_t>(j)]) continue;
        result[static_cast<std::size_t>(i)] = j;
        taken[static_cast<std::size_t>(j)] = 1;
    }
    return result;
}

constexpr int kExactAssignmentLimit = 64;

}  // namespace

double incoherence(const DenseMatrix& F, double rank_tol) {
    detail::require_finite(F, "incoherence");
    if (F.rows() == 0 || F.cols() == 0) throw InvalidInput("incoherence: empty matrix");
    if (F.cols() > F.rows()) throw InvalidInput("incoherence: F must have at least as many rows as columns");
    Eigen::BDCSVD<DenseMatrix> svd(F, Eigen::ComputeThinU);
    const auto rank = numerical_rank(svd.singularValues(), rank_tol);
    if (rank < F.cols()) {
        const double smin = svd.singularValues()(F.cols() - 1);
        std::ostringstream os;
        os << "incoherence: F is rank deficient (sigma_" << F.cols() << " = " << smin << ")";
        throw RankError(os.str(), smin);
    }
    return incoherence_of_rank(svd, F.rows(), rank);
}

std::vector<int> solve_assignment(const DenseMatrix& cost) {
    if (cost.rows() != cost.cols()) throw InvalidInput("solve_assignment: cost matrix must be square");
    detail::require_finite(cost, "solve_assignment");
    if (cost.rows() == 0) return {};
    return cost.rows() <= kExactAssignmentLimit ? hungarian(cost) : greedy_assignment(cost);
}

ColumnError column_error(const DenseMatrix& W_true, const DenseMatrix& W_hat) {
    if (W_true.rows() != W_hat.rows() || W_true.cols() != W_hat.cols()) {
        std::ostringstream os;
        os << "column_error: shape mismatch " << W_true.rows() << "x" << W_true.cols() << " vs " << W_hat.rows()
           << "x" << W_hat.cols();
        throw InvalidInput(os.str());
    }
    detail::require_finite(W_true, "column_error");
    detail::require_finite(W_hat, "column_error");
    const Eigen::Index m = W_true.cols();
    DenseMatrix cost(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) cost(i, j) = (W_true.col(i) - W_hat.col(j)).squaredNorm();

    ColumnError out;
    out.exact = m <= kExactAssignmentLimit;
    if (!out.exact)
        std::clog << "warning: column_error: m = " << m << " exceeds " << kExactAssignmentLimit
                  << ", using greedy matching\n";
    out.permutation = solve_assignment(cost);
    out.errors.resize(m);
    out.relative.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double err = std::sqrt(cost(i, out.permutation[static_cast<std::size_t>(i)]));
        const double norm = W_true.col(i).norm();
        out.errors(i) = err;
        out.relative(i) = norm > 0 ? err / norm : err;
    }
    if (m > 0) {
        out.eta_max = out.relative.maxCoeff();
        out.eta_median = median({out.relative.data(), out.relative.data() + m});
    }
    return out;
}

ModelDiagnostics model_report(const NoisyOrModel& model, const Partition& part) {
    validate_model(model);
    validate_partition(part);
    if (part.n != model.n()) throw InvalidInput("model_report: partition size differs from n");
    const double tol = Tolerances::diagnostic_rank;
    ModelDiagnostics out;

    const DenseMatrix F = derived_matrix(model, 1);
    Eigen::BDCSVD<DenseMatrix> svd(F, Eigen::ComputeThinU);
    const auto rank = numerical_rank(svd.singularValues(), tol);
    out.mu = rank > 0 ? incoherence_of_rank(svd, F.rows(), rank) : 0.0;

    const DenseMatrix Fa = rows_of(F, part.a);
    Eigen::BDCSVD<DenseMatrix> svd_a(Fa);
    // spectral_tau needs the floor eigenvalue of F F^T resolvable, i.e. a
    // singular value ratio above sqrt of its relative tolerance.
    const auto rank_a =
        numerical_rank(svd_a.singularValues(), std::max(tol, std::sqrt(Tolerances::relative_rank)));
    auto tau_against_f = [&](int l) {
        if (rank_a == 0) return 0.0;
        const DenseMatrix P = rows_of(derived_matrix(model, l), part.a);
        return spectral_tau<double>(P * P.transpose(), Fa, rank_a);
    };
    out.tau_G = tau_against_f(2);
    out.tau_H = tau_against_f(3);
    out.tau_L = tau_against_f(4);

    out.sigma_min_F_blocks.resize(3);
    for (int b = 0; b < 3; ++b) {
        const DenseMatrix block = rows_of(F, part.block(b));
        const DenseVector sv = Eigen::BDCSVD<DenseMatrix>(block).singularValues();
        out.sigma_min_F_blocks(b) = sv.size() < model.m() ? 0.0 : sv(model.m() - 1);
    }
    const double density =
        static_cast<double>((model.W.array() > 0).count()) / static_cast<double>(std::max<Eigen::Index>(1, model.W.size()));
    out.rho_pm = model.rho * density * model.m();
    return out;
}

}  // namespace noisyor
