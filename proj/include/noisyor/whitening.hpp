#pragma once

#include "noisyor/linalg.hpp"
#include "noisyor/partition.hpp"

namespace noisyor {

/// Approximate whitening matrices for the three blocks, with their rank-m
/// square roots and inverse square roots.
struct WhiteningSet {
    DenseMatrix q_a, q_b, q_c;
    DenseMatrix inv_sqrt_a, inv_sqrt_b, inv_sqrt_c;
    DenseMatrix sqrt_a, sqrt_b, sqrt_c;
    int m = 0;

    const DenseMatrix& q(int mode) const { return mode == 0 ? q_a : mode == 1 ? q_b : q_c; }
};

/// Builds a WhiteningSet from three symmetric PSD matrices.
WhiteningSet make_whitening_set(const DenseMatrix& q_a, const DenseMatrix& q_b, const DenseMatrix& q_c, int m);

/// Sigma_ab [Sigma_bc^T]_r^+ Sigma_ca, symmetrised.
DenseMatrix cross_whitening(const DenseMatrix& sigma_ab, const DenseMatrix& sigma_bc, const DenseMatrix& sigma_ca,
                            int truncation_rank);

/// Whitening matrices from cross-block PMI:
/// Q_a = c^{-1/3} PMI_ab [PMI_bc^T]_r^+ PMI_ca (cyclic for b, c) with
/// c = rho / (1 - rho). truncation_rank <= 0 means r = m.
WhiteningSet whitening_matrices(const PmiBlocks& blocks, double rho, int m, int truncation_rank = 0);

/// || ((Q^+)^{1/2} A)^T ((Q^+)^{1/2} A) - Id_m ||.
double check_whitening(const DenseMatrix& Q, const DenseMatrix& A, int m);

/// Two-sided relative size of a symmetric error D against S:
/// max(spectral_tau(D, S), spectral_tau(-D, S)).
double symmetric_boundedness(const DenseMatrix& D, const DenseMatrix& S);

}  // namespace noisyor
