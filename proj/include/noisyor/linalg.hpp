#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "noisyor/config.hpp"
#include "noisyor/errors.hpp"

namespace noisyor {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowMajorMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using DenseMatrix = Matrix<double>;
using DenseVector = Vector<double>;

/// Order-3 tensor stored in lexicographic (i, j, k) order, k fastest.
template <typename Scalar>
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(Eigen::Index d1, Eigen::Index d2, Eigen::Index d3)
        : dims_{d1, d2, d3}, data_(Vector<Scalar>::Zero(d1 * d2 * d3)) {
        if (d1 < 0 || d2 < 0 || d3 < 0) throw InvalidInput("tensor dimensions must be nonnegative");
    }

    static Tensor3 Zero(Eigen::Index d1, Eigen::Index d2, Eigen::Index d3) { return Tensor3(d1, d2, d3); }

    Eigen::Index dim(int mode) const { return dims_[static_cast<std::size_t>(mode)]; }
    const std::array<Eigen::Index, 3>& dims() const { return dims_; }
    Eigen::Index size() const { return data_.size(); }

    Scalar& operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }
    Scalar operator()(Eigen::Index i, Eigen::Index j, Eigen::Index k) const {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }

    Vector<Scalar>& data() { return data_; }
    const Vector<Scalar>& data() const { return data_; }

    /// d1 x (d2 d3) view; column index j * d3 + k.
    auto unfold_1_23() const {
        return Eigen::Map<const RowMajorMatrix<Scalar>>(data_.data(), dims_[0], dims_[1] * dims_[2]);
    }
    /// (d1 d2) x d3 view; row index i * d2 + j.
    auto unfold_12_3() const {
        return Eigen::Map<const RowMajorMatrix<Scalar>>(data_.data(), dims_[0] * dims_[1], dims_[2]);
    }
    /// d2 x (d1 d3) copy; column index i * d3 + k.
    Matrix<Scalar> unfold_2_13() const {
        Matrix<Scalar> out(dims_[1], dims_[0] * dims_[2]);
        for (Eigen::Index i = 0; i < dims_[0]; ++i)
            for (Eigen::Index j = 0; j < dims_[1]; ++j)
                for (Eigen::Index k = 0; k < dims_[2]; ++k) out(j, i * dims_[2] + k) = (*this)(i, j, k);
        return out;
    }

    bool all_finite() const { return data_.allFinite(); }

    Tensor3& operator+=(const Tensor3& other) {
        if (other.dims_ != dims_) throw InvalidInput("tensor dimension mismatch in +=");
        data_ += other.data_;
        return *this;
    }
    Tensor3& operator-=(const Tensor3& other) {
        if (other.dims_ != dims_) throw InvalidInput("tensor dimension mismatch in -=");
        data_ -= other.data_;
        return *this;
    }
    Tensor3& operator*=(Scalar s) {
        data_ *= s;
        return *this;
    }
    friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
    friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
    friend Tensor3 operator*(Tensor3 a, Scalar s) { return a *= s; }
    friend Tensor3 operator*(Scalar s, Tensor3 a) { return a *= s; }

private:
    std::array<Eigen::Index, 3> dims_{0, 0, 0};
    Vector<Scalar> data_;
};

using DenseTensor3 = Tensor3<double>;

template <typename Scalar>
struct SvdResult {
    Matrix<Scalar> left_vectors;
    Vector<Scalar> singular_values;
    Matrix<Scalar> right_vectors;

    Matrix<Scalar> reconstruct() const {
        return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
    }
};

/// Mode partitions accepted by flatten_norm.
enum class Split { A_BC, B_AC, AB_C };

/// Parses "{1}{2,3}", "{2}{1,3}" or "{1,2}{3}".
Split parse_split(std::string_view text);
std::string to_string(Split split);

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (!m.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (m.rows() != m.cols()) throw InvalidInput(std::string(what) + ": matrix is not square");
    using Scalar = typename Derived::Scalar;
    const Scalar scale = std::max<Scalar>(Scalar(1), m.cwiseAbs().maxCoeff());
    const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > Scalar(Tolerances::symmetry) * scale) {
        std::ostringstream os;
        os << what << ": matrix is not symmetric (max |M - M^T| = " << asym << ")";
        throw InvalidInput(os.str());
    }
}

template <typename Derived>
void require_orthonormal(const Eigen::MatrixBase<Derived>& basis, const char* what) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index k = basis.cols();
    const Scalar dev = (basis.transpose() * basis - Matrix<Scalar>::Identity(k, k)).cwiseAbs().maxCoeff();
    if (!(dev <= Scalar(Tolerances::orthonormality))) {
        std::ostringstream os;
        os << what << ": columns are not orthonormal (max |B^T B - Id| = " << dev << ")";
        throw InvalidInput(os.str());
    }
}

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
template <typename Scalar>
std::pair<Vector<Scalar>, Matrix<Scalar>> sorted_eigen(const Matrix<Scalar>& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(sym);
    if (es.info() != Eigen::Success) throw NumericError("symmetric eigen-decomposition did not converge");
    return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

}  // namespace detail

/// Largest singular value.
template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    if (m.size() == 0) return Scalar(0);
    Eigen::BDCSVD<Matrix<Scalar>> svd(m.eval());
    if (svd.info() != Eigen::Success) throw NumericError("SVD did not converge");
    return svd.singularValues()(0);
}

/// Top-m singular triplets of M.
template <typename Scalar>
SvdResult<Scalar> truncated_svd(const Matrix<Scalar>& M, Eigen::Index m) {
    if (m < 1 || m > std::min(M.rows(), M.cols()))
        throw InvalidInput("truncated_svd: rank must lie in [1, min(rows, cols)]");
    detail::require_finite(M, "truncated_svd");
    Eigen::BDCSVD<Matrix<Scalar>> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericError("truncated_svd: SVD did not converge");
    return {svd.matrixU().leftCols(m), svd.singularValues().head(m), svd.matrixV().leftCols(m)};
}

/// [M]_m^+ : pseudo-inverse of the best rank-m approximation of M.
template <typename Scalar>
Matrix<Scalar> rank_m_pinv(const Matrix<Scalar>& M, Eigen::Index m) {
    const SvdResult<Scalar> svd = truncated_svd(M, m);
    const Scalar top = svd.singular_values(0);
    const Scalar low = svd.singular_values(m - 1);
    if (!(top > Scalar(0)) || !(low > Scalar(Tolerances::relative_rank) * top)) {
        std::ostringstream os;
        os << "rank_m_pinv: sigma_" << m << " = " << low << " is below " << Tolerances::relative_rank
           << " * sigma_1 (sigma_1 = " << top << ")";
        throw RankError(os.str(), static_cast<double>(low));
    }
    return svd.right_vectors * svd.singular_values.cwiseInverse().asDiagonal() * svd.left_vectors.transpose();
}

/// Rank-m square root and inverse square root of a symmetric PSD matrix,
/// both restricted to the top-m eigenspace.
template <typename Scalar>
struct PsdRoots {
    Matrix<Scalar> sqrt;
    Matrix<Scalar> inv_sqrt;
    Matrix<Scalar> basis;       ///< top-m eigenvectors
    Vector<Scalar> eigenvalues; ///< top-m eigenvalues, descending
};

template <typename Scalar>
PsdRoots<Scalar> psd_roots(const Matrix<Scalar>& Q, Eigen::Index m) {
    detail::require_finite(Q, "psd_roots");
    detail::require_symmetric(Q, "psd_roots");
    if (m < 1 || m > Q.rows()) throw InvalidInput("psd_roots: rank must lie in [1, dim]");
    const Matrix<Scalar> sym = (Q + Q.transpose()) / Scalar(2);
    auto [values, vectors] = detail::sorted_eigen<Scalar>(sym);
    const Scalar top = values(0);
    const Scalar low = values(m - 1);
    if (!(low > Scalar(0)) || !(low > Scalar(Tolerances::relative_rank) * top)) {
        std::ostringstream os;
        os << "psd_roots: eigenvalue " << m << " = " << low << " is not positive";
        throw RankError(os.str(), static_cast<double>(low));
    }
    PsdRoots<Scalar> out;
    out.basis = vectors.leftCols(m);
    out.eigenvalues = values.head(m);
    const Vector<Scalar> root = out.eigenvalues.cwiseSqrt();
    out.sqrt = out.basis * root.asDiagonal() * out.basis.transpose();
    out.inv_sqrt = out.basis * root.cwiseInverse().asDiagonal() * out.basis.transpose();
    return out;
}

/// (Q^+)^{1/2} restricted to the top-m eigenspace of Q.
template <typename Scalar>
Matrix<Scalar> psd_inv_sqrt(const Matrix<Scalar>& Q, Eigen::Index m) {
    return psd_roots(Q, m).inv_sqrt;
}

/// Spectral norm of P_1 - P_2 for the projectors onto span(basis1), span(basis2).
template <typename Scalar>
Scalar projector_distance(const Matrix<Scalar>& basis1, const Matrix<Scalar>& basis2) {
    if (basis1.rows() != basis2.rows()) throw InvalidInput("projector_distance: ambient dimensions differ");
    detail::require_finite(basis1, "projector_distance");
    detail::require_finite(basis2, "projector_distance");
    detail::require_orthonormal(basis1, "projector_distance");
    detail::require_orthonormal(basis2, "projector_distance");
    const Matrix<Scalar> diff = basis1 * basis1.transpose() - basis2 * basis2.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(diff, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("projector_distance: eigen-decomposition failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Spectral norm of the unfolding of T along the given split.
template <typename Scalar>
Scalar flatten_norm(const Tensor3<Scalar>& T, Split split) {
    if (T.size() == 0) return Scalar(0);
    switch (split) {
        case Split::A_BC: return spectral_norm(T.unfold_1_23());
        case Split::B_AC: return spectral_norm(T.unfold_2_13());
        case Split::AB_C: return spectral_norm(T.unfold_12_3());
    }
    return Scalar(0);
}

/// Minimal tau with E <= tau (S S^T + sigma_r(S S^T) Id), clamped at 0.
/// `rank` selects which eigenvalue of S S^T is the floor; it defaults to the
/// column count of S.
template <typename Scalar>
Scalar spectral_tau(const Matrix<Scalar>& E, const Matrix<Scalar>& S, Eigen::Index rank = -1) {
    if (rank < 0) rank = S.cols();
    if (E.rows() != S.rows()) throw InvalidInput("spectral_tau: E and S have different row counts");
    if (rank < 1 || rank > std::min(S.rows(), S.cols()))
        throw InvalidInput("spectral_tau: rank must lie in [1, min(rows, cols)] of S");
    detail::require_finite(E, "spectral_tau");
    detail::require_finite(S, "spectral_tau");
    detail::require_symmetric(E, "spectral_tau");
    const Matrix<Scalar> signal = S * S.transpose();
    const auto values = detail::sorted_eigen<Scalar>(signal).first;
    const Scalar floor = values(rank - 1);
    if (!(floor > Scalar(0)) || !(floor > Scalar(Tolerances::relative_rank) * values(0))) {
        std::ostringstream os;
        os << "spectral_tau: sigma_" << rank << "(S S^T) = " << floor << " is not positive";
        throw RankError(os.str(), static_cast<double>(floor));
    }
    const Eigen::Index n = signal.rows();
    const Matrix<Scalar> bound = signal + floor * Matrix<Scalar>::Identity(n, n);
    auto [bvals, bvecs] = detail::sorted_eigen<Scalar>(bound);
    const Matrix<Scalar> root = bvecs * bvals.cwiseSqrt().cwiseInverse().asDiagonal() * bvecs.transpose();
    const Matrix<Scalar> sym = (E + E.transpose()) / Scalar(2);
    const Matrix<Scalar> congruent = root * sym * root;
    const Scalar top = detail::sorted_eigen<Scalar>(((congruent + congruent.transpose()) / Scalar(2)).eval()).first(0);
    return std::max(Scalar(0), top);
}

/// The four pieces of E relative to the column spans K of B and H of C:
/// E = B d1 C^T + B d2^T + d3 C^T + d4.
template <typename Scalar>
struct AsymmetricParts {
    Matrix<Scalar> delta1, delta2, delta3, delta4;
    Scalar sigma_min_b{}, sigma_min_c{};

    Scalar epsilon() const {
        return std::max({spectral_norm(delta1), spectral_norm(delta2) / sigma_min_c,
                         spectral_norm(delta3) / sigma_min_b, spectral_norm(delta4) / (sigma_min_b * sigma_min_c)});
    }
};

template <typename Scalar>
AsymmetricParts<Scalar> asymmetric_parts(const Matrix<Scalar>& E, const Matrix<Scalar>& B, const Matrix<Scalar>& C) {
    if (B.cols() != C.cols()) throw InvalidInput("asym_spectral_eps: B and C must have the same column count");
    if (E.rows() != B.rows() || E.cols() != C.rows())
        throw InvalidInput("asym_spectral_eps: E must be rows(B) x rows(C)");
    detail::require_finite(E, "asym_spectral_eps");
    const Eigen::Index m = B.cols();
    const Matrix<Scalar> b_pinv = rank_m_pinv(B, m);
    const Matrix<Scalar> c_pinv = rank_m_pinv(C, m);
    AsymmetricParts<Scalar> out;
    out.sigma_min_b = truncated_svd(B, m).singular_values(m - 1);
    out.sigma_min_c = truncated_svd(C, m).singular_values(m - 1);
    const Matrix<Scalar> k_perp = Matrix<Scalar>::Identity(B.rows(), B.rows()) - B * b_pinv;
    const Matrix<Scalar> h_perp = Matrix<Scalar>::Identity(C.rows(), C.rows()) - C * c_pinv;
    const Matrix<Scalar> ct_pinv = c_pinv.transpose();  // (C^T)^+
    out.delta1 = b_pinv * E * ct_pinv;
    out.delta2 = (b_pinv * E * h_perp).transpose();
    out.delta3 = k_perp * E * ct_pinv;
    out.delta4 = k_perp * E * h_perp;
    return out;
}

/// Smallest eps for which E is eps-spectrally bounded by (B, C) in the
/// asymmetric sense, using the canonical four-part decomposition of E.
template <typename Scalar>
Scalar asym_spectral_eps(const Matrix<Scalar>& E, const Matrix<Scalar>& B, const Matrix<Scalar>& C) {
    return asymmetric_parts(E, B, C).epsilon();
}

/// T x_1 A x_2 B x_3 C, i.e. (A (x) B (x) C) . T.
template <typename Scalar>
Tensor3<Scalar> multilinear_transform(const Tensor3<Scalar>& T, const Matrix<Scalar>& A, const Matrix<Scalar>& B,
                                      const Matrix<Scalar>& C) {
    if (A.cols() != T.dim(0) || B.cols() != T.dim(1) || C.cols() != T.dim(2))
        throw InvalidInput("multilinear_transform: factor dimensions do not match the tensor");
    const Eigen::Index d1 = T.dim(0), d2 = T.dim(1);
    const Eigen::Index r1 = A.rows(), r2 = B.rows(), r3 = C.rows();
    // mode 3: (d1 d2) x d3 times C^T
    const RowMajorMatrix<Scalar> step3 = T.unfold_12_3() * C.transpose();  // (d1 d2) x r3
    // mode 2: for each i, (d2 x r3) slice
    RowMajorMatrix<Scalar> step2(d1 * r2, r3);
    for (Eigen::Index i = 0; i < d1; ++i) step2.middleRows(i * r2, r2) = B * step3.middleRows(i * d2, d2);
    // mode 1: d1 x (r2 r3)
    const Eigen::Map<const RowMajorMatrix<Scalar>> flat(step2.data(), d1, r2 * r3);
    const RowMajorMatrix<Scalar> step1 = A * flat;
    Tensor3<Scalar> out(r1, r2, r3);
    Eigen::Map<RowMajorMatrix<Scalar>>(out.data().data(), r1, r2 * r3) = step1;
    return out;
}

/// Sum_k u_k (x) v_k (x) w_k over the columns of U, V, W.
template <typename Scalar>
Tensor3<Scalar> cp_tensor(const Matrix<Scalar>& U, const Matrix<Scalar>& V, const Matrix<Scalar>& W) {
    if (U.cols() != V.cols() || U.cols() != W.cols()) throw InvalidInput("cp_tensor: factor ranks differ");
    Tensor3<Scalar> out(U.rows(), V.rows(), W.rows());
    Matrix<Scalar> khatri_rao(V.rows() * W.rows(), U.cols());
    for (Eigen::Index r = 0; r < U.cols(); ++r)
        for (Eigen::Index j = 0; j < V.rows(); ++j)
            khatri_rao.col(r).segment(j * W.rows(), W.rows()) = V(j, r) * W.col(r);
    const RowMajorMatrix<Scalar> flat = U * khatri_rao.transpose();
    Eigen::Map<RowMajorMatrix<Scalar>>(out.data().data(), U.rows(), V.rows() * W.rows()) = flat;
    return out;
}

}  // namespace noisyor
