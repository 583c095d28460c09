#include "noisyor/whitening.hpp"

#include <cmath>
#include <sstream>

namespace noisyor {

namespace {

DenseMatrix symmetrised(const DenseMatrix& q) { return (q + q.transpose()) / 2; }

}  // namespace

WhiteningSet make_whitening_set(const DenseMatrix& q_a, const DenseMatrix& q_b, const DenseMatrix& q_c, int m) {
    WhiteningSet out;
    out.m = m;
    out.q_a = symmetrised(q_a);
    out.q_b = symmetrised(q_b);
    out.q_c = symmetrised(q_c);
    const auto ra = psd_roots(out.q_a, m);
    const auto rb = psd_roots(out.q_b, m);
    const auto rc = psd_roots(out.q_c, m);
    out.inv_sqrt_a = ra.inv_sqrt;
    out.inv_sqrt_b = rb.inv_sqrt;
    out.inv_sqrt_c = rc.inv_sqrt;
    out.sqrt_a = ra.sqrt;
    out.sqrt_b = rb.sqrt;
    out.sqrt_c = rc.sqrt;
    return out;
}

DenseMatrix cross_whitening(const DenseMatrix& sigma_ab, const DenseMatrix& sigma_bc, const DenseMatrix& sigma_ca,
                            int truncation_rank) {
    if (sigma_ab.cols() != sigma_bc.rows() || sigma_bc.cols() != sigma_ca.rows() ||
        sigma_ca.cols() != sigma_ab.rows())
        throw InvalidInput("whitening: cross-block dimensions are inconsistent");
    const DenseMatrix middle = rank_m_pinv<double>(sigma_bc.transpose(), truncation_rank);
    return symmetrised(sigma_ab * middle * sigma_ca);
}

WhiteningSet whitening_matrices(const PmiBlocks& blocks, double rho, int m, int truncation_rank) {
    if (!(rho > 0 && rho < 1)) throw InvalidInput("whitening: rho must lie in (0, 1)");
    const auto min_block = std::min({blocks.pmi_ab.rows(), blocks.pmi_bc.rows(), blocks.pmi_ca.rows()});
    if (m < 1 || m > min_block) throw InvalidInput("whitening: m must lie in [1, smallest block size]");
    const int rank = truncation_rank > 0 ? truncation_rank : m;
    const double scale = std::pow(rho / (1 - rho), -1.0 / 3.0);
    const DenseMatrix q_a = scale * cross_whitening(blocks.pmi_ab, blocks.pmi_bc, blocks.pmi_ca, rank);
    const DenseMatrix q_b = scale * cross_whitening(blocks.pmi_bc, blocks.pmi_ca, blocks.pmi_ab, rank);
    const DenseMatrix q_c = scale * cross_whitening(blocks.pmi_ca, blocks.pmi_ab, blocks.pmi_bc, rank);
    return make_whitening_set(q_a, q_b, q_c, m);
}

double check_whitening(const DenseMatrix& Q, const DenseMatrix& A, int m) {
    if (Q.rows() != Q.cols() || Q.rows() != A.rows()) {
        std::ostringstream os;
        os << "check_whitening: Q is " << Q.rows() << "x" << Q.cols() << " but A has " << A.rows() << " rows";
        throw InvalidInput(os.str());
    }
    const DenseMatrix white = psd_inv_sqrt<double>(symmetrised(Q), m) * A;
    const DenseMatrix gram = white.transpose() * white;
    return spectral_norm((gram - DenseMatrix::Identity(gram.rows(), gram.cols())).eval());
}

double symmetric_boundedness(const DenseMatrix& D, const DenseMatrix& S) {
    const DenseMatrix sym = symmetrised(D);
    return std::max(spectral_tau<double>(sym, S), spectral_tau<double>(-sym, S));
}

}  // namespace noisyor
