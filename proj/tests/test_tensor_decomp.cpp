#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "noisyor/tensor_decomp.hpp"
#include "noisyor/whitening.hpp"
#include "test_support.hpp"

using namespace noisyor;
using testing::component_errors;
using testing::noise_tensor;
using testing::random_matrix;
using testing::random_orthonormal;

namespace {

DenseVector basis(Eigen::Index d, Eigen::Index i) { return DenseVector::Unit(d, i); }

DenseTensor3 random_tensor(Eigen::Index d1, Eigen::Index d2, Eigen::Index d3, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    DenseTensor3 T(d1, d2, d3);
    for (auto& x : T.data()) x = normal(rng);
    return T;
}

DecompParams params_for(int r, std::uint64_t seed) {
    DecompParams p;
    p.target_r = r;
    p.seed = seed;
    return p;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2;
}

/// Exact whitening set Q = X X^T for each mode.
WhiteningSet exact_whitening(const DenseMatrix& A, const DenseMatrix& B, const DenseMatrix& C) {
    return make_whitening_set(A * A.transpose(), B * B.transpose(), C * C.transpose(), static_cast<int>(A.cols()));
}

/// Gamma with Gamma Gamma^T <= tau (S S^T + sigma_m(S S^T) Id).
DenseMatrix bounded_factor(const DenseMatrix& S, Eigen::Index cols, double tau, std::mt19937_64& rng) {
    const Eigen::Index n = S.rows();
    const DenseMatrix signal = S * S.transpose();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(signal);
    const double floor = es.eigenvalues().reverse()(S.cols() - 1);
    Eigen::SelfAdjointEigenSolver<DenseMatrix> bound(signal + floor * DenseMatrix::Identity(n, n));
    const DenseMatrix root =
        bound.eigenvectors() * bound.eigenvalues().cwiseSqrt().asDiagonal() * bound.eigenvectors().transpose();
    DenseMatrix X = random_matrix(n, cols, rng);
    X /= spectral_norm(X);
    return std::sqrt(tau) * root * X;
}

}  // namespace

TEST_CASE("contract_mode3 and contract_modes12: basis and zero cases") {
    const DenseTensor3 T = cp_tensor<double>(basis(3, 0), basis(3, 0), basis(3, 0));
    const DenseMatrix M = contract_mode3(T, basis(3, 0));
    CHECK((M - basis(3, 0) * basis(3, 0).transpose()).norm() == 0.0);
    CHECK(contract_mode3(T, DenseVector::Zero(3)).isZero(0));
    CHECK((contract_modes12(T, basis(3, 0), basis(3, 0)) - basis(3, 0)).norm() == 0.0);
    CHECK(contract_modes12(T, DenseVector::Zero(3), basis(3, 0)).isZero(0));
    CHECK_THROWS_AS(contract_mode3(T, DenseVector::Zero(4)), InvalidInput);
    CHECK_THROWS_AS(contract_modes12(T, DenseVector::Zero(2), DenseVector::Zero(3)), InvalidInput);
}

TEST_CASE("contractions match triple loops") {
    std::mt19937_64 rng(1);
    const DenseTensor3 T = random_tensor(4, 5, 6, rng);
    const DenseVector g = random_matrix(6, 1, rng).col(0);
    const DenseVector u = random_matrix(4, 1, rng).col(0), v = random_matrix(5, 1, rng).col(0);
    DenseMatrix M = DenseMatrix::Zero(4, 5);
    DenseVector z = DenseVector::Zero(6);
    double t = 0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 6; ++k) {
                M(i, j) += T(i, j, k) * g(k);
                z(k) += T(i, j, k) * u(i) * v(j);
                t += T(i, j, k) * u(i) * v(j) * g(k);
            }
    CHECK((contract_mode3(T, g) - M).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((contract_modes12(T, u, v) - z).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(trilinear(T, u, v, g) == doctest::Approx(t).epsilon(1e-12));
}

TEST_CASE("trial_budget follows C d^{1+delta} log d") {
    DecompParams p;
    CHECK(trial_budget(p, 10) == static_cast<int>(std::ceil(4 * std::pow(10.0, 1.25) * std::log(10.0))));
    p.max_trials = 7;
    CHECK(trial_budget(p, 10) == 7);
}

TEST_CASE("orthogonal_decompose: two basis components") {
    DenseTensor3 T = cp_tensor<double>(basis(3, 0), basis(3, 0), basis(3, 0));
    T += cp_tensor<double>(basis(3, 1), basis(3, 1), basis(3, 1));
    auto params = params_for(2, 5);
    params.zeta = 0.05;
    const auto found = orthogonal_decompose(T, params);
    REQUIRE(found.size() == 2);
    DenseMatrix E = DenseMatrix::Zero(3, 2);
    E(0, 0) = E(1, 1) = 1;
    for (double e : component_errors(found, E, E, E)) CHECK(e <= 1e-10);
    for (const auto& c : found.triples) CHECK(c.score >= 0.999);
}

TEST_CASE("orthogonal_decompose: random orthonormal triples, no noise") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(100 + seed);
        const DenseMatrix U = random_orthonormal(8, 3, rng), V = random_orthonormal(8, 3, rng),
                          W = random_orthonormal(8, 3, rng);
        const auto found = orthogonal_decompose(cp_tensor(U, V, W), params_for(3, seed));
        REQUIRE(found.size() == 3);
        for (double e : component_errors(found, U, V, W)) CHECK(e <= 1e-5);
        for (const auto& c : found.triples) {
            CHECK(std::abs(c.u.norm() - 1) <= 1e-6);
            CHECK(std::abs(c.v.norm() - 1) <= 1e-6);
            CHECK(std::abs(c.w.norm() - 1) <= 1e-6);
            CHECK(c.score >= 0.9);
        }
        for (std::size_t i = 0; i < found.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                CHECK(testing::aligned_distance(found.triples[i].u, found.triples[j].u) >= 0.5);
    }
}

TEST_CASE("orthogonal_decompose: small flattening-norm noise") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(200 + seed);
        const DenseMatrix U = random_orthonormal(8, 3, rng), V = random_orthonormal(8, 3, rng),
                          W = random_orthonormal(8, 3, rng);
        const DenseTensor3 T = cp_tensor(U, V, W) + noise_tensor(8, 8, 8, 0.01, rng);
        const auto found = orthogonal_decompose(T, params_for(3, seed));
        for (double e : component_errors(found, U, V, W)) CHECK(e <= 0.2);
    }
}

TEST_CASE("orthogonal_decompose: deterministic given seed, rectangular tensors") {
    std::mt19937_64 rng(3);
    const DenseMatrix U = random_orthonormal(5, 2, rng), V = random_orthonormal(7, 2, rng),
                      W = random_orthonormal(6, 2, rng);
    const DenseTensor3 T = cp_tensor(U, V, W);
    const auto a = orthogonal_decompose(T, params_for(2, 9));
    const auto b = orthogonal_decompose(T, params_for(2, 9));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.triples[i].u == b.triples[i].u);
        CHECK(a.triples[i].trial == b.triples[i].trial);
    }
    for (double e : component_errors(a, U, V, W)) CHECK(e <= 1e-8);
}

TEST_CASE("orthogonal_decompose: zero tensor and invalid parameters") {
    const DenseTensor3 Z(4, 4, 4);
    try {
        orthogonal_decompose(Z, params_for(2, 1));
        FAIL("expected PartialResult");
    } catch (const PartialResult& e) {
        CHECK(e.found().empty());
    }
    auto bad = params_for(2, 1);
    bad.zeta = 1.5;
    CHECK_THROWS_AS(orthogonal_decompose(Z, bad), InvalidInput);
    CHECK_THROWS_AS(orthogonal_decompose(Z, params_for(5, 1)), InvalidInput);
}

TEST_CASE("orthogonal_decompose: partial result keeps what was found") {
    std::mt19937_64 rng(4);
    const DenseMatrix U = random_orthonormal(6, 2, rng);
    try {
        orthogonal_decompose(cp_tensor(U, U, U), params_for(3, 2));
        FAIL("expected PartialResult");
    } catch (const PartialResult& e) {
        CHECK(e.found().size() == 2);
    }
}

TEST_CASE("doubling the noise roughly doubles the component error") {
    auto median_error = [](double norm) {
        std::vector<double> errors;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            std::mt19937_64 rng(300 + seed);
            const DenseMatrix U = random_orthonormal(8, 3, rng), V = random_orthonormal(8, 3, rng),
                              W = random_orthonormal(8, 3, rng);
            const DenseTensor3 T = cp_tensor(U, V, W) + noise_tensor(8, 8, 8, norm, rng);
            const auto e = component_errors(orthogonal_decompose(T, params_for(3, seed)), U, V, W);
            errors.push_back(*std::max_element(e.begin(), e.end()));
        }
        return median(errors);
    };
    const double small = median_error(0.02), large = median_error(0.04);
    CHECK(large <= 4 * small);
    CHECK(large >= small / 4);
}

TEST_CASE("whitened_decompose: exact whitening of a non-orthogonal tensor") {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(400 + seed);
        const DenseMatrix A = random_matrix(9, 3, rng), B = random_matrix(10, 3, rng), C = random_matrix(8, 3, rng);
        const auto found = whitened_decompose(cp_tensor(A, B, C), exact_whitening(A, B, C), params_for(3, seed));
        REQUIRE(found.size() == 3);
        for (double e : component_errors(found, A, B, C)) CHECK(e <= 1e-4);
        for (const auto& c : found.triples) {
            CHECK(c.u.sum() >= 0);
            CHECK(c.v.sum() >= 0);
            CHECK(c.w.sum() >= 0);
        }
    }
}

TEST_CASE("whitened_decompose: consistent scaling of factors and whitening") {
    std::mt19937_64 rng(5);
    const DenseMatrix A = random_matrix(9, 3, rng), B = random_matrix(9, 3, rng), C = random_matrix(9, 3, rng);
    const auto params = params_for(3, 6);
    const auto base = whitened_decompose(cp_tensor(A, B, C), exact_whitening(A, B, C), params);
    // Q -> 4 Q and T -> 8 T leave the whitened tensor unchanged; components double.
    const DenseTensor3 T8 = cp_tensor(A, B, C) * 8.0;
    const auto scaled = whitened_decompose(T8, exact_whitening(2 * A, 2 * B, 2 * C), params);
    REQUIRE(base.size() == scaled.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK((scaled.triples[i].u - 2 * base.triples[i].u).norm() <= 1e-6 * base.triples[i].u.norm());
        CHECK((scaled.triples[i].v - 2 * base.triples[i].v).norm() <= 1e-6 * base.triples[i].v.norm());
        CHECK((scaled.triples[i].w - 2 * base.triples[i].w).norm() <= 1e-6 * base.triples[i].w.norm());
    }
}

TEST_CASE("whitened_decompose: zero tensor and rank mismatch") {
    std::mt19937_64 rng(6);
    const DenseMatrix A = random_matrix(6, 2, rng);
    const auto white = exact_whitening(A, A, A);
    try {
        whitened_decompose(DenseTensor3(6, 6, 6), white, params_for(2, 1));
        FAIL("expected PartialResult");
    } catch (const PartialResult& e) {
        CHECK(e.found().empty());
    }
    CHECK_THROWS_AS(whitened_decompose(DenseTensor3(6, 6, 6), white, params_for(3, 1)), InvalidInput);
}

TEST_CASE("whitened systematic error is bounded by (2 tau)^{3/2}") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        std::mt19937_64 rng(500 + seed);
        const int n = 12, m = 3;
        const double tau = 0.05 * (seed + 1);
        const DenseMatrix A = random_matrix(n, m, rng), B = random_matrix(n, m, rng), C = random_matrix(n, m, rng);
        const DenseMatrix Gamma = bounded_factor(A, 4, tau, rng), Delta = bounded_factor(B, 4, tau, rng),
                          Theta = bounded_factor(C, 4, tau, rng);
        const auto white = exact_whitening(A, B, C);
        const DenseTensor3 error = multilinear_transform(cp_tensor(Gamma, Delta, Theta), white.inv_sqrt_a,
                                                         white.inv_sqrt_b, white.inv_sqrt_c);
        const double bound = std::pow(2 * tau, 1.5) + 1e-6;
        CHECK(flatten_norm(error, Split::A_BC) <= bound);
        CHECK(flatten_norm(error, Split::B_AC) <= bound);
        // Factor-wise norm product from the same construction.
        const double product = spectral_norm((white.inv_sqrt_a * Gamma).eval()) *
                               spectral_norm((white.inv_sqrt_b * Delta).eval()) *
                               spectral_norm((white.inv_sqrt_c * Theta).eval());
        CHECK(flatten_norm(error, Split::A_BC) <= product + 1e-12);
        CHECK(product <= bound);
    }
}
