#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "noisyor/diagnostics.hpp"
#include "noisyor/pmi.hpp"
#include "test_support.hpp"

using namespace noisyor;
using testing::random_matrix;
using testing::random_orthonormal;

TEST_CASE("incoherence: identity, concentrated and rank-deficient inputs") {
    CHECK(incoherence(DenseMatrix::Identity(4, 4)) == doctest::Approx(1.0).epsilon(1e-12));

    DenseMatrix spike = DenseMatrix::Zero(6, 1);
    spike(0, 0) = 1;  // e1 1^T with m = 1
    CHECK(incoherence(spike) == doctest::Approx(6.0).epsilon(1e-12));

    DenseMatrix deficient = DenseMatrix::Zero(6, 2);
    deficient.col(0).setOnes();
    deficient.col(1).setOnes();
    CHECK_THROWS_AS(incoherence(deficient), RankError);
    CHECK_THROWS_AS(incoherence(DenseMatrix::Zero(2, 3)), InvalidInput);
}

TEST_CASE("incoherence: invariant under right orthogonal transforms") {
    std::mt19937_64 rng(1);
    const DenseMatrix F = random_matrix(30, 4, rng);
    const DenseMatrix R = random_orthonormal(4, 4, rng);
    CHECK(incoherence(F * R) == doctest::Approx(incoherence(F)).epsilon(1e-10));
    const double mu = incoherence(F);
    CHECK(mu >= 1.0 - 1e-12);
    CHECK(mu <= 30.0 / 4.0 + 1e-12);
}

TEST_CASE("solve_assignment agrees with exhaustive search") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 1 + trial % 6;
        const DenseMatrix cost = random_matrix(m, m, rng).cwiseAbs();
        std::vector<int> perm(static_cast<std::size_t>(m));
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e300;
        do {
            double total = 0;
            for (int i = 0; i < m; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        const auto found = solve_assignment(cost);
        double total = 0;
        for (int i = 0; i < m; ++i) total += cost(i, found[static_cast<std::size_t>(i)]);
        CHECK(total == doctest::Approx(best).epsilon(1e-12));
        auto sorted = found;
        std::sort(sorted.begin(), sorted.end());
        for (int i = 0; i < m; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    }
}

TEST_CASE("column_error: identity, swapped columns and isolated perturbation") {
    std::mt19937_64 rng(3);
    const DenseMatrix W = random_matrix(10, 5, rng).cwiseAbs();
    const auto same = column_error(W, W);
    CHECK(same.errors.isZero(0));
    CHECK(same.permutation == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(same.eta_max == 0.0);

    DenseMatrix swapped = W;
    swapped.col(1).swap(swapped.col(3));
    const auto sw = column_error(W, swapped);
    CHECK(sw.errors.isZero(0));
    CHECK(sw.permutation == std::vector<int>{0, 3, 2, 1, 4});

    DenseMatrix bumped = W;
    bumped(4, 2) += 0.1;
    const auto bu = column_error(W, bumped);
    DenseVector expected = DenseVector::Zero(5);
    expected(2) = 0.1;
    CHECK((bu.errors - expected).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(bu.eta_max == doctest::Approx(0.1 / W.col(2).norm()).epsilon(1e-12));
    CHECK(bu.eta_median == 0.0);

    CHECK_THROWS_AS(column_error(W, DenseMatrix::Zero(10, 4)), InvalidInput);
}

TEST_CASE("column_error: symmetric under simultaneous column permutation") {
    std::mt19937_64 rng(4);
    const DenseMatrix W = random_matrix(8, 4, rng), H = random_matrix(8, 4, rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(4);
    P.indices() << 2, 0, 3, 1;
    auto a = column_error(W, H);
    auto b = column_error(W * P, H * P);
    std::vector<double> ea(a.errors.data(), a.errors.data() + 4), eb(b.errors.data(), b.errors.data() + 4);
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    for (int i = 0; i < 4; ++i) CHECK(ea[static_cast<std::size_t>(i)] == doctest::Approx(eb[static_cast<std::size_t>(i)]).epsilon(1e-12));
}

TEST_CASE("column_error: zero true column reports absolute error") {
    DenseMatrix W = DenseMatrix::Zero(3, 1), H = DenseMatrix::Zero(3, 1);
    H(0, 0) = 0.3;
    CHECK(column_error(W, H).relative(0) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("model_report: uniform weights") {
    NoisyOrModel model;
    model.W = DenseMatrix::Constant(12, 3, 0.7);
    model.rho = 0.02;
    const auto diag = model_report(model, random_partition(12, 1));
    CHECK(std::isfinite(diag.tau_G));
    CHECK(diag.mu == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(diag.rho_pm == doctest::Approx(0.02 * 1.0 * 3).epsilon(1e-12));
}

TEST_CASE("model_report: desk model diagnostics") {
    RandomModelParams params;
    params.n = 120;
    params.m = 4;
    params.seed = 5;
    const auto model = generate_random_model(params);
    const auto part = random_partition(params.n, 6);
    const auto diag = model_report(model, part);
    CHECK(diag.tau_G >= 0);
    CHECK(diag.tau_H >= 0);
    CHECK(diag.tau_L >= 0);
    CHECK(diag.tau_G <= 3 * std::log(params.n));
    CHECK(diag.sigma_min_F_blocks.size() == 3);
    CHECK(diag.sigma_min_F_blocks.minCoeff() > 0);
    CHECK(diag.mu == doctest::Approx(incoherence(derived_matrix(model, 1))).epsilon(1e-10));

    // Direct evaluation of the tau definition on block a.
    DenseMatrix Fa(static_cast<Eigen::Index>(part.a.size()), params.m), Ga(Fa.rows(), params.m);
    const DenseMatrix F = derived_matrix(model, 1), G = derived_matrix(model, 2);
    for (std::size_t i = 0; i < part.a.size(); ++i) {
        Fa.row(static_cast<Eigen::Index>(i)) = F.row(part.a[i]);
        Ga.row(static_cast<Eigen::Index>(i)) = G.row(part.a[i]);
    }
    CHECK(diag.tau_G == doctest::Approx(spectral_tau<double>(Ga * Ga.transpose(), Fa)).epsilon(1e-10));
}

TEST_CASE("model_report: tau invariant under simultaneous row permutation") {
    RandomModelParams params;
    params.n = 30;
    params.m = 3;
    params.seed = 7;
    const auto model = generate_random_model(params);
    const auto part = random_partition(params.n, 8);

    // Relabel symptoms by a permutation and carry the partition along.
    std::vector<int> perm(30);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(9);
    std::shuffle(perm.begin(), perm.end(), rng);
    NoisyOrModel permuted = model;
    for (int i = 0; i < 30; ++i) permuted.W.row(perm[static_cast<std::size_t>(i)]) = model.W.row(i);
    Partition moved = part;
    for (auto* block : {&moved.a, &moved.b, &moved.c}) {
        for (auto& i : *block) i = perm[static_cast<std::size_t>(i)];
        std::sort(block->begin(), block->end());
    }
    const auto d1 = model_report(model, part), d2 = model_report(permuted, moved);
    CHECK(d1.tau_G == doctest::Approx(d2.tau_G).epsilon(1e-9));
    CHECK(d1.tau_H == doctest::Approx(d2.tau_H).epsilon(1e-9));
    CHECK(d1.mu == doctest::Approx(d2.mu).epsilon(1e-9));
}
