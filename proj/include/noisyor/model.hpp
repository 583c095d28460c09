#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noisyor/linalg.hpp"
#include "noisyor/partition.hpp"

namespace noisyor {

/// Parameters of the random weight prior: each W_ij is 0 with probability
/// 1 - p and otherwise uniform on [w_lo, nu_u] (a point mass when equal).
struct RandomModelParams {
    int n = 90;
    int m = 5;
    double p = 0.3;
    double rho = 0.01;
    double nu_l = 0.5;
    double nu_u = 2.0;
    double w_lo = 0.5;
    std::uint64_t seed = 0;
};

/// Ground-truth single-layer noisy-or network.
struct NoisyOrModel {
    DenseMatrix W;  ///< n x m, entries in [0, nu_u]
    double rho = 0.01;
    double nu_u = 2.0;
    double nu_l = 0.5;
    std::optional<RandomModelParams> params;  ///< set when produced by generate_random_model

    int n() const { return static_cast<int>(W.rows()); }
    int m() const { return static_cast<int>(W.cols()); }
};

/// Throws InvalidInput when the model violates its invariants.
void validate_model(const NoisyOrModel& model);

/// Mean of exp(-w^2) under the nonzero-weight law; condition (3) asks for
/// this to be at most 1 - nu_l.
double nonzero_weight_moment(const RandomModelParams& params);

NoisyOrModel generate_random_model(const RandomModelParams& params);

/// Entrywise 1 - exp(-l W). l = 1, 2, 3, 4 give F, G, H, L.
DenseMatrix derived_matrix(const NoisyOrModel& model, int l);
DenseMatrix derived_matrix(const DenseMatrix& W, int l);

/// Bit-packed binary samples. Row r holds words_per_row() little-endian
/// 64-bit words; bit i of the row is s_i (1 = symptom present).
class SampleBatch {
public:
    SampleBatch() = default;
    SampleBatch(int n, std::int64_t count);

    int n() const { return n_; }
    std::int64_t size() const { return count_; }
    int words_per_row() const { return words_; }

    bool get(std::int64_t row, int i) const {
        return (bits_[static_cast<std::size_t>(row * words_ + i / 64)] >> (i % 64)) & 1u;
    }
    void set(std::int64_t row, int i, bool value) {
        auto& word = bits_[static_cast<std::size_t>(row * words_ + i / 64)];
        const std::uint64_t mask = std::uint64_t{1} << (i % 64);
        word = value ? (word | mask) : (word & ~mask);
    }

    std::span<const std::uint64_t> row(std::int64_t r) const {
        return {bits_.data() + r * words_, static_cast<std::size_t>(words_)};
    }
    std::span<std::uint64_t> row(std::int64_t r) {
        return {bits_.data() + r * words_, static_cast<std::size_t>(words_)};
    }
    const std::vector<std::uint64_t>& words() const { return bits_; }
    std::vector<std::uint64_t>& words() { return bits_; }

    friend bool operator==(const SampleBatch&, const SampleBatch&) = default;

private:
    int n_ = 0;
    std::int64_t count_ = 0;
    int words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// Draws N samples. Sample r uses its own sub-stream of `seed`, so the batch
/// is identical for any thread count.
SampleBatch sample(const NoisyOrModel& model, std::int64_t count, std::uint64_t seed);

/// Pr[s_i = 0 for all i in idx] in closed form (1 to 3 distinct indices).
double exact_zero_moment(const NoisyOrModel& model, std::span<const int> idx);

/// Same probability by enumerating all 2^m latent configurations (m <= 20).
double brute_force_zero_moment(const NoisyOrModel& model, std::span<const int> idx);

/// Exact cross-block PMI matrices and tensor, from exact_zero_moment.
PmiBlocks population_pmi(const NoisyOrModel& model, const Partition& part);

/// The same blocks computed from brute_force_zero_moment. Test oracle.
PmiBlocks brute_force_pmi(const NoisyOrModel& model, const Partition& part);

/// Truncated Taylor series of the PMI tensor block: terms l = 1..L of
/// sum_l (-1)^{l+1} (c^l / l) sum_k P_l,k(a) (x) P_l,k(b) (x) P_l,k(c), c = rho / (1 - rho).
DenseTensor3 pmit_series(const NoisyOrModel& model, const Partition& part, int terms);

/// Matrix analogue of pmit_series for the (a, b) block.
DenseMatrix pmi_series(const NoisyOrModel& model, const std::vector<int>& rows, const std::vector<int>& cols,
                       int terms);

/// Frobenius bound on the remainder of pmit_series after `terms` terms,
/// valid for rho / (1 - rho) <= 1/2.
double pmit_series_tail_bound(const NoisyOrModel& model, const Partition& part, int terms);

}  // namespace noisyor
