#pragma once

#include <cstdint>
#include <vector>

#include "noisyor/model.hpp"
#include "noisyor/partition.hpp"

namespace noisyor {

/// Uniformly random equipartition of [0, n), deterministic given the seed.
Partition random_partition(int n, std::uint64_t seed);

/// Counts of samples where the listed symptoms are all absent (z = 1 - s = 1).
struct ZeroCounts {
    Partition part;
    std::int64_t N = 0;
    std::vector<std::int64_t> singles;  ///< indexed by symptom
    Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> pairs_ab, pairs_bc, pairs_ca;
    std::vector<std::int64_t> triples_abc;  ///< lexicographic over (a, b, c) positions

    std::int64_t triple(Eigen::Index ia, Eigen::Index ib, Eigen::Index ic) const {
        return triples_abc[static_cast<std::size_t>((ia * pairs_ab.cols() + ib) * pairs_bc.cols() + ic)];
    }
};

/// Exact co-zero counts via per-symptom bit columns and AND + popcount.
ZeroCounts count_zero_patterns(const SampleBatch& batch, const Partition& part);

/// Plug-in PMI blocks. Throws InsufficientData naming the indices of the
/// first zero count encountered.
PmiBlocks pmi_from_counts(const ZeroCounts& counts);

}  // namespace noisyor
