#pragma once

#include <cstdint>
#include <vector>

#include "noisyor/linalg.hpp"

namespace noisyor {

/// Equipartition of the symptom indices into blocks a, b, c. Each block is
/// sorted ascending; block sizes differ by at most one.
struct Partition {
    int n = 0;
    std::vector<int> a, b, c;
    std::uint64_t seed = 0;

    const std::vector<int>& block(int which) const { return which == 0 ? a : which == 1 ? b : c; }
};

/// Throws InvalidInput unless the blocks are disjoint, cover [0, n) and are
/// balanced to within one.
void validate_partition(const Partition& part);

enum class PmiSource { empirical, population };

/// Cross-block PMI matrices and the PMI tensor over S_a x S_b x S_c.
/// pmi_ab is |a| x |b|, pmi_bc is |b| x |c|, pmi_ca is |c| x |a|.
struct PmiBlocks {
    Partition part;
    DenseMatrix pmi_ab, pmi_bc, pmi_ca;
    DenseTensor3 pmit;
    PmiSource source = PmiSource::empirical;
};

}  // namespace noisyor
