#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "noisyor/diagnostics.hpp"
#include "noisyor/model.hpp"
#include "noisyor/partition.hpp"
#include "noisyor/tensor_decomp.hpp"
#include "noisyor/whitening.hpp"

namespace noisyor {

struct FitConfig {
    double rho = 0.01;
    int m = 5;
    double nu_u = 2.0;
    DecompParams decomp;  ///< target_r is overwritten with m
    PmiSource pmi_source = PmiSource::empirical;
    std::uint64_t seed = 0;  ///< drives the partition and the decomposition trials
    int whitening_rank = 0;  ///< truncation rank of the middle pseudo-inverse; 0 means m
};

void validate_config(const FitConfig& cfg);

struct StageTimings {
    double pmi_ms = 0, whitening_ms = 0, decomposition_ms = 0, assembly_ms = 0;
};

struct RecoveryResult {
    DenseMatrix W_hat;
    ComponentSet components;
    Partition partition;
    std::optional<ColumnError> per_column_error;
    StageTimings timings;
    std::vector<std::string> warnings;
};

/// Y = 1 - ((1 - rho) / rho)^{1/3} [a; b; c] scattered to the original
/// indices, then W_ij = -log Y_ij, clamped to [0, nu_u].
DenseMatrix assemble_W(const ComponentSet& components, const Partition& part, double rho, double nu_u);

/// Single-entry form of the clamp in assemble_W.
double weight_from_y(double y, double nu_u);

/// Whitening, decomposition and assembly from given PMI blocks. When
/// `white` is supplied it replaces the whitening computed from the blocks.
RecoveryResult recover_from_blocks(const PmiBlocks& blocks, const FitConfig& cfg,
                                   const std::optional<WhiteningSet>& white = std::nullopt);

/// End-to-end recovery from samples (plug-in PMI).
RecoveryResult fit(const SampleBatch& samples, const FitConfig& cfg);

/// End-to-end recovery from the exact population PMI of a model. The
/// result carries the column error against the model's W.
RecoveryResult fit(const NoisyOrModel& model, const FitConfig& cfg);

}  // namespace noisyor
