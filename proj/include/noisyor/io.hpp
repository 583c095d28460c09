#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "noisyor/diagnostics.hpp"
#include "noisyor/model.hpp"
#include "noisyor/partition.hpp"
#include "noisyor/pipeline.hpp"
#include "noisyor/whitening.hpp"

namespace noisyor::io {

using Json = nlohmann::json;

inline constexpr int schema_version = 1;
inline constexpr std::uint16_t sample_format_version = 1;
inline constexpr std::uint16_t pmi_format_version = 1;

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);

/// Row-major nested arrays.
Json matrix_to_json(const DenseMatrix& M);
DenseMatrix matrix_from_json(const Json& j, const char* what);

Json model_to_json(const NoisyOrModel& model);
NoisyOrModel model_from_json(const Json& j);
void write_model(const std::filesystem::path& path, const NoisyOrModel& model);
NoisyOrModel read_model(const std::filesystem::path& path);

/// "NOIR" sample file. The rows are followed by a length-prefixed JSON
/// trailer carrying the producing configuration (may be empty).
void write_samples(const std::filesystem::path& path, const SampleBatch& batch, const Json& config = Json::object());
SampleBatch read_samples(const std::filesystem::path& path, Json* config = nullptr);

Json partition_to_json(const Partition& part);
Partition partition_from_json(const Json& j);

/// "PMIB" container: PMI blocks and, optionally, the whitening matrices.
struct PmiFile {
    PmiBlocks blocks;
    std::optional<WhiteningSet> whitening;
};
void write_pmi(const std::filesystem::path& path, const PmiBlocks& blocks,
               const std::optional<WhiteningSet>& whitening = std::nullopt);
PmiFile read_pmi(const std::filesystem::path& path);

Json pmi_to_json(const PmiBlocks& blocks);
PmiBlocks pmi_from_json(const Json& j);

Json config_to_json(const FitConfig& cfg);
Json column_error_to_json(const ColumnError& err);
Json diagnostics_to_json(const ModelDiagnostics& diag);

/// W_hat, partition, components, seeds, timings and the config echo.
Json recovery_to_json(const RecoveryResult& result, const FitConfig& cfg);

}  // namespace noisyor::io
