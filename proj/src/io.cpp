#include "noisyor/io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace noisyor::io {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
    throw IoError(path.string() + ": " + what);
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) fail(path, "cannot open for reading");
    return in;
}

// Binary helpers: fixed-width little-endian integers and IEEE doubles.
template <typename T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) fail(path, "unexpected end of file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

void put_matrix(std::ostream& out, const DenseMatrix& M) {
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) put<double>(out, M(i, j));
}

DenseMatrix get_matrix(std::istream& in, const fs::path& path, Eigen::Index rows, Eigen::Index cols) {
    DenseMatrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = get<double>(in, path);
    return M;
}

void check_magic(std::istream& in, const fs::path& path, const char* magic) {
    char buf[4];
    if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) fail(path, std::string("bad magic, expected ") + magic);
}

template <typename T>
T field(const Json& j, const char* key) {
    if (!j.contains(key)) throw IoError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("field '") + key + "': " + e.what());
    }
}

const char* source_name(PmiSource s) { return s == PmiSource::empirical ? "samples" : "population"; }

PmiSource parse_source(const std::string& s) {
    if (s == "samples") return PmiSource::empirical;
    if (s == "population") return PmiSource::population;
    throw IoError("unknown PMI source '" + s + "'");
}

Json vector_to_json(const DenseVector& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

}  // namespace

Json read_json(const fs::path& path) {
    auto in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(path, std::string("JSON parse error: ") + e.what());
    }
}

void write_json(const fs::path& path, const Json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
    if (!out) fail(path, "write failed");
}

Json matrix_to_json(const DenseMatrix& M) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

DenseMatrix matrix_from_json(const Json& j, const char* what) {
    if (!j.is_array()) throw IoError(std::string(what) + ": expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
    DenseMatrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw IoError(std::string(what) + ": ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto& v = row[static_cast<std::size_t>(k)];
            if (!v.is_number()) throw IoError(std::string(what) + ": non-numeric entry");
            M(i, k) = v.get<double>();
        }
    }
    return M;
}

Json model_to_json(const NoisyOrModel& model) {
    Json j;
    j["schema_version"] = schema_version;
    j["n"] = model.n();
    j["m"] = model.m();
    j["rho"] = model.rho;
    j["nu_u"] = model.nu_u;
    j["nu_l"] = model.nu_l;
    j["W"] = matrix_to_json(model.W);
    if (model.params) {
        const auto& p = *model.params;
        j["params"] = {{"n", p.n},       {"m", p.m},       {"p", p.p},       {"rho", p.rho},
                       {"nu_l", p.nu_l}, {"nu_u", p.nu_u}, {"w_lo", p.w_lo}};
        j["seed"] = p.seed;
    }
    return j;
}

NoisyOrModel model_from_json(const Json& j) {
    if (field<int>(j, "schema_version") != schema_version) throw IoError("unsupported model schema version");
    NoisyOrModel model;
    model.rho = field<double>(j, "rho");
    model.nu_u = field<double>(j, "nu_u");
    model.nu_l = field<double>(j, "nu_l");
    model.W = matrix_from_json(j.at("W"), "W");
    if (model.n() != field<int>(j, "n") || model.m() != field<int>(j, "m"))
        throw IoError("W dimensions differ from the declared n and m");
    if (j.contains("params")) {
        const auto& p = j["params"];
        RandomModelParams params;
        params.n = field<int>(p, "n");
        params.m = field<int>(p, "m");
        params.p = field<double>(p, "p");
        params.rho = field<double>(p, "rho");
        params.nu_l = field<double>(p, "nu_l");
        params.nu_u = field<double>(p, "nu_u");
        params.w_lo = field<double>(p, "w_lo");
        params.seed = field<std::uint64_t>(j, "seed");
        model.params = params;
    }
    try {
        validate_model(model);
    } catch (const InvalidInput& e) {
        throw IoError(std::string("invalid model: ") + e.message());
    }
    return model;
}

void write_model(const fs::path& path, const NoisyOrModel& model) { write_json(path, model_to_json(model)); }

NoisyOrModel read_model(const fs::path& path) {
    const Json doc = read_json(path);
    try {
        return model_from_json(doc);
    } catch (const IoError& e) {
        fail(path, e.message());
    }
}

void write_samples(const fs::path& path, const SampleBatch& batch, const Json& config) {
    auto out = open_out(path, std::ios::binary);
    out.write("NOIR", 4);
    put<std::uint16_t>(out, sample_format_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(batch.n()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(batch.size()));
    for (const auto word : batch.words()) put<std::uint64_t>(out, word);
    const std::string trailer = config.is_null() ? std::string() : config.dump();
    put<std::uint64_t>(out, trailer.size());
    out.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
    if (!out) fail(path, "write failed");
}

SampleBatch read_samples(const fs::path& path, Json* config) {
    auto in = open_in(path, std::ios::binary);
    check_magic(in, path, "NOIR");
    if (get<std::uint16_t>(in, path) != sample_format_version) fail(path, "unsupported sample format version");
    const auto n = get<std::uint32_t>(in, path);
    const auto count = get<std::uint64_t>(in, path);
    if (n == 0) fail(path, "n must be positive");
    SampleBatch batch(static_cast<int>(n), static_cast<std::int64_t>(count));
    for (auto& word : batch.words()) word = get<std::uint64_t>(in, path);
    const int tail = static_cast<int>(n % 64);
    if (tail != 0)
        for (std::int64_t r = 0; r < batch.size(); ++r)
            if (batch.row(r).back() >> tail) fail(path, "padding bits beyond n are set");
    std::uint64_t trailer_len = 0;
    if (in.peek() != std::char_traits<char>::eof()) trailer_len = get<std::uint64_t>(in, path);
    std::string trailer(trailer_len, '\0');
    if (trailer_len && !in.read(trailer.data(), static_cast<std::streamsize>(trailer_len)))
        fail(path, "truncated configuration trailer");
    if (config) {
        try {
            *config = trailer.empty() ? Json::object() : Json::parse(trailer);
        } catch (const nlohmann::json::exception& e) {
            fail(path, std::string("configuration trailer: ") + e.what());
        }
    }
    return batch;
}

Json partition_to_json(const Partition& part) {
    return {{"n", part.n}, {"seed", part.seed}, {"a", part.a}, {"b", part.b}, {"c", part.c}};
}

Partition partition_from_json(const Json& j) {
    Partition part;
    part.n = field<int>(j, "n");
    part.seed = field<std::uint64_t>(j, "seed");
    part.a = field<std::vector<int>>(j, "a");
    part.b = field<std::vector<int>>(j, "b");
    part.c = field<std::vector<int>>(j, "c");
    try {
        validate_partition(part);
    } catch (const InvalidInput& e) {
        throw IoError(std::string("invalid partition: ") + e.message());
    }
    return part;
}

void write_pmi(const fs::path& path, const PmiBlocks& blocks, const std::optional<WhiteningSet>& whitening) {
    const auto& part = blocks.part;
    auto out = open_out(path, std::ios::binary);
    out.write("PMIB", 4);
    put<std::uint16_t>(out, pmi_format_version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(part.n));
    for (int b = 0; b < 3; ++b) put<std::uint32_t>(out, static_cast<std::uint32_t>(part.block(b).size()));
    put<std::uint64_t>(out, part.seed);
    put<std::uint8_t>(out, blocks.source == PmiSource::empirical ? 0 : 1);
    put<std::uint8_t>(out, whitening ? 1 : 0);
    put<std::uint32_t>(out, whitening ? static_cast<std::uint32_t>(whitening->m) : 0u);
    for (int b = 0; b < 3; ++b)
        for (const int i : part.block(b)) put<std::uint32_t>(out, static_cast<std::uint32_t>(i));
    put_matrix(out, blocks.pmi_ab);
    put_matrix(out, blocks.pmi_bc);
    put_matrix(out, blocks.pmi_ca);
    for (Eigen::Index k = 0; k < blocks.pmit.size(); ++k) put<double>(out, blocks.pmit.data()(k));
    if (whitening) {
        put_matrix(out, whitening->q_a);
        put_matrix(out, whitening->q_b);
        put_matrix(out, whitening->q_c);
    }
    if (!out) fail(path, "write failed");
}

PmiFile read_pmi(const fs::path& path) {
    auto in = open_in(path, std::ios::binary);
    check_magic(in, path, "PMIB");
    if (get<std::uint16_t>(in, path) != pmi_format_version) fail(path, "unsupported PMIB version");
    PmiFile file;
    auto& part = file.blocks.part;
    part.n = static_cast<int>(get<std::uint32_t>(in, path));
    std::array<std::uint32_t, 3> sizes{};
    for (auto& s : sizes) s = get<std::uint32_t>(in, path);
    if (static_cast<std::uint64_t>(sizes[0]) + sizes[1] + sizes[2] != static_cast<std::uint64_t>(part.n))
        fail(path, "block sizes do not sum to n");
    part.seed = get<std::uint64_t>(in, path);
    file.blocks.source = get<std::uint8_t>(in, path) == 0 ? PmiSource::empirical : PmiSource::population;
    const bool has_whitening = get<std::uint8_t>(in, path) != 0;
    const int m = static_cast<int>(get<std::uint32_t>(in, path));
    for (int b = 0; b < 3; ++b) {
        auto& block = b == 0 ? part.a : b == 1 ? part.b : part.c;
        block.resize(sizes[static_cast<std::size_t>(b)]);
        for (auto& i : block) i = static_cast<int>(get<std::uint32_t>(in, path));
    }
    try {
        validate_partition(part);
    } catch (const InvalidInput& e) {
        fail(path, e.message());
    }
    const Eigen::Index na = sizes[0], nb = sizes[1], nc = sizes[2];
    file.blocks.pmi_ab = get_matrix(in, path, na, nb);
    file.blocks.pmi_bc = get_matrix(in, path, nb, nc);
    file.blocks.pmi_ca = get_matrix(in, path, nc, na);
    file.blocks.pmit = DenseTensor3(na, nb, nc);
    for (Eigen::Index k = 0; k < file.blocks.pmit.size(); ++k) file.blocks.pmit.data()(k) = get<double>(in, path);
    if (has_whitening) {
        const DenseMatrix qa = get_matrix(in, path, na, na);
        const DenseMatrix qb = get_matrix(in, path, nb, nb);
        const DenseMatrix qc = get_matrix(in, path, nc, nc);
        file.whitening = make_whitening_set(qa, qb, qc, m);
    }
    return file;
}

Json pmi_to_json(const PmiBlocks& blocks) {
    Json tensor = Json::array();
    for (Eigen::Index i = 0; i < blocks.pmit.dim(0); ++i) {
        Json slab = Json::array();
        for (Eigen::Index j = 0; j < blocks.pmit.dim(1); ++j) {
            Json fiber = Json::array();
            for (Eigen::Index k = 0; k < blocks.pmit.dim(2); ++k) fiber.push_back(blocks.pmit(i, j, k));
            slab.push_back(std::move(fiber));
        }
        tensor.push_back(std::move(slab));
    }
    return {{"schema_version", schema_version},
            {"source", source_name(blocks.source)},
            {"partition", partition_to_json(blocks.part)},
            {"pmi_ab", matrix_to_json(blocks.pmi_ab)},
            {"pmi_bc", matrix_to_json(blocks.pmi_bc)},
            {"pmi_ca", matrix_to_json(blocks.pmi_ca)},
            {"pmit", std::move(tensor)}};
}

PmiBlocks pmi_from_json(const Json& j) {
    if (field<int>(j, "schema_version") != schema_version) throw IoError("unsupported PMI schema version");
    PmiBlocks blocks;
    blocks.source = parse_source(field<std::string>(j, "source"));
    blocks.part = partition_from_json(j.at("partition"));
    const auto na = static_cast<Eigen::Index>(blocks.part.a.size());
    const auto nb = static_cast<Eigen::Index>(blocks.part.b.size());
    const auto nc = static_cast<Eigen::Index>(blocks.part.c.size());
    blocks.pmi_ab = matrix_from_json(j.at("pmi_ab"), "pmi_ab");
    blocks.pmi_bc = matrix_from_json(j.at("pmi_bc"), "pmi_bc");
    blocks.pmi_ca = matrix_from_json(j.at("pmi_ca"), "pmi_ca");
    if (blocks.pmi_ab.rows() != na || blocks.pmi_ab.cols() != nb || blocks.pmi_bc.rows() != nb ||
        blocks.pmi_bc.cols() != nc || blocks.pmi_ca.rows() != nc || blocks.pmi_ca.cols() != na)
        throw IoError("PMI matrix shapes differ from the partition");
    const auto& t = j.at("pmit");
    blocks.pmit = DenseTensor3(na, nb, nc);
    if (!t.is_array() || static_cast<Eigen::Index>(t.size()) != na) throw IoError("pmit: wrong shape");
    for (Eigen::Index i = 0; i < na; ++i) {
        const auto& slab = t[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(slab.size()) != nb) throw IoError("pmit: wrong shape");
        for (Eigen::Index k = 0; k < nb; ++k) {
            const auto& fiber = slab[static_cast<std::size_t>(k)];
            if (static_cast<Eigen::Index>(fiber.size()) != nc) throw IoError("pmit: wrong shape");
            for (Eigen::Index l = 0; l < nc; ++l) blocks.pmit(i, k, l) = fiber[static_cast<std::size_t>(l)].get<double>();
        }
    }
    return blocks;
}

Json config_to_json(const FitConfig& cfg) {
    return {{"rho", cfg.rho},
            {"m", cfg.m},
            {"nu_u", cfg.nu_u},
            {"pmi_source", source_name(cfg.pmi_source)},
            {"seed", cfg.seed},
            {"whitening_rank", cfg.whitening_rank},
            {"decomp",
             {{"delta", cfg.decomp.delta},
              {"zeta", cfg.decomp.zeta},
              {"dedup_dist", cfg.decomp.dedup_dist},
              {"trial_constant", cfg.decomp.trial_constant},
              {"max_trials", cfg.decomp.max_trials}}}};
}

Json column_error_to_json(const ColumnError& err) {
    return {{"per_column_error", vector_to_json(err.errors)},
            {"relative_error", vector_to_json(err.relative)},
            {"permutation", err.permutation},
            {"eta_max", err.eta_max},
            {"eta_median", err.eta_median},
            {"exact_matching", err.exact}};
}

Json diagnostics_to_json(const ModelDiagnostics& diag) {
    Json j = {{"tau_G", diag.tau_G},
              {"tau_H", diag.tau_H},
              {"tau_L", diag.tau_L},
              {"mu", diag.mu},
              {"sigma_min_F_blocks", vector_to_json(diag.sigma_min_F_blocks)},
              {"rho_pm", diag.rho_pm}};
    if (diag.eta_hat) j["eta_hat"] = *diag.eta_hat;
    return j;
}

Json recovery_to_json(const RecoveryResult& result, const FitConfig& cfg) {
    Json components = Json::array();
    for (const auto& c : result.components.triples)
        components.push_back({{"a", vector_to_json(c.u)},
                              {"b", vector_to_json(c.v)},
                              {"c", vector_to_json(c.w)},
                              {"score", c.score},
                              {"trial", c.trial}});
    Json j = {{"schema_version", schema_version},
              {"config", config_to_json(cfg)},
              {"seeds", {{"fit", cfg.seed}, {"partition", result.partition.seed}}},
              {"W_hat", matrix_to_json(result.W_hat)},
              {"partition", partition_to_json(result.partition)},
              {"components", std::move(components)},
              {"timings_ms",
               {{"pmi", result.timings.pmi_ms},
                {"whitening", result.timings.whitening_ms},
                {"decomposition", result.timings.decomposition_ms},
                {"assembly", result.timings.assembly_ms}}},
              {"warnings", result.warnings}};
    if (result.per_column_error) j["metrics"] = column_error_to_json(*result.per_column_error);
    return j;
}

}  // namespace noisyor::io
