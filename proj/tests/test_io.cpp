#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "noisyor/io.hpp"
#include "noisyor/pmi.hpp"

using namespace noisyor;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("noisyor_io_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    fs::path operator/(const std::string& name) const { return path / name; }
};

NoisyOrModel small_model() {
    RandomModelParams params;
    params.n = 20;
    params.m = 3;
    params.p = 0.5;
    params.rho = 0.1;
    params.seed = 17;
    return generate_random_model(params);
}

}  // namespace

TEST_CASE("model JSON round trip is exact") {
    TempDir dir;
    const auto model = small_model();
    io::write_model(dir / "m.json", model);
    const auto back = io::read_model(dir / "m.json");
    CHECK(back.W == model.W);
    CHECK(back.rho == model.rho);
    CHECK(back.nu_u == model.nu_u);
    REQUIRE(back.params);
    CHECK(back.params->seed == 17);
    CHECK(back.params->p == model.params->p);
    const auto j = io::read_json(dir / "m.json");
    CHECK(j["schema_version"] == io::schema_version);
    CHECK(j["W"].size() == 20);
    CHECK(j["W"][0].size() == 3);
}

TEST_CASE("model JSON: errors name the path") {
    TempDir dir;
    std::ofstream(dir / "bad.json") << "{\"schema_version\": 1, \"n\": 2}";
    try {
        io::read_model(dir / "bad.json");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("bad.json") != std::string::npos);
    }
    std::ofstream(dir / "garbage.json") << "{not json";
    CHECK_THROWS_AS(io::read_model(dir / "garbage.json"), IoError);
    CHECK_THROWS_AS(io::read_model(dir / "missing.json"), IoError);

    auto j = io::model_to_json(small_model());
    j["W"][0][0] = -1.0;
    CHECK_THROWS_AS(io::model_from_json(j), IoError);
}

TEST_CASE("sample file: layout and round trip") {
    TempDir dir;
    const auto model = small_model();
    const auto batch = sample(model, 1000, 3);
    io::write_samples(dir / "s.bin", batch, {{"seed", 3}});
    io::Json config;
    const auto back = io::read_samples(dir / "s.bin", &config);
    CHECK(back == batch);
    CHECK(config["seed"] == 3);

    std::ifstream in(dir / "s.bin", std::ios::binary);
    char header[18];
    in.read(header, sizeof header);
    CHECK(std::string(header, 4) == "NOIR");
    CHECK(static_cast<unsigned char>(header[4]) == 1);  // version, little endian
    CHECK(static_cast<unsigned char>(header[6]) == 20);  // n
    CHECK(static_cast<unsigned char>(header[10]) == (1000 & 0xff));
    CHECK(static_cast<unsigned char>(header[11]) == (1000 >> 8));
    const auto expected = 4 + 2 + 4 + 8 + 1000 * 8 + 8 + config.dump().size();
    CHECK(fs::file_size(dir / "s.bin") == expected);
}

TEST_CASE("sample file: rejects bad magic, truncation and padding bits") {
    TempDir dir;
    std::ofstream(dir / "bad.bin", std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(io::read_samples(dir / "bad.bin"), IoError);

    const SampleBatch batch(3, 4);
    io::write_samples(dir / "ok.bin", batch);
    fs::resize_file(dir / "ok.bin", 20);
    CHECK_THROWS_AS(io::read_samples(dir / "ok.bin"), IoError);

    SampleBatch padded(3, 1);
    padded.words()[0] = std::uint64_t{1} << 10;
    io::write_samples(dir / "pad.bin", padded);
    CHECK_THROWS_AS(io::read_samples(dir / "pad.bin"), IoError);
}

TEST_CASE("PMIB container round trip, with and without whitening") {
    TempDir dir;
    const auto model = small_model();
    const auto blocks = population_pmi(model, random_partition(model.n(), 4));
    io::write_pmi(dir / "p.pmib", blocks);
    const auto back = io::read_pmi(dir / "p.pmib");
    CHECK(back.blocks.part.a == blocks.part.a);
    CHECK(back.blocks.part.seed == blocks.part.seed);
    CHECK(back.blocks.pmi_ab == blocks.pmi_ab);
    CHECK(back.blocks.pmi_ca == blocks.pmi_ca);
    CHECK(back.blocks.pmit.data() == blocks.pmit.data());
    CHECK(back.blocks.source == PmiSource::population);
    CHECK_FALSE(back.whitening);

    const auto white = whitening_matrices(blocks, model.rho, model.m());
    io::write_pmi(dir / "w.pmib", blocks, white);
    const auto with = io::read_pmi(dir / "w.pmib");
    REQUIRE(with.whitening);
    CHECK(with.whitening->m == model.m());
    CHECK(with.whitening->q_b == white.q_b);

    std::ifstream in(dir / "p.pmib", std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "PMIB");
}

TEST_CASE("PMI JSON round trip") {
    const auto model = small_model();
    const auto blocks = population_pmi(model, random_partition(model.n(), 5));
    const auto back = io::pmi_from_json(io::Json::parse(io::pmi_to_json(blocks).dump()));
    CHECK(back.pmi_bc == blocks.pmi_bc);
    CHECK(back.pmit.data() == blocks.pmit.data());
    CHECK(back.part.c == blocks.part.c);
}

TEST_CASE("recovery JSON carries W_hat, partition, seeds, timings and config") {
    RandomModelParams params;
    params.seed = 3;
    const auto model = generate_random_model(params);
    FitConfig cfg;
    cfg.pmi_source = PmiSource::population;
    cfg.seed = 99;
    const auto result = fit(model, cfg);
    const auto j = io::recovery_to_json(result, cfg);
    CHECK(j["schema_version"] == io::schema_version);
    CHECK(io::matrix_from_json(j["W_hat"], "W_hat") == result.W_hat);
    CHECK(j["seeds"]["fit"] == 99);
    CHECK(j["config"]["pmi_source"] == "population");
    CHECK(j["components"].size() == 5);
    CHECK(j["timings_ms"].contains("decomposition"));
    CHECK(j["metrics"]["per_column_error"].size() == 5);
    CHECK(io::partition_from_json(j["partition"]).a == result.partition.a);
}
