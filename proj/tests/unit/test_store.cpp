#include <doctest.h>

#include <cstring>
#include <fstream>
#include <future>
#include <limits>

#include <nlohmann/json.hpp>

#include "manifold_gauge/store.hpp"
#include "oracles.hpp"

using namespace mgauge;
namespace fs = std::filesystem;

namespace {

Manifest manifest_for(std::size_t n, std::size_t d) {
    Manifest m;
    m.model_id = "test-model";
    m.d_model = d;
    for (std::size_t i = 0; i < n; ++i) {
        const int v = static_cast<int>(i) + 1;
        m.samples.push_back({static_cast<int>(i), v, Modality::Arabic, labels_for(v), true});
    }
    return m;
}

ActivationSet float_set(Level level, Layer layer, std::size_t rows, std::size_t cols,
                        std::vector<float> data) {
    return ActivationSet{level, layer, rows, cols, std::move(data)};
}

void overwrite(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << bytes;
}

}  // namespace

TEST_CASE("layer ids") {
    CHECK(Layer::final_norm().to_string() == "final");
    CHECK(Layer(7).to_string() == "7");
    CHECK(Layer::parse("final").is_final());
    CHECK(Layer::parse("12").index() == 12);
    CHECK(Layer(31) < Layer::final_norm());
    CHECK(Layer(2) < Layer(10));
    CHECK_THROWS_AS(Layer::parse("x1"), Error);
    CHECK(blob_path("s", Level::L3, Layer(24)) == fs::path("s") / "blobs" / "L3_24.f32");
    CHECK(blob_path("s", Level::L1, Layer::final_norm()) == fs::path("s") / "blobs" / "L1_final.f32");
    CHECK(patch_path("s", Level::L3, Layer::final_norm(), PatchMode::Ortho) ==
          fs::path("s") / "patches" / "L3_final_ortho.f32");
}

TEST_CASE("2x4 blob is 32 little-endian bytes that round-trip exactly") {
    oracle::TempDir tmp("store_small");
    const std::vector<float> values{1.0f, -2.5f, 3.25f, 0.0f, 1e-30f, -0.0f, 65504.0f, 0.1f};
    write_set(float_set(Level::L1, Layer::final_norm(), 2, 4, values), manifest_for(2, 4), tmp.path());

    const std::string bytes = read_file(blob_path(tmp.path(), Level::L1, Layer::final_norm()));
    REQUIRE(bytes.size() == 32);
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint32_t bits;
        std::memcpy(&bits, &values[k], 4);
        for (int b = 0; b < 4; ++b) {
            CHECK(static_cast<unsigned char>(bytes[k * 4 + static_cast<std::size_t>(b)]) ==
                  ((bits >> (8 * b)) & 0xFFu));
        }
    }
    const auto back = read_set(tmp.path(), Level::L1, Layer::final_norm());
    REQUIRE(back.data.size() == values.size());
    CHECK(std::memcmp(back.data.data(), values.data(), 32) == 0);
    CHECK(back.promote()(0, 2) == 3.25);
}

TEST_CASE("empty sample list gives a zero-length blob and a valid manifest") {
    oracle::TempDir tmp("store_empty");
    write_set(float_set(Level::L1, Layer(0), 0, 8, {}), manifest_for(0, 8), tmp.path());
    CHECK(fs::file_size(blob_path(tmp.path(), Level::L1, Layer(0))) == 0);
    const Manifest m = read_manifest(tmp.path());
    CHECK(m.n_samples() == 0);
    CHECK(read_set(tmp.path(), Level::L1, Layer(0)).rows == 0);
}

TEST_CASE("100 x 3584 random matrix round-trips bitwise") {
    oracle::TempDir tmp("store_big");
    oracle::Draws draws(5);
    std::vector<float> values(100 * 3584);
    for (float& v : values) v = static_cast<float>(draws.normal());
    write_set(float_set(Level::L3, Layer(12), 100, 3584, values), manifest_for(100, 3584), tmp.path());
    const auto back = read_set(tmp.path(), Level::L3, Layer(12));
    CHECK(std::memcmp(back.data.data(), values.data(), values.size() * 4) == 0);

    // Concurrent readers see identical payloads.
    std::vector<std::future<std::vector<float>>> readers;
    for (int r = 0; r < 4; ++r) {
        readers.push_back(std::async(std::launch::async, [&] {
            return read_set(tmp.path(), Level::L3, Layer(12)).data;
        }));
    }
    for (auto& f : readers) CHECK(f.get() == back.data);
}

TEST_CASE("write_set validates shape and values") {
    oracle::TempDir tmp("store_bad");
    try {
        write_set(float_set(Level::L1, Layer(0), 2, 3, std::vector<float>(6)), manifest_for(2, 4),
                  tmp.path());
        FAIL("expected Format");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
    }
    std::vector<float> bad(8, 1.0f);
    bad[5] = std::numeric_limits<float>::infinity();
    try {
        write_set(float_set(Level::L1, Layer(0), 2, 4, bad), manifest_for(2, 4), tmp.path());
        FAIL("expected DataIntegrity");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DataIntegrity);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("read_set failure modes") {
    oracle::TempDir tmp("store_read");
    write_set(float_set(Level::L1, Layer(0), 2, 4, std::vector<float>(8, 1.0f)), manifest_for(2, 4),
              tmp.path());

    try {
        (void)read_set(tmp.path(), Level::L2, Layer(0));
        FAIL("expected NotFound");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotFound);
    }

    const auto blob = blob_path(tmp.path(), Level::L1, Layer(0));
    overwrite(blob, read_file(blob).substr(0, 20));
    try {
        (void)read_set(tmp.path(), Level::L1, Layer(0));
        FAIL("expected DataIntegrity");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DataIntegrity);
    }

    std::vector<float> nan_row(8, 1.0f);
    nan_row[6] = std::numeric_limits<float>::quiet_NaN();
    overwrite(blob, encode_f32(nan_row));
    try {
        (void)read_set(tmp.path(), Level::L1, Layer(0));
        FAIL("expected DataIntegrity");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DataIntegrity);
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    auto j = nlohmann::json::parse(read_file(tmp.path() / "manifest.json"));
    j["format_version"] = 99;
    overwrite(tmp.path() / "manifest.json", j.dump());
    try {
        (void)read_set(tmp.path(), Level::L1, Layer(0));
        FAIL("expected Version");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Version);
    }
}

TEST_CASE("manifest merges levels and layers and keeps extra keys") {
    oracle::TempDir tmp("store_merge");
    Manifest m = manifest_for(3, 2);
    m.extras["capture_point"] = "post_block";
    const std::vector<float> data(6, 0.5f);
    write_set(float_set(Level::L3, Layer::final_norm(), 3, 2, data), m, tmp.path());
    write_set(float_set(Level::L1, Layer(4), 3, 2, data), m, tmp.path());
    write_set(float_set(Level::L1, Layer(1), 3, 2, data), m, tmp.path());

    const Manifest back = read_manifest(tmp.path());
    CHECK(back.levels == std::vector<Level>{Level::L1, Level::L3});
    CHECK(back.layers == std::vector<Layer>{Layer(1), Layer(4), Layer::final_norm()});
    CHECK(back.extras["capture_point"] == "post_block");
    CHECK(back.samples == m.samples);

    const auto j = nlohmann::json::parse(read_file(tmp.path() / "manifest.json"));
    CHECK(j["layers"][2] == "final");
    CHECK(j["layers"][0] == 1);

    Manifest other = manifest_for(4, 2);
    CHECK_THROWS_AS(write_set(float_set(Level::L2, Layer(0), 4, 2, std::vector<float>(8)), other,
                              tmp.path()),
                    Error);
}

TEST_CASE("analysis input filters on knowledge_pass and requires the baseline") {
    oracle::TempDir tmp("store_input");
    Manifest m = manifest_for(4, 2);
    m.samples[1].knowledge_pass = false;
    const std::vector<float> base{1, 0, 2, 0, 3, 0, 4, 0};
    const std::vector<float> task{1, 1, 2, 2, 3, 3, 4, 4};
    write_set(float_set(Level::L3, Layer::final_norm(), 4, 2, task), m, tmp.path());
    try {
        (void)load_analysis_input(tmp.path(), Level::L3, Layer::final_norm());
        FAIL("expected NotFound");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotFound);
        CHECK(std::string(e.what()).find("L1 baseline") != std::string::npos);
    }
    write_set(float_set(Level::L1, Layer::final_norm(), 4, 2, base), m, tmp.path());
    const auto in = load_analysis_input(tmp.path(), Level::L3, Layer::final_norm());
    CHECK(in.rows == std::vector<std::size_t>{0, 2, 3});
    CHECK(in.x_base(1, 0) == 3.0);
    CHECK(in.x_task(1, 1) == 3.0);
    CHECK(in.labels[1] == labels_for(3));
}

TEST_CASE("patch files round-trip with a label index") {
    oracle::TempDir tmp("store_patch");
    PatchFile p;
    p.level = Level::L3;
    p.layer = Layer::final_norm();
    p.mode = PatchMode::Direct;
    p.attribute = Attribute::IsEven;
    p.d_model = 3;
    p.entries["false"] = {1.0f, 2.0f, 3.0f};
    p.entries["true"] = {-1.0f, -2.0f, -3.0f};
    write_patch(p, tmp.path());

    const PatchFile back = read_patch(tmp.path(), Level::L3, Layer::final_norm(), PatchMode::Direct);
    CHECK(back.entries == p.entries);
    CHECK(back.attribute == Attribute::IsEven);

    const auto index = nlohmann::json::parse(read_file(tmp.path() / "patches" / "index.json"));
    CHECK(index["d_model"] == 3);
    CHECK(index["patches"][0]["rows"]["false"] == 0);
    CHECK(index["patches"][0]["rows"]["true"] == 1);
    CHECK(fs::file_size(patch_path(tmp.path(), Level::L3, Layer::final_norm(), PatchMode::Direct)) == 24);

    PatchFile empty = p;
    empty.entries.clear();
    CHECK_THROWS_AS(write_patch(empty, tmp.path()), Error);
    CHECK_THROWS_AS((void)read_patch(tmp.path(), Level::L4, Layer::final_norm(), PatchMode::Direct), Error);
}

TEST_CASE("matrix CSV uses round-trip precision") {
    oracle::TempDir tmp("store_csv");
    Matrix m(1, 2);
    m(0, 0) = 0.1;
    m(0, 1) = -1.0 / 3.0;
    write_matrix_csv(m, tmp.path() / "m.csv");
    const std::string text = read_file(tmp.path() / "m.csv");
    const auto comma = text.find(',');
    CHECK(std::stod(text.substr(0, comma)) == 0.1);
    CHECK(std::stod(text.substr(comma + 1)) == -1.0 / 3.0);
}
