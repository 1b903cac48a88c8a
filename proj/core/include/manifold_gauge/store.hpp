#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "manifold_gauge/dataset.hpp"
#include "manifold_gauge/linalg.hpp"

namespace mgauge {

inline constexpr int kStoreFormatVersion = 1;

// Hidden-layer index, or the pre-output-norm capture point.
class Layer {
public:
    constexpr Layer() = default;
    constexpr explicit Layer(int index) : index_(index) {}
    static constexpr Layer final_norm() { return Layer(kFinal); }

    constexpr bool is_final() const noexcept { return index_ == kFinal; }
    constexpr int index() const noexcept { return index_; }

    std::string to_string() const;  // "final" or decimal
    static Layer parse(std::string_view s);

    // Numeric layers ascend; FINAL sorts after every hidden layer.
    constexpr auto operator<=>(const Layer& o) const noexcept {
        return order_key() <=> o.order_key();
    }
    constexpr bool operator==(const Layer&) const noexcept = default;

private:
    static constexpr int kFinal = -1;
    constexpr long order_key() const noexcept {
        return is_final() ? (1L << 40) : static_cast<long>(index_);
    }
    int index_ = kFinal;
};

struct SampleInfo {
    int sample_id = 0;
    int value = 0;
    Modality modality = Modality::Arabic;
    Labels labels;
    bool knowledge_pass = true;

    bool operator==(const SampleInfo&) const = default;
};

struct Manifest {
    int format_version = kStoreFormatVersion;
    std::string model_id;
    std::size_t d_model = 0;
    std::vector<Level> levels;
    std::vector<Layer> layers;
    std::vector<SampleInfo> samples;
    // Other top-level keys (capture_point, position, ...) are carried verbatim.
    nlohmann::json extras = nlohmann::json::object();

    std::size_t n_samples() const noexcept { return samples.size(); }
    bool has_level(Level l) const;
    bool has_layer(Layer l) const;
    std::vector<Labels> labels() const;
    std::vector<std::size_t> knowledge_rows() const;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

// Stored payload: exactly what the model runtime emitted (binary32).
struct ActivationSet {
    Level level = Level::L1;
    Layer layer;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;

    static ActivationSet from_matrix(Level level, Layer layer, const Matrix& m);
    Matrix promote() const;  // 64-bit copy used by all analysis
};

enum class PatchMode { Direct, Ortho };
std::string to_string(PatchMode m);
PatchMode parse_patch_mode(std::string_view s);

struct PatchFile {
    Level level = Level::L3;
    Layer layer;
    PatchMode mode = PatchMode::Direct;
    Attribute attribute = Attribute::IsEven;
    std::size_t d_model = 0;
    std::map<std::string, std::vector<float>> entries;  // label value ("true"/"false") -> vector
};

std::filesystem::path blob_path(const std::filesystem::path& dir, Level level, Layer layer);
std::filesystem::path patch_path(const std::filesystem::path& dir, Level level, Layer layer,
                                 PatchMode mode);

// Writes blobs/{level}_{layer}.f32 and merges the set into manifest.json.
// Both files go through write-temp-rename.
void write_set(const ActivationSet& set, const Manifest& manifest,
               const std::filesystem::path& dir);

Manifest read_manifest(const std::filesystem::path& dir);
ActivationSet read_set(const std::filesystem::path& dir, Level level, Layer layer);

// Knowledge-filtered (baseline, task) pair ready for analysis. Throws
// NotFound naming the missing L1 baseline or task set.
struct AnalysisInput {
    Matrix x_base;
    Matrix x_task;
    std::vector<Labels> labels;
    std::vector<std::size_t> rows;  // manifest rows kept
};

AnalysisInput load_analysis_input(const std::filesystem::path& dir, Level level, Layer layer);

void write_patch(const PatchFile& patch, const std::filesystem::path& dir);
PatchFile read_patch(const std::filesystem::path& dir, Level level, Layer layer, PatchMode mode);

// Little-endian binary32 codec shared by blobs and patches.
std::string encode_f32(std::span<const float> values);
std::vector<float> decode_f32(std::string_view bytes);

void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path);

}  // namespace mgauge
