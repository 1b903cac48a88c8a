#include "manifold_gauge/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <unistd.h>

namespace mgauge {

namespace fs = std::filesystem;

std::string Layer::to_string() const {
    return is_final() ? std::string("final") : std::to_string(index_);
}

Layer Layer::parse(std::string_view s) {
    if (s == "final" || s == "FINAL") return final_norm();
    int v = 0;
    if (s.empty()) throw Error(ErrorKind::InvalidArgument, "empty layer id");
    for (char c : s) {
        if (c < '0' || c > '9') {
            throw Error(ErrorKind::InvalidArgument, fmt::format("invalid layer id '{}'", s));
        }
        v = v * 10 + (c - '0');
    }
    return Layer(v);
}

bool Manifest::has_level(Level l) const {
    return std::find(levels.begin(), levels.end(), l) != levels.end();
}

bool Manifest::has_layer(Layer l) const {
    return std::find(layers.begin(), layers.end(), l) != layers.end();
}

std::vector<Labels> Manifest::labels() const {
    std::vector<Labels> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.labels);
    return out;
}

std::vector<std::size_t> Manifest::knowledge_rows() const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].knowledge_pass) rows.push_back(i);
    }
    return rows;
}

nlohmann::json to_json(const Manifest& m) {
    nlohmann::json j = m.extras.is_object() ? m.extras : nlohmann::json::object();
    j["format_version"] = m.format_version;
    j["model_id"] = m.model_id;
    j["d_model"] = m.d_model;
    auto& levels = j["levels"] = nlohmann::json::array();
    for (Level l : m.levels) levels.push_back(to_string(l));
    auto& layers = j["layers"] = nlohmann::json::array();
    for (Layer l : m.layers) {
        if (l.is_final()) {
            layers.push_back("final");
        } else {
            layers.push_back(l.index());
        }
    }
    auto& samples = j["samples"] = nlohmann::json::array();
    for (const auto& s : m.samples) {
        samples.push_back({{"sample_id", s.sample_id},
                           {"value", s.value},
                           {"modality", to_string(s.modality)},
                           {"labels",
                            {{"is_large", s.labels.is_large},
                             {"is_even", s.labels.is_even},
                             {"is_prime", s.labels.is_prime}}},
                           {"knowledge_pass", s.knowledge_pass}});
    }
    return j;
}

Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    try {
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != kStoreFormatVersion) {
            throw Error(ErrorKind::Version,
                        fmt::format("manifest format_version {} is not supported (expected {})",
                                    m.format_version, kStoreFormatVersion));
        }
        m.model_id = j.at("model_id").get<std::string>();
        const auto d = j.at("d_model").get<long long>();
        if (d <= 0) throw Error(ErrorKind::Format, "manifest d_model must be positive");
        m.d_model = static_cast<std::size_t>(d);
        for (const auto& l : j.at("levels")) m.levels.push_back(parse_level(l.get<std::string>()));
        for (const auto& l : j.at("layers")) {
            if (l.is_string()) {
                m.layers.push_back(Layer::parse(l.get<std::string>()));
            } else {
                m.layers.emplace_back(l.get<int>());
            }
        }
        for (const auto& s : j.at("samples")) {
            SampleInfo info;
            info.sample_id = s.at("sample_id").get<int>();
            info.value = s.at("value").get<int>();
            info.modality = parse_modality(s.at("modality").get<std::string>());
            const auto& lab = s.at("labels");
            info.labels.is_large = lab.at("is_large").get<bool>();
            info.labels.is_even = lab.at("is_even").get<bool>();
            info.labels.is_prime = lab.at("is_prime").get<bool>();
            info.knowledge_pass = s.value("knowledge_pass", true);
            m.samples.push_back(info);
        }
        for (const auto& [key, value] : j.items()) {
            if (key != "format_version" && key != "model_id" && key != "d_model" &&
                key != "levels" && key != "layers" && key != "samples") {
                m.extras[key] = value;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, fmt::format("malformed manifest: {}", e.what()));
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Version || e.kind() == ErrorKind::Format) throw;
        throw Error(ErrorKind::Format, fmt::format("malformed manifest: {}", e.what()));
    }
    return m;
}

ActivationSet ActivationSet::from_matrix(Level level, Layer layer, const Matrix& m) {
    ActivationSet s{level, layer, m.rows(), m.cols(), {}};
    s.data.resize(m.rows() * m.cols());
    auto src = m.data();
    std::transform(src.begin(), src.end(), s.data.begin(),
                   [](double v) { return static_cast<float>(v); });
    return s;
}

Matrix ActivationSet::promote() const {
    Matrix m(rows, cols);
    auto dst = m.data();
    std::transform(data.begin(), data.end(), dst.begin(),
                   [](float v) { return static_cast<double>(v); });
    return m;
}

std::string to_string(PatchMode m) { return m == PatchMode::Direct ? "direct" : "ortho"; }

PatchMode parse_patch_mode(std::string_view s) {
    if (s == "direct") return PatchMode::Direct;
    if (s == "ortho") return PatchMode::Ortho;
    throw Error(ErrorKind::InvalidArgument, fmt::format("unknown ablation mode '{}'", s));
}

fs::path blob_path(const fs::path& dir, Level level, Layer layer) {
    return dir / "blobs" / fmt::format("{}_{}.f32", to_string(level), layer.to_string());
}

fs::path patch_path(const fs::path& dir, Level level, Layer layer, PatchMode mode) {
    return dir / "patches" /
           fmt::format("{}_{}_{}.f32", to_string(level), layer.to_string(), to_string(mode));
}

std::string encode_f32(std::span<const float> values) {
    std::string out(values.size() * 4, '\0');
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint32_t>(values[i]);
        out[4 * i + 0] = static_cast<char>(u & 0xFFu);
        out[4 * i + 1] = static_cast<char>((u >> 8) & 0xFFu);
        out[4 * i + 2] = static_cast<char>((u >> 16) & 0xFFu);
        out[4 * i + 3] = static_cast<char>((u >> 24) & 0xFFu);
    }
    return out;
}

std::vector<float> decode_f32(std::string_view bytes) {
    if (bytes.size() % 4 != 0) {
        throw Error(ErrorKind::DataIntegrity,
                    fmt::format("binary32 payload length {} is not a multiple of 4", bytes.size()));
    }
    std::vector<float> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto b = [&](std::size_t k) {
            return static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + k]));
        };
        out[i] = std::bit_cast<float>(b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24));
    }
    return out;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) {
        throw Error(ErrorKind::Io, fmt::format("{}: cannot create directory: {}",
                                               path.parent_path().string(), ec.message()));
    }
    const fs::path tmp = path.string() + fmt::format(".tmp.{}", ::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::Io, fmt::format("{}: cannot open for writing", tmp.string()));
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw Error(ErrorKind::Io, fmt::format("{}: write failed", tmp.string()));
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error(ErrorKind::Io,
                    fmt::format("{}: rename failed: {}", path.string(), ec.message()));
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::NotFound, fmt::format("{}: not found", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorKind::Io, fmt::format("{}: read failed", path.string()));
    return ss.str();
}

namespace {

void check_finite(std::span<const float> data, std::size_t cols, const std::string& where) {
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (!std::isfinite(data[k])) {
            throw Error(ErrorKind::DataIntegrity,
                        fmt::format("{}: non-finite value at row {} column {}", where,
                                    cols ? k / cols : 0, cols ? k % cols : k));
        }
    }
}

template <typename T>
void insert_sorted(std::vector<T>& v, T item) {
    if (std::find(v.begin(), v.end(), item) == v.end()) v.push_back(item);
    std::sort(v.begin(), v.end());
}

}  // namespace

void write_set(const ActivationSet& set, const Manifest& manifest, const fs::path& dir) {
    if (manifest.d_model == 0) throw Error(ErrorKind::Format, "manifest d_model must be positive");
    if (set.rows != manifest.n_samples() || (set.rows > 0 && set.cols != manifest.d_model) ||
        set.data.size() != set.rows * set.cols) {
        throw Error(ErrorKind::Format,
                    fmt::format("activation set {}x{} does not match manifest ({} samples, d={})",
                                set.rows, set.cols, manifest.n_samples(), manifest.d_model));
    }
    const auto blob = blob_path(dir, set.level, set.layer);
    check_finite(set.data, set.cols, blob.string());

    Manifest merged = manifest;
    const auto manifest_file = dir / "manifest.json";
    if (fs::exists(manifest_file)) {
        const Manifest existing = read_manifest(dir);
        if (existing.d_model != manifest.d_model || existing.samples != manifest.samples) {
            throw Error(ErrorKind::Format,
                        fmt::format("{}: existing manifest has different samples or d_model",
                                    manifest_file.string()));
        }
        for (Level l : existing.levels) insert_sorted(merged.levels, l);
        for (Layer l : existing.layers) insert_sorted(merged.layers, l);
    }
    insert_sorted(merged.levels, set.level);
    insert_sorted(merged.layers, set.layer);

    write_file_atomic(blob, encode_f32(set.data));
    write_file_atomic(manifest_file, to_json(merged).dump(2) + "\n");
}

Manifest read_manifest(const fs::path& dir) {
    const auto path = dir / "manifest.json";
    const std::string text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, fmt::format("{}: {}", path.string(), e.what()));
    }
    return manifest_from_json(j);
}

ActivationSet read_set(const fs::path& dir, Level level, Layer layer) {
    const Manifest m = read_manifest(dir);
    const auto path = blob_path(dir, level, layer);
    if (!fs::exists(path)) {
        throw Error(ErrorKind::NotFound,
                    fmt::format("{}: no blob for level {} layer {}", path.string(),
                                to_string(level), layer.to_string()));
    }
    const std::string bytes = read_file(path);
    const std::size_t expected = m.n_samples() * m.d_model * 4;
    if (bytes.size() != expected) {
        throw Error(ErrorKind::DataIntegrity,
                    fmt::format("{}: {} bytes, expected {} ({} samples x {} x 4)", path.string(),
                                bytes.size(), expected, m.n_samples(), m.d_model));
    }
    ActivationSet set{level, layer, m.n_samples(), m.d_model, decode_f32(bytes)};
    check_finite(set.data, set.cols, path.string());
    return set;
}

AnalysisInput load_analysis_input(const fs::path& dir, Level level, Layer layer) {
    const Manifest m = read_manifest(dir);
    if (!fs::exists(blob_path(dir, Level::L1, layer))) {
        throw Error(ErrorKind::NotFound,
                    fmt::format("{}: analysis needs the L1 baseline at layer {}", dir.string(),
                                layer.to_string()));
    }
    AnalysisInput in;
    in.rows = m.knowledge_rows();
    in.x_base = rows_subset(read_set(dir, Level::L1, layer).promote(), in.rows);
    in.x_task = rows_subset(read_set(dir, level, layer).promote(), in.rows);
    const auto all = m.labels();
    for (std::size_t r : in.rows) in.labels.push_back(all[r]);
    return in;
}

void write_patch(const PatchFile& patch, const fs::path& dir) {
    if (patch.entries.empty()) {
        throw Error(ErrorKind::InvalidArgument, "patch has no label entries");
    }
    std::vector<float> payload;
    nlohmann::json rows = nlohmann::json::object();
    std::size_t r = 0;
    for (const auto& [label, vec] : patch.entries) {
        if (vec.size() != patch.d_model) {
            throw Error(ErrorKind::Format,
                        fmt::format("patch vector for label '{}' has length {}, d_model is {}",
                                    label, vec.size(), patch.d_model));
        }
        payload.insert(payload.end(), vec.begin(), vec.end());
        rows[label] = r++;
    }
    const auto file = patch_path(dir, patch.level, patch.layer, patch.mode);
    check_finite(payload, patch.d_model, file.string());

    const auto index_file = dir / "patches" / "index.json";
    nlohmann::json index = {{"format_version", kStoreFormatVersion},
                            {"d_model", patch.d_model},
                            {"patches", nlohmann::json::array()}};
    if (fs::exists(index_file)) {
        try {
            index = nlohmann::json::parse(read_file(index_file));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Format, fmt::format("{}: {}", index_file.string(), e.what()));
        }
        if (index.value("d_model", patch.d_model) != patch.d_model) {
            throw Error(ErrorKind::Format, fmt::format("{}: d_model mismatch with new patch",
                                                       index_file.string()));
        }
    }
    nlohmann::json entry = {{"file", file.filename().string()},
                            {"level", to_string(patch.level)},
                            {"layer", patch.layer.to_string()},
                            {"mode", to_string(patch.mode)},
                            {"attribute", to_string(patch.attribute)},
                            {"rows", rows}};
    nlohmann::json kept = nlohmann::json::array();
    for (const auto& e : index["patches"]) {
        if (e.value("file", "") != entry["file"]) kept.push_back(e);
    }
    kept.push_back(entry);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.at("file").template get<std::string>() < b.at("file").template get<std::string>();
    });
    index["patches"] = kept;

    write_file_atomic(file, encode_f32(payload));
    write_file_atomic(index_file, index.dump(2) + "\n");
}

PatchFile read_patch(const fs::path& dir, Level level, Layer layer, PatchMode mode) {
    const auto index_file = dir / "patches" / "index.json";
    nlohmann::json index;
    try {
        index = nlohmann::json::parse(read_file(index_file));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, fmt::format("{}: {}", index_file.string(), e.what()));
    }
    const auto file = patch_path(dir, level, layer, mode);
    try {
        if (index.at("format_version").get<int>() != kStoreFormatVersion) {
            throw Error(ErrorKind::Version, fmt::format("{}: unsupported format_version",
                                                        index_file.string()));
        }
        PatchFile p;
        p.level = level;
        p.layer = layer;
        p.mode = mode;
        p.d_model = index.at("d_model").get<std::size_t>();
        for (const auto& e : index.at("patches")) {
            if (e.at("file").get<std::string>() != file.filename().string()) continue;
            p.attribute = parse_attribute(e.at("attribute").get<std::string>());
            const auto values = decode_f32(read_file(file));
            const auto& rows = e.at("rows");
            if (values.size() != rows.size() * p.d_model) {
                throw Error(ErrorKind::DataIntegrity,
                            fmt::format("{}: {} floats, expected {}", file.string(), values.size(),
                                        rows.size() * p.d_model));
            }
            check_finite(values, p.d_model, file.string());
            for (const auto& [label, row] : rows.items()) {
                const auto off = row.get<std::size_t>() * p.d_model;
                p.entries[label] = std::vector<float>(values.begin() + static_cast<long>(off),
                                                      values.begin() + static_cast<long>(off + p.d_model));
            }
            return p;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, fmt::format("{}: {}", index_file.string(), e.what()));
    }
    throw Error(ErrorKind::NotFound,
                fmt::format("{}: no patch entry for {}", index_file.string(), file.filename().string()));
}

void write_matrix_csv(const Matrix& m, const fs::path& path) {
    std::string out;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += fmt::format("{:.17g}", m(i, j));
        }
        out += '\n';
    }
    write_file_atomic(path, out);
}

}  // namespace mgauge
