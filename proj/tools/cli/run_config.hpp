#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "manifold_gauge/dataset.hpp"
#include "manifold_gauge/store.hpp"
#include "manifold_gauge/synthetic.hpp"

namespace mgauge::cli {

enum class MetricKind { Standard, GMetric };
enum class EmitKind { Markdown, Csv, Svg };

MetricKind parse_metric(std::string_view s);
EmitKind parse_emit(std::string_view s);

// Everything a command needs; validated before any computation.
struct RunConfig {
    std::string command;
    std::filesystem::path store_dir;
    std::filesystem::path output_dir = ".";
    std::vector<Level> levels;  // empty: every non-baseline level in the store
    std::optional<Attribute> attribute;  // empty: the level's natural attribute
    MetricKind metric = MetricKind::Standard;
    std::filesystem::path gain_file;  // g-metric weights; default <store>/norm_gain.f32
    std::uint64_t seed = 0;
    double delta = 0.1;
    double epsilon_basin = 0.02;
    double drift_bound = 0.15;
    std::size_t smoothing = 1;
    std::set<EmitKind> emit = {EmitKind::Markdown, EmitKind::Csv, EmitKind::Svg};
    PatchMode mode = PatchMode::Direct;
    Layer layer = Layer::final_norm();

    // synth-dataset
    int range_lo = 1;
    int range_hi = 200;
    std::set<Modality> modalities = {Modality::Arabic, Modality::EnglishWord};
    std::string template_set = "v1";
    std::filesystem::path templates_file;  // empty: bundled templates

    // synth-manifold
    SynthConfig synth;
    std::size_t n_layers = 0;

    void validate() const;  // throws Error(Config)
    bool emits(EmitKind k) const { return emit.contains(k); }
    Attribute attribute_for(Level level) const;
};

}  // namespace mgauge::cli
