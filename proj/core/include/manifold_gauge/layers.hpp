#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manifold_gauge/geometry.hpp"
#include "manifold_gauge/store.hpp"
#include "manifold_gauge/synthetic.hpp"

namespace mgauge {

// Half-open range [begin, end) of positions in LayerTrajectory::layers.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool operator==(const IndexRange&) const = default;
};

struct PhaseRanges {
    IndexRange extraction;
    IndexRange computation;  // ends with the basin layer
    IndexRange rebound;
};

struct LayerOptions {
    double epsilon_basin = 0.02;
    std::size_t smoothing_window = 1;  // centered moving average; 1 disables
    Metric metric = Metric::standard();
};

/// Group means of U_sim and C per layer. A layer whose statistics are
/// undefined (every row collinear) carries NaN and is never a basin.
struct LayerTrajectory {
    Level level = Level::L3;
    Attribute attribute = Attribute::IsEven;
    std::vector<Layer> layers;
    std::vector<double> same_u;
    std::vector<double> cross_u;
    std::vector<double> same_c;
    std::vector<double> cross_c;
    std::vector<std::size_t> excluded;  // collinear rows per layer
    std::optional<Layer> basin_layer;
    std::optional<PhaseRanges> phases;
};

// One layer of the per-layer pipeline.
void append_layer(LayerTrajectory& traj, Layer layer, const GeometryReport& rep);

// Reads every hidden layer (FINAL excluded) of `level` plus the L1 baseline.
// Requires at least two layers; fills basin and phases.
LayerTrajectory sweep(const std::filesystem::path& dir, Level level, Attribute attribute,
                      const LayerOptions& opts = {});

// Same, over in-memory layer pairs sharing one label vector.
LayerTrajectory sweep_pairs(const std::vector<LayerPair>& pairs, std::span<const Labels> labels,
                            Level level, Attribute attribute, const LayerOptions& opts = {});

std::vector<double> moving_average(std::span<const double> xs, std::size_t window);

// Position of the smallest cross_u (earliest on ties). None when that
// minimum is above -epsilon_basin, the series spans at most epsilon_basin
// (flat), or no layer is defined.
std::optional<std::size_t> find_basin(const LayerTrajectory& traj, const LayerOptions& opts = {});

// Requires a basin and at least three layers. extraction runs until cross_u
// first drops below -epsilon_basin, computation through the basin, rebound
// covers the rest. The three ranges partition the layer list.
std::optional<PhaseRanges> classify_phases(const LayerTrajectory& traj,
                                           const LayerOptions& opts = {});

struct PortraitPoint {
    Level level = Level::L3;
    std::string group;  // "same" or "cross"
    Layer layer;
    double c_mean = 0.0;
    double u_mean = 0.0;
};

// Same series first, then cross; each ordered by layer.
std::vector<PortraitPoint> phase_portrait(const LayerTrajectory& traj);

// |same_u - cross_u| > threshold at any of the first `within` layers.
bool early_differentiation(const LayerTrajectory& traj, double threshold = 0.05,
                           std::size_t within = 10);

// Largest same_u - cross_u over defined layers.
double scissor_gap(const LayerTrajectory& traj);

}  // namespace mgauge
