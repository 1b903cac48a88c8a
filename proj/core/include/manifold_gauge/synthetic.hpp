#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "manifold_gauge/dataset.hpp"
#include "manifold_gauge/linalg.hpp"
#include "manifold_gauge/store.hpp"

namespace mgauge {

/// Parameters of the synthetic residual-stream generator.
///
/// Sample i carries value i + 1 and the labels of that integer. The baseline
/// state lies on a smooth 1-D arc (so base similarity decays with |i - j|),
/// plus a weak parity feature and isotropic noise. The task state adds a
/// global task vector and a centered specific interference made of
///   - a contraction toward the manifold centroid (class-agnostic, gives C > 0),
///   - +/- divergence_gain along one axis, sign set by `attribute`,
///   - isotropic noise.
/// The specific part is rescaled so the mean |delta_i| / |x_i| equals omega_mean.
struct SynthConfig {
    std::size_t n_samples = 200;
    std::size_t d_model = 512;
    std::uint64_t seed = 0;
    double base_latent_scale = 1.0;  // radius of the latent arc around the shared axis
    double omega_mean = 0.25;
    double phi_mean = 1.0;  // radians between the task vector and the centroid direction
    double divergence_gain = 1.0;
    double noise_sigma = 0.1;
    double preservation_gain = 1.0;
    double class_feature = 0.2;
    Attribute attribute = Attribute::IsEven;

    void validate() const;  // throws Config
};

// Axes reserved by the generator; noise-free structure lives only here.
inline constexpr std::size_t kAxisShared = 0;
inline constexpr std::size_t kAxisArcCos = 1;
inline constexpr std::size_t kAxisArcSin = 2;
inline constexpr std::size_t kAxisDivergence = 3;
inline constexpr std::size_t kAxisTask = 4;
inline constexpr std::size_t kAxisParity = 5;
inline constexpr std::size_t kAxisCopy = 6;  // 6..8: rotated copy of the arc axes
inline constexpr std::size_t kReservedAxes = 9;
inline constexpr std::size_t kMinSynthDim = 10;

struct BaseDraw {
    Matrix x;
    std::vector<int> values;
    std::vector<Labels> labels;
};

BaseDraw gen_base(const SynthConfig& cfg);

struct GroundTruth {
    Vector v_task;
    Vector w_plus;
    Vector w_minus;
    Matrix specific;  // exact centered specific interference
    double omega_scale = 0.0;
    int expected_same_sign = 0;   // sign of same-class mean U_sim
    int expected_cross_sign = 0;  // sign of cross-class mean U_sim
};

struct Injection {
    Matrix x_task;
    GroundTruth truth;
};

Injection inject(const SynthConfig& cfg, const Matrix& x_base, std::span<const Labels> labels);

// Specific vectors v_i = a x_hat_i + c R(x_hat_i) + b s_i w + e xi_i whose
// cross-class innovation similarity follows U = lambda * S_base + k.
// Requires lambda >= 0, k <= 0 and lambda - k <= 1.
struct PlantedTrend {
    Matrix x_base;
    Matrix specific;
    std::vector<Labels> labels;
};

PlantedTrend plant_trend(const SynthConfig& cfg, double lambda, double k);

struct LayerPair {
    Layer layer;
    Matrix x_base;
    Matrix x_task;
    double gain = 0.0;  // divergence gain used at this layer
};

// Divergence schedule over depth: zero through the first half before the
// basin, ramping to full gain at basin_layer, decaying afterwards.
double divergence_schedule(std::size_t layer, std::size_t n_layers, std::size_t basin_layer);

std::vector<LayerPair> layered_trajectory(const SynthConfig& cfg, std::size_t n_layers,
                                          std::optional<std::size_t> basin_layer);

// Gain and noise are multiples of the SynthConfig values.
struct LevelProfile {
    Level level = Level::L3;
    Attribute attribute = Attribute::IsEven;
    double gain_scale = 1.0;
    double noise_scale = 1.0;
    std::optional<std::size_t> basin_layer;  // used when layers are written
};

// L2..L5 analogs: three divergent logical levels and one entangled level.
std::vector<LevelProfile> default_level_profiles(std::size_t n_layers);

// Writes L1 plus every profile at FINAL, and at layers 0..n_layers-1 when
// n_layers > 0. model_id is "synthetic".
void write_synthetic_store(const SynthConfig& cfg, const std::vector<LevelProfile>& levels,
                           std::size_t n_layers, const std::filesystem::path& dir);

}  // namespace mgauge
