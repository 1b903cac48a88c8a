#include "manifold_gauge/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace mgauge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_or_nan(const MaskStats& s) { return s.mean.value_or(kNaN); }

void finish(LayerTrajectory& traj, const LayerOptions& opts) {
    if (const auto b = find_basin(traj, opts)) traj.basin_layer = traj.layers[*b];
    traj.phases = classify_phases(traj, opts);
}

std::vector<double> series_for_detection(const LayerTrajectory& traj, const LayerOptions& opts) {
    return opts.smoothing_window > 1 ? moving_average(traj.cross_u, opts.smoothing_window)
                                     : traj.cross_u;
}

}  // namespace

void append_layer(LayerTrajectory& traj, Layer layer, const GeometryReport& rep) {
    traj.layers.push_back(layer);
    traj.same_u.push_back(mean_or_nan(rep.u_stats.same));
    traj.cross_u.push_back(mean_or_nan(rep.u_stats.cross));
    traj.same_c.push_back(mean_or_nan(rep.c_stats.same));
    traj.cross_c.push_back(mean_or_nan(rep.c_stats.cross));
    traj.excluded.push_back(rep.excluded);
}

LayerTrajectory sweep(const std::filesystem::path& dir, Level level, Attribute attribute,
                      const LayerOptions& opts) {
    const Manifest m = read_manifest(dir);
    if (!m.has_level(level)) {
        throw Error(ErrorKind::NotFound,
                    fmt::format("{}: store has no level {}", dir.string(), to_string(level)));
    }
    std::vector<Layer> hidden;
    for (Layer l : m.layers) {
        if (!l.is_final()) hidden.push_back(l);
    }
    if (hidden.size() < 2) {
        throw Error(ErrorKind::NotFound,
                    fmt::format("{}: layer sweep needs at least two hidden layers, found {}",
                                dir.string(), hidden.size()));
    }
    LayerTrajectory traj;
    traj.level = level;
    traj.attribute = attribute;
    for (Layer l : hidden) {
        const AnalysisInput in = load_analysis_input(dir, level, l);
        append_layer(traj, l, analyze_geometry(in.x_base, in.x_task, in.labels, attribute, opts.metric));
    }
    finish(traj, opts);
    return traj;
}

LayerTrajectory sweep_pairs(const std::vector<LayerPair>& pairs, std::span<const Labels> labels,
                            Level level, Attribute attribute, const LayerOptions& opts) {
    LayerTrajectory traj;
    traj.level = level;
    traj.attribute = attribute;
    for (const auto& p : pairs) {
        append_layer(traj, p.layer, analyze_geometry(p.x_base, p.x_task, labels, attribute, opts.metric));
    }
    finish(traj, opts);
    return traj;
}

std::vector<double> moving_average(std::span<const double> xs, std::size_t window) {
    if (window <= 1) return {xs.begin(), xs.end()};
    const std::size_t half = window / 2;
    std::vector<double> out(xs.size(), kNaN);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(xs.size(), i + half + 1);
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t k = lo; k < hi; ++k) {
            if (std::isnan(xs[k])) continue;
            s += xs[k];
            ++n;
        }
        if (n > 0 && !std::isnan(xs[i])) out[i] = s / static_cast<double>(n);
    }
    return out;
}

std::optional<std::size_t> find_basin(const LayerTrajectory& traj, const LayerOptions& opts) {
    const std::vector<double> cross = series_for_detection(traj, opts);
    std::optional<std::size_t> best;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cross.size(); ++i) {
        if (std::isnan(cross[i])) continue;
        top = std::max(top, cross[i]);
        if (!best || cross[i] < cross[*best]) best = i;
    }
    if (!best || cross[*best] > -opts.epsilon_basin) return std::nullopt;
    // A flat series has no distinguished minimum.
    if (cross.size() > 1 && top - cross[*best] <= opts.epsilon_basin) return std::nullopt;
    return best;
}

std::optional<PhaseRanges> classify_phases(const LayerTrajectory& traj, const LayerOptions& opts) {
    const std::size_t n = traj.layers.size();
    if (n < 3) return std::nullopt;
    const auto basin = find_basin(traj, opts);
    if (!basin) return std::nullopt;
    const std::vector<double> cross = series_for_detection(traj, opts);
    std::size_t onset = *basin;
    for (std::size_t i = 0; i <= *basin; ++i) {
        if (!std::isnan(cross[i]) && cross[i] < -opts.epsilon_basin) {
            onset = i;
            break;
        }
    }
    return PhaseRanges{{0, onset}, {onset, *basin + 1}, {*basin + 1, n}};
}

std::vector<PortraitPoint> phase_portrait(const LayerTrajectory& traj) {
    std::vector<PortraitPoint> out;
    out.reserve(2 * traj.layers.size());
    for (std::size_t i = 0; i < traj.layers.size(); ++i) {
        out.push_back({traj.level, "same", traj.layers[i], traj.same_c[i], traj.same_u[i]});
    }
    for (std::size_t i = 0; i < traj.layers.size(); ++i) {
        out.push_back({traj.level, "cross", traj.layers[i], traj.cross_c[i], traj.cross_u[i]});
    }
    return out;
}

bool early_differentiation(const LayerTrajectory& traj, double threshold, std::size_t within) {
    const std::size_t n = std::min(within, traj.layers.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(traj.same_u[i] - traj.cross_u[i]) > threshold) return true;
    }
    return false;
}

double scissor_gap(const LayerTrajectory& traj) {
    double gap = 0.0;
    for (std::size_t i = 0; i < traj.layers.size(); ++i) {
        const double g = traj.same_u[i] - traj.cross_u[i];
        if (!std::isnan(g)) gap = std::max(gap, g);
    }
    return gap;
}

}  // namespace mgauge
