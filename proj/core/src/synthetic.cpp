#include "manifold_gauge/synthetic.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "manifold_gauge/parallel.hpp"
#include "manifold_gauge/rng.hpp"

namespace mgauge {

namespace {

constexpr std::uint64_t kStreamBaseNoise = 1;
constexpr std::uint64_t kStreamTaskNoise = 2;
constexpr std::uint64_t kStreamPlantNoise = 3;

double sign_of(bool b) { return b ? 1.0 : -1.0; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return CounterRng::mix(seed ^ CounterRng::mix(salt * CounterRng::kWeyl + 0x5EEDull));
}

Vector column_mean(const Matrix& m) {
    Vector mean(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t k = 0; k < r.size(); ++k) mean[k] += r[k];
    }
    for (double& v : mean) v /= static_cast<double>(m.rows());
    return mean;
}

void subtract_column_mean(Matrix& m) {
    const Vector mean = column_mean(m);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] -= mean[k];
    }
}

// Row i of a unit-variance-per-norm Gaussian field: entries N(0, 1/d).
void fill_noise_row(std::span<double> row, std::uint64_t seed, std::uint64_t tag, std::size_t i,
                    std::size_t first_axis = 0) {
    const CounterRng rng(seed, stream_id(tag, i));
    const double scale = 1.0 / std::sqrt(static_cast<double>(row.size()));
    for (std::size_t k = first_axis; k < row.size(); ++k) row[k] = rng.normal(k) * scale;
}

double arc_angle(std::size_t i, std::size_t n) {
    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.5;
    return 0.5 * std::numbers::pi * (2.0 * t - 1.0);
}

}  // namespace

void SynthConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    if (n_samples == 0) fail("synthetic config: n_samples must be positive");
    if (d_model < kMinSynthDim) {
        fail(fmt::format("synthetic config: d_model must be >= {} (got {})", kMinSynthDim, d_model));
    }
    if (!(omega_mean > 0.0) || !std::isfinite(omega_mean)) fail("synthetic config: omega_mean must be > 0");
    for (double v : {base_latent_scale, divergence_gain, noise_sigma, preservation_gain, class_feature}) {
        if (!(v >= 0.0) || !std::isfinite(v)) fail("synthetic config: gains and scales must be finite and >= 0");
    }
    if (!std::isfinite(phi_mean)) fail("synthetic config: phi_mean must be finite");
}

BaseDraw gen_base(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_samples;
    const std::size_t d = cfg.d_model;
    BaseDraw out{Matrix(n, d), std::vector<int>(n), std::vector<Labels>(n)};
    parallel_for(n, [&](std::size_t i) {
        const int value = static_cast<int>(i) + 1;
        out.values[i] = value;
        out.labels[i] = labels_for(value);
        auto row = out.x.row(i);
        if (cfg.noise_sigma > 0.0) fill_noise_row(row, cfg.seed, kStreamBaseNoise, i);

        const double theta = arc_angle(i, n);
        Vector clean(d, 0.0);
        clean[kAxisShared] = 1.0;
        clean[kAxisArcCos] = cfg.base_latent_scale * std::cos(theta);
        clean[kAxisArcSin] = cfg.base_latent_scale * std::sin(theta);
        clean[kAxisParity] = cfg.class_feature * sign_of(out.labels[i].is_even);
        const double clean_norm = std::sqrt(dot(clean, clean));
        for (std::size_t k = 0; k < d; ++k) row[k] = clean[k] + cfg.noise_sigma * clean_norm * row[k];
    });
    return out;
}

Injection inject(const SynthConfig& cfg, const Matrix& x_base, std::span<const Labels> labels) {
    cfg.validate();
    const std::size_t n = x_base.rows();
    const std::size_t d = x_base.cols();
    if (labels.size() != n || d < kMinSynthDim) {
        throw Error(ErrorKind::InvalidArgument, "inject: labels/shape do not match the base set");
    }

    std::vector<double> norms(n);
    double rho = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = std::sqrt(dot(x_base.row(i), x_base.row(i)));
        rho += norms[i];
    }
    rho /= static_cast<double>(n);
    const Vector centroid = column_mean(x_base);

    Matrix spec(n, d);
    double contraction_energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto row = spec.row(i);
        if (cfg.noise_sigma > 0.0) {
            fill_noise_row(row, cfg.seed, kStreamTaskNoise, i);
            for (double& v : row) v *= cfg.noise_sigma;
        }
        double e = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            const double c = cfg.preservation_gain * (centroid[k] - x_base(i, k)) / rho;
            row[k] += c;
            e += c * c;
        }
        contraction_energy += e;
        row[kAxisDivergence] += cfg.divergence_gain * sign_of(labels[i].get(cfg.attribute));
    }
    contraction_energy /= static_cast<double>(n);
    subtract_column_mean(spec);

    // Task vector direction: phi_mean away from the centroid, toward the task axis.
    Vector c_hat(d, 0.0);
    const double c_norm = std::sqrt(dot(centroid, centroid));
    if (c_norm > kEpsNorm) {
        for (std::size_t k = 0; k < d; ++k) c_hat[k] = centroid[k] / c_norm;
    } else {
        c_hat[kAxisShared] = 1.0;
    }
    Vector v_dir(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) v_dir[k] = std::cos(cfg.phi_mean) * c_hat[k];
    v_dir[kAxisTask] += std::sin(cfg.phi_mean);
    v_dir = unit(v_dir);

    double ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vector delta = add(v_dir, spec.row(i));
        ratio += std::sqrt(dot(delta, delta)) / norms[i];
    }
    ratio /= static_cast<double>(n);
    const double s = cfg.omega_mean / ratio;

    Injection inj;
    inj.truth.omega_scale = s;
    inj.truth.v_task = scaled(v_dir, s);
    inj.truth.w_plus = Vector(d, 0.0);
    inj.truth.w_plus[kAxisDivergence] = s * cfg.divergence_gain;
    inj.truth.w_minus = scaled(inj.truth.w_plus, -1.0);
    inj.truth.specific = Matrix(n, d);
    inj.x_task = Matrix(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            const double sp = s * spec(i, k);
            inj.truth.specific(i, k) = sp;
            inj.x_task(i, k) = x_base(i, k) + inj.truth.v_task[k] + sp;
        }
    }

    // Signs the generator guarantees; 0 where the components compete.
    const double g2 = cfg.divergence_gain * cfg.divergence_gain;
    const double rest = contraction_energy + cfg.noise_sigma * cfg.noise_sigma;
    if (cfg.divergence_gain > 0.0 || cfg.preservation_gain > 0.0) inj.truth.expected_same_sign = 1;
    if (cfg.divergence_gain > cfg.noise_sigma && g2 > rest) {
        inj.truth.expected_cross_sign = -1;
    } else if (cfg.divergence_gain == 0.0 && cfg.preservation_gain > 0.0) {
        inj.truth.expected_cross_sign = 1;
    }
    return inj;
}

PlantedTrend plant_trend(const SynthConfig& cfg, double lambda, double k) {
    cfg.validate();
    if (!(lambda >= 0.0) || !(k <= 0.0) || !(lambda - k <= 1.0)) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("plant_trend: need lambda >= 0, k <= 0, lambda - k <= 1 (got {}, {})",
                                lambda, k));
    }
    const std::size_t n = cfg.n_samples;
    const std::size_t d = cfg.d_model;
    const double a = 0.5;
    const double c = std::sqrt(lambda);
    const double b = std::sqrt(-k);
    const double e = std::sqrt(std::max(0.0, 1.0 - lambda + k));

    PlantedTrend out{Matrix(n, d), Matrix(n, d), std::vector<Labels>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        out.labels[i] = labels_for(static_cast<int>(i) + 1);
        const double theta = arc_angle(i, n);
        auto x = out.x_base.row(i);
        x[kAxisShared] = 1.0;
        x[kAxisArcCos] = cfg.base_latent_scale * std::cos(theta);
        x[kAxisArcSin] = cfg.base_latent_scale * std::sin(theta);
        const Vector xh = unit(x);

        auto v = out.specific.row(i);
        fill_noise_row(v, cfg.seed, kStreamPlantNoise, i, kReservedAxes);
        const double xi_norm = std::sqrt(dot(v, v));
        for (double& t : v) t *= e / xi_norm;
        for (std::size_t ax = 0; ax < 3; ++ax) {
            v[ax] += a * xh[ax];
            v[kAxisCopy + ax] += c * xh[ax];
        }
        v[kAxisDivergence] += b * sign_of(out.labels[i].get(cfg.attribute));
    }
    return out;
}

double divergence_schedule(std::size_t layer, std::size_t n_layers, std::size_t basin_layer) {
    const std::size_t onset = basin_layer / 2;
    if (layer < onset) return 0.0;
    if (layer <= basin_layer) {
        const double t = static_cast<double>(layer - onset + 1) /
                         static_cast<double>(basin_layer - onset + 1);
        return t * t * t;
    }
    const double t = static_cast<double>(layer - basin_layer) /
                     static_cast<double>(n_layers - 1 - basin_layer);
    return 0.7 * (1.0 - t) + 0.1;
}

std::vector<LayerPair> layered_trajectory(const SynthConfig& cfg, std::size_t n_layers,
                                          std::optional<std::size_t> basin_layer) {
    cfg.validate();
    if (basin_layer && *basin_layer >= n_layers) {
        throw Error(ErrorKind::InvalidArgument,
                    fmt::format("basin layer {} outside 0..{}", *basin_layer, n_layers - 1));
    }
    std::vector<LayerPair> out(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        SynthConfig base_cfg = cfg;
        base_cfg.seed = derive_seed(cfg.seed, l + 1);
        BaseDraw base = gen_base(base_cfg);

        SynthConfig task_cfg = base_cfg;
        task_cfg.divergence_gain =
            basin_layer ? cfg.divergence_gain * divergence_schedule(l, n_layers, *basin_layer) : 0.0;
        Injection inj = inject(task_cfg, base.x, base.labels);
        out[l] = LayerPair{Layer(static_cast<int>(l)), std::move(base.x), std::move(inj.x_task),
                           task_cfg.divergence_gain};
    }
    return out;
}

std::vector<LevelProfile> default_level_profiles(std::size_t n_layers) {
    const auto basin = [n_layers](std::size_t at32) -> std::optional<std::size_t> {
        if (n_layers == 0) return std::nullopt;
        return std::min(n_layers - 1, at32 * n_layers / 32);
    };
    return {
        {Level::L2, Attribute::IsLarge, 1.0, 1.0, basin(19)},
        {Level::L3, Attribute::IsEven, 1.0, 1.0, basin(24)},
        {Level::L4, Attribute::IsPrime, 0.6, 1.0, basin(21)},
        {Level::L5, Attribute::IsEven, 0.0, 2.5, std::nullopt},
    };
}

void write_synthetic_store(const SynthConfig& cfg, const std::vector<LevelProfile>& levels,
                           std::size_t n_layers, const std::filesystem::path& dir) {
    cfg.validate();
    Manifest manifest;
    manifest.model_id = "synthetic";
    manifest.d_model = cfg.d_model;
    manifest.extras = {{"capture_point", "post_block"},
                       {"position", "last"},
                       {"generator",
                        {{"seed", cfg.seed},
                         {"n_samples", cfg.n_samples},
                         {"omega_mean", cfg.omega_mean},
                         {"phi_mean", cfg.phi_mean},
                         {"base_latent_scale", cfg.base_latent_scale},
                         {"preservation_gain", cfg.preservation_gain},
                         {"class_feature", cfg.class_feature}}}};
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        const int value = static_cast<int>(i) + 1;
        manifest.samples.push_back(
            {static_cast<int>(i), value, Modality::Arabic, labels_for(value), true});
    }

    const auto level_cfg = [&](const SynthConfig& base_cfg, const LevelProfile& p, double schedule) {
        SynthConfig c = base_cfg;
        c.attribute = p.attribute;
        c.divergence_gain = cfg.divergence_gain * p.gain_scale * schedule;
        c.noise_sigma = cfg.noise_sigma * p.noise_scale;
        c.seed = derive_seed(base_cfg.seed, 1000 + static_cast<std::uint64_t>(p.level));
        return c;
    };

    const BaseDraw base = gen_base(cfg);
    write_set(ActivationSet::from_matrix(Level::L1, Layer::final_norm(), base.x), manifest, dir);
    for (const auto& p : levels) {
        const Injection inj = inject(level_cfg(cfg, p, 1.0), base.x, base.labels);
        write_set(ActivationSet::from_matrix(p.level, Layer::final_norm(), inj.x_task), manifest, dir);
    }

    for (std::size_t l = 0; l < n_layers; ++l) {
        SynthConfig base_cfg = cfg;
        base_cfg.seed = derive_seed(cfg.seed, l + 1);
        const BaseDraw layer_base = gen_base(base_cfg);
        const Layer layer(static_cast<int>(l));
        write_set(ActivationSet::from_matrix(Level::L1, layer, layer_base.x), manifest, dir);
        for (const auto& p : levels) {
            const double schedule =
                p.basin_layer ? divergence_schedule(l, n_layers, *p.basin_layer) : 0.0;
            const Injection inj =
                inject(level_cfg(base_cfg, p, schedule), layer_base.x, layer_base.labels);
            write_set(ActivationSet::from_matrix(p.level, layer, inj.x_task), manifest, dir);
        }
    }
}

}  // namespace mgauge
