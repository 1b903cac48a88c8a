#include <doctest.h>

#include <cmath>

#include "manifold_gauge/geometry.hpp"
#include "manifold_gauge/synthetic.hpp"
#include "oracles.hpp"

using namespace mgauge;

namespace {

SynthConfig small_config() {
    SynthConfig cfg;
    cfg.n_samples = 80;
    cfg.d_model = 64;
    return cfg;
}

ErrorKind kind_of(const SynthConfig& cfg) {
    try {
        cfg.validate();
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Io;  // sentinel: did not throw
}

}  // namespace

TEST_CASE("config validation") {
    SynthConfig ok;
    CHECK_NOTHROW(ok.validate());
    SynthConfig c = ok;
    c.d_model = 9;
    CHECK(kind_of(c) == ErrorKind::Config);
    c = ok;
    c.n_samples = 0;
    CHECK(kind_of(c) == ErrorKind::Config);
    c = ok;
    c.omega_mean = 0.0;
    CHECK(kind_of(c) == ErrorKind::Config);
    c = ok;
    c.noise_sigma = -0.1;
    CHECK(kind_of(c) == ErrorKind::Config);
    c = ok;
    c.divergence_gain = std::nan("");
    CHECK(kind_of(c) == ErrorKind::Config);
}

TEST_CASE("base draw is deterministic and labelled by value") {
    const SynthConfig cfg = small_config();
    const BaseDraw a = gen_base(cfg);
    const BaseDraw b = gen_base(cfg);
    CHECK(a.x == b.x);
    SynthConfig other = cfg;
    other.seed = 1;
    CHECK_FALSE(gen_base(other).x == a.x);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        CHECK(a.values[i] == static_cast<int>(i) + 1);
        CHECK(a.labels[i].is_even == ((i + 1) % 2 == 0));
    }
}

TEST_CASE("rank-one limit gives unit base similarity") {
    SynthConfig cfg = small_config();
    cfg.noise_sigma = 0.0;
    cfg.base_latent_scale = 0.0;
    cfg.class_feature = 0.0;
    const Matrix s = base_similarity(gen_base(cfg).x);
    for (double v : s.data()) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("base similarity decays along the arc") {
    SynthConfig cfg = small_config();
    cfg.noise_sigma = 0.0;
    cfg.class_feature = 0.0;
    const Matrix s = base_similarity(gen_base(cfg).x);
    for (std::size_t j = 1; j < cfg.n_samples; ++j) CHECK(s(0, j) < s(0, j - 1));
}

TEST_CASE("injection ground truth") {
    const SynthConfig cfg = small_config();
    const BaseDraw base = gen_base(cfg);
    const Injection inj = inject(cfg, base.x, base.labels);
    const std::size_t n = cfg.n_samples, d = cfg.d_model;

    // Specific part is centered and the task state decomposes exactly.
    for (std::size_t k = 0; k < d; ++k) {
        long double col = 0;
        for (std::size_t i = 0; i < n; ++i) {
            col += inj.truth.specific(i, k);
            CHECK(inj.x_task(i, k) ==
                  doctest::Approx(base.x(i, k) + inj.truth.v_task[k] + inj.truth.specific(i, k)));
        }
        CHECK(std::abs(static_cast<double>(col / n)) < 1e-12);
    }

    // Mean relative interference norm equals omega_mean.
    long double ratio = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = oracle::row(base.x, i);
        oracle::Vec delta(d);
        for (std::size_t k = 0; k < d; ++k) delta[k] = inj.x_task(i, k) - x[k];
        ratio += oracle::norm(delta) / oracle::norm(x);
    }
    CHECK(static_cast<double>(ratio / n) == doctest::Approx(cfg.omega_mean).epsilon(1e-9));

    // Without noise the centroid has no task-axis component, so the task
    // vector sits exactly phi_mean away from it.
    SynthConfig quiet = cfg;
    quiet.noise_sigma = 0.0;
    const BaseDraw qb = gen_base(quiet);
    const Injection qi = inject(quiet, qb.x, qb.labels);
    oracle::Vec centroid(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) centroid[k] += qb.x(i, k) / static_cast<double>(n);
    }
    CHECK(std::acos(oracle::cosine(qi.truth.v_task, centroid)) ==
          doctest::Approx(quiet.phi_mean).epsilon(1e-9));

    // Antipodal class directions on the divergence axis.
    CHECK(inj.truth.w_plus[kAxisDivergence] > 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        CHECK(inj.truth.w_minus[k] == -inj.truth.w_plus[k]);
        if (k != kAxisDivergence) CHECK(inj.truth.w_plus[k] == 0.0);
    }
    CHECK(inj.truth.expected_same_sign == 1);
    CHECK(inj.truth.expected_cross_sign == -1);
}

TEST_CASE("observed signs follow the expected signs") {
    struct Case {
        double gain, noise, preservation;
    };
    for (const Case c : {Case{1.0, 0.1, 1.0}, Case{0.0, 0.1, 1.0}, Case{2.0, 0.1, 0.0}}) {
        SynthConfig cfg;
        cfg.n_samples = 100;
        cfg.d_model = 128;
        cfg.divergence_gain = c.gain;
        cfg.noise_sigma = c.noise;
        cfg.preservation_gain = c.preservation;
        const BaseDraw base = gen_base(cfg);
        const Injection inj = inject(cfg, base.x, base.labels);
        const auto rep = analyze_geometry(base.x, inj.x_task, base.labels, cfg.attribute);
        CAPTURE(c.gain);
        CAPTURE(c.preservation);
        CHECK(inj.truth.expected_same_sign == 1);
        CHECK(*rep.u_stats.same.mean > 0.0);
        if (inj.truth.expected_cross_sign < 0) CHECK(*rep.u_stats.cross.mean < 0.0);
        if (inj.truth.expected_cross_sign > 0) CHECK(*rep.u_stats.cross.mean > 0.0);
        CHECK(inj.truth.expected_cross_sign != 0);
    }
}

TEST_CASE("degenerate limit makes every row collinear") {
    SynthConfig cfg = small_config();
    cfg.divergence_gain = 0.0;
    cfg.noise_sigma = 0.0;
    cfg.preservation_gain = 0.0;
    const BaseDraw base = gen_base(cfg);
    const Injection inj = inject(cfg, base.x, base.labels);
    CHECK(inj.truth.expected_same_sign == 0);
    CHECK(inj.truth.expected_cross_sign == 0);
    const auto rep = analyze_geometry(base.x, inj.x_task, base.labels, cfg.attribute);
    CHECK(rep.excluded == cfg.n_samples);
    CHECK_FALSE(rep.u_stats.same.mean.has_value());
    CHECK(rep.u_stats.same.undefined == "empty mask");
}

TEST_CASE("planted trend is recovered by least squares on cross-class pairs") {
    SynthConfig cfg;
    cfg.n_samples = 120;
    cfg.d_model = 256;
    const double lambda = 0.5, k = -0.2;
    const PlantedTrend pt = plant_trend(cfg, lambda, k);
    const std::size_t n = cfg.n_samples;
    std::vector<oracle::Vec> xh(n), uh(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = oracle::row(pt.x_base, i);
        const auto v = oracle::row(pt.specific, i);
        xh[i] = oracle::normalize(x);
        const long double p = oracle::dot(v, xh[i]);
        oracle::Vec u(v.size());
        for (std::size_t t = 0; t < v.size(); ++t) u[t] = static_cast<double>(v[t] - p * xh[i][t]);
        uh[i] = oracle::normalize(u);
    }
    oracle::Vec s_cross, u_cross, s_same, u_same;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = static_cast<double>(oracle::dot(xh[i], xh[j]));
            const double u = static_cast<double>(oracle::dot(uh[i], uh[j]));
            const bool same = pt.labels[i].is_even == pt.labels[j].is_even;
            (same ? s_same : s_cross).push_back(s);
            (same ? u_same : u_cross).push_back(u);
        }
    }
    const auto cross = oracle::ols(s_cross, u_cross);
    CHECK(cross.slope == doctest::Approx(lambda).epsilon(0.04));
    CHECK(std::abs(cross.slope - lambda) < 0.02);
    CHECK(std::abs(cross.intercept - k) < 0.02);
    const auto same = oracle::ols(s_same, u_same);
    CHECK(std::abs(same.intercept + k) < 0.02);

    CHECK_THROWS_AS(plant_trend(cfg, -0.1, -0.2), Error);
    CHECK_THROWS_AS(plant_trend(cfg, 0.5, 0.1), Error);
    CHECK_THROWS_AS(plant_trend(cfg, 0.9, -0.2), Error);
}

TEST_CASE("divergence schedule") {
    const std::size_t n = 32, basin = 24;
    for (std::size_t l = 0; l < basin / 2; ++l) CHECK(divergence_schedule(l, n, basin) == 0.0);
    for (std::size_t l = basin / 2 + 1; l <= basin; ++l) {
        CHECK(divergence_schedule(l, n, basin) > divergence_schedule(l - 1, n, basin));
    }
    CHECK(divergence_schedule(basin, n, basin) == 1.0);
    for (std::size_t l = basin + 1; l < n; ++l) {
        CHECK(divergence_schedule(l, n, basin) < divergence_schedule(l - 1, n, basin));
        CHECK(divergence_schedule(l, n, basin) <= 0.8);
    }
    CHECK(divergence_schedule(n - 1, n, basin) == doctest::Approx(0.1));
    CHECK(divergence_schedule(n - 1, n, n - 1) == 1.0);
}

TEST_CASE("layered trajectory") {
    SynthConfig cfg = small_config();
    const auto pairs = layered_trajectory(cfg, 8, 5);
    REQUIRE(pairs.size() == 8);
    for (std::size_t l = 0; l < 8; ++l) {
        CHECK(pairs[l].layer == Layer(static_cast<int>(l)));
        CHECK(pairs[l].gain == doctest::Approx(divergence_schedule(l, 8, 5)));
    }
    CHECK_FALSE(pairs[0].x_base == pairs[1].x_base);
    const auto again = layered_trajectory(cfg, 8, 5);
    for (std::size_t l = 0; l < 8; ++l) CHECK(again[l].x_task == pairs[l].x_task);
    for (const auto& p : layered_trajectory(cfg, 4, std::nullopt)) CHECK(p.gain == 0.0);
    CHECK_THROWS_AS(layered_trajectory(cfg, 4, 4), Error);
}

TEST_CASE("default level profiles") {
    const auto p32 = default_level_profiles(32);
    REQUIRE(p32.size() == 4);
    CHECK(p32[0].level == Level::L2);
    CHECK(*p32[0].basin_layer == 19);
    CHECK(*p32[1].basin_layer == 24);
    CHECK(*p32[2].basin_layer == 21);
    CHECK_FALSE(p32[3].basin_layer.has_value());
    CHECK(p32[3].gain_scale == 0.0);
    CHECK(*default_level_profiles(16)[1].basin_layer == 12);
    CHECK_FALSE(default_level_profiles(0)[0].basin_layer.has_value());
}

TEST_CASE("synthetic store layout") {
    oracle::TempDir tmp("synth_store");
    SynthConfig cfg = small_config();
    write_synthetic_store(cfg, default_level_profiles(3), 3, tmp.path());
    const Manifest m = read_manifest(tmp.path());
    CHECK(m.model_id == "synthetic");
    CHECK(m.d_model == cfg.d_model);
    CHECK(m.n_samples() == cfg.n_samples);
    CHECK(m.levels.size() == 5);
    CHECK(m.layers.size() == 4);
    CHECK(m.has_layer(Layer::final_norm()));
    CHECK(m.extras.at("capture_point") == "post_block");
    CHECK(m.extras.at("generator").at("seed") == 0);
    const ActivationSet l1 = read_set(tmp.path(), Level::L1, Layer::final_norm());
    CHECK(l1.data == ActivationSet::from_matrix(Level::L1, Layer::final_norm(), gen_base(cfg).x).data);
    CHECK(read_set(tmp.path(), Level::L4, Layer(2)).rows == cfg.n_samples);
}
