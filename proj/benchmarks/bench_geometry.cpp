#include <benchmark/benchmark.h>

#include "manifold_gauge/geometry.hpp"
#include "manifold_gauge/layers.hpp"
#include "manifold_gauge/synthetic.hpp"

using namespace mgauge;

namespace {

SynthConfig config(std::int64_t n, std::int64_t d) {
    SynthConfig cfg;
    cfg.n_samples = static_cast<std::size_t>(n);
    cfg.d_model = static_cast<std::size_t>(d);
    return cfg;
}

void BM_GramSchmidt(benchmark::State& state) {
    const std::size_t d = static_cast<std::size_t>(state.range(0));
    Vector x(d), v(d);
    for (std::size_t k = 0; k < d; ++k) {
        x[k] = 1.0 + 0.01 * static_cast<double>(k % 7);
        v[k] = static_cast<double>(k % 5) - 2.0;
    }
    for (auto _ : state) benchmark::DoNotOptimize(rotation_params(x, v));
}
BENCHMARK(BM_GramSchmidt)->Arg(512)->Arg(3584);

void BM_MetricMatrices(benchmark::State& state) {
    const SynthConfig cfg = config(state.range(0), state.range(1));
    const BaseDraw base = gen_base(cfg);
    const Matrix xh = unit_rows(base.x);
    for (auto _ : state) benchmark::DoNotOptimize(metric_matrices(xh, xh));
}
BENCHMARK(BM_MetricMatrices)->Args({200, 512})->Args({200, 3584})->Unit(benchmark::kMillisecond);

void BM_AnalyzeGeometry(benchmark::State& state) {
    const SynthConfig cfg = config(state.range(0), state.range(1));
    const BaseDraw base = gen_base(cfg);
    const Injection inj = inject(cfg, base.x, base.labels);
    for (auto _ : state) {
        benchmark::DoNotOptimize(analyze_geometry(base.x, inj.x_task, base.labels, cfg.attribute));
    }
}
BENCHMARK(BM_AnalyzeGeometry)->Args({200, 512})->Args({200, 3584})->Unit(benchmark::kMillisecond);

void BM_LayerSweep(benchmark::State& state) {
    const SynthConfig cfg = config(100, 128);
    const auto pairs = layered_trajectory(cfg, 32, 24);
    std::vector<Labels> labels;
    for (int v = 1; v <= 100; ++v) labels.push_back(labels_for(v));
    for (auto _ : state) {
        benchmark::DoNotOptimize(sweep_pairs(pairs, labels, Level::L3, Attribute::IsEven));
    }
}
BENCHMARK(BM_LayerSweep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
