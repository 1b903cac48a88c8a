#include "commands.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "manifold_gauge/ablation.hpp"
#include "manifold_gauge/emit.hpp"
#include "manifold_gauge/geometry.hpp"
#include "manifold_gauge/layers.hpp"

namespace mgauge::cli {

namespace fs = std::filesystem;

namespace {

void emit_file(const RunConfig& cfg, std::ostream& log, const std::string& name,
               std::string_view contents) {
    fs::create_directories(cfg.output_dir);
    const fs::path path = cfg.output_dir / name;
    write_file_atomic(path, contents);
    log << "wrote " << path.string() << "\n";
}

Metric metric_for(const RunConfig& cfg, std::size_t d_model) {
    if (cfg.metric == MetricKind::Standard) return Metric::standard();
    const fs::path path = cfg.gain_file.empty() ? cfg.store_dir / "norm_gain.f32" : cfg.gain_file;
    const std::vector<float> g = decode_f32(read_file(path));
    if (g.size() != d_model) {
        throw Error(ErrorKind::DataIntegrity,
                    fmt::format("{}: {} gain weights for d_model {}", path.string(), g.size(),
                                d_model));
    }
    return Metric::weighted(Vector(g.begin(), g.end()));
}

std::vector<Level> levels_for(const RunConfig& cfg, const Manifest& m) {
    std::vector<Level> out;
    if (!cfg.levels.empty()) {
        out = cfg.levels;
    } else {
        for (Level l : m.levels) {
            if (l != Level::L1) out.push_back(l);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) {
        throw Error(ErrorKind::NotFound,
                    fmt::format("{}: store has no task levels to analyze", cfg.store_dir.string()));
    }
    for (Level l : out) {
        if (!m.has_level(l)) {
            throw Error(ErrorKind::NotFound, fmt::format("{}: store has no level {}",
                                                         cfg.store_dir.string(), to_string(l)));
        }
    }
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct Analysis {
    Level level;
    GeometryReport report;
};

std::vector<Analysis> analyze_levels(const RunConfig& cfg, const Manifest& m) {
    std::vector<Analysis> out;
    for (Level level : levels_for(cfg, m)) {
        const AnalysisInput in = load_analysis_input(cfg.store_dir, level, cfg.layer);
        out.push_back({level, analyze_geometry(in.x_base, in.x_task, in.labels,
                                               cfg.attribute_for(level),
                                               metric_for(cfg, m.d_model))});
    }
    return out;
}

std::string level_notes(const std::vector<Analysis>& results, double delta) {
    std::string s;
    for (const auto& a : results) {
        const auto& u = a.report.u_stats;
        if (!u.same.mean || !u.cross.mean) {
            s += fmt::format("- {}: U_sim means undefined ({})\n", to_string(a.level),
                             u.same.undefined.empty() ? u.cross.undefined : u.same.undefined);
            continue;
        }
        const double gap = std::abs(*u.cross.mean - *u.same.mean);
        const char* verdict = gap < delta              ? "entangled"
                              : *u.cross.mean < 0.0 ? "divergent (cross-class U_sim < 0)"
                                                    : "separated without divergence";
        s += fmt::format("- {}: |cross - same| = {}, {}; excluded collinear rows: {}\n",
                         to_string(a.level), format_number(gap, 4), verdict, a.report.excluded);
    }
    return s;
}

std::vector<LayerTrajectory> sweep_levels(const RunConfig& cfg, const Manifest& m) {
    LayerOptions opts;
    opts.epsilon_basin = cfg.epsilon_basin;
    opts.smoothing_window = cfg.smoothing;
    opts.metric = metric_for(cfg, m.d_model);
    std::vector<LayerTrajectory> out;
    for (Level level : levels_for(cfg, m)) {
        out.push_back(sweep(cfg.store_dir, level, cfg.attribute_for(level), opts));
    }
    return out;
}

std::string range_text(const LayerTrajectory& t, const IndexRange& r) {
    if (r.size() == 0) return "empty";
    return fmt::format("{}..{}", t.layers[r.begin].to_string(), t.layers[r.end - 1].to_string());
}

std::string layerwise_table(const std::vector<LayerTrajectory>& trajs, const RunConfig& cfg) {
    std::string s = fmt::format("epsilon_basin = {}, smoothing window = {}\n\n",
                                format_number(cfg.epsilon_basin, 4), cfg.smoothing);
    s += "| Level | Type | Basin | Min cross U_sim | Extraction | Computation | Rebound "
         "| Early differentiation | Scissor gap |\n";
    s += "|---|---|---:|---:|---|---|---|---|---:|\n";
    for (const auto& t : trajs) {
        double min_cross = std::nan("");
        for (double v : t.cross_u) {
            if (!std::isnan(v) && (std::isnan(min_cross) || v < min_cross)) min_cross = v;
        }
        const std::string basin = t.basin_layer ? t.basin_layer->to_string() : "none";
        std::string ext = "n/a", comp = "n/a", reb = "n/a";
        if (t.phases) {
            ext = range_text(t, t.phases->extraction);
            comp = range_text(t, t.phases->computation);
            reb = range_text(t, t.phases->rebound);
        }
        s += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", to_string(t.level),
                         to_string(t.attribute), basin, format_number(min_cross, 4), ext, comp, reb,
                         early_differentiation(t) ? "yes" : "no",
                         format_number(scissor_gap(t), 4));
    }
    s += "\n";
    for (const auto& t : trajs) {
        std::size_t excluded = 0;
        for (std::size_t e : t.excluded) excluded += e;
        s += fmt::format("- {}: {} layers, {} collinear rows excluded in total\n",
                         to_string(t.level), t.layers.size(), excluded);
    }
    return s;
}

}  // namespace

void cmd_synth_dataset(const RunConfig& cfg, std::ostream& log) {
    const auto corpus = generate_corpus(cfg.range_lo, cfg.range_hi, cfg.modalities);
    TemplateCatalog catalog = TemplateCatalog::bundled();
    if (!cfg.templates_file.empty()) {
        try {
            catalog = TemplateCatalog::from_json(nlohmann::json::parse(read_file(cfg.templates_file)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Config,
                        fmt::format("{}: {}", cfg.templates_file.string(), e.what()));
        }
    }
    std::vector<Level> levels = cfg.levels;
    if (levels.empty()) levels = {Level::L1, Level::L2, Level::L3, Level::L4, Level::L5};
    std::string out;
    std::size_t count = 0;
    for (Level l : levels) {
        const auto prompts = catalog.render(corpus, l, cfg.template_set);
        out += to_jsonl(prompts);
        count += prompts.size();
    }
    emit_file(cfg, log, "prompts.jsonl", out);
    log << fmt::format("{} prompts ({} concepts x {} levels)\n", count, corpus.size(),
                       levels.size());
}

void cmd_synth_manifold(const RunConfig& cfg, std::ostream& log) {
    SynthConfig synth = cfg.synth;
    synth.seed = cfg.seed;
    auto profiles = default_level_profiles(cfg.n_layers);
    if (!cfg.levels.empty()) {
        std::erase_if(profiles, [&](const LevelProfile& p) {
            return std::find(cfg.levels.begin(), cfg.levels.end(), p.level) == cfg.levels.end();
        });
    }
    if (cfg.attribute) {
        for (auto& p : profiles) p.attribute = *cfg.attribute;
    }
    if (fs::exists(cfg.store_dir / "manifest.json")) {
        // A rerun replaces the store rather than merging into it.
        fs::remove_all(cfg.store_dir / "blobs");
        fs::remove(cfg.store_dir / "manifest.json");
    }
    write_synthetic_store(synth, profiles, cfg.n_layers, cfg.store_dir);
    log << fmt::format("wrote store {} ({} samples, d_model {}, {} levels + L1, {} hidden layers)\n",
                       cfg.store_dir.string(), synth.n_samples, synth.d_model, profiles.size(),
                       cfg.n_layers);
}

void cmd_analyze(const RunConfig& cfg, std::ostream& log) {
    const Manifest m = read_manifest(cfg.store_dir);
    const auto results = analyze_levels(cfg, m);
    std::vector<SummaryRow> rows;
    for (const auto& a : results) rows.push_back(summarize(a.level, a.report));
    if (cfg.emits(EmitKind::Markdown)) {
        std::string md = fmt::format("# Geometric metrics at layer {}\n\n", cfg.layer.to_string());
        md += markdown_table(rows) + "\n" + level_notes(results, cfg.delta);
        emit_file(cfg, log, "analysis.md", md);
    }
    for (const auto& a : results) {
        const std::string stem = "scatter_" + lower(to_string(a.level));
        if (cfg.emits(EmitKind::Csv)) emit_file(cfg, log, stem + ".csv", scatter_csv(a.report));
        if (cfg.emits(EmitKind::Svg)) {
            emit_file(cfg, log, stem + ".svg",
                      svg_scatter(a.report, fmt::format("{} / {}", to_string(a.level),
                                                        to_string(a.report.attribute))));
        }
    }
}

void cmd_ablate(const RunConfig& cfg, std::ostream& log) {
    const Manifest m = read_manifest(cfg.store_dir);
    const Level level = levels_for(cfg, m).front();
    const Attribute attribute = cfg.attribute_for(level);
    const AnalysisInput in = load_analysis_input(cfg.store_dir, level, cfg.layer);
    AblationOptions opts;
    opts.delta = cfg.delta;
    opts.drift_bound = cfg.drift_bound;
    opts.seed = cfg.seed;
    opts.metric = metric_for(cfg, m.d_model);
    const Ablation ab = run_ablation(in.x_base, in.x_task, in.labels, attribute, cfg.mode, opts);

    export_patch(ab.vectors, level, cfg.layer, cfg.mode, attribute, cfg.output_dir);
    log << "wrote " << patch_path(cfg.output_dir, level, cfg.layer, cfg.mode).string() << "\n";
    const std::string stem =
        fmt::format("ablation_{}_{}", lower(to_string(level)), to_string(cfg.mode));
    if (cfg.emits(EmitKind::Markdown)) {
        emit_file(cfg, log, stem + ".md", ablation_markdown(level, ab.result, cfg.delta));
    }
    if (cfg.emits(EmitKind::Csv)) {
        emit_file(cfg, log, stem + "_pre.csv", scatter_csv(ab.result.pre_report));
        emit_file(cfg, log, stem + "_post.csv", scatter_csv(ab.result.post_report));
    }
    if (cfg.emits(EmitKind::Svg)) {
        emit_file(cfg, log, stem + "_post.svg",
                  svg_scatter(ab.result.post_report,
                              fmt::format("{} / {} after {} ablation", to_string(level),
                                          to_string(attribute), to_string(cfg.mode))));
    }
}

void cmd_layerwise(const RunConfig& cfg, std::ostream& log) {
    const Manifest m = read_manifest(cfg.store_dir);
    const auto trajs = sweep_levels(cfg, m);
    if (cfg.emits(EmitKind::Markdown)) {
        emit_file(cfg, log, "layerwise.md", "# Layer dynamics\n\n" + layerwise_table(trajs, cfg));
    }
    if (cfg.emits(EmitKind::Csv)) {
        emit_file(cfg, log, "trajectory.csv", trajectory_csv(trajs));
        emit_file(cfg, log, "portrait.csv", portrait_csv(trajs));
    }
    if (cfg.emits(EmitKind::Svg)) emit_file(cfg, log, "portrait.svg", svg_portrait(trajs));
}

void cmd_report(const RunConfig& cfg, std::ostream& log) {
    if (!fs::exists(cfg.store_dir / "manifest.json")) {
        throw Error(ErrorKind::NotFound,
                    fmt::format("{}: no manifest.json, store is empty", cfg.store_dir.string()));
    }
    const Manifest m = read_manifest(cfg.store_dir);
    const auto results = analyze_levels(cfg, m);
    std::vector<SummaryRow> rows;
    for (const auto& a : results) rows.push_back(summarize(a.level, a.report));

    std::string md = fmt::format("# Manifold report: {}\n\n", m.model_id);
    md += fmt::format("{} samples ({} pass the knowledge filter), d_model {}\n\n",
                      m.n_samples(), m.knowledge_rows().size(), m.d_model);
    md += fmt::format("## Layer {}\n\n", cfg.layer.to_string());
    md += markdown_table(rows) + "\n" + level_notes(results, cfg.delta);

    std::size_t hidden = 0;
    for (Layer l : m.layers) hidden += l.is_final() ? 0 : 1;
    if (hidden >= 2) {
        md += "\n## Depth\n\n";
        md += layerwise_table(sweep_levels(cfg, m), cfg);
    }
    emit_file(cfg, log, "report.md", md);
}

void run_command(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    if (cfg.command == "synth-dataset") return cmd_synth_dataset(cfg, log);
    if (cfg.command == "synth-manifold") return cmd_synth_manifold(cfg, log);
    if (cfg.command == "analyze") return cmd_analyze(cfg, log);
    if (cfg.command == "ablate") return cmd_ablate(cfg, log);
    if (cfg.command == "layerwise") return cmd_layerwise(cfg, log);
    return cmd_report(cfg, log);
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument:
        case ErrorKind::Config:
            return 2;
        case ErrorKind::Format:
        case ErrorKind::Io:
        case ErrorKind::NotFound:
        case ErrorKind::DataIntegrity:
        case ErrorKind::Version:
        case ErrorKind::MissingClass:
            return 3;
        case ErrorKind::DegenerateVector:
        case ErrorKind::Collinear:
        case ErrorKind::UndefinedStatistic:
            return 4;
    }
    return 1;
}

}  // namespace mgauge::cli
