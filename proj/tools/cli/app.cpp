#include "app.hpp"

#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "commands.hpp"

namespace mgauge::cli {

namespace {

// Flat JSON object whose keys are the long option names of the invoked
// command. Arrays supply repeated values.
class JsonConfig : public CLI::Config {
public:
    explicit JsonConfig(std::string section) : section_(std::move(section)) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(input);
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError("config", e.what());
        }
        if (!doc.is_object()) throw CLI::ConversionError("config", "top level must be an object");
        std::vector<CLI::ConfigItem> parsed;
        for (const auto& [key, value] : doc.items()) {
            CLI::ConfigItem item;
            if (!section_.empty()) item.parents = {section_};
            item.name = key;
            const auto text = [&key](const nlohmann::json& v) -> std::string {
                if (v.is_string()) return v.get<std::string>();
                if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
                if (v.is_number()) return v.dump();
                throw CLI::ConversionError(key, "values must be strings, numbers or booleans");
            };
            if (value.is_array()) {
                for (const auto& v : value) item.inputs.push_back(text(v));
            } else {
                item.inputs.push_back(text(value));
            }
            parsed.push_back(std::move(item));
        }
        return parsed;
    }

private:
    std::string section_;
};

const std::vector<std::string> kCommands = {"synth-dataset", "synth-manifold", "analyze",
                                            "ablate",        "layerwise",      "report"};

template <class T, class Parse>
void convert_all(const std::vector<std::string>& in, T& out, Parse parse) {
    if (in.empty()) return;
    out.clear();
    for (const auto& s : in) out.insert(out.end(), parse(s));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Geometry of task interference in residual-stream activations"};
    app.name("manifold-gauge");
    app.require_subcommand(1);
    app.allow_config_extras(CLI::config_extras_mode::error);

    std::string section;
    for (const auto& a : args) {
        if (std::find(kCommands.begin(), kCommands.end(), a) != kCommands.end()) {
            section = a;
            break;
        }
    }
    app.config_formatter(std::make_shared<JsonConfig>(section));
    app.set_config("--config", "", "JSON file of option values for the command");

    RunConfig cfg;
    std::string store, out_dir = ".", metric = "standard", mode = "direct", layer = "final",
                       attribute, gain_file, templates_file;
    std::vector<std::string> levels, emit, modalities;
    std::vector<int> range;

    const auto common = [&](CLI::App* sub, bool needs_store) {
        auto* s = sub->add_option("--store", store, "Activation store directory");
        if (needs_store) s->required();
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", cfg.seed, "Random seed");
        sub->add_option("--level", levels, "Level(s) L1..L5 (repeatable)");
        sub->add_option("--attribute", attribute, "is_large, is_even or is_prime");
        sub->add_option("--emit", emit, "Artifacts: markdown, csv, svg (repeatable)");
    };
    const auto analysis = [&](CLI::App* sub) {
        sub->add_option("--metric", metric, "standard or g_metric");
        sub->add_option("--gain", gain_file, "binary32 norm weights for g_metric");
        sub->add_option("--layer", layer, "Layer index or 'final'");
        sub->add_option("--delta", cfg.delta, "Entanglement threshold on the U_sim gap");
        sub->add_option("--epsilon-basin", cfg.epsilon_basin, "Basin depth threshold");
        sub->add_option("--smoothing", cfg.smoothing, "Odd moving-average window for basins");
    };

    auto* ds = app.add_subcommand("synth-dataset", "Write the prompt corpus as JSON lines");
    common(ds, false);
    ds->add_option("--range", range, "Lowest and highest integer")->expected(2);
    ds->add_option("--modalities", modalities, "arabic, english_word (repeatable)");
    ds->add_option("--template-set", cfg.template_set, "Template set id");
    ds->add_option("--templates", templates_file, "Template catalog JSON (default: bundled)");

    auto* sm = app.add_subcommand("synth-manifold", "Write a synthetic activation store");
    common(sm, true);
    sm->add_option("--n-samples", cfg.synth.n_samples, "Concepts per level");
    sm->add_option("--d-model", cfg.synth.d_model, "Residual width");
    sm->add_option("--layers", cfg.n_layers, "Hidden layers to write (0: final only)");
    sm->add_option("--omega-mean", cfg.synth.omega_mean, "Mean |delta| / |x|");
    sm->add_option("--phi-mean", cfg.synth.phi_mean, "Task-vector angle in radians");
    sm->add_option("--divergence-gain", cfg.synth.divergence_gain, "Class push magnitude");
    sm->add_option("--noise-sigma", cfg.synth.noise_sigma, "Isotropic noise level");
    sm->add_option("--preservation-gain", cfg.synth.preservation_gain, "Centroid contraction");
    sm->add_option("--class-feature", cfg.synth.class_feature, "Baseline parity feature");
    sm->add_option("--base-latent-scale", cfg.synth.base_latent_scale, "Arc radius");

    auto* an = app.add_subcommand("analyze", "Table of U_sim and C statistics per level");
    common(an, true);
    analysis(an);

    auto* ab = app.add_subcommand("ablate", "Class-vector ablation and healing report");
    common(ab, true);
    analysis(ab);
    ab->add_option("--mode", mode, "direct or ortho");
    ab->add_option("--drift-bound", cfg.drift_bound, "Max mean similarity drift");

    auto* lw = app.add_subcommand("layerwise", "Per-layer trajectories, basins and phases");
    common(lw, true);
    analysis(lw);

    auto* rp = app.add_subcommand("report", "Combined markdown report across levels");
    common(rp, true);
    analysis(rp);

    // --config belongs to the top-level app; accept it after the subcommand too.
    std::vector<std::string> ordered;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            ordered.insert(ordered.end(), {args[i], args[i + 1]});
            ++i;
        } else if (args[i].starts_with("--config=")) {
            ordered.push_back(args[i]);
        } else {
            rest.push_back(args[i]);
        }
    }
    ordered.insert(ordered.end(), rest.begin(), rest.end());
    std::vector<std::string> argv_rev(ordered.rbegin(), ordered.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        cfg.command = app.get_subcommands().front()->get_name();
        cfg.store_dir = store;
        cfg.output_dir = out_dir;
        cfg.gain_file = gain_file;
        cfg.templates_file = templates_file;
        cfg.metric = parse_metric(metric);
        cfg.mode = parse_patch_mode(mode);
        cfg.layer = Layer::parse(layer);
        if (!attribute.empty()) cfg.attribute = parse_attribute(attribute);
        for (const auto& l : levels) cfg.levels.push_back(parse_level(l));
        convert_all(emit, cfg.emit, parse_emit);
        convert_all(modalities, cfg.modalities, parse_modality);
        if (range.size() == 2) {
            cfg.range_lo = range[0];
            cfg.range_hi = range[1];
        }
        run_command(cfg, out);
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace mgauge::cli
