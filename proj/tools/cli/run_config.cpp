#include "run_config.hpp"

#include <cmath>

#include <fmt/format.h>

namespace mgauge::cli {

MetricKind parse_metric(std::string_view s) {
    if (s == "standard") return MetricKind::Standard;
    if (s == "g_metric") return MetricKind::GMetric;
    throw Error(ErrorKind::Config, fmt::format("unknown metric '{}' (standard, g_metric)", s));
}

EmitKind parse_emit(std::string_view s) {
    if (s == "markdown") return EmitKind::Markdown;
    if (s == "csv") return EmitKind::Csv;
    if (s == "svg") return EmitKind::Svg;
    throw Error(ErrorKind::Config, fmt::format("unknown emit kind '{}' (markdown, csv, svg)", s));
}

void RunConfig::validate() const {
    const auto fail = [](const std::string& msg) { throw Error(ErrorKind::Config, msg); };
    static const std::set<std::string> commands = {"synth-dataset", "synth-manifold", "analyze",
                                                   "ablate",        "layerwise",      "report"};
    if (!commands.contains(command)) fail(fmt::format("unknown command '{}'", command));
    if (command != "synth-dataset" && store_dir.empty()) fail("--store is required");
    if (output_dir.empty()) fail("--out must not be empty");
    if (!(delta > 0.0) || !std::isfinite(delta)) fail("--delta must be positive");
    if (!(epsilon_basin >= 0.0) || !std::isfinite(epsilon_basin)) {
        fail("--epsilon-basin must be >= 0");
    }
    if (!(drift_bound > 0.0)) fail("--drift-bound must be positive");
    if (smoothing == 0 || smoothing % 2 == 0) fail("--smoothing must be an odd window >= 1");
    if (command == "synth-dataset") {
        if (range_lo < 1 || range_lo > range_hi) {
            fail(fmt::format("--range needs 1 <= lo <= hi (got {} {})", range_lo, range_hi));
        }
        if (modalities.empty()) fail("--modalities must name at least one modality");
    }
    if (command == "synth-manifold") synth.validate();
    if (command == "ablate" && levels.size() > 1) fail("ablate takes a single --level");
    for (Level l : levels) {
        if (l == Level::L1 && command != "synth-dataset") {
            fail("L1 is the baseline and cannot be analyzed against itself");
        }
    }
}

Attribute RunConfig::attribute_for(Level level) const {
    if (attribute) return *attribute;
    if (const auto a = natural_attribute(level)) return *a;
    throw Error(ErrorKind::Config, fmt::format("level {} needs an explicit --attribute",
                                               to_string(level)));
}

}  // namespace mgauge::cli
