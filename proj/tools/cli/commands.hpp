#pragma once

#include <ostream>

#include "run_config.hpp"

namespace mgauge::cli {

// Each command writes its artifacts under cfg.output_dir (synth-manifold
// writes the store itself) and logs one line per file to `log`.
void cmd_synth_dataset(const RunConfig& cfg, std::ostream& log);
void cmd_synth_manifold(const RunConfig& cfg, std::ostream& log);
void cmd_analyze(const RunConfig& cfg, std::ostream& log);
void cmd_ablate(const RunConfig& cfg, std::ostream& log);
void cmd_layerwise(const RunConfig& cfg, std::ostream& log);
void cmd_report(const RunConfig& cfg, std::ostream& log);

void run_command(const RunConfig& cfg, std::ostream& log);

// 0 ok, 2 config/validation, 3 missing data, 4 numerical degeneracy.
int exit_code(ErrorKind kind);

}  // namespace mgauge::cli
