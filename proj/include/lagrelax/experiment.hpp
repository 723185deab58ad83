#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace lagrelax {

struct ExperimentResult {
  std::string name;
  std::string outdir;
  /// Files written, relative to outdir.
  std::vector<std::string> files;
  nlohmann::json report;
};

/// Runs the experiment named by the YAML config's `experiment` field
/// (discrete-grid, gaussian-membrane, gaussian-plate, multiscale-1d) and
/// writes report.json, trace.csv and the plot-data CSVs into outdir (created
/// if needed). An empty outdir falls back to the config's `outdir` field.
/// Throws ParseError naming any missing or malformed field.
ExperimentResult run_experiment(const std::string& config_path, const std::string& outdir = "");

}  // namespace lagrelax
