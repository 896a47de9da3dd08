#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "osc2cr/commonroad.hpp"
#include "osc2cr/opendrive.hpp"
#include "osc2cr/openscenario.hpp"
#include "osc2cr/simulator.hpp"

namespace osc2cr {

namespace fs = std::filesystem;

struct ConvertOptions {
  sim::SimConfig sim;
  double dt_cr = 0.1;
  std::optional<std::string> ego;
  osc::ParameterOverrides parameters;
  cr::GoalRecipe goal;
  double sampling_step = 1.0;
  bool render = false;
  bool trace_csv = false;
  std::string author;  // empty: taken from the FileHeader
  std::string affiliation;
};

/// Everything produced for one input, kept for inspection by tests.
struct Conversion {
  osc::ScenarioDocument document;
  odr::OpenDriveMap map;
  LaneletNetwork network;
  sim::SimulationTrace trace;
  cr::Scenario scenario;
  Diagnostics warnings;
};

std::string read_text_file(const fs::path& path);

/// Parses, validates, simulates and builds. Throws Error tagged with the file
/// that failed; a missing input or road network raises IoError.
Conversion convert_scenario(const fs::path& xosc, const ConvertOptions& options = {});

struct FileReport {
  std::string path;
  bool success = false;
  double conversion_time_s = 0.0;
  double scenario_duration_s = 0.0;
  std::string termination_reason;
  std::size_t warning_count = 0;
  std::string error;
  int exit_code = 0;  // 0 ok, 1 conversion error, 2 missing input
  std::vector<std::string> outputs;
};

/// Converts one file and writes `<stem>.xml` (plus .svg / .trace.csv when
/// requested) next to `output_xml`. Never throws.
FileReport convert_file(const fs::path& input, const fs::path& output_xml, const ConvertOptions& options);

struct RunStats {
  std::vector<FileReport> files;  // sorted by path
  std::size_t total = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  double avg_conversion_time_s = 0.0;
  double avg_scenario_duration_s = 0.0;
};

/// Sorts the entries and recomputes the aggregate (averages over successes).
RunStats summarize(std::vector<FileReport> files);

/// Inputs from a directory (*.xosc, catalogs excluded) or a manifest file with
/// one path per line ('#' comments; relative to the manifest). Sorted.
/// Throws IoError if the path is missing and InvalidValue if nothing is found.
std::vector<fs::path> collect_inputs(const fs::path& dir_or_manifest);

/// Converts every input independently on `jobs` worker threads. Outputs go to
/// `output_dir` (or beside each input when empty).
RunStats batch(const std::vector<fs::path>& inputs, const fs::path& output_dir, const ConvertOptions& options,
               unsigned jobs);

nlohmann::json report_to_json(const RunStats& stats);

}  // namespace osc2cr
