// osc2cr: convert OpenSCENARIO scenarios into CommonRoad XML.
//
//   osc2cr convert scenario.xosc [-o out.xml] [--render] [--trace-csv] ...
//   osc2cr batch DIR|MANIFEST [--output-dir DIR] [--report report.json] [--jobs N]
//
// Exit codes: 0 ok, 1 conversion failure, 2 missing input, 3 partial batch
// failure, 64 usage error. OSC2CR_CONFIG may name a JSON file with defaults
// for dt_sim, dt_cr, t_max, ego, render, trace_csv, jobs, sampling_step.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "osc2cr/pipeline.hpp"

namespace {

constexpr int kExitPartial = 3;
constexpr int kExitUsage = 64;

struct Settings {
  osc2cr::ConvertOptions convert;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

void load_config(Settings& s) {
  const char* path = std::getenv("OSC2CR_CONFIG");
  if (path == nullptr || *path == '\0') return;
  const nlohmann::json j = nlohmann::json::parse(osc2cr::read_text_file(path));
  auto& c = s.convert;
  c.sim.dt_sim = j.value("dt_sim", c.sim.dt_sim);
  c.sim.t_max = j.value("t_max", c.sim.t_max);
  c.dt_cr = j.value("dt_cr", c.dt_cr);
  c.sampling_step = j.value("sampling_step", c.sampling_step);
  c.render = j.value("render", c.render);
  c.trace_csv = j.value("trace_csv", c.trace_csv);
  if (j.contains("ego")) c.ego = j.at("ego").get<std::string>();
  s.jobs = j.value("jobs", s.jobs);
}

void add_common(CLI::App& app, Settings& s, std::optional<std::string>& ego, std::vector<std::string>& params) {
  auto& c = s.convert;
  app.add_option("--dt-sim", c.sim.dt_sim, "simulation step in seconds")->capture_default_str();
  app.add_option("--dt-cr", c.dt_cr, "CommonRoad time step in seconds")->capture_default_str();
  app.add_option("--t-max", c.sim.t_max, "simulation time limit in seconds")->capture_default_str();
  app.add_option("--ego", ego, "entity used as the ego vehicle");
  app.add_option("--param", params, "parameter override NAME=VALUE (repeatable)");
  app.add_option("--sampling-step", c.sampling_step, "lane boundary sampling step in meters")->capture_default_str();
  app.add_flag("--render", c.render, "also write an SVG overview");
  app.add_flag("--trace-csv", c.trace_csv, "also write the raw simulation trace as CSV");
}

bool apply_params(const std::vector<std::string>& params, osc2cr::ConvertOptions& c) {
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "osc2cr: --param expects NAME=VALUE, got '" << p << "'\n";
      return false;
    }
    c.parameters[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return true;
}

void print_report(const osc2cr::FileReport& r) {
  if (r.success) {
    std::cout << r.path << ": ok (" << r.termination_reason << ", " << r.scenario_duration_s << " s simulated, "
              << r.warning_count << " warnings)\n";
  } else {
    std::cerr << r.path << ": FAILED: " << r.error << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  try {
    load_config(s);
  } catch (const std::exception& e) {
    std::cerr << "osc2cr: bad OSC2CR_CONFIG: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Convert OpenSCENARIO scenarios to CommonRoad"};
  app.require_subcommand(1);
  std::optional<std::string> ego;
  std::vector<std::string> params;

  auto* convert = app.add_subcommand("convert", "convert one .xosc file");
  std::string input;
  std::string output;
  convert->add_option("input", input, "OpenSCENARIO file")->required();
  convert->add_option("-o,--output", output, "CommonRoad XML path (default: <stem>.xml beside the input)");
  add_common(*convert, s, ego, params);

  auto* batch = app.add_subcommand("batch", "convert a directory or manifest of .xosc files");
  std::string source;
  std::string output_dir;
  std::string report;
  batch->add_option("source", source, "directory or manifest file")->required();
  batch->add_option("-o,--output-dir", output_dir, "directory for outputs (default: beside each input)");
  batch->add_option("--report", report, "write the JSON statistics report here");
  batch->add_option("--jobs", s.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  add_common(*batch, s, ego, params);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (ego) s.convert.ego = ego;
  if (!apply_params(params, s.convert)) return kExitUsage;
  try {
    (void)s.convert.sim.max_frame();
  } catch (const osc2cr::Error& e) {
    std::cerr << "osc2cr: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!(s.convert.dt_cr > 0.0)) {
    std::cerr << "osc2cr: --dt-cr must be positive\n";
    return kExitUsage;
  }

  if (*convert) {
    const osc2cr::fs::path in{input};
    osc2cr::fs::path out = output.empty() ? in.parent_path() / in.stem() : osc2cr::fs::path{output};
    if (output.empty()) out += ".xml";
    const osc2cr::FileReport r = osc2cr::convert_file(in, out, s.convert);
    print_report(r);
    return r.exit_code;
  }

  std::vector<osc2cr::fs::path> inputs;
  try {
    inputs = osc2cr::collect_inputs(source);
  } catch (const osc2cr::Error& e) {
    std::cerr << "osc2cr: " << e.what() << "\n";
    return e.code() == osc2cr::ErrorCode::IoError ? 2 : kExitUsage;
  }
  const osc2cr::RunStats stats = osc2cr::batch(inputs, output_dir, s.convert, s.jobs);
  for (const auto& r : stats.files) print_report(r);
  std::cout << stats.successes << "/" << stats.total << " converted (success rate " << stats.success_rate << ")\n";
  if (!report.empty()) {
    std::ofstream out(report);
    out << osc2cr::report_to_json(stats).dump(2) << "\n";
    if (!out) {
      std::cerr << "osc2cr: cannot write report '" << report << "'\n";
      return 2;
    }
  }
  if (stats.successes == stats.total) return 0;
  return stats.successes == 0 ? 1 : kExitPartial;
}
