#include "osc2cr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "osc2cr/commonroad_io.hpp"

namespace osc2cr {

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

void append(Diagnostics& to, const Diagnostics& from) { to.insert(to.end(), from.begin(), from.end()); }

fs::path scenario_dir(const fs::path& xosc) { return xosc.parent_path().empty() ? fs::path(".") : xosc.parent_path(); }

}  // namespace

Conversion convert_scenario(const fs::path& xosc, const ConvertOptions& options) {
  Conversion c;
  const std::string xosc_name = xosc.string();
  try {
    osc::ParseOptions po;
    po.overrides = options.parameters;
    po.base_dir = scenario_dir(xosc);
    osc::ParseResult parsed = osc::parse_openscenario(read_text_file(xosc), po);
    c.document = std::move(parsed.document);
    append(c.warnings, parsed.warnings);
    for (const auto& d : osc::validate_storyboard(c.document)) {
      if (d.severity == Severity::Error) throw Error(ErrorCode::InvalidValue, d.message, d.line);
      c.warnings.push_back(d);
    }
  } catch (const Error& e) {
    throw e.file().empty() ? e.with_file(xosc_name) : e;
  }

  const fs::path xodr = scenario_dir(xosc) / c.document.road_network_ref;
  if (!fs::exists(xodr)) {
    throw Error(ErrorCode::IoError, "road network '" + xodr.string() + "' not found", std::nullopt, xosc_name);
  }
  try {
    c.map = odr::parse_opendrive(read_text_file(xodr));
    append(c.warnings, c.map.warnings);
    c.network = odr::convert_opendrive_to_lanelets(c.map, {options.sampling_step, {"driving"}});
    append(c.warnings, c.network.warnings);
  } catch (const Error& e) {
    throw e.file().empty() ? e.with_file(xodr.string()) : e;
  }

  try {
    c.trace = sim::run(c.document, c.map, c.network, options.sim);
    append(c.warnings, c.trace.diagnostics);
    cr::BuilderConfig bc;
    bc.dt_cr = options.dt_cr;
    bc.ego = options.ego;
    bc.goal = options.goal;
    bc.stem = xosc.stem().string();
    bc.author = !options.author.empty() ? options.author
                : !c.document.header.author.empty() ? c.document.header.author
                                                     : "osc2cr";
    bc.affiliation = options.affiliation;
    bc.date = c.document.header.date.substr(0, 10);
    c.scenario = cr::build_scenario(c.trace, c.network, bc);
  } catch (const Error& e) {
    throw e.file().empty() ? e.with_file(xosc_name) : e;
  }
  return c;
}

FileReport convert_file(const fs::path& input, const fs::path& output_xml, const ConvertOptions& options) {
  FileReport r;
  r.path = input.generic_string();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (!fs::exists(input)) throw Error(ErrorCode::IoError, "input '" + input.string() + "' not found");
    Conversion c = convert_scenario(input, options);
    if (!output_xml.parent_path().empty()) fs::create_directories(output_xml.parent_path());
    cr::write_xml(c.scenario, output_xml);
    r.outputs.push_back(output_xml.generic_string());
    if (options.render) {
      fs::path svg = output_xml;
      svg.replace_extension(".svg");
      std::ofstream out(svg, std::ios::binary);
      out << cr::render_svg(c.scenario);
      if (!out) throw Error(ErrorCode::IoError, "failed writing '" + svg.string() + "'");
      r.outputs.push_back(svg.generic_string());
    }
    if (options.trace_csv) {
      fs::path csv = output_xml;
      csv.replace_extension(".trace.csv");
      std::ofstream out(csv, std::ios::binary);
      out << sim::trace_csv(c.trace);
      if (!out) throw Error(ErrorCode::IoError, "failed writing '" + csv.string() + "'");
      r.outputs.push_back(csv.generic_string());
    }
    r.success = true;
    r.scenario_duration_s = c.trace.duration();
    r.termination_reason = std::string(sim::to_string(c.trace.reason));
    r.warning_count = count_severity(c.warnings, Severity::Warning);
  } catch (const Error& e) {
    r.error = e.what();
    r.exit_code = e.code() == ErrorCode::IoError ? 2 : 1;
  } catch (const std::exception& e) {
    r.error = e.what();
    r.exit_code = 1;
  }
  r.conversion_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RunStats summarize(std::vector<FileReport> files) {
  std::sort(files.begin(), files.end(), [](const FileReport& a, const FileReport& b) { return a.path < b.path; });
  RunStats s;
  s.total = files.size();
  double time_sum = 0.0;
  double duration_sum = 0.0;
  for (const auto& f : files) {
    if (!f.success) continue;
    ++s.successes;
    time_sum += f.conversion_time_s;
    duration_sum += f.scenario_duration_s;
  }
  s.success_rate = s.total == 0 ? 0.0 : static_cast<double>(s.successes) / static_cast<double>(s.total);
  if (s.successes > 0) {
    s.avg_conversion_time_s = time_sum / static_cast<double>(s.successes);
    s.avg_scenario_duration_s = duration_sum / static_cast<double>(s.successes);
  }
  s.files = std::move(files);
  return s;
}

namespace {

bool is_catalog(const fs::path& p) {
  const std::string text = read_text_file(p);
  return text.find("<Catalog") != std::string::npos && text.find("<Storyboard") == std::string::npos;
}

}  // namespace

std::vector<fs::path> collect_inputs(const fs::path& source) {
  if (!fs::exists(source)) throw Error(ErrorCode::IoError, "'" + source.string() + "' not found");
  std::vector<fs::path> out;
  if (fs::is_directory(source)) {
    for (const auto& entry : fs::directory_iterator(source)) {
      if (entry.is_regular_file() && entry.path().extension() == ".xosc" && !is_catalog(entry.path())) {
        out.push_back(entry.path());
      }
    }
  } else {
    std::istringstream lines(read_text_file(source));
    std::string line;
    while (std::getline(lines, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      const auto e = line.find_last_not_of(" \t\r");
      fs::path p = line.substr(b, e - b + 1);
      out.push_back(p.is_absolute() ? p : source.parent_path() / p);
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidValue, "no scenario files in '" + source.string() + "'");
  std::sort(out.begin(), out.end());
  return out;
}

RunStats batch(const std::vector<fs::path>& inputs, const fs::path& output_dir, const ConvertOptions& options,
               unsigned jobs) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(inputs.size())));
  std::vector<FileReport> reports;
  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      const fs::path& in = inputs[i];
      fs::path out = (output_dir.empty() ? in.parent_path() : output_dir) / in.stem();
      out += ".xml";
      FileReport r = convert_file(in, out, options);
      std::lock_guard lock(mutex);
      reports.push_back(std::move(r));
    }
  };
  std::vector<std::thread> pool;
  for (unsigned j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return summarize(std::move(reports));
}

nlohmann::json report_to_json(const RunStats& stats) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : stats.files) {
    nlohmann::json j = {{"path", f.path},
                        {"success", f.success},
                        {"conversion_time_s", f.conversion_time_s},
                        {"scenario_duration_s", f.scenario_duration_s},
                        {"termination_reason", f.success ? nlohmann::json(f.termination_reason) : nlohmann::json()},
                        {"warning_count", f.warning_count},
                        {"error", f.success ? nlohmann::json() : nlohmann::json(f.error)},
                        {"outputs", f.outputs}};
    files.push_back(std::move(j));
  }
  return {{"files", std::move(files)},
          {"aggregate",
           {{"total", stats.total},
            {"successes", stats.successes},
            {"success_rate", stats.success_rate},
            {"avg_conversion_time_s", stats.avg_conversion_time_s},
            {"avg_scenario_duration_s", stats.avg_scenario_duration_s}}}};
}

}  // namespace osc2cr
