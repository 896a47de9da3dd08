#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "osc2cr/commonroad.hpp"

namespace osc2cr::cr {

inline constexpr std::string_view kCommonRoadVersion = "2023.1";

/// Serializes a scenario. Floats are written with 6 decimals; element order
/// is fixed (lanelets, static obstacles, dynamic obstacles, planning problem,
/// each by id). Throws SerializationOverflow on non-finite values.
std::string to_xml(const Scenario& scenario);

/// Writes to_xml() to `path`; returns the byte count. Throws IoError.
std::size_t write_xml(const Scenario& scenario, const std::filesystem::path& path);

/// Reads the subset emitted by to_xml().
Scenario read_commonroad_xml(std::string_view text);

/// Compares all serialized content with an absolute tolerance on floats.
/// On mismatch, `why` (if given) receives a short description.
bool structurally_equal(const Scenario& a, const Scenario& b, double tolerance = 1e-6, std::string* why = nullptr);

struct SvgOptions {
  double pixels_per_meter = 4.0;
  double margin = 20.0;
  int snapshots = 6;  // fading obstacle footprints per trajectory
};

std::string render_svg(const Scenario& scenario, const SvgOptions& options = {});

}  // namespace osc2cr::cr
