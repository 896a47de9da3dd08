#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "osc2cr/error.hpp"
#include "osc2cr/geometry.hpp"
#include "osc2cr/lanelet.hpp"

namespace osc2cr::odr {

struct Line {
  bool operator==(const Line&) const = default;
};
struct Arc {
  double curvature = 0.0;
  bool operator==(const Arc&) const = default;
};
/// Clothoid with curvature varying linearly from start to end.
struct Spiral {
  double curv_start = 0.0;
  double curv_end = 0.0;
  bool operator==(const Spiral&) const = default;
};
/// Local cubic v(u) = a + b u + c u^2 + d u^3.
struct Poly3 {
  double a = 0, b = 0, c = 0, d = 0;
  bool operator==(const Poly3&) const = default;
};
struct ParamPoly3 {
  double au = 0, bu = 0, cu = 0, du = 0;
  double av = 0, bv = 0, cv = 0, dv = 0;
  bool normalized = true;  // pRange="normalized" (p in [0,1]) vs "arcLength"
  bool operator==(const ParamPoly3&) const = default;
};

using GeometryKind = std::variant<Line, Arc, Spiral, Poly3, ParamPoly3>;

struct GeometrySegment {
  double s_offset = 0.0;
  Vec2 origin;
  double heading = 0.0;
  double length = 0.0;
  GeometryKind kind;

  /// Pose at local arc length `ds` in [0, length].
  Pose eval(double ds) const;
};

/// Cubic record a + b ds + c ds^2 + d ds^3 starting at `s_offset`.
struct CubicRecord {
  double s_offset = 0.0;
  double a = 0, b = 0, c = 0, d = 0;

  double eval(double ds) const { return a + ds * (b + ds * (c + ds * d)); }
};

/// Evaluates a list of records sorted by s_offset at `s`; 0 when empty.
double eval_records(const std::vector<CubicRecord>& records, double s);

struct LaneLink {
  std::optional<int> predecessor;
  std::optional<int> successor;
};

struct Lane {
  int id = 0;
  std::string type;
  std::vector<CubicRecord> widths;  // s_offset relative to section start
  LaneLink link;

  double width(double ds) const { return eval_records(widths, ds); }
};

struct LaneSection {
  double s_start = 0.0;
  std::vector<Lane> lanes;  // sorted by id, descending (left to right)

  const Lane* find(int id) const;
};

enum class ElementType { Road, Junction };
enum class ContactPoint { Start, End };

struct RoadLink {
  ElementType element_type = ElementType::Road;
  std::string element_id;
  std::optional<ContactPoint> contact;
};

struct Road {
  std::string id;
  std::string name;
  double length = 0.0;
  std::string junction = "-1";
  std::optional<RoadLink> predecessor;
  std::optional<RoadLink> successor;
  std::vector<GeometrySegment> geometry;
  std::vector<CubicRecord> lane_offsets;
  std::vector<LaneSection> sections;

  double section_end(std::size_t index) const;
  /// Section containing `s`; boundaries belong to the later section.
  std::size_t section_index(double s) const;
};

struct OpenDriveMap {
  std::vector<Road> roads;
  Diagnostics warnings;

  const Road* find(std::string_view id) const;
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

OpenDriveMap parse_opendrive(std::string_view xml_text);

/// Reference-line pose at road coordinate `s`. Throws OutOfRange.
Pose eval_reference_line(const Road& road, double s);

/// Lateral borders (road t-coordinates) of one lane at `s`.
struct LaneBand {
  double inner = 0.0;
  double outer = 0.0;

  double center() const { return 0.5 * (inner + outer); }
  double width() const { return outer > inner ? outer - inner : inner - outer; }
};

LaneBand lane_band(const Road& road, std::size_t section, int lane_id, double s);

/// Driving direction for right-hand traffic: lanes right of the reference
/// line (negative ids) travel with increasing s.
inline int travel_direction(int lane_id) { return lane_id > 0 ? -1 : 1; }

/// Pose on the center of `lane_id`, laterally shifted by `t_offset` along the
/// road's left normal. Heading follows the lane's driving direction, except on
/// lane 0 where it is the reference-line heading.
Pose locate(const OpenDriveMap& map, std::string_view road_id, int lane_id, double s, double t_offset);
Pose locate(const Road& road, std::size_t section, int lane_id, double s, double t_offset);

/// Road coordinates of a world point that lies inside one of the lanes.
struct RoadCoord {
  std::string road_id;
  std::size_t section = 0;
  int lane_id = 0;
  double s = 0.0;
  double t = 0.0;  // absolute lateral coordinate
};

std::optional<RoadCoord> project(const OpenDriveMap& map, Vec2 point);

struct ConversionOptions {
  double sampling_step = 1.0;
  std::vector<std::string> lane_types = {"driving"};
};

LaneletNetwork convert_opendrive_to_lanelets(const OpenDriveMap& map, const ConversionOptions& options = {});

namespace detail {

/// (x, y) displacement of a clothoid starting at the origin with heading
/// `heading`, integrated over [0, ds]. Adaptive Gauss-Legendre quadrature with
/// an RK4 fallback; both target 1e-8.
Vec2 clothoid_displacement(double heading, double curv_start, double curv_rate, double ds);

/// Fixed-step RK4 integration of the same clothoid.
Vec2 clothoid_displacement_rk4(double heading, double curv_start, double curv_rate, double ds,
                               double step);

}  // namespace detail

}  // namespace osc2cr::odr
