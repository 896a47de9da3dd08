#include "osc2cr/opendrive.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <limits>
#include <numbers>
#include <tuple>

#include "osc2cr/xml.hpp"

namespace osc2cr::odr {

namespace detail {

namespace {

constexpr std::array<double, 5> kGlNodes = {0.0, -0.5384693101056831, 0.5384693101056831,
                                            -0.9061798459386640, 0.9061798459386640};
constexpr std::array<double, 5> kGlWeights = {0.5688888888888889, 0.4786286704993665,
                                              0.4786286704993665, 0.2369268850561891,
                                              0.2369268850561891};
constexpr double kQuadTolerance = 1e-8;
constexpr int kMaxDepth = 40;

template <class F>
Vec2 gauss_legendre(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  Vec2 acc;
  for (std::size_t i = 0; i < kGlNodes.size(); ++i) acc = acc + f(mid + half * kGlNodes[i]) * kGlWeights[i];
  return acc * half;
}

template <class F>
Vec2 adaptive(const F& f, double a, double b, Vec2 whole, double tol, int depth, bool& ok) {
  const double m = 0.5 * (a + b);
  const Vec2 left = gauss_legendre(f, a, m);
  const Vec2 right = gauss_legendre(f, m, b);
  const Vec2 sum = left + right;
  if ((sum - whole).norm() <= tol) return sum;
  if (depth >= kMaxDepth) {
    ok = false;
    return sum;
  }
  return adaptive(f, a, m, left, 0.5 * tol, depth + 1, ok) +
         adaptive(f, m, b, right, 0.5 * tol, depth + 1, ok);
}

template <class F>
Vec2 integrate(const F& f, double a, double b, bool& ok) {
  ok = true;
  if (b <= a) return {};
  return adaptive(f, a, b, gauss_legendre(f, a, b), kQuadTolerance, 0, ok);
}

}  // namespace

Vec2 clothoid_displacement_rk4(double heading, double curv_start, double curv_rate, double ds,
                               double step) {
  if (ds <= 0.0) return {};
  const auto n = static_cast<long>(std::ceil(ds / step));
  const double h = ds / static_cast<double>(n);
  auto theta = [&](double u) { return heading + u * (curv_start + 0.5 * curv_rate * u); };
  Vec2 p;
  for (long i = 0; i < n; ++i) {
    const double u = static_cast<double>(i) * h;
    // The right-hand side depends on arc length only, so the RK4 stages
    // collapse onto three heading evaluations.
    const Vec2 k1 = unit(theta(u));
    const Vec2 k23 = unit(theta(u + 0.5 * h));
    const Vec2 k4 = unit(theta(u + h));
    p = p + (k1 + k23 * 4.0 + k4) * (h / 6.0);
  }
  return p;
}

Vec2 clothoid_displacement(double heading, double curv_start, double curv_rate, double ds) {
  auto f = [&](double u) { return unit(heading + u * (curv_start + 0.5 * curv_rate * u)); };
  bool ok = true;
  const Vec2 p = integrate(f, 0.0, ds, ok);
  if (ok) return p;
  return clothoid_displacement_rk4(heading, curv_start, curv_rate, ds, 1e-3);
}

}  // namespace detail

namespace {

double poly3_slope(const Poly3& p, double u) { return p.b + u * (2.0 * p.c + 3.0 * p.d * u); }

double poly3_arc_length(const Poly3& p, double u) {
  auto f = [&](double x) { return Vec2{std::sqrt(1.0 + std::pow(poly3_slope(p, x), 2)), 0.0}; };
  bool ok = true;
  return detail::integrate(f, 0.0, u, ok).x;
}

/// Local parameter u whose arc length from 0 equals `ds`.
double poly3_parameter(const Poly3& p, double ds) {
  double u = ds;
  for (int i = 0; i < 50; ++i) {
    const double g = poly3_arc_length(p, u) - ds;
    const double step = g / std::sqrt(1.0 + std::pow(poly3_slope(p, u), 2));
    u -= step;
    if (std::abs(step) < 1e-12) break;
  }
  return u;
}

Pose to_world(const GeometrySegment& g, Vec2 local, double local_heading) {
  const double c = std::cos(g.heading);
  const double s = std::sin(g.heading);
  return {{g.origin.x + c * local.x - s * local.y, g.origin.y + s * local.x + c * local.y},
          normalize_angle(g.heading + local_heading)};
}

}  // namespace

Pose GeometrySegment::eval(double ds) const {
  struct Visitor {
    const GeometrySegment& g;
    double ds;

    Pose operator()(const Line&) const { return {g.origin + unit(g.heading) * ds, normalize_angle(g.heading)}; }
    Pose operator()(const Arc& a) const {
      const double k = a.curvature;
      const double h1 = g.heading + k * ds;
      const Vec2 p{g.origin.x + (std::sin(h1) - std::sin(g.heading)) / k,
                   g.origin.y - (std::cos(h1) - std::cos(g.heading)) / k};
      return {p, normalize_angle(h1)};
    }
    Pose operator()(const Spiral& sp) const {
      const double rate = (sp.curv_end - sp.curv_start) / g.length;
      const Vec2 d = detail::clothoid_displacement(g.heading, sp.curv_start, rate, ds);
      return {g.origin + d, normalize_angle(g.heading + ds * (sp.curv_start + 0.5 * rate * ds))};
    }
    Pose operator()(const Poly3& p) const {
      const double u = poly3_parameter(p, ds);
      const double v = p.a + u * (p.b + u * (p.c + u * p.d));
      return to_world(g, {u, v}, std::atan(poly3_slope(p, u)));
    }
    Pose operator()(const ParamPoly3& p) const {
      const double t = p.normalized ? ds / g.length : ds;
      const double u = p.au + t * (p.bu + t * (p.cu + t * p.du));
      const double v = p.av + t * (p.bv + t * (p.cv + t * p.dv));
      const double du = p.bu + t * (2.0 * p.cu + 3.0 * p.du * t);
      const double dv = p.bv + t * (2.0 * p.cv + 3.0 * p.dv * t);
      return to_world(g, {u, v}, std::atan2(dv, du));
    }
  };
  return std::visit(Visitor{*this, ds}, kind);
}

double eval_records(const std::vector<CubicRecord>& records, double s) {
  if (records.empty()) return 0.0;
  auto it = std::upper_bound(records.begin(), records.end(), s,
                             [](double v, const CubicRecord& r) { return v < r.s_offset; });
  if (it == records.begin()) return records.front().eval(s - records.front().s_offset);
  --it;
  return it->eval(s - it->s_offset);
}

const Lane* LaneSection::find(int id) const {
  for (const auto& l : lanes) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

double Road::section_end(std::size_t index) const {
  return index + 1 < sections.size() ? sections[index + 1].s_start : length;
}

std::size_t Road::section_index(double s) const {
  std::size_t idx = 0;
  for (std::size_t i = 1; i < sections.size(); ++i) {
    if (s >= sections[i].s_start) idx = i;
  }
  return idx;
}

const Road* OpenDriveMap::find(std::string_view id) const {
  if (index_.size() == roads.size()) {
    auto it = index_.find(std::string{id});
    return it == index_.end() ? nullptr : &roads[it->second];
  }
  for (const auto& r : roads) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

void OpenDriveMap::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < roads.size(); ++i) index_.emplace(roads[i].id, i);
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

void warn(Diagnostics& out, std::string msg, int line) {
  out.push_back({Severity::Warning, std::move(msg), line});
}

CubicRecord read_cubic(const xml::Node& n, std::string_view offset_key) {
  return {n.required_double(offset_key), n.optional_double("a", 0.0), n.optional_double("b", 0.0),
          n.optional_double("c", 0.0), n.optional_double("d", 0.0)};
}

GeometrySegment read_geometry(const xml::Node& n, const std::string& road_id, Diagnostics& warnings,
                              bool& keep) {
  GeometrySegment g;
  g.s_offset = n.required_double("s");
  g.origin = {n.required_double("x"), n.required_double("y")};
  g.heading = n.required_double("hdg");
  g.length = n.required_double("length");
  keep = true;
  const xml::Node* prim = n.children.empty() ? nullptr : &n.children.front();
  if (prim == nullptr) {
    throw Error(ErrorCode::UnsupportedGeometry, "empty <geometry> on road " + road_id, n.line);
  }
  if (prim->name == "line") {
    g.kind = Line{};
  } else if (prim->name == "arc") {
    const double k = prim->required_double("curvature");
    if (k == 0.0) {
      warn(warnings, "road " + road_id + ": arc with zero curvature treated as line", prim->line);
      g.kind = Line{};
    } else {
      g.kind = Arc{k};
    }
  } else if (prim->name == "spiral") {
    g.kind = Spiral{prim->required_double("curvStart"), prim->required_double("curvEnd")};
  } else if (prim->name == "poly3") {
    g.kind = Poly3{prim->optional_double("a", 0), prim->optional_double("b", 0),
                   prim->optional_double("c", 0), prim->optional_double("d", 0)};
  } else if (prim->name == "paramPoly3") {
    ParamPoly3 p;
    p.au = prim->optional_double("aU", 0);
    p.bu = prim->optional_double("bU", 0);
    p.cu = prim->optional_double("cU", 0);
    p.du = prim->optional_double("dU", 0);
    p.av = prim->optional_double("aV", 0);
    p.bv = prim->optional_double("bV", 0);
    p.cv = prim->optional_double("cV", 0);
    p.dv = prim->optional_double("dV", 0);
    const std::string range = prim->optional("pRange", "normalized");
    if (range != "normalized" && range != "arcLength") {
      throw Error(ErrorCode::InvalidValue, "paramPoly3 pRange '" + range + "'", prim->line);
    }
    p.normalized = range == "normalized";
    g.kind = p;
  } else {
    throw Error(ErrorCode::UnsupportedGeometry, prim->name, prim->line);
  }
  if (!(g.length > 0.0)) {
    warn(warnings, "road " + road_id + ": zero-length geometry dropped", n.line);
    keep = false;
  }
  return g;
}

std::optional<RoadLink> read_road_link(const xml::Node* n) {
  if (n == nullptr) return std::nullopt;
  RoadLink link;
  const std::string type = n->optional("elementType", "road");
  if (type == "road") {
    link.element_type = ElementType::Road;
  } else if (type == "junction") {
    link.element_type = ElementType::Junction;
  } else {
    throw Error(ErrorCode::InvalidValue, "link elementType '" + type + "'", n->line);
  }
  link.element_id = n->required("elementId");
  if (auto cp = n->attr("contactPoint")) {
    if (*cp == "start") {
      link.contact = ContactPoint::Start;
    } else if (*cp == "end") {
      link.contact = ContactPoint::End;
    } else {
      throw Error(ErrorCode::InvalidValue, "contactPoint '" + std::string{*cp} + "'", n->line);
    }
  }
  return link;
}

Lane read_lane(const xml::Node& n, const std::string& road_id, Diagnostics& warnings) {
  Lane lane;
  lane.id = static_cast<int>(n.required_int("id"));
  lane.type = n.optional("type", "none");
  for (const auto& c : n.children) {
    if (c.name == "width") {
      lane.widths.push_back(read_cubic(c, "sOffset"));
    } else if (c.name == "border") {
      throw Error(ErrorCode::UnsupportedLaneBorder,
                  "road " + road_id + " lane " + std::to_string(lane.id) +
                      ": <border> records are not supported, use <width>",
                  c.line);
    } else if (c.name == "link") {
      if (const auto* p = c.child("predecessor")) lane.link.predecessor = static_cast<int>(p->required_int("id"));
      if (const auto* s = c.child("successor")) lane.link.successor = static_cast<int>(s->required_int("id"));
    } else if (c.name == "roadMark" || c.name == "material" || c.name == "visibility" ||
               c.name == "speed" || c.name == "access" || c.name == "height" || c.name == "rule" ||
               c.name == "userData") {
      // no geometric meaning
    } else {
      warn(warnings, "road " + road_id + ": unknown lane element <" + c.name + "> ignored", c.line);
    }
  }
  std::stable_sort(lane.widths.begin(), lane.widths.end(),
                   [](const CubicRecord& a, const CubicRecord& b) { return a.s_offset < b.s_offset; });
  return lane;
}

LaneSection read_section(const xml::Node& n, const std::string& road_id, Diagnostics& warnings) {
  LaneSection sec;
  sec.s_start = n.required_double("s");
  for (const auto& side : n.children) {
    int sign = 0;
    if (side.name == "left") {
      sign = 1;
    } else if (side.name == "right") {
      sign = -1;
    } else if (side.name == "center") {
      sign = 0;
    } else {
      warn(warnings, "road " + road_id + ": unknown laneSection element <" + side.name + "> ignored",
           side.line);
      continue;
    }
    for (const auto* ln : side.children_named("lane")) {
      Lane lane = read_lane(*ln, road_id, warnings);
      const bool ok = sign == 0 ? lane.id == 0 : (sign > 0 ? lane.id > 0 : lane.id < 0);
      if (!ok) {
        throw Error(ErrorCode::InvalidValue,
                    "road " + road_id + ": lane id " + std::to_string(lane.id) + " listed under <" +
                        side.name + ">",
                    ln->line);
      }
      if (lane.id != 0) sec.lanes.push_back(std::move(lane));
    }
  }
  std::sort(sec.lanes.begin(), sec.lanes.end(), [](const Lane& a, const Lane& b) { return a.id > b.id; });
  for (std::size_t i = 1; i < sec.lanes.size(); ++i) {
    if (sec.lanes[i].id == sec.lanes[i - 1].id) {
      throw Error(ErrorCode::InvalidValue,
                  "road " + road_id + ": duplicate lane id " + std::to_string(sec.lanes[i].id), n.line);
    }
  }
  return sec;
}

Road read_road(const xml::Node& n, Diagnostics& warnings) {
  Road road;
  road.id = n.required("id");
  road.name = n.optional("name");
  road.junction = n.optional("junction", "-1");
  for (const auto& c : n.children) {
    if (c.name == "link") {
      road.predecessor = read_road_link(c.child("predecessor"));
      road.successor = read_road_link(c.child("successor"));
    } else if (c.name == "planView") {
      for (const auto* g : c.children_named("geometry")) {
        bool keep = true;
        GeometrySegment seg = read_geometry(*g, road.id, warnings, keep);
        if (keep) road.geometry.push_back(std::move(seg));
      }
    } else if (c.name == "lanes") {
      for (const auto& lc : c.children) {
        if (lc.name == "laneOffset") {
          road.lane_offsets.push_back(read_cubic(lc, "s"));
        } else if (lc.name == "laneSection") {
          road.sections.push_back(read_section(lc, road.id, warnings));
        } else {
          warn(warnings, "road " + road.id + ": unknown lanes element <" + lc.name + "> ignored", lc.line);
        }
      }
    } else if (c.name == "elevationProfile" || c.name == "lateralProfile") {
      warn(warnings, "road " + road.id + ": <" + c.name + "> ignored (flat world)", c.line);
    } else if (c.name == "objects" || c.name == "signals" || c.name == "surface") {
      warn(warnings, "road " + road.id + ": <" + c.name + "> ignored", c.line);
    } else if (c.name == "type" || c.name == "userData") {
      // no geometric meaning
    } else {
      warn(warnings, "road " + road.id + ": unknown element <" + c.name + "> ignored", c.line);
    }
  }
  if (road.geometry.empty()) {
    throw Error(ErrorCode::UnsupportedGeometry, "road " + road.id + " has no planView geometry", n.line);
  }
  std::stable_sort(road.geometry.begin(), road.geometry.end(),
                   [](const GeometrySegment& a, const GeometrySegment& b) { return a.s_offset < b.s_offset; });
  for (std::size_t i = 1; i < road.geometry.size(); ++i) {
    const auto& prev = road.geometry[i - 1];
    if (std::abs(prev.s_offset + prev.length - road.geometry[i].s_offset) > 1e-6) {
      warn(warnings, "road " + road.id + ": planView gap or overlap at s=" + xml::exact(road.geometry[i].s_offset),
           n.line);
    }
  }
  const auto& last = road.geometry.back();
  road.length = n.optional_double("length", last.s_offset + last.length);
  std::stable_sort(road.lane_offsets.begin(), road.lane_offsets.end(),
                   [](const CubicRecord& a, const CubicRecord& b) { return a.s_offset < b.s_offset; });
  std::stable_sort(road.sections.begin(), road.sections.end(),
                   [](const LaneSection& a, const LaneSection& b) { return a.s_start < b.s_start; });
  if (road.sections.empty()) road.sections.push_back(LaneSection{});
  for (std::size_t i = 0; i < road.sections.size(); ++i) {
    const auto& sec = road.sections[i];
    const double span = road.section_end(i) - sec.s_start;
    for (const auto& lane : sec.lanes) {
      if (lane.type != "driving") continue;
      for (int k = 0; k <= 8; ++k) {
        if (lane.width(span * k / 8.0) < -1e-9) {
          warn(warnings,
               "road " + road.id + ": driving lane " + std::to_string(lane.id) + " has negative width",
               n.line);
          break;
        }
      }
    }
  }
  return road;
}

}  // namespace

OpenDriveMap parse_opendrive(std::string_view xml_text) {
  const xml::Node root = xml::parse(xml_text);
  if (root.name != "OpenDRIVE") {
    throw Error(ErrorCode::MalformedXml, "root element is <" + root.name + ">, expected <OpenDRIVE>", root.line);
  }
  OpenDriveMap map;
  for (const auto& c : root.children) {
    if (c.name == "road") {
      map.roads.push_back(read_road(c, map.warnings));
    } else if (c.name == "header" || c.name == "junction" || c.name == "controller" || c.name == "userData") {
      // header carries no geometry; junction connectivity is carried by the
      // connecting roads' own links
    } else {
      warn(map.warnings, "unknown element <" + c.name + "> ignored", c.line);
    }
  }
  std::set<std::string> ids;
  for (const auto& r : map.roads) {
    if (!ids.insert(r.id).second) throw Error(ErrorCode::InvalidValue, "duplicate road id " + r.id);
  }
  map.reindex();
  return map;
}

// ---------------------------------------------------------------------------
// Evaluation

Pose eval_reference_line(const Road& road, double s) {
  constexpr double kSlack = 1e-9;
  if (!(s >= -kSlack && s <= road.length + kSlack)) {
    throw Error(ErrorCode::OutOfRange,
                "s=" + xml::exact(s) + " outside road " + road.id + " [0, " + xml::exact(road.length) + "]");
  }
  s = std::clamp(s, 0.0, road.length);
  auto it = std::upper_bound(road.geometry.begin(), road.geometry.end(), s,
                             [](double v, const GeometrySegment& g) { return v < g.s_offset; });
  const GeometrySegment& g = it == road.geometry.begin() ? road.geometry.front() : *std::prev(it);
  return g.eval(std::max(0.0, s - g.s_offset));
}

LaneBand lane_band(const Road& road, std::size_t section, int lane_id, double s) {
  const LaneSection& sec = road.sections.at(section);
  const double ds = s - sec.s_start;
  double t = eval_records(road.lane_offsets, s);
  if (lane_id == 0) return {t, t};
  const int sign = lane_id > 0 ? 1 : -1;
  for (int id = sign; id != lane_id; id += sign) {
    if (const Lane* l = sec.find(id)) t += sign * l->width(ds);
  }
  const Lane* lane = sec.find(lane_id);
  const double w = lane ? lane->width(ds) : 0.0;
  return {t, t + sign * w};
}

Pose locate(const Road& road, std::size_t section, int lane_id, double s, double t_offset) {
  const Pose ref = eval_reference_line(road, s);
  const double t = lane_band(road, section, lane_id, s).center() + t_offset;
  const double heading = lane_id > 0 ? normalize_angle(ref.heading + std::numbers::pi) : ref.heading;
  return {ref.position + left_normal(ref.heading) * t, heading};
}

Pose locate(const OpenDriveMap& map, std::string_view road_id, int lane_id, double s, double t_offset) {
  const Road* road = map.find(road_id);
  if (road == nullptr) throw Error(ErrorCode::UnknownRoad, "road '" + std::string{road_id} + "'");
  if (!(s >= -1e-9 && s <= road->length + 1e-9)) {
    throw Error(ErrorCode::OutOfRange,
                "s=" + xml::exact(s) + " outside road " + road->id + " [0, " + xml::exact(road->length) + "]");
  }
  const std::size_t section = road->section_index(s);
  if (lane_id != 0 && road->sections[section].find(lane_id) == nullptr) {
    throw Error(ErrorCode::UnknownLane, "road " + road->id + " has no lane " + std::to_string(lane_id) +
                                            " at s=" + xml::exact(s));
  }
  return locate(*road, section, lane_id, s, t_offset);
}

std::optional<RoadCoord> project(const OpenDriveMap& map, Vec2 point) {
  std::optional<RoadCoord> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& road : map.roads) {
    auto dist_at = [&](double s) { return (eval_reference_line(road, s).position - point).norm(); };
    const int n = std::max(2, static_cast<int>(std::ceil(road.length)));
    double s_min = 0.0;
    double d_min = dist_at(0.0);
    for (int i = 1; i <= n; ++i) {
      const double s = road.length * i / n;
      const double d = dist_at(s);
      if (d < d_min) {
        d_min = d;
        s_min = s;
      }
    }
    // golden-section refinement around the coarse minimum
    double lo = std::max(0.0, s_min - road.length / n);
    double hi = std::min(road.length, s_min + road.length / n);
    constexpr double kPhi = 0.6180339887498949;
    for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
      const double a = hi - kPhi * (hi - lo);
      const double b = lo + kPhi * (hi - lo);
      if (dist_at(a) < dist_at(b)) {
        hi = b;
      } else {
        lo = a;
      }
    }
    const double s = 0.5 * (lo + hi);
    const Pose ref = eval_reference_line(road, s);
    const double t = (point - ref.position).dot(left_normal(ref.heading));
    const double along = (point - ref.position).dot(unit(ref.heading));
    if (std::abs(along) > 1e-3) continue;  // beyond the road ends
    const std::size_t sec = road.section_index(s);
    for (const auto& lane : road.sections[sec].lanes) {
      const LaneBand band = lane_band(road, sec, lane.id, s);
      const double lo_t = std::min(band.inner, band.outer);
      const double hi_t = std::max(band.inner, band.outer);
      if (band.width() > 1e-9 && t >= lo_t - 1e-9 && t <= hi_t + 1e-9 && std::abs(t) < best_dist) {
        best_dist = std::abs(t);
        best = RoadCoord{road.id, sec, lane.id, s, t};
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Lanelet conversion

namespace {

enum class Side { Start, End };

struct LaneKey {
  std::string road;
  std::size_t section;
  int lane;

  auto operator<=>(const LaneKey&) const = default;
};

Side driving_end(int lane_id) { return lane_id > 0 ? Side::Start : Side::End; }
Side driving_start(int lane_id) { return lane_id > 0 ? Side::End : Side::Start; }

struct Joint {
  LaneKey a;
  Side a_side;
  LaneKey b;
  Side b_side;
};

}  // namespace

LaneletNetwork convert_opendrive_to_lanelets(const OpenDriveMap& map, const ConversionOptions& options) {
  if (!(options.sampling_step > 0.0)) {
    throw Error(ErrorCode::InvalidValue, "sampling_step must be positive");
  }
  LaneletNetwork net;
  std::map<LaneKey, int> ids;
  int next_id = 1;
  auto allowed = [&](const std::string& type) {
    return std::find(options.lane_types.begin(), options.lane_types.end(), type) != options.lane_types.end();
  };

  for (const auto& road : map.roads) {
    for (std::size_t si = 0; si < road.sections.size(); ++si) {
      const double s0 = road.sections[si].s_start;
      const double s1 = road.section_end(si);
      if (s1 - s0 < 1e-9) continue;
      const auto n = std::max<long>(1, static_cast<long>(std::ceil((s1 - s0) / options.sampling_step - 1e-9)));
      std::vector<double> samples(static_cast<std::size_t>(n) + 1);
      std::vector<Pose> refs(samples.size());
      for (long i = 0; i <= n; ++i) {
        samples[i] = i == n ? s1 : s0 + (s1 - s0) * static_cast<double>(i) / static_cast<double>(n);
        refs[i] = eval_reference_line(road, samples[i]);
      }
      for (const auto& lane : road.sections[si].lanes) {
        if (!allowed(lane.type)) continue;
        Lanelet ll;
        double max_width = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
          const LaneBand band = lane_band(road, si, lane.id, samples[i]);
          max_width = std::max(max_width, band.width());
          const Vec2 nrm = left_normal(refs[i].heading);
          ll.left_bound.push_back(refs[i].position + nrm * band.inner);
          ll.right_bound.push_back(refs[i].position + nrm * band.outer);
        }
        if (max_width < 1e-9) continue;
        if (lane.id > 0) {
          std::reverse(ll.left_bound.begin(), ll.left_bound.end());
          std::reverse(ll.right_bound.begin(), ll.right_bound.end());
        }
        ll.id = next_id++;
        ll.source = LaneletSource{road.id, si, lane.id};
        ids.emplace(LaneKey{road.id, si, lane.id}, ll.id);
        net.lanelets.push_back(std::move(ll));
      }
    }
  }

  std::vector<Joint> joints;
  for (const auto& road : map.roads) {
    if (road.sections.empty()) continue;
    for (std::size_t si = 0; si + 1 < road.sections.size(); ++si) {
      const auto& cur = road.sections[si];
      const auto& nxt = road.sections[si + 1];
      for (const auto& lane : cur.lanes) {
        int target = lane.link.successor.value_or(lane.id);
        if (!lane.link.successor && nxt.find(lane.id) == nullptr) continue;
        joints.push_back({{road.id, si, lane.id}, Side::End, {road.id, si + 1, target}, Side::Start});
      }
      for (const auto& lane : nxt.lanes) {
        if (lane.link.predecessor) {
          joints.push_back({{road.id, si + 1, lane.id}, Side::Start, {road.id, si, *lane.link.predecessor}, Side::End});
        }
      }
    }
    auto link_road = [&](const std::optional<RoadLink>& link, bool at_end) {
      if (!link || link->element_type != ElementType::Road) return;
      const Road* other = map.find(link->element_id);
      if (other == nullptr) {
        net.warnings.push_back({Severity::Warning,
                                "DanglingLink: road " + road.id + " links to missing road " + link->element_id +
                                    "; link dropped",
                                std::nullopt});
        return;
      }
      if (other->sections.empty()) return;
      const ContactPoint cp = link->contact.value_or(at_end ? ContactPoint::Start : ContactPoint::End);
      const std::size_t own_sec = at_end ? road.sections.size() - 1 : 0;
      const std::size_t other_sec = cp == ContactPoint::Start ? 0 : other->sections.size() - 1;
      const Side own_side = at_end ? Side::End : Side::Start;
      const Side other_side = cp == ContactPoint::Start ? Side::Start : Side::End;
      const bool direction_kept = own_side != other_side;
      for (const auto& lane : road.sections[own_sec].lanes) {
        std::optional<int> target = at_end ? lane.link.successor : lane.link.predecessor;
        if (!target && direction_kept && other->sections[other_sec].find(lane.id) != nullptr) target = lane.id;
        if (!target) continue;
        joints.push_back({{road.id, own_sec, lane.id}, own_side, {other->id, other_sec, *target}, other_side});
      }
    };
    link_road(road.successor, true);
    link_road(road.predecessor, false);
  }

  std::set<std::pair<int, int>> edges;
  for (const auto& j : joints) {
    auto ia = ids.find(j.a);
    auto ib = ids.find(j.b);
    if (ia == ids.end() || ib == ids.end()) continue;
    if (j.a_side == driving_end(j.a.lane) && j.b_side == driving_start(j.b.lane)) {
      edges.emplace(ia->second, ib->second);
    } else if (j.a_side == driving_start(j.a.lane) && j.b_side == driving_end(j.b.lane)) {
      edges.emplace(ib->second, ia->second);
    }
  }
  // lanelets are created with ascending ids, so index = id - 1
  for (const auto& [from, to] : edges) {
    net.lanelets[static_cast<std::size_t>(from - 1)].successors.push_back(to);
    net.lanelets[static_cast<std::size_t>(to - 1)].predecessors.push_back(from);
  }

  auto step_lane = [](int lane, int delta_left) {
    // one lane to the left (delta_left = 1) or right (-1) in driving direction
    int next = lane < 0 ? lane + delta_left : lane - delta_left;
    if (next == 0) next = lane < 0 ? next + delta_left : next - delta_left;
    return next;
  };
  for (auto& ll : net.lanelets) {
    const auto& src = *ll.source;
    for (int dir : {1, -1}) {
      const int other = step_lane(src.lane_id, dir);
      auto it = ids.find({src.road_id, src.section, other});
      if (it == ids.end()) continue;
      Adjacency adj{it->second, (other > 0) == (src.lane_id > 0)};
      (dir == 1 ? ll.adj_left : ll.adj_right) = adj;
    }
  }
  return net;
}

}  // namespace osc2cr::odr
