#include "osc2cr/commonroad_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "osc2cr/xml.hpp"

namespace osc2cr::cr {

namespace {

using Attrs = xml::Writer::Attrs;

std::string num(double v, std::string_view what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::SerializationOverflow, "non-finite value in " + std::string(what));
  return xml::fixed6(v);
}

void write_point(xml::Writer& w, Vec2 p, std::string_view what) {
  w.open("point");
  w.leaf("x", num(p.x, what));
  w.leaf("y", num(p.y, what));
  w.close();
}

void write_exact(xml::Writer& w, std::string_view name, const std::string& value) {
  w.open(name);
  w.leaf("exact", value);
  w.close();
}

void write_state(xml::Writer& w, std::string_view element, const CrState& s, bool planning) {
  w.open(element);
  w.open("position");
  write_point(w, s.position, "state position");
  w.close();
  write_exact(w, "orientation", num(s.orientation, "state orientation"));
  write_exact(w, "time", std::to_string(s.time_step));
  write_exact(w, "velocity", num(s.velocity, "state velocity"));
  write_exact(w, "steeringAngle", num(s.steering_angle, "state steering angle"));
  if (planning) {
    write_exact(w, "yawRate", "0.000000");
    write_exact(w, "slipAngle", "0.000000");
  }
  w.close();
}

void write_shape(xml::Writer& w, const Shape& shape) {
  if (!(shape.length > 0.0) || !(shape.width > 0.0)) {
    throw Error(ErrorCode::InvalidValue, "obstacle shape must have positive length and width");
  }
  w.open("shape");
  w.open("rectangle");
  w.leaf("length", num(shape.length, "shape"));
  w.leaf("width", num(shape.width, "shape"));
  w.close();
  w.close();
}

void write_interval(xml::Writer& w, std::string_view name, const std::string& lo, const std::string& hi) {
  w.open(name);
  w.leaf("intervalStart", lo);
  w.leaf("intervalEnd", hi);
  w.close();
}

void write_bound(xml::Writer& w, std::string_view name, const Polyline& line) {
  w.open(name);
  for (const auto& p : line) write_point(w, p, "lanelet bound");
  w.close();
}

}  // namespace

std::string to_xml(const Scenario& sc) {
  xml::Writer w;
  w.open("commonRoad", {{"timeStepSize", num(sc.info.dt, "timeStepSize")},
                        {"commonRoadVersion", std::string(kCommonRoadVersion)},
                        {"author", sc.info.author},
                        {"affiliation", sc.info.affiliation},
                        {"source", sc.info.source},
                        {"benchmarkID", sc.info.benchmark_id},
                        {"date", sc.info.date}});
  for (const auto& ll : sc.network.lanelets) {
    w.open("lanelet", {{"id", std::to_string(ll.id)}});
    write_bound(w, "leftBound", ll.left_bound);
    write_bound(w, "rightBound", ll.right_bound);
    for (int p : ll.predecessors) w.empty("predecessor", {{"ref", std::to_string(p)}});
    for (int s : ll.successors) w.empty("successor", {{"ref", std::to_string(s)}});
    if (ll.adj_left) {
      w.empty("adjacentLeft", {{"ref", std::to_string(ll.adj_left->id)},
                               {"drivingDir", ll.adj_left->same_direction ? "same" : "opposite"}});
    }
    if (ll.adj_right) {
      w.empty("adjacentRight", {{"ref", std::to_string(ll.adj_right->id)},
                                {"drivingDir", ll.adj_right->same_direction ? "same" : "opposite"}});
    }
    w.close();
  }
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  auto statics = sc.static_obstacles;
  std::sort(statics.begin(), statics.end(), by_id);
  for (const auto& o : statics) {
    w.open("staticObstacle", {{"id", std::to_string(o.id)}});
    w.leaf("type", to_string(o.type));
    write_shape(w, o.shape);
    write_state(w, "initialState", o.initial_state, false);
    w.close();
  }
  auto dynamics = sc.dynamic_obstacles;
  std::sort(dynamics.begin(), dynamics.end(), by_id);
  for (const auto& o : dynamics) {
    w.open("dynamicObstacle", {{"id", std::to_string(o.id)}});
    w.leaf("type", to_string(o.type));
    write_shape(w, o.shape);
    write_state(w, "initialState", o.initial_state, false);
    w.open("trajectory");
    for (const auto& s : o.trajectory) write_state(w, "state", s, false);
    w.close();
    w.close();
  }
  const PlanningProblem& pp = sc.planning_problem;
  const Goal& g = pp.goal;
  if (g.step_lo > g.step_hi) throw Error(ErrorCode::InvalidValue, "goal time interval is empty");
  w.open("planningProblem", {{"id", std::to_string(pp.id)}});
  write_state(w, "initialState", pp.initial_state, true);
  w.open("goalState");
  w.open("position");
  w.open("rectangle");
  w.leaf("length", num(g.region.length, "goal region"));
  w.leaf("width", num(g.region.width, "goal region"));
  w.leaf("orientation", num(g.region.orientation, "goal region"));
  w.open("center");
  w.leaf("x", num(g.region.center.x, "goal region"));
  w.leaf("y", num(g.region.center.y, "goal region"));
  w.close();
  w.close();
  w.close();
  if (g.orientation) {
    write_interval(w, "orientation", num(g.orientation->lo, "goal orientation"), num(g.orientation->hi, "goal orientation"));
  }
  write_interval(w, "time", std::to_string(g.step_lo), std::to_string(g.step_hi));
  if (g.velocity) {
    write_interval(w, "velocity", num(g.velocity->lo, "goal velocity"), num(g.velocity->hi, "goal velocity"));
  }
  return w.finish();
}

std::size_t write_xml(const Scenario& scenario, const std::filesystem::path& path) {
  const std::string text = to_xml(scenario);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
  return text.size();
}

// ---------------------------------------------------------------------------
// Reader

namespace {

const xml::Node& need(const xml::Node& parent, std::string_view name) {
  const xml::Node* c = parent.child(name);
  if (c == nullptr) {
    throw Error(ErrorCode::MissingAttribute, "<" + parent.name + "> lacks <" + std::string(name) + ">", parent.line);
  }
  return *c;
}

double text_double(const xml::Node& n) {
  auto v = xml::to_double(n.text);
  if (!v) throw Error(ErrorCode::InvalidValue, "<" + n.name + "> is not a number: '" + n.text + "'", n.line);
  return *v;
}

int text_int(const xml::Node& n) {
  auto v = xml::to_int(n.text);
  if (!v) throw Error(ErrorCode::InvalidValue, "<" + n.name + "> is not an integer: '" + n.text + "'", n.line);
  return static_cast<int>(*v);
}

Vec2 read_point(const xml::Node& p) { return {text_double(need(p, "x")), text_double(need(p, "y"))}; }

CrState read_state(const xml::Node& n) {
  CrState s;
  s.position = read_point(need(need(n, "position"), "point"));
  s.orientation = text_double(need(need(n, "orientation"), "exact"));
  s.time_step = text_int(need(need(n, "time"), "exact"));
  s.velocity = text_double(need(need(n, "velocity"), "exact"));
  if (const auto* sa = n.child("steeringAngle")) s.steering_angle = text_double(need(*sa, "exact"));
  return s;
}

Shape read_shape(const xml::Node& n) {
  const auto& r = need(need(n, "shape"), "rectangle");
  return {text_double(need(r, "length")), text_double(need(r, "width"))};
}

ObstacleType read_type(const xml::Node& n) {
  const auto& t = need(n, "type");
  auto type = obstacle_type_from_string(t.text);
  if (!type) throw Error(ErrorCode::InvalidValue, "unknown obstacle type '" + t.text + "'", t.line);
  return *type;
}

Polyline read_bound(const xml::Node& n) {
  Polyline out;
  for (const auto* p : n.children_named("point")) out.push_back(read_point(*p));
  return out;
}

std::optional<Adjacency> read_adjacency(const xml::Node* n) {
  if (n == nullptr) return std::nullopt;
  return Adjacency{static_cast<int>(n->required_int("ref")), n->required("drivingDir") == "same"};
}

}  // namespace

Scenario read_commonroad_xml(std::string_view text) {
  const xml::Node root = xml::parse(text);
  if (root.name != "commonRoad") throw Error(ErrorCode::InvalidValue, "root element is not <commonRoad>", root.line);
  Scenario sc;
  sc.info.dt = root.required_double("timeStepSize");
  sc.info.author = root.optional("author");
  sc.info.affiliation = root.optional("affiliation");
  sc.info.source = root.optional("source");
  sc.info.benchmark_id = root.optional("benchmarkID");
  sc.info.date = root.optional("date");
  bool have_problem = false;
  for (const auto& c : root.children) {
    if (c.name == "lanelet") {
      Lanelet ll;
      ll.id = static_cast<int>(c.required_int("id"));
      ll.left_bound = read_bound(need(c, "leftBound"));
      ll.right_bound = read_bound(need(c, "rightBound"));
      for (const auto* p : c.children_named("predecessor")) ll.predecessors.push_back(static_cast<int>(p->required_int("ref")));
      for (const auto* s : c.children_named("successor")) ll.successors.push_back(static_cast<int>(s->required_int("ref")));
      ll.adj_left = read_adjacency(c.child("adjacentLeft"));
      ll.adj_right = read_adjacency(c.child("adjacentRight"));
      sc.network.lanelets.push_back(std::move(ll));
    } else if (c.name == "staticObstacle") {
      sc.static_obstacles.push_back(
          {static_cast<int>(c.required_int("id")), read_type(c), read_shape(c), read_state(need(c, "initialState")), {}});
    } else if (c.name == "dynamicObstacle") {
      DynamicObstacle o{static_cast<int>(c.required_int("id")), read_type(c), read_shape(c),
                        read_state(need(c, "initialState")), {}, {}};
      if (const auto* t = c.child("trajectory")) {
        for (const auto* s : t->children_named("state")) o.trajectory.push_back(read_state(*s));
      }
      sc.dynamic_obstacles.push_back(std::move(o));
    } else if (c.name == "planningProblem") {
      PlanningProblem& pp = sc.planning_problem;
      pp.id = static_cast<int>(c.required_int("id"));
      pp.initial_state = read_state(need(c, "initialState"));
      const auto& gs = need(c, "goalState");
      const auto& rect = need(need(gs, "position"), "rectangle");
      pp.goal.region = {text_double(need(rect, "length")), text_double(need(rect, "width")),
                        read_point(need(rect, "center")), text_double(need(rect, "orientation"))};
      const auto& time = need(gs, "time");
      pp.goal.step_lo = text_int(need(time, "intervalStart"));
      pp.goal.step_hi = text_int(need(time, "intervalEnd"));
      if (const auto* o = gs.child("orientation")) {
        pp.goal.orientation = Interval{text_double(need(*o, "intervalStart")), text_double(need(*o, "intervalEnd"))};
      }
      if (const auto* v = gs.child("velocity")) {
        pp.goal.velocity = Interval{text_double(need(*v, "intervalStart")), text_double(need(*v, "intervalEnd"))};
      }
      have_problem = true;
    }
  }
  if (!have_problem) throw Error(ErrorCode::MissingAttribute, "document has no <planningProblem>", root.line);
  std::sort(sc.network.lanelets.begin(), sc.network.lanelets.end(),
            [](const Lanelet& a, const Lanelet& b) { return a.id < b.id; });
  return sc;
}

// ---------------------------------------------------------------------------
// Structural comparison

namespace {

struct Comparator {
  double tol;
  std::string* why;

  bool fail(const std::string& msg) const {
    if (why != nullptr) *why = msg;
    return false;
  }
  bool same(double a, double b, const std::string& what) const {
    return std::abs(a - b) <= tol ? true : fail(what + ": " + xml::exact(a) + " vs " + xml::exact(b));
  }
  bool same(Vec2 a, Vec2 b, const std::string& what) const { return same(a.x, b.x, what + ".x") && same(a.y, b.y, what + ".y"); }
  bool same_int(long long a, long long b, const std::string& what) const {
    return a == b ? true : fail(what + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
  bool same_str(const std::string& a, const std::string& b, const std::string& what) const {
    return a == b ? true : fail(what + ": '" + a + "' vs '" + b + "'");
  }
  bool same(const CrState& a, const CrState& b, const std::string& what) const {
    return same_int(a.time_step, b.time_step, what + ".time_step") && same(a.position, b.position, what + ".position") &&
           same(a.orientation, b.orientation, what + ".orientation") && same(a.velocity, b.velocity, what + ".velocity") &&
           same(a.steering_angle, b.steering_angle, what + ".steering_angle");
  }
  bool same(const Shape& a, const Shape& b, const std::string& what) const {
    return same(a.length, b.length, what + ".length") && same(a.width, b.width, what + ".width");
  }
  bool same(const Polyline& a, const Polyline& b, const std::string& what) const {
    if (!same_int(static_cast<long long>(a.size()), static_cast<long long>(b.size()), what + ".size")) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!same(a[i], b[i], what + "[" + std::to_string(i) + "]")) return false;
    }
    return true;
  }
  bool same(const std::optional<Interval>& a, const std::optional<Interval>& b, const std::string& what) const {
    if (a.has_value() != b.has_value()) return fail(what + ": presence differs");
    return !a || (same(a->lo, b->lo, what + ".lo") && same(a->hi, b->hi, what + ".hi"));
  }
};

template <typename T>
std::vector<T> sorted_by_id(std::vector<T> v) {
  std::sort(v.begin(), v.end(), [](const T& a, const T& b) { return a.id < b.id; });
  return v;
}

}  // namespace

bool structurally_equal(const Scenario& a, const Scenario& b, double tolerance, std::string* why) {
  const Comparator c{tolerance, why};
  if (!c.same(a.info.dt, b.info.dt, "timeStepSize") ||
      !c.same_str(a.info.benchmark_id, b.info.benchmark_id, "benchmarkID") ||
      !c.same_str(a.info.author, b.info.author, "author") ||
      !c.same_str(a.info.affiliation, b.info.affiliation, "affiliation") ||
      !c.same_str(a.info.source, b.info.source, "source") || !c.same_str(a.info.date, b.info.date, "date")) {
    return false;
  }
  const auto& la = a.network.lanelets;
  const auto& lb = b.network.lanelets;
  if (!c.same_int(static_cast<long long>(la.size()), static_cast<long long>(lb.size()), "lanelet count")) return false;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const std::string w = "lanelet " + std::to_string(la[i].id);
    if (!c.same_int(la[i].id, lb[i].id, w + " id") || !c.same(la[i].left_bound, lb[i].left_bound, w + " left") ||
        !c.same(la[i].right_bound, lb[i].right_bound, w + " right")) {
      return false;
    }
    if (la[i].successors != lb[i].successors) return c.fail(w + " successors differ");
    if (la[i].predecessors != lb[i].predecessors) return c.fail(w + " predecessors differ");
    if (la[i].adj_left != lb[i].adj_left) return c.fail(w + " adjacentLeft differs");
    if (la[i].adj_right != lb[i].adj_right) return c.fail(w + " adjacentRight differs");
  }
  const auto sa = sorted_by_id(a.static_obstacles);
  const auto sb = sorted_by_id(b.static_obstacles);
  if (!c.same_int(static_cast<long long>(sa.size()), static_cast<long long>(sb.size()), "static obstacle count")) return false;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const std::string w = "static obstacle " + std::to_string(sa[i].id);
    if (!c.same_int(sa[i].id, sb[i].id, w + " id")) return false;
    if (sa[i].type != sb[i].type) return c.fail(w + " type differs");
    if (!c.same(sa[i].shape, sb[i].shape, w + " shape") || !c.same(sa[i].initial_state, sb[i].initial_state, w + " initial")) {
      return false;
    }
  }
  const auto da = sorted_by_id(a.dynamic_obstacles);
  const auto db = sorted_by_id(b.dynamic_obstacles);
  if (!c.same_int(static_cast<long long>(da.size()), static_cast<long long>(db.size()), "dynamic obstacle count")) return false;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const std::string w = "dynamic obstacle " + std::to_string(da[i].id);
    if (!c.same_int(da[i].id, db[i].id, w + " id")) return false;
    if (da[i].type != db[i].type) return c.fail(w + " type differs");
    if (!c.same(da[i].shape, db[i].shape, w + " shape") || !c.same(da[i].initial_state, db[i].initial_state, w + " initial")) {
      return false;
    }
    if (!c.same_int(static_cast<long long>(da[i].trajectory.size()), static_cast<long long>(db[i].trajectory.size()),
                    w + " trajectory length")) {
      return false;
    }
    for (std::size_t k = 0; k < da[i].trajectory.size(); ++k) {
      if (!c.same(da[i].trajectory[k], db[i].trajectory[k], w + " state " + std::to_string(k))) return false;
    }
  }
  const auto& pa = a.planning_problem;
  const auto& pb = b.planning_problem;
  return c.same_int(pa.id, pb.id, "planning problem id") && c.same(pa.initial_state, pb.initial_state, "planning initial") &&
         c.same(pa.goal.region.length, pb.goal.region.length, "goal length") &&
         c.same(pa.goal.region.width, pb.goal.region.width, "goal width") &&
         c.same(pa.goal.region.center, pb.goal.region.center, "goal center") &&
         c.same(pa.goal.region.orientation, pb.goal.region.orientation, "goal orientation") &&
         c.same_int(pa.goal.step_lo, pb.goal.step_lo, "goal step_lo") &&
         c.same_int(pa.goal.step_hi, pb.goal.step_hi, "goal step_hi") &&
         c.same(pa.goal.orientation, pb.goal.orientation, "goal orientation interval") &&
         c.same(pa.goal.velocity, pb.goal.velocity, "goal velocity interval");
}

// ---------------------------------------------------------------------------
// SVG

namespace {

std::string f3(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s{buf};
  if (s == "-0.000") s = "0.000";
  return s;
}

struct Canvas {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool any = false;
  double scale = 4.0;
  double margin = 20.0;

  void add(Vec2 p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return;
    if (!any) {
      min_x = max_x = p.x;
      min_y = max_y = p.y;
      any = true;
      return;
    }
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  double px(double x) const { return (x - min_x) * scale + margin; }
  double py(double y) const { return (max_y - y) * scale + margin; }  // svg y axis points down
  double width() const { return (max_x - min_x) * scale + 2 * margin; }
  double height() const { return (max_y - min_y) * scale + 2 * margin; }

  std::string points(const std::vector<Vec2>& pts) const {
    std::string out;
    for (const auto& p : pts) {
      if (!out.empty()) out += ' ';
      out += f3(px(p.x)) + "," + f3(py(p.y));
    }
    return out;
  }

  std::string rect(Vec2 center, double length, double width, double heading, const std::string& attrs) const {
    const double deg = -heading * 180.0 / std::numbers::pi;
    return "<rect " + attrs + " x=\"" + f3(-length * scale / 2) + "\" y=\"" + f3(-width * scale / 2) + "\" width=\"" +
           f3(length * scale) + "\" height=\"" + f3(width * scale) + "\" transform=\"translate(" + f3(px(center.x)) +
           " " + f3(py(center.y)) + ") rotate(" + f3(deg) + ")\"/>";
  }
};

std::vector<CrState> with_initial(const CrState& initial, const std::vector<CrState>& rest) {
  std::vector<CrState> out{initial};
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

std::string render_svg(const Scenario& sc, const SvgOptions& options) {
  Canvas cv;
  cv.scale = options.pixels_per_meter;
  cv.margin = options.margin;
  for (const auto& ll : sc.network.lanelets) {
    for (const auto& p : ll.left_bound) cv.add(p);
    for (const auto& p : ll.right_bound) cv.add(p);
  }
  for (const auto& o : sc.dynamic_obstacles) {
    cv.add(o.initial_state.position);
    for (const auto& s : o.trajectory) cv.add(s.position);
  }
  for (const auto& o : sc.static_obstacles) cv.add(o.initial_state.position);
  for (const auto& s : sc.ego_trajectory) cv.add(s.position);
  const auto& region = sc.planning_problem.goal.region;
  const bool has_goal = region.length > 0.0 && region.width > 0.0;
  if (has_goal) {
    const Vec2 u = unit(region.orientation) * (region.length / 2);
    const Vec2 n = left_normal(region.orientation) * (region.width / 2);
    for (const Vec2 corner : {u + n, u - n, n - u, Vec2{} - u - n}) cv.add(region.center + corner);
  }
  if (!cv.any) {
    cv.add({0.0, 0.0});
    cv.add({10.0, 10.0});
  }

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + f3(cv.width()) + "\" height=\"" +
         f3(cv.height()) + "\" viewBox=\"0 0 " + f3(cv.width()) + " " + f3(cv.height()) + "\">\n";
  out += "  <title>" + xml::escape(sc.info.benchmark_id) + "</title>\n";
  out += "  <rect class=\"background\" x=\"0\" y=\"0\" width=\"" + f3(cv.width()) + "\" height=\"" + f3(cv.height()) +
         "\" fill=\"#ffffff\"/>\n";
  out += "  <g class=\"canvas\">\n";

  out += "    <g class=\"lanelets\">\n";
  for (const auto& ll : sc.network.lanelets) {
    std::vector<Vec2> outline = ll.left_bound;
    outline.insert(outline.end(), ll.right_bound.rbegin(), ll.right_bound.rend());
    out += "      <polygon class=\"lanelet\" data-id=\"" + std::to_string(ll.id) + "\" points=\"" + cv.points(outline) +
           "\" fill=\"#e5e7eb\" stroke=\"none\"/>\n";
    out += "      <polyline class=\"lanelet-bound\" points=\"" + cv.points(ll.left_bound) +
           "\" fill=\"none\" stroke=\"#6b7280\" stroke-width=\"1\"/>\n";
    out += "      <polyline class=\"lanelet-bound\" points=\"" + cv.points(ll.right_bound) +
           "\" fill=\"none\" stroke=\"#6b7280\" stroke-width=\"1\"/>\n";
  }
  out += "    </g>\n";

  if (has_goal) {
    out += "    " +
           cv.rect(region.center, region.length, region.width, region.orientation,
                   "class=\"goal-region\" fill=\"#facc15\" fill-opacity=\"0.45\" stroke=\"#ca8a04\" stroke-width=\"1.5\"") +
           "\n";
  }

  out += "    <g class=\"obstacles\">\n";
  for (const auto& o : sc.static_obstacles) {
    out += "      " +
           cv.rect(o.initial_state.position, o.shape.length, o.shape.width, o.initial_state.orientation,
                   "class=\"static-obstacle\" data-id=\"" + std::to_string(o.id) + "\" fill=\"#57534e\"") +
           "\n";
  }
  auto draw_track = [&](const std::vector<CrState>& states, const Shape& shape, const std::string& id,
                        const std::string& color) {
    std::vector<Vec2> pts;
    for (const auto& s : states) pts.push_back(s.position);
    out += "      <polyline class=\"trajectory\" id=\"" + id + "\" points=\"" + cv.points(pts) +
           "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
    const int n = std::max(1, options.snapshots);
    if (states.empty() || shape.length <= 0.0) return;
    for (int i = 0; i < n; ++i) {
      const std::size_t idx = n == 1 ? 0 : (states.size() - 1) * static_cast<std::size_t>(i) / static_cast<std::size_t>(n - 1);
      const double opacity = 0.15 + 0.75 * (n == 1 ? 1.0 : static_cast<double>(i) / (n - 1));
      out += "      " +
             cv.rect(states[idx].position, shape.length, shape.width, states[idx].orientation,
                     "class=\"snapshot\" fill=\"" + color + "\" fill-opacity=\"" + f3(opacity) + "\"") +
             "\n";
    }
  };
  for (const auto& o : sc.dynamic_obstacles) {
    draw_track(with_initial(o.initial_state, o.trajectory), o.shape, "obstacle-" + std::to_string(o.id), "#ea580c");
  }
  out += "    </g>\n";

  out += "    <g class=\"ego\">\n";
  if (!sc.ego_trajectory.empty()) {
    draw_track(sc.ego_trajectory, sc.ego_shape, "ego", "#1d4ed8");
  }
  const CrState& init = sc.planning_problem.initial_state;
  out += "      <circle class=\"ego-initial\" cx=\"" + f3(cv.px(init.position.x)) + "\" cy=\"" +
         f3(cv.py(init.position.y)) + "\" r=\"4.000\" fill=\"#1d4ed8\" stroke=\"#ffffff\" stroke-width=\"1\"/>\n";
  out += "    </g>\n";
  out += "  </g>\n";
  out += "</svg>\n";
  return out;
}

}  // namespace osc2cr::cr
