#include "osc2cr/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "osc2cr/xml.hpp"

namespace osc2cr::sim {

using osc::ElementType;

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::Standby: return "standby";
    case Phase::Running: return "running";
    case Phase::Complete: return "complete";
  }
  return "";
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::StopTrigger: return "stop_trigger";
    case TerminationReason::AllComplete: return "all_complete";
    case TerminationReason::TMax: return "t_max";
  }
  return "";
}

Frame SimConfig::max_frame() const {
  if (!(dt_sim > 0.0) || !std::isfinite(dt_sim)) throw Error(ErrorCode::InvalidValue, "dt_sim must be positive");
  if (!(t_max >= dt_sim) || !std::isfinite(t_max)) throw Error(ErrorCode::InvalidValue, "t_max must be >= dt_sim");
  return static_cast<Frame>(std::floor(t_max / dt_sim + 1e-9));
}

const EntityTrace* SimulationTrace::find(std::string_view name) const {
  for (const auto& e : entities) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::optional<Frame> SimulationTrace::first_transition(std::string_view path, Phase phase) const {
  for (const auto& t : log) {
    if (t.entity.empty() && t.path == path && t.phase == phase) return t.frame;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Primitives

ConditionFilter::ConditionFilter(osc::Edge edge, Frame delay_frames) : edge_(edge), delay_(delay_frames) {}

bool ConditionFilter::update(bool raw) {
  bool edged = raw;
  if (edge_ != osc::Edge::None) {
    if (!previous_) {
      edged = false;  // frame 0 has no edge
    } else if (edge_ == osc::Edge::Rising) {
      edged = raw && !*previous_;
    } else if (edge_ == osc::Edge::Falling) {
      edged = !raw && *previous_;
    } else {
      edged = raw != *previous_;
    }
  }
  previous_ = raw;
  if (delay_ <= 0) return edged;
  pending_.push_back(edged);
  if (static_cast<Frame>(pending_.size()) <= delay_) return false;
  const bool out = pending_.front();
  pending_.pop_front();
  return out;
}

Frame delay_frames(double delay, double dt_sim) { return static_cast<Frame>(std::llround(delay / dt_sim)); }

double shape_fraction(osc::DynamicsShape shape, double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  switch (shape) {
    case osc::DynamicsShape::Step: return 1.0;
    case osc::DynamicsShape::Linear: return tau;
    case osc::DynamicsShape::Cubic: return tau * tau * (3.0 - 2.0 * tau);
    case osc::DynamicsShape::Sinusoidal: return 0.5 * (1.0 - std::cos(std::numbers::pi * tau));
  }
  return 1.0;
}

double shape_slope(osc::DynamicsShape shape, double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  switch (shape) {
    case osc::DynamicsShape::Step: return 0.0;
    case osc::DynamicsShape::Linear: return 1.0;
    case osc::DynamicsShape::Cubic: return 6.0 * tau * (1.0 - tau);
    case osc::DynamicsShape::Sinusoidal: return 0.5 * std::numbers::pi * std::sin(std::numbers::pi * tau);
  }
  return 0.0;
}

namespace {

// Position of a lane on the +t axis with lane 0 removed: ... -2 -> -1, -1 -> 0, 1 -> 1, 2 -> 2.
int lateral_rank(int lane) { return lane > 0 ? lane : lane + 1; }
int from_rank(int rank) { return rank >= 1 ? rank : rank - 1; }
// +1 when "left of driving direction" is the road's +t direction.
double left_sign(int lane) { return lane > 0 ? -1.0 : 1.0; }

}  // namespace

int step_lane(int lane_id, int steps) {
  const int dir = lane_id > 0 ? -1 : 1;
  return from_rank(lateral_rank(lane_id) + dir * steps);
}

int lane_steps(int from, int to) {
  const int dir = from > 0 ? -1 : 1;
  return dir * (lateral_rank(to) - lateral_rank(from));
}

namespace {

double road_t(const odr::OpenDriveMap& map, const LaneRef& ref) {
  const odr::Road* road = map.find(ref.road_id);
  if (road == nullptr) return ref.offset;
  return odr::lane_band(*road, ref.section, ref.lane_id, ref.s).center() + ref.offset;
}

bool compare(double value, osc::Rule rule, double threshold) {
  switch (rule) {
    case osc::Rule::LessThan: return value < threshold;
    case osc::Rule::GreaterThan: return value > threshold;
    case osc::Rule::EqualTo: return std::abs(value - threshold) <= 1e-9;
  }
  return false;
}

}  // namespace

double relative_distance(const EntityState& a, const EntityState& b, osc::DistanceAxis axis,
                         const odr::OpenDriveMap& map) {
  const Vec2 d = b.position() - a.position();
  if (axis == osc::DistanceAxis::Cartesian) return d.norm();
  const bool same_road = a.lane_ref && b.lane_ref && a.lane_ref->road_id == b.lane_ref->road_id;
  if (same_road) {
    if (axis == osc::DistanceAxis::Longitudinal) return std::abs(b.lane_ref->s - a.lane_ref->s);
    return std::abs(road_t(map, *b.lane_ref) - road_t(map, *a.lane_ref));
  }
  // b is in front when it lies ahead along a's heading
  const double front_heading = d.dot(unit(a.h)) >= 0.0 ? b.h : a.h;
  if (axis == osc::DistanceAxis::Longitudinal) return std::abs(d.dot(unit(front_heading)));
  return std::abs(d.dot(left_normal(front_heading)));
}

bool evaluate_raw(const osc::ConditionKind& condition, const Snapshot& snap, const odr::OpenDriveMap& map) {
  auto entity = [&](const std::string& name) -> const EntitySample* {
    auto it = snap.entities.find(name);
    return it == snap.entities.end() ? nullptr : &it->second;
  };
  return std::visit(
      [&](const auto& c) -> bool {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, osc::SimulationTimeCondition>) {
          return compare(static_cast<double>(snap.frame) * snap.dt_sim, c.rule, c.threshold);
        } else if constexpr (std::is_same_v<C, osc::RelativeDistanceCondition>) {
          const auto* a = entity(c.entity_a);
          const auto* b = entity(c.entity_b);
          if (a == nullptr || b == nullptr) return false;
          return compare(relative_distance(a->state, b->state, c.axis, map), c.rule, c.threshold);
        } else if constexpr (std::is_same_v<C, osc::SpeedCondition>) {
          const auto* e = entity(c.entity);
          return e != nullptr && compare(e->state.speed, c.rule, c.threshold);
        } else if constexpr (std::is_same_v<C, osc::TraveledDistanceCondition>) {
          const auto* e = entity(c.entity);
          return e != nullptr && e->traveled >= c.threshold;
        } else {
          auto it = snap.elements.find({c.type, c.element});
          if (it == snap.elements.end()) return false;
          return c.state == osc::ElementState::Complete ? it->second == Phase::Complete
                                                        : it->second == Phase::Running;
        }
      },
      condition);
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

bool is_vehicle(const std::string& category) { return category.rfind("VEHICLE", 0) == 0; }

std::optional<LaneRef> lane_ref_for_world(const odr::OpenDriveMap& map, Vec2 p, double heading) {
  auto rc = odr::project(map, p);
  if (!rc) return std::nullopt;
  const odr::Road* road = map.find(rc->road_id);
  const Pose lane_pose = odr::locate(*road, rc->section, rc->lane_id, rc->s, 0.0);
  if (std::abs(angle_diff(heading, lane_pose.heading)) >= std::numbers::pi / 2) return std::nullopt;
  const double center = odr::lane_band(*road, rc->section, rc->lane_id, rc->s).center();
  return LaneRef{rc->road_id, rc->section, rc->lane_id, rc->s, rc->t - center};
}

struct ResolvedPosition {
  Pose pose;
  std::optional<LaneRef> lane_ref;
};

ResolvedPosition resolve_position(const osc::Position& pos, const odr::OpenDriveMap& map, bool vehicle) {
  if (const auto* lp = std::get_if<osc::LanePosition>(&pos)) {
    Pose p;
    try {
      p = odr::locate(map, lp->road_id, lp->lane_id, lp->s, lp->offset);
    } catch (const Error& e) {
      throw Error(ErrorCode::UnresolvablePosition, e.what());
    }
    const odr::Road* road = map.find(lp->road_id);
    std::optional<LaneRef> ref;
    if (vehicle) ref = LaneRef{lp->road_id, road->section_index(lp->s), lp->lane_id, lp->s, lp->offset};
    return {p, ref};
  }
  const auto& wp = std::get<osc::WorldPosition>(pos);
  ResolvedPosition out{{{wp.x, wp.y}, wp.h}, std::nullopt};
  if (vehicle) out.lane_ref = lane_ref_for_world(map, out.pose.position, wp.h);
  return out;
}

}  // namespace

std::vector<EntityState> init_entities(const osc::ScenarioDocument& doc, const odr::OpenDriveMap& map) {
  std::vector<EntityState> states(doc.entities.size());
  std::vector<bool> placed(doc.entities.size(), false);
  auto index_of = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < doc.entities.size(); ++i) {
      if (doc.entities[i].name == name) return i;
    }
    return std::nullopt;
  };
  for (const auto& ia : doc.storyboard.init_actions) {
    auto idx = index_of(ia.entity);
    if (!idx) continue;
    const bool vehicle = is_vehicle(doc.entities[*idx].category);
    EntityState& st = states[*idx];
    if (const auto* tp = std::get_if<osc::Teleport>(&ia.action)) {
      ResolvedPosition rp = resolve_position(tp->position, map, vehicle);
      st.x = rp.pose.position.x;
      st.y = rp.pose.position.y;
      st.h = rp.pose.heading;
      st.lane_ref = rp.lane_ref;
      placed[*idx] = true;
    } else if (const auto* sa = std::get_if<osc::SpeedAbsolute>(&ia.action)) {
      st.speed = std::max(0.0, sa->target);
    } else if (const auto* sr = std::get_if<osc::SpeedRelative>(&ia.action)) {
      if (auto ref = index_of(sr->reference)) st.speed = std::max(0.0, states[*ref].speed + sr->delta);
    }
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!placed[i]) throw Error(ErrorCode::MissingInitPosition, doc.entities[i].name);
  }
  return states;
}

// ---------------------------------------------------------------------------
// Simulator

namespace {

enum Domain : unsigned { kLongitudinal = 1u, kLateral = 2u };

unsigned domain_of(const osc::ActionKind& a) {
  if (std::holds_alternative<osc::SpeedAbsolute>(a) || std::holds_alternative<osc::SpeedRelative>(a)) {
    return kLongitudinal;
  }
  if (std::holds_alternative<osc::FollowPolyline>(a)) return kLongitudinal | kLateral;
  return kLateral;
}

struct TriggerRuntime {
  const osc::Trigger* trigger = nullptr;
  std::string key;
  std::vector<std::vector<ConditionFilter>> filters;
  bool value = false;
};

struct SpeedProfile {
  double v0 = 0.0;
  double v1 = 0.0;
  double duration = 0.0;
  osc::DynamicsShape shape = osc::DynamicsShape::Step;
  std::optional<std::size_t> continuous_ref;
  double delta = 0.0;
};

struct LaneChangeProfile {
  int steps = 0;
  double off0_left = 0.0;
  double target_offset = 0.0;  // road t direction, relative to the target lane center
  double duration = 0.0;
  osc::DynamicsShape shape = osc::DynamicsShape::Step;
};

struct PolylineProfile {
  std::vector<std::pair<double, Pose>> vertices;
  bool absolute = false;
};

struct TeleportProfile {
  ResolvedPosition target;
};

struct Instance {
  std::size_t node = 0;
  std::size_t entity = 0;
  unsigned domain = 0;
  Phase phase = Phase::Running;
  Frame start = 0;
  bool done = false;
  std::variant<SpeedProfile, LaneChangeProfile, PolylineProfile, TeleportProfile> profile;
};

struct ActionNode {
  std::string path;
  const osc::Action* action = nullptr;
  std::size_t event = 0;
  Phase phase = Phase::Standby;
  std::vector<std::size_t> instances;
};

struct EventRuntime {
  std::string path;
  const osc::Event* event = nullptr;
  std::size_t maneuver = 0;
  Phase phase = Phase::Standby;
  int executions = 0;
  TriggerRuntime start;
  std::vector<std::size_t> nodes;
};

struct ManeuverRuntime {
  std::string path;
  std::string name;
  std::size_t group = 0;
  Phase phase = Phase::Standby;
  std::vector<std::size_t> events;
};

struct GroupRuntime {
  std::string path;
  std::string name;
  std::size_t act = 0;
  Phase phase = Phase::Standby;
  std::vector<std::size_t> maneuvers;
  std::vector<std::size_t> actors;
};

struct ActRuntime {
  std::string path;
  std::string name;
  std::size_t story = 0;
  Phase phase = Phase::Standby;
  TriggerRuntime start;
  TriggerRuntime stop;
  std::vector<std::size_t> groups;
};

struct StoryRuntime {
  std::string path;
  std::string name;
  Phase phase = Phase::Running;
  std::vector<std::size_t> acts;
};

struct EntityRuntime {
  std::string name;
  std::string category;
  osc::BoundingBox box;
  std::optional<osc::Performance> performance;
  bool vehicle = false;
  double traveled = 0.0;
};

}  // namespace

struct Simulator::Impl {
  const osc::ScenarioDocument& doc;
  const odr::OpenDriveMap& map;
  const LaneletNetwork& network;
  SimConfig config;
  RunOptions options;
  Frame max_frame = 0;
  Frame frame = 0;
  bool finished = false;

  std::vector<EntityRuntime> entities;
  std::vector<EntityState> current;
  std::vector<StoryRuntime> stories;
  std::vector<ActRuntime> acts;
  std::vector<GroupRuntime> groups;
  std::vector<ManeuverRuntime> maneuvers;
  std::vector<EventRuntime> events;
  std::vector<ActionNode> nodes;
  std::vector<Instance> instances;
  TriggerRuntime stop_trigger;
  SimulationTrace trace;

  struct LaneletInfo {
    double start_heading = 0.0;
    double end_heading = 0.0;
  };
  std::map<int, LaneletInfo> lanelet_info;
  std::map<std::tuple<std::string, std::size_t, int>, int> lanelet_index;

  Impl(const osc::ScenarioDocument& d, const odr::OpenDriveMap& m, const LaneletNetwork& n, SimConfig c,
       RunOptions o)
      : doc(d), map(m), network(n), config(c), options(o) {
    max_frame = config.max_frame();
    trace.dt_sim = config.dt_sim;
    index_network();
    build_entities();
    build_storyboard();
    record(true);
    // empty containers complete immediately
    propagate();
  }

  // -- setup ---------------------------------------------------------------

  void index_network() {
    for (const auto& ll : network.lanelets) {
      if (ll.source) lanelet_index[{ll.source->road_id, ll.source->section, ll.source->lane_id}] = ll.id;
      const Polyline c = ll.centerline();
      LaneletInfo info;
      if (c.size() >= 2) {
        const Vec2 a = c[1] - c[0];
        const Vec2 b = c[c.size() - 1] - c[c.size() - 2];
        info.start_heading = std::atan2(a.y, a.x);
        info.end_heading = std::atan2(b.y, b.x);
      }
      lanelet_info[ll.id] = info;
    }
  }

  void build_entities() {
    current = init_entities(doc, map);
    for (const auto& e : doc.entities) {
      entities.push_back({e.name, e.category, e.bounding_box, e.performance, is_vehicle(e.category), 0.0});
      trace.entities.push_back({e.name, e.category, e.bounding_box, {}});
    }
  }

  std::optional<std::size_t> entity_index(std::string_view name) const {
    for (std::size_t i = 0; i < entities.size(); ++i) {
      if (entities[i].name == name) return i;
    }
    return std::nullopt;
  }

  TriggerRuntime make_trigger(const std::optional<osc::Trigger>& t, std::string key) {
    TriggerRuntime rt;
    rt.key = std::move(key);
    if (!t) return rt;
    rt.trigger = &*t;
    for (const auto& g : t->groups) {
      auto& row = rt.filters.emplace_back();
      for (const auto& c : g.conditions) row.emplace_back(c.edge, delay_frames(c.delay, config.dt_sim));
    }
    return rt;
  }

  void build_storyboard() {
    const auto& sb = doc.storyboard;
    stop_trigger = make_trigger(sb.stop_trigger, "storyboard:stop");
    for (const auto& st : sb.stories) {
      const std::size_t si = stories.size();
      stories.push_back({st.name, st.name, Phase::Running, {}});
      log(stories[si].path, ElementType::Story, Phase::Running, 0);
      for (const auto& act : st.acts) {
        const std::size_t ai = acts.size();
        const std::string apath = st.name + "/" + act.name;
        acts.push_back({apath, act.name, si, Phase::Standby, make_trigger(act.start_trigger, apath + ":start"),
                        make_trigger(act.stop_trigger, apath + ":stop"), {}});
        stories[si].acts.push_back(ai);
        for (const auto& mg : act.maneuver_groups) {
          const std::size_t gi = groups.size();
          const std::string gpath = apath + "/" + mg.name;
          GroupRuntime g{gpath, mg.name, ai, Phase::Standby, {}, {}};
          for (const auto& actor : mg.actors) {
            if (auto idx = entity_index(actor)) g.actors.push_back(*idx);
          }
          if (mg.maximum_execution_count > 1) {
            trace.diagnostics.push_back({Severity::Warning,
                                         "maneuver group '" + mg.name + "' runs once; repeated execution unsupported",
                                         std::nullopt});
          }
          groups.push_back(std::move(g));
          acts[ai].groups.push_back(gi);
          for (const auto& m : mg.maneuvers) {
            const std::size_t mi = maneuvers.size();
            const std::string mpath = gpath + "/" + m.name;
            maneuvers.push_back({mpath, m.name, gi, Phase::Standby, {}});
            groups[gi].maneuvers.push_back(mi);
            for (const auto& ev : m.events) {
              const std::size_t ei = events.size();
              const std::string epath = mpath + "/" + ev.name;
              events.push_back({epath, &ev, mi, Phase::Standby, 0, make_trigger(ev.start_trigger, epath + ":start"), {}});
              maneuvers[mi].events.push_back(ei);
              for (const auto& a : ev.actions) {
                const std::size_t ni = nodes.size();
                nodes.push_back({epath + "/" + a.name, &a, ei, Phase::Standby, {}});
                events[ei].nodes.push_back(ni);
              }
            }
          }
        }
      }
    }
  }

  // -- bookkeeping ---------------------------------------------------------

  void log(const std::string& path, ElementType type, Phase phase, Frame f, const std::string& entity = {}) {
    trace.log.push_back({path, type, entity, phase, f});
  }

  Snapshot snapshot() const {
    Snapshot s;
    s.frame = frame;
    s.dt_sim = config.dt_sim;
    for (std::size_t i = 0; i < entities.size(); ++i) s.entities.emplace(entities[i].name, EntitySample{current[i], entities[i].traveled});
    for (const auto& st : stories) s.elements.emplace(std::pair{ElementType::Story, st.name}, st.phase);
    for (const auto& a : acts) s.elements.emplace(std::pair{ElementType::Act, a.name}, a.phase);
    for (const auto& g : groups) s.elements.emplace(std::pair{ElementType::ManeuverGroup, g.name}, g.phase);
    for (const auto& m : maneuvers) s.elements.emplace(std::pair{ElementType::Maneuver, m.name}, m.phase);
    for (const auto& e : events) s.elements.emplace(std::pair{ElementType::Event, e.event->name}, e.phase);
    for (const auto& n : nodes) s.elements.emplace(std::pair{ElementType::Action, n.action->name}, n.phase);
    return s;
  }

  void evaluate(TriggerRuntime& rt, const Snapshot& snap) {
    rt.value = false;
    if (rt.trigger == nullptr) return;
    for (std::size_t g = 0; g < rt.trigger->groups.size(); ++g) {
      bool all = true;
      const auto& conds = rt.trigger->groups[g].conditions;
      for (std::size_t c = 0; c < conds.size(); ++c) {
        // every filter sees every frame so edges and delays stay aligned
        const bool v = rt.filters[g][c].update(evaluate_raw(conds[c].kind, snap, map));
        if (v && options.record_conditions) {
          trace.condition_log[rt.key + "#" + std::to_string(g) + "." + std::to_string(c)].push_back(frame);
        }
        all = all && v;
      }
      rt.value = rt.value || all;
    }
  }

  void record(bool initial) {
    for (std::size_t i = 0; i < entities.size(); ++i) {
      EntityState st = current[i];
      st.frame = frame;
      if (initial) st.wheel_angle = 0.0;
      trace.entities[i].states.push_back(std::move(st));
    }
  }

  // -- lifecycle -----------------------------------------------------------

  void complete_instance(std::size_t ii, Frame f) {
    Instance& in = instances[ii];
    if (in.phase != Phase::Running) return;
    in.phase = Phase::Complete;
    ActionNode& node = nodes[in.node];
    log(node.path, ElementType::Action, Phase::Complete, f, entities[in.entity].name);
    const bool node_done = std::all_of(node.instances.begin(), node.instances.end(),
                                       [&](std::size_t j) { return instances[j].phase == Phase::Complete; });
    if (node_done && node.phase == Phase::Running) {
      node.phase = Phase::Complete;
      log(node.path, ElementType::Action, Phase::Complete, f);
      maybe_complete_event(node.event, f);
    }
  }

  void maybe_complete_event(std::size_t ei, Frame f) {
    EventRuntime& ev = events[ei];
    if (ev.phase != Phase::Running) return;
    const bool done = std::all_of(ev.nodes.begin(), ev.nodes.end(),
                                  [&](std::size_t n) { return nodes[n].phase == Phase::Complete; });
    if (!done) return;
    ev.phase = Phase::Complete;
    log(ev.path, ElementType::Event, Phase::Complete, f);
    if (ev.executions < ev.event->maximum_execution_count) {
      ev.phase = Phase::Standby;
      log(ev.path, ElementType::Event, Phase::Standby, f);
      for (auto n : ev.nodes) nodes[n].phase = Phase::Standby;
    }
  }

  void terminate_event(std::size_t ei, Frame f) {
    for (auto n : events[ei].nodes) {
      for (auto ii : nodes[n].instances) complete_instance(ii, f);
      if (nodes[n].phase == Phase::Running) {
        nodes[n].phase = Phase::Complete;
        log(nodes[n].path, ElementType::Action, Phase::Complete, f);
      }
    }
    maybe_complete_event(ei, f);
  }

  void propagate() {
    const Frame f = frame;
    for (auto& m : maneuvers) {
      if (m.phase != Phase::Running) continue;
      if (std::all_of(m.events.begin(), m.events.end(), [&](std::size_t e) { return events[e].phase == Phase::Complete; })) {
        m.phase = Phase::Complete;
        log(m.path, ElementType::Maneuver, Phase::Complete, f);
      }
    }
    for (auto& g : groups) {
      if (g.phase != Phase::Running) continue;
      if (std::all_of(g.maneuvers.begin(), g.maneuvers.end(),
                      [&](std::size_t m) { return maneuvers[m].phase == Phase::Complete; })) {
        g.phase = Phase::Complete;
        log(g.path, ElementType::ManeuverGroup, Phase::Complete, f);
      }
    }
    for (auto& a : acts) {
      if (a.phase != Phase::Running) continue;
      if (std::all_of(a.groups.begin(), a.groups.end(), [&](std::size_t g) { return groups[g].phase == Phase::Complete; })) {
        a.phase = Phase::Complete;
        log(a.path, ElementType::Act, Phase::Complete, f);
      }
    }
    for (auto& s : stories) {
      if (s.phase != Phase::Running) continue;
      if (std::all_of(s.acts.begin(), s.acts.end(), [&](std::size_t a) { return acts[a].phase == Phase::Complete; })) {
        s.phase = Phase::Complete;
        log(s.path, ElementType::Story, Phase::Complete, f);
      }
    }
  }

  void start_act(std::size_t ai) {
    ActRuntime& act = acts[ai];
    act.phase = Phase::Running;
    log(act.path, ElementType::Act, Phase::Running, frame);
    for (auto gi : act.groups) {
      groups[gi].phase = Phase::Running;
      log(groups[gi].path, ElementType::ManeuverGroup, Phase::Running, frame);
      for (auto mi : groups[gi].maneuvers) {
        maneuvers[mi].phase = Phase::Running;
        log(maneuvers[mi].path, ElementType::Maneuver, Phase::Running, frame);
      }
    }
  }

  void stop_act(std::size_t ai) {
    ActRuntime& act = acts[ai];
    for (auto gi : act.groups) {
      for (auto mi : groups[gi].maneuvers) {
        for (auto ei : maneuvers[mi].events) {
          if (events[ei].phase == Phase::Running) terminate_event(ei, frame);
        }
        if (maneuvers[mi].phase == Phase::Running) {
          maneuvers[mi].phase = Phase::Complete;
          log(maneuvers[mi].path, ElementType::Maneuver, Phase::Complete, frame);
        }
      }
      if (groups[gi].phase == Phase::Running) {
        groups[gi].phase = Phase::Complete;
        log(groups[gi].path, ElementType::ManeuverGroup, Phase::Complete, frame);
      }
    }
    act.phase = Phase::Complete;
    log(act.path, ElementType::Act, Phase::Complete, frame);
  }

  void diagnose(std::string msg) { trace.diagnostics.push_back({Severity::Warning, std::move(msg), std::nullopt}); }

  void try_start_event(std::size_t ei) {
    EventRuntime& ev = events[ei];
    const ManeuverRuntime& man = maneuvers[ev.maneuver];
    if (ev.event->priority == osc::Priority::Skip) {
      for (auto other : man.events) {
        if (other != ei && events[other].phase == Phase::Running) return;
      }
    } else if (ev.event->priority == osc::Priority::Overwrite) {
      for (auto other : man.events) {
        if (other != ei && events[other].phase == Phase::Running) terminate_event(other, frame);
      }
    }
    ev.phase = Phase::Running;
    ev.executions += 1;
    log(ev.path, ElementType::Event, Phase::Running, frame);
    const auto& actors = groups[man.group].actors;
    for (auto ni : ev.nodes) {
      ActionNode& node = nodes[ni];
      node.phase = Phase::Running;
      node.instances.clear();
      log(node.path, ElementType::Action, Phase::Running, frame);
      for (auto entity : actors) start_instance(ni, entity);
      if (node.instances.empty()) {
        node.phase = Phase::Complete;
        log(node.path, ElementType::Action, Phase::Complete, frame);
      } else {
        const bool done = std::all_of(node.instances.begin(), node.instances.end(),
                                      [&](std::size_t j) { return instances[j].phase == Phase::Complete; });
        if (done && node.phase == Phase::Running) {
          node.phase = Phase::Complete;
          log(node.path, ElementType::Action, Phase::Complete, frame);
        }
      }
    }
    maybe_complete_event(ei, frame);
  }

  double transition_duration(const osc::TransitionDynamics& d, double delta, double mean_speed) {
    if (d.shape == osc::DynamicsShape::Step) return 0.0;
    switch (d.dimension) {
      case osc::DynamicsDimension::Time: return d.value;
      case osc::DynamicsDimension::Rate: return d.value > 0.0 ? std::abs(delta) / d.value : 0.0;
      case osc::DynamicsDimension::Distance: return mean_speed > 0.0 ? d.value / mean_speed : 0.0;
    }
    return 0.0;
  }

  double clamp_speed(std::size_t entity, double v) const {
    v = std::max(0.0, v);
    if (entities[entity].performance) v = std::min(v, entities[entity].performance->max_speed);
    return v;
  }

  void start_instance(std::size_t ni, std::size_t entity) {
    const osc::ActionKind& kind = nodes[ni].action->kind;
    Instance in;
    in.node = ni;
    in.entity = entity;
    in.domain = domain_of(kind);
    in.start = frame;
    const EntityState& st = current[entity];
    const std::string& name = entities[entity].name;
    bool aborted = false;

    if (const auto* sa = std::get_if<osc::SpeedAbsolute>(&kind)) {
      SpeedProfile p{st.speed, clamp_speed(entity, sa->target), 0.0, sa->dynamics.shape, std::nullopt, 0.0};
      p.duration = transition_duration(sa->dynamics, p.v1 - p.v0, 0.5 * (p.v0 + p.v1));
      in.profile = p;
    } else if (const auto* sr = std::get_if<osc::SpeedRelative>(&kind)) {
      auto ref = entity_index(sr->reference);
      const double ref_speed = ref ? current[*ref].speed : 0.0;
      SpeedProfile p{st.speed, clamp_speed(entity, ref_speed + sr->delta), 0.0, sr->dynamics.shape, std::nullopt,
                     sr->delta};
      p.duration = transition_duration(sr->dynamics, p.v1 - p.v0, 0.5 * (p.v0 + p.v1));
      if (sr->continuous) p.continuous_ref = ref;
      in.profile = p;
    } else if (std::holds_alternative<osc::LaneChangeRelative>(kind) ||
               std::holds_alternative<osc::LaneChangeAbsolute>(kind)) {
      if (!st.lane_ref) {
        diagnose("lane change for '" + name + "' ignored: entity is not on a lane");
        aborted = true;
      } else {
        const LaneRef& ref = *st.lane_ref;
        std::optional<int> target;
        osc::TransitionDynamics dyn;
        double target_offset = 0.0;
        if (const auto* rel = std::get_if<osc::LaneChangeRelative>(&kind)) {
          dyn = rel->dynamics;
          target_offset = rel->target_offset;
          auto r = entity_index(rel->reference);
          if (r && current[*r].lane_ref) target = step_lane(current[*r].lane_ref->lane_id, rel->lane_delta);
        } else {
          const auto& abs = std::get<osc::LaneChangeAbsolute>(kind);
          dyn = abs.dynamics;
          target_offset = abs.target_offset;
          target = abs.target_lane;
        }
        if (!target || !lane_usable(ref, *target)) {
          diagnose("TargetLaneMissing: lane change of '" + name + "' to lane " +
                   (target ? std::to_string(*target) : std::string{"?"}) + " on road " + ref.road_id + " aborted");
          aborted = true;
        } else {
          LaneChangeProfile p;
          p.steps = lane_steps(ref.lane_id, *target);
          p.off0_left = left_sign(ref.lane_id) * ref.offset;
          p.target_offset = target_offset;
          p.shape = dyn.shape;
          const double delta_left = lateral_gap_left(ref, *target, target_offset, p.off0_left);
          p.duration = dyn.dimension == osc::DynamicsDimension::Distance
                           ? transition_duration(dyn, delta_left, st.speed)
                           : transition_duration(dyn, delta_left, 0.0);
          in.profile = p;
        }
      }
    } else if (const auto* fp = std::get_if<osc::FollowPolyline>(&kind)) {
      PolylineProfile p;
      p.absolute = fp->absolute_time;
      try {
        for (const auto& v : fp->vertices) p.vertices.emplace_back(v.time, resolve_position(v.position, map, false).pose);
        in.profile = std::move(p);
      } catch (const Error& e) {
        diagnose("polyline for '" + name + "' ignored: " + e.what());
        aborted = true;
      }
    } else if (const auto* tp = std::get_if<osc::Teleport>(&kind)) {
      try {
        in.profile = TeleportProfile{resolve_position(tp->position, map, entities[entity].vehicle)};
      } catch (const Error& e) {
        diagnose("teleport of '" + name + "' ignored: " + e.what());
        aborted = true;
      }
    }

    // a new action takes over its control domain on this entity
    if (!aborted) {
      for (std::size_t j = 0; j < instances.size(); ++j) {
        if (instances[j].phase == Phase::Running && instances[j].entity == entity && (instances[j].domain & in.domain)) {
          complete_instance(j, frame);
        }
      }
    }
    const std::size_t ii = instances.size();
    in.phase = Phase::Running;
    instances.push_back(std::move(in));
    nodes[ni].instances.push_back(ii);
    log(nodes[ni].path, ElementType::Action, Phase::Running, frame, name);
    if (aborted) complete_instance(ii, frame);
  }

  // -- lane geometry helpers ---------------------------------------------------

  bool lane_usable(const LaneRef& ref, int lane) const {
    const odr::Road* road = map.find(ref.road_id);
    if (road == nullptr || lane == 0) return false;
    if (road->sections[ref.section].find(lane) == nullptr) return false;
    return odr::lane_band(*road, ref.section, lane, ref.s).width() > 1e-9;
  }

  double lateral_gap_left(const LaneRef& ref, int target, double target_offset, double off0_left) const {
    const odr::Road* road = map.find(ref.road_id);
    const double c_src = odr::lane_band(*road, ref.section, ref.lane_id, ref.s).center();
    const double c_tgt = odr::lane_band(*road, ref.section, target, ref.s).center();
    return left_sign(ref.lane_id) * (c_tgt - c_src) + left_sign(target) * target_offset - off0_left;
  }

  std::optional<int> successor_lanelet(int lanelet_id) const {
    const Lanelet* ll = network.find(lanelet_id);
    if (ll == nullptr || ll->successors.empty()) return std::nullopt;
    const double end_heading = lanelet_info.at(lanelet_id).end_heading;
    std::optional<int> best;
    double best_dev = std::numeric_limits<double>::infinity();
    for (int succ : ll->successors) {  // ascending ids: ties keep the lowest
      const double dev = std::abs(angle_diff(lanelet_info.at(succ).start_heading, end_heading));
      if (dev < best_dev - 1e-12) {
        best_dev = dev;
        best = succ;
      }
    }
    return best;
  }

  /// Moves `ref` by `distance` along its driving direction across section and
  /// road boundaries. Returns false at a dead end (ref left at the boundary).
  bool advance(LaneRef& ref, double distance) {
    for (int guard = 0; guard < 1000; ++guard) {
      const odr::Road* road = map.find(ref.road_id);
      const double s0 = road->sections[ref.section].s_start;
      const double s1 = road->section_end(ref.section);
      const int dir = odr::travel_direction(ref.lane_id);
      const double target = ref.s + dir * distance;
      if (target >= s0 && target <= s1) {
        ref.s = target;
        return true;
      }
      const double boundary = dir > 0 ? s1 : s0;
      const double remaining = std::abs(target - boundary);
      std::optional<LaneRef> next;
      auto it = lanelet_index.find({ref.road_id, ref.section, ref.lane_id});
      if (it != lanelet_index.end()) {
        if (auto succ = successor_lanelet(it->second)) {
          const LaneletSource& src = *network.find(*succ)->source;
          const odr::Road* nroad = map.find(src.road_id);
          const double ns = src.lane_id > 0 ? nroad->section_end(src.section) : nroad->sections[src.section].s_start;
          next = LaneRef{src.road_id, src.section, src.lane_id, ns, ref.offset};
        }
      } else {
        const std::size_t ns = dir > 0 ? ref.section + 1 : ref.section - 1;
        const bool inside = dir > 0 ? ref.section + 1 < road->sections.size() : ref.section > 0;
        if (inside && road->sections[ns].find(ref.lane_id) != nullptr) {
          next = LaneRef{ref.road_id, ns, ref.lane_id, boundary, ref.offset};
        }
      }
      if (!next) {
        ref.s = boundary;
        return false;
      }
      if ((next->lane_id > 0) != (ref.lane_id > 0)) next->offset = -next->offset;
      ref = *next;
      distance = remaining;
    }
    return false;
  }

  // -- integration -------------------------------------------------------------

  struct Motion {
    std::optional<std::size_t> speed;
    std::optional<std::size_t> lateral;
    std::optional<std::size_t> polyline;
    std::optional<std::size_t> teleport;
  };

  EntityState integrate(std::size_t ei, const Motion& m) {
    const EntityState& cur = current[ei];
    EntityState next = cur;
    const double dt = config.dt_sim;
    const double t_next = static_cast<double>(frame + 1) * dt;

    if (m.teleport) {
      Instance& in = instances[*m.teleport];
      const auto& tp = std::get<TeleportProfile>(in.profile);
      next.x = tp.target.pose.position.x;
      next.y = tp.target.pose.position.y;
      next.h = tp.target.pose.heading;
      next.lane_ref = tp.target.lane_ref;
      in.done = true;
      return next;
    }

    // longitudinal
    double speed = cur.speed;
    if (m.speed) {
      Instance& in = instances[*m.speed];
      auto& p = std::get<SpeedProfile>(in.profile);
      if (p.continuous_ref) p.v1 = clamp_speed(ei, current[*p.continuous_ref].speed + p.delta);
      const double elapsed = static_cast<double>(frame + 1 - in.start) * dt;
      const double tau = p.duration > 0.0 ? elapsed / p.duration : 1.0;
      speed = p.v0 + (p.v1 - p.v0) * shape_fraction(p.shape, tau);
      if (tau >= 1.0 - 1e-9) {
        speed = p.v1;
        if (!p.continuous_ref) in.done = true;
      }
    }
    if (const auto& perf = entities[ei].performance) {
      speed = std::clamp(speed, cur.speed - perf->max_decel * dt, cur.speed + perf->max_accel * dt);
    }
    speed = clamp_speed(ei, speed);
    next.speed = speed;

    if (m.polyline) {
      Instance& in = instances[*m.polyline];
      const auto& p = std::get<PolylineProfile>(in.profile);
      const double t = p.absolute ? t_next : static_cast<double>(frame + 1 - in.start) * dt;
      const auto& v = p.vertices;
      next.lane_ref.reset();
      auto seg_heading = [&](std::size_t i, double fallback) {
        const Vec2 d = v[i + 1].second.position - v[i].second.position;
        return d.norm() > 1e-12 ? std::atan2(d.y, d.x) : fallback;
      };
      auto seg_speed = [&](std::size_t i) {
        return (v[i + 1].second.position - v[i].second.position).norm() / (v[i + 1].first - v[i].first);
      };
      if (t >= v.back().first - 1e-12) {
        const std::size_t i = v.size() - 2;
        next.x = v.back().second.position.x;
        next.y = v.back().second.position.y;
        next.h = seg_heading(i, cur.h);
        next.speed = seg_speed(i);
        in.done = true;
      } else if (t <= v.front().first) {
        next.x = v.front().second.position.x;
        next.y = v.front().second.position.y;
        next.speed = 0.0;
      } else {
        std::size_t i = 0;
        while (i + 2 < v.size() && t >= v[i + 1].first) ++i;
        const double w = (t - v[i].first) / (v[i + 1].first - v[i].first);
        next.x = lerp(v[i].second.position.x, v[i + 1].second.position.x, w);
        next.y = lerp(v[i].second.position.y, v[i + 1].second.position.y, w);
        next.h = seg_heading(i, cur.h);
        next.speed = seg_speed(i);
      }
      return next;
    }

    if (cur.lane_ref && entities[ei].vehicle) {
      LaneRef ref = *cur.lane_ref;
      if (!advance(ref, speed * dt)) next.speed = 0.0;
      double heading_offset = 0.0;
      if (m.lateral) {
        Instance& in = instances[*m.lateral];
        const auto& p = std::get<LaneChangeProfile>(in.profile);
        const int target = step_lane(ref.lane_id, p.steps);
        if (!lane_usable(ref, target)) {
          diagnose("TargetLaneMissing: lane change of '" + entities[ei].name + "' lost its target lane on road " +
                   ref.road_id + "; aborted");
          in.done = true;
        } else {
          const double elapsed = static_cast<double>(frame + 1 - in.start) * dt;
          const double tau = p.duration > 0.0 ? elapsed / p.duration : 1.0;
          const double gap = lateral_gap_left(ref, target, p.target_offset, p.off0_left);
          if (tau >= 1.0 - 1e-9) {
            ref.lane_id = target;
            ref.offset = p.target_offset;
            in.done = true;
          } else {
            const double off_left = p.off0_left + gap * shape_fraction(p.shape, tau);
            ref.offset = left_sign(ref.lane_id) * off_left;
            const double lat_rate = gap * shape_slope(p.shape, tau) / p.duration;
            heading_offset = std::atan2(lat_rate, std::max(speed, 1e-9));
          }
        }
      }
      const odr::Road* road = map.find(ref.road_id);
      const Pose pose = odr::locate(*road, ref.section, ref.lane_id, ref.s, ref.offset);
      next.x = pose.position.x;
      next.y = pose.position.y;
      next.h = normalize_angle(pose.heading + heading_offset);
      next.lane_ref = ref;
      return next;
    }

    if (m.lateral) instances[*m.lateral].done = true;
    const Vec2 p = cur.position() + unit(cur.h) * (speed * dt);
    next.x = p.x;
    next.y = p.y;
    return next;
  }

  // -- main loop ---------------------------------------------------------------

  void finish(TerminationReason reason) {
    finished = true;
    trace.reason = reason;
  }

  bool step() {
    if (finished) return false;
    const Snapshot snap = snapshot();
    evaluate(stop_trigger, snap);
    for (auto& a : acts) {
      evaluate(a.start, snap);
      evaluate(a.stop, snap);
    }
    for (auto& e : events) evaluate(e.start, snap);

    if (stop_trigger.value) {
      finish(TerminationReason::StopTrigger);
      return false;
    }
    if (std::all_of(stories.begin(), stories.end(), [](const StoryRuntime& s) { return s.phase == Phase::Complete; })) {
      finish(TerminationReason::AllComplete);
      return false;
    }
    if (frame >= max_frame) {
      finish(TerminationReason::TMax);
      return false;
    }

    for (std::size_t ai = 0; ai < acts.size(); ++ai) {
      ActRuntime& act = acts[ai];
      if (act.phase == Phase::Standby && (act.start.trigger == nullptr || act.start.value)) {
        start_act(ai);
      } else if (act.phase == Phase::Running && act.stop.trigger != nullptr && act.stop.value) {
        stop_act(ai);
      }
    }
    for (std::size_t ei = 0; ei < events.size(); ++ei) {
      EventRuntime& ev = events[ei];
      const ManeuverRuntime& man = maneuvers[ev.maneuver];
      if (acts[groups[man.group].act].phase != Phase::Running || man.phase != Phase::Running) continue;
      if (ev.phase != Phase::Standby) continue;
      if (ev.start.trigger == nullptr || ev.start.value) try_start_event(ei);
    }
    propagate();

    std::vector<Motion> motion(entities.size());
    for (std::size_t ii = 0; ii < instances.size(); ++ii) {
      const Instance& in = instances[ii];
      if (in.phase != Phase::Running) continue;
      Motion& m = motion[in.entity];
      std::visit(
          [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SpeedProfile>) m.speed = ii;
            if constexpr (std::is_same_v<P, LaneChangeProfile>) m.lateral = ii;
            if constexpr (std::is_same_v<P, PolylineProfile>) m.polyline = ii;
            if constexpr (std::is_same_v<P, TeleportProfile>) m.teleport = ii;
          },
          in.profile);
    }
    std::vector<EntityState> next(entities.size());
    for (std::size_t ei = 0; ei < entities.size(); ++ei) next[ei] = integrate(ei, motion[ei]);

    for (std::size_t ei = 0; ei < entities.size(); ++ei) {
      const Vec2 d = next[ei].position() - current[ei].position();
      const double dist = d.norm();
      entities[ei].traveled += dist;
      next[ei].wheel_angle = 0.0;
      if (entities[ei].vehicle && dist > 1e-9) {
        const double curvature = angle_diff(next[ei].h, current[ei].h) / dist;
        next[ei].wheel_angle = std::atan(0.6 * entities[ei].box.length * curvature);
      }
    }
    current = std::move(next);
    frame += 1;
    record(false);
    for (std::size_t ii = 0; ii < instances.size(); ++ii) {
      if (instances[ii].phase == Phase::Running && instances[ii].done) complete_instance(ii, frame);
    }
    propagate();
    return true;
  }
};

Simulator::Simulator(const osc::ScenarioDocument& document, const odr::OpenDriveMap& map,
                     const LaneletNetwork& network, SimConfig config, RunOptions options)
    : impl_(std::make_unique<Impl>(document, map, network, config, options)) {}

Simulator::~Simulator() = default;

bool Simulator::step() { return impl_->step(); }
bool Simulator::finished() const { return impl_->finished; }
Frame Simulator::frame() const { return impl_->frame; }
const SimulationTrace& Simulator::trace() const { return impl_->trace; }
SimulationTrace Simulator::take_trace() { return std::move(impl_->trace); }

SimulationTrace run(const osc::ScenarioDocument& document, const odr::OpenDriveMap& map,
                    const LaneletNetwork& network, SimConfig config, RunOptions options) {
  Simulator sim(document, map, network, config, options);
  while (sim.step()) {
  }
  return sim.take_trace();
}

std::string trace_csv(const SimulationTrace& trace) {
  std::string out = "frame,name,x,y,h,speed,wheel_angle\n";
  if (trace.entities.empty()) return out;
  const std::size_t n = trace.entities.front().states.size();
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& e : trace.entities) {
      const EntityState& s = e.states[k];
      out += std::to_string(s.frame) + "," + e.name + "," + xml::fixed6(s.x) + "," + xml::fixed6(s.y) + "," +
             xml::fixed6(s.h) + "," + xml::fixed6(s.speed) + "," + xml::fixed6(s.wheel_angle) + "\n";
    }
  }
  return out;
}

}  // namespace osc2cr::sim
