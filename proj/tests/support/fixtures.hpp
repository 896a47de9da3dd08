#pragma once

// Shared builders for tests: small maps, hand-assembled storyboards and
// randomized scenario generators.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "osc2cr/commonroad.hpp"
#include "osc2cr/opendrive.hpp"
#include "osc2cr/openscenario.hpp"
#include "osc2cr/simulator.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline fs::path source_dir() { return fs::path(OSC2CR_SOURCE_DIR); }
inline fs::path scenario_path(const std::string& name) { return source_dir() / "scenarios" / name; }
inline fs::path data_path(const std::string& name) { return source_dir() / "tests" / "data" / name; }

/// Straight road along +x with `lanes_per_side` driving lanes of `width` on
/// each side.
inline std::string straight_xodr(double length = 1000.0, int lanes_per_side = 2, double width = 3.5) {
  std::string lanes_left;
  std::string lanes_right;
  char buf[160];
  for (int i = lanes_per_side; i >= 1; --i) {
    std::snprintf(buf, sizeof buf,
                  "<lane id=\"%d\" type=\"driving\"><width sOffset=\"0\" a=\"%g\" b=\"0\" c=\"0\" d=\"0\"/></lane>", i,
                  width);
    lanes_left += buf;
  }
  for (int i = 1; i <= lanes_per_side; ++i) {
    std::snprintf(buf, sizeof buf,
                  "<lane id=\"-%d\" type=\"driving\"><width sOffset=\"0\" a=\"%g\" b=\"0\" c=\"0\" d=\"0\"/></lane>", i,
                  width);
    lanes_right += buf;
  }
  std::snprintf(buf, sizeof buf, "%g", length);
  const std::string len = buf;
  return "<?xml version=\"1.0\"?><OpenDRIVE><header revMajor=\"1\" revMinor=\"5\"/>"
         "<road id=\"1\" length=\"" + len + "\" junction=\"-1\"><planView>"
         "<geometry s=\"0\" x=\"0\" y=\"0\" hdg=\"0\" length=\"" + len + "\"><line/></geometry></planView>"
         "<lanes><laneSection s=\"0\"><left>" + lanes_left +
         "</left><center><lane id=\"0\" type=\"none\"/></center><right>" + lanes_right +
         "</right></laneSection></lanes></road></OpenDRIVE>";
}

struct World {
  osc2cr::odr::OpenDriveMap map;
  osc2cr::LaneletNetwork network;
};

inline World make_world(const std::string& xodr) {
  World w;
  w.map = osc2cr::odr::parse_opendrive(xodr);
  w.network = osc2cr::odr::convert_opendrive_to_lanelets(w.map);
  return w;
}

inline osc2cr::osc::EntityConfig car(const std::string& name, double length = 5.0, double width = 2.0) {
  return {name, "VEHICLE.CAR", {length, width, 1.5, {}}, std::nullopt};
}

inline osc2cr::osc::InitAction place(const std::string& entity, int lane, double s, double offset = 0.0) {
  return {entity, osc2cr::osc::Teleport{osc2cr::osc::LanePosition{"1", lane, s, offset}}};
}

inline osc2cr::osc::InitAction init_speed(const std::string& entity, double v) {
  return {entity, osc2cr::osc::SpeedAbsolute{v, {}}};
}

inline osc2cr::osc::Condition time_condition(double threshold, osc2cr::osc::Edge edge = osc2cr::osc::Edge::Rising,
                                             osc2cr::osc::Rule rule = osc2cr::osc::Rule::GreaterThan,
                                             double delay = 0.0) {
  return {"t", delay, edge, osc2cr::osc::SimulationTimeCondition{threshold, rule}};
}

inline osc2cr::osc::Trigger trigger_of(std::vector<osc2cr::osc::Condition> conditions) {
  return {{osc2cr::osc::ConditionGroup{std::move(conditions)}}};
}

/// One story, one act (starting immediately), one maneuver group with the
/// given actors and a single maneuver holding `events`.
inline osc2cr::osc::ScenarioDocument single_maneuver(std::vector<osc2cr::osc::EntityConfig> entities,
                                                     std::vector<osc2cr::osc::InitAction> init,
                                                     std::vector<std::string> actors,
                                                     std::vector<osc2cr::osc::Event> events) {
  using namespace osc2cr::osc;
  ScenarioDocument doc;
  doc.road_network_ref = "map.xodr";
  doc.entities = std::move(entities);
  doc.storyboard.init_actions = std::move(init);
  Maneuver m{"M", std::move(events)};
  ManeuverGroup g{"G", 1, std::move(actors), {std::move(m)}};
  Act act{"Act", {std::move(g)}, std::nullopt, std::nullopt};
  doc.storyboard.stories.push_back({"Story", {std::move(act)}});
  return doc;
}

// ---------------------------------------------------------------------------
// Randomized CommonRoad scenarios for round-trip properties

inline osc2cr::cr::Scenario random_scenario(std::mt19937_64& rng) {
  using namespace osc2cr::cr;
  std::uniform_real_distribution<double> coord(-500.0, 500.0);
  std::uniform_real_distribution<double> angle(-3.14159, 3.14159);
  std::uniform_real_distribution<double> positive(0.1, 30.0);
  std::uniform_int_distribution<int> small(0, 4);
  Scenario sc;
  sc.info = {"ZAM_Random-1_1_T-1", "gen", "lab & co", "property <test>", "2024-02-29", 0.1};
  const int n_lanelets = small(rng);
  for (int i = 1; i <= n_lanelets; ++i) {
    osc2cr::Lanelet ll;
    ll.id = i;
    const int pts = 2 + small(rng);
    for (int k = 0; k < pts; ++k) {
      ll.left_bound.push_back({coord(rng), coord(rng)});
      ll.right_bound.push_back({coord(rng), coord(rng)});
    }
    if (i > 1) ll.predecessors.push_back(i - 1);
    if (i < n_lanelets) ll.successors.push_back(i + 1);
    if (i > 1 && small(rng) % 2 == 0) ll.adj_left = osc2cr::Adjacency{i - 1, small(rng) % 2 == 0};
    if (i < n_lanelets && small(rng) % 2 == 0) ll.adj_right = osc2cr::Adjacency{i + 1, true};
    sc.network.lanelets.push_back(std::move(ll));
  }
  int next_id = n_lanelets;
  const ObstacleType types[] = {ObstacleType::Car, ObstacleType::Truck, ObstacleType::Pedestrian,
                                ObstacleType::Pillar, ObstacleType::Unknown, ObstacleType::ConstructionZone};
  auto state = [&](int step) {
    return CrState{step, {coord(rng), coord(rng)}, angle(rng), positive(rng), angle(rng) / 4};
  };
  const int n_static = small(rng) % 3;
  for (int i = 0; i < n_static; ++i) {
    sc.static_obstacles.push_back({++next_id, types[small(rng) % 6], {positive(rng), positive(rng)}, state(0), {}});
  }
  const int n_dynamic = small(rng);
  for (int i = 0; i < n_dynamic; ++i) {
    DynamicObstacle d{++next_id, types[small(rng) % 6], {positive(rng), positive(rng)}, state(0), {}, {}};
    const int len = small(rng) * 3;
    for (int k = 1; k <= len; ++k) d.trajectory.push_back(state(k));
    sc.dynamic_obstacles.push_back(std::move(d));
  }
  PlanningProblem& pp = sc.planning_problem;
  pp.id = ++next_id;
  pp.initial_state = state(0);
  pp.goal.region = {positive(rng), positive(rng), {coord(rng), coord(rng)}, angle(rng)};
  pp.goal.step_lo = small(rng);
  pp.goal.step_hi = pp.goal.step_lo + small(rng) * 10;
  if (small(rng) % 2 == 0) pp.goal.orientation = Interval{-0.35, 0.35};
  if (small(rng) % 2 == 0) pp.goal.velocity = Interval{0.0, positive(rng)};
  return sc;
}

// ---------------------------------------------------------------------------
// Randomized storyboards for simulator properties

/// Up to 3 cars on a straight 2+2 lane road and up to 4 events mixing speed
/// changes and lane changes under time, speed and element-state triggers.
inline osc2cr::osc::ScenarioDocument random_storyboard(std::mt19937_64& rng) {
  using namespace osc2cr::osc;
  std::uniform_int_distribution<int> n_entities(1, 3);
  std::uniform_int_distribution<int> n_events(1, 4);
  std::uniform_real_distribution<double> speed(0.0, 25.0);
  std::uniform_real_distribution<double> time(0.0, 8.0);
  std::uniform_int_distribution<int> pick(0, 99);
  ScenarioDocument doc;
  doc.road_network_ref = "map.xodr";
  const int ne = n_entities(rng);
  std::vector<std::string> names;
  for (int i = 0; i < ne; ++i) {
    names.push_back("E" + std::to_string(i));
    doc.entities.push_back(car(names.back()));
    const int lane = pick(rng) % 2 == 0 ? -1 : -2;
    doc.storyboard.init_actions.push_back(place(names.back(), lane, 10.0 + 30.0 * i));
    doc.storyboard.init_actions.push_back(init_speed(names.back(), speed(rng)));
  }
  const Priority priorities[] = {Priority::Overwrite, Priority::Skip, Priority::Parallel};
  const DynamicsShape shapes[] = {DynamicsShape::Step, DynamicsShape::Linear, DynamicsShape::Cubic,
                                  DynamicsShape::Sinusoidal};
  std::vector<Event> events;
  const int nev = n_events(rng);
  for (int i = 0; i < nev; ++i) {
    Event ev;
    ev.name = "Ev" + std::to_string(i);
    ev.priority = priorities[pick(rng) % 3];
    ev.maximum_execution_count = 1 + pick(rng) % 2;
    const TransitionDynamics dyn{shapes[pick(rng) % 4], DynamicsDimension::Time, 0.5 + time(rng) / 4};
    switch (pick(rng) % 3) {
      case 0: ev.actions.push_back({"Act" + std::to_string(i), SpeedAbsolute{speed(rng), dyn}}); break;
      case 1: ev.actions.push_back({"Act" + std::to_string(i), LaneChangeAbsolute{pick(rng) % 2 == 0 ? -1 : -2, dyn, 0.0}}); break;
      default: ev.actions.push_back({"Act" + std::to_string(i), LaneChangeRelative{names[0], pick(rng) % 2 == 0 ? 1 : -1, dyn, 0.0}}); break;
    }
    Condition c;
    switch (pick(rng) % 3) {
      case 0: c = time_condition(time(rng), pick(rng) % 2 == 0 ? Edge::Rising : Edge::None); break;
      case 1: c = {"v", 0.0, Edge::Rising, SpeedCondition{names[pick(rng) % names.size()], speed(rng), Rule::GreaterThan}}; break;
      default:
        c = {"after", time(rng) / 2, Edge::None,
             StoryboardElementStateCondition{ElementType::Event, i == 0 ? "Ev0" : "Ev" + std::to_string(i - 1),
                                             i == 0 ? ElementState::Running : ElementState::Complete}};
        break;
    }
    ev.start_trigger = trigger_of({c});
    events.push_back(std::move(ev));
  }
  std::vector<std::string> actors{names[pick(rng) % names.size()]};
  if (pick(rng) % 3 == 0 && names.size() > 1) actors.push_back(names[1]);
  std::sort(actors.begin(), actors.end());
  actors.erase(std::unique(actors.begin(), actors.end()), actors.end());
  auto built = single_maneuver({}, {}, actors, std::move(events));
  doc.storyboard.stories = std::move(built.storyboard.stories);
  doc.storyboard.stop_trigger = trigger_of({time_condition(10.0)});
  return doc;
}

}  // namespace fixture
