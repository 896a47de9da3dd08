#include "osc2cr/commonroad.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>

namespace osc2cr::cr {

namespace {

constexpr std::array<std::string_view, 13> kTypeNames = {
    "car",    "truck",    "bus",         "motorcycle", "bicycle",      "train",           "pedestrian",
    "building", "medianStrip", "pillar", "roadBoundary", "constructionZone", "unknown",
};

struct TypeRow {
  std::string_view category;
  ObstacleType type;
};

constexpr std::array<TypeRow, 18> kTypeTable = {{
    {"VEHICLE.CAR", ObstacleType::Car},
    {"VEHICLE.VAN", ObstacleType::Car},
    {"VEHICLE.TRUCK", ObstacleType::Truck},
    {"VEHICLE.TRAILER", ObstacleType::Truck},
    {"VEHICLE.SEMITRAILER", ObstacleType::Truck},
    {"VEHICLE.BUS", ObstacleType::Bus},
    {"VEHICLE.MOTORBIKE", ObstacleType::Motorcycle},
    {"VEHICLE.BICYCLE", ObstacleType::Bicycle},
    {"VEHICLE.TRAIN", ObstacleType::Train},
    {"VEHICLE.TRAM", ObstacleType::Train},
    {"MISC_OBJECT.BUILDING", ObstacleType::Building},
    {"MISC_OBJECT.TRAFFICISLAND", ObstacleType::MedianStrip},
    {"MISC_OBJECT.STREETLAMP", ObstacleType::Pillar},
    {"MISC_OBJECT.POLE", ObstacleType::RoadBoundary},
    {"MISC_OBJECT.BARRIER", ObstacleType::RoadBoundary},
    {"MISC_OBJECT.RAILING", ObstacleType::RoadBoundary},
    {"MISC_OBJECT.SOUNDBARRIER", ObstacleType::RoadBoundary},
    {"MISC_OBJECT.PATCH", ObstacleType::ConstructionZone},
}};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

bool is_vehicle_category(std::string_view category) { return category.rfind("VEHICLE", 0) == 0; }

}  // namespace

std::string_view to_string(ObstacleType type) { return kTypeNames[static_cast<std::size_t>(type)]; }

std::optional<ObstacleType> obstacle_type_from_string(std::string_view text) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == text) return static_cast<ObstacleType>(i);
  }
  return std::nullopt;
}

ObstacleType map_obstacle_type(std::string_view category) {
  if (category == "PEDESTRIAN" || category == "PEDESTRIAN.PEDESTRIAN" || category == "PEDESTRIAN.WHEELCHAIR") {
    return ObstacleType::Pedestrian;
  }
  for (const auto& row : kTypeTable) {
    if (row.category == category) return row.type;
  }
  return ObstacleType::Unknown;
}

CrState convert_state(const sim::EntityState& state, int time_step) {
  return {time_step, {state.x, state.y}, normalize_angle(state.h), state.speed, state.wheel_angle};
}

std::vector<sim::EntityState> resample_trajectory(const std::vector<sim::EntityState>& states, double dt_sim,
                                                  double dt_cr) {
  if (states.empty()) throw Error(ErrorCode::EmptyTrajectory, "cannot resample an empty trajectory");
  if (!(dt_sim > 0.0) || !(dt_cr > 0.0)) throw Error(ErrorCode::InvalidValue, "time steps must be positive");
  std::vector<sim::EntityState> out;
  const double ratio = dt_cr / dt_sim;
  const double r_round = std::round(ratio);
  if (r_round >= 1.0 && std::abs(ratio - r_round) <= 1e-9) {
    const auto r = static_cast<std::size_t>(r_round);
    for (std::size_t i = 0, k = 0; i < states.size(); i += r, ++k) {
      out.push_back(states[i]);
      out.back().frame = static_cast<sim::Frame>(k);
    }
    return out;
  }
  const double last = static_cast<double>(states.size() - 1);
  for (std::size_t k = 0;; ++k) {
    double idx = static_cast<double>(k) * ratio;
    if (idx > last + 1e-9) break;
    const double nearest = std::round(idx);
    if (std::abs(idx - nearest) <= 1e-9) idx = nearest;
    const auto i = static_cast<std::size_t>(std::floor(idx));
    const double w = idx - static_cast<double>(i);
    sim::EntityState s;
    if (w == 0.0 || i + 1 >= states.size()) {
      s = states[std::min(i, states.size() - 1)];
    } else {
      const auto& a = states[i];
      const auto& b = states[i + 1];
      s = a;
      s.x = lerp(a.x, b.x, w);
      s.y = lerp(a.y, b.y, w);
      s.h = lerp_angle(a.h, b.h, w);
      s.speed = lerp(a.speed, b.speed, w);
      s.wheel_angle = lerp(a.wheel_angle, b.wheel_angle, w);
    }
    s.frame = static_cast<sim::Frame>(k);
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t find_ego_vehicle(const std::vector<sim::EntityTrace>& entities,
                             const std::optional<std::string>& override_name) {
  if (override_name) {
    for (std::size_t i = 0; i < entities.size(); ++i) {
      if (entities[i].name == *override_name) return i;
    }
    throw Error(ErrorCode::OverrideNotFound, "no entity named '" + *override_name + "'");
  }
  for (std::size_t i = 0; i < entities.size(); ++i) {
    const auto& n = entities[i].name;
    if (is_vehicle_category(entities[i].category) &&
        (iequals(n, "ego") || iequals(n, "hero") || iequals(n, "ego_vehicle"))) {
      return i;
    }
  }
  for (std::size_t i = 0; i < entities.size(); ++i) {
    if (is_vehicle_category(entities[i].category)) return i;
  }
  throw Error(ErrorCode::NoVehicleEntity, "scenario has no vehicle entity to act as ego");
}

PlanningProblem build_planning_problem(const std::vector<CrState>& ego, const Shape& shape, const GoalRecipe& recipe,
                                       int id) {
  if (ego.size() < 2) {
    throw Error(ErrorCode::TrajectoryTooShort, "ego trajectory needs at least 2 states, got " +
                                                   std::to_string(ego.size()));
  }
  const CrState& last = ego.back();
  PlanningProblem p;
  p.id = id;
  p.initial_state = ego.front();
  p.goal.region = {recipe.length_factor * shape.length, recipe.width_factor * shape.width, last.position,
                   last.orientation};
  const int t_end = last.time_step;
  p.goal.step_lo = static_cast<int>(std::floor(recipe.time_fraction * t_end + 1e-9));
  p.goal.step_hi = t_end;
  p.goal.orientation = Interval{last.orientation - recipe.orientation_tolerance,
                                last.orientation + recipe.orientation_tolerance};
  return p;
}

std::string benchmark_id(std::string_view stem) {
  std::string camel;
  bool upper = true;
  for (char c : stem) {
    if (!std::isalnum(static_cast<unsigned char>(c))) {
      upper = true;
      continue;
    }
    camel += upper ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    upper = false;
  }
  if (camel.empty()) camel = "Scenario";
  return "ZAM_" + camel + "-1_1_T-1";
}

namespace {

std::vector<CrState> to_cr(const std::vector<sim::EntityState>& states) {
  std::vector<CrState> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(convert_state(s, static_cast<int>(s.frame)));
  return out;
}

bool never_moves(const std::vector<sim::EntityState>& states) {
  return std::all_of(states.begin(), states.end(), [&](const sim::EntityState& s) {
    return s.x == states.front().x && s.y == states.front().y && s.h == states.front().h;
  });
}

int next_id(long long& counter) {
  if (counter >= std::numeric_limits<int>::max()) throw Error(ErrorCode::IdSpaceExhausted, "obstacle id overflow");
  return static_cast<int>(++counter);
}

}  // namespace

Scenario build_scenario(const sim::SimulationTrace& trace, const LaneletNetwork& network, const BuilderConfig& config) {
  if (trace.entities.empty() || trace.entities.front().states.empty()) {
    throw Error(ErrorCode::EmptyTrajectory, "simulation trace is empty");
  }
  Scenario sc;
  sc.info = {benchmark_id(config.stem), config.author, config.affiliation, config.source, config.date, config.dt_cr};
  sc.network = network;
  sc.network.warnings.clear();

  const std::size_t ego = find_ego_vehicle(trace.entities, config.ego);
  long long counter = network.max_id();
  for (std::size_t i = 0; i < trace.entities.size(); ++i) {
    if (i == ego) continue;
    const auto& e = trace.entities[i];
    const auto states = to_cr(resample_trajectory(e.states, trace.dt_sim, config.dt_cr));
    const Shape shape{e.bounding_box.length, e.bounding_box.width};
    const ObstacleType type = map_obstacle_type(e.category);
    if (e.category.rfind("MISC_OBJECT", 0) == 0 && never_moves(e.states)) {
      sc.static_obstacles.push_back({next_id(counter), type, shape, states.front(), e.name});
    } else {
      DynamicObstacle d{next_id(counter), type, shape, states.front(), {}, e.name};
      d.trajectory.assign(states.begin() + 1, states.end());
      sc.dynamic_obstacles.push_back(std::move(d));
    }
  }
  const auto& ego_trace = trace.entities[ego];
  sc.ego_name = ego_trace.name;
  sc.ego_shape = {ego_trace.bounding_box.length, ego_trace.bounding_box.width};
  sc.ego_trajectory = to_cr(resample_trajectory(ego_trace.states, trace.dt_sim, config.dt_cr));
  sc.planning_problem = build_planning_problem(
      sc.ego_trajectory, sc.ego_shape, config.goal, next_id(counter));
  return sc;
}

}  // namespace osc2cr::cr
