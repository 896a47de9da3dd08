#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "osc2cr/geometry.hpp"
#include "osc2cr/lanelet.hpp"
#include "osc2cr/simulator.hpp"

namespace osc2cr::cr {

enum class ObstacleType {
  Car,
  Truck,
  Bus,
  Motorcycle,
  Bicycle,
  Train,
  Pedestrian,
  Building,
  MedianStrip,
  Pillar,
  RoadBoundary,
  ConstructionZone,
  Unknown,
};

/// CommonRoad spelling, e.g. "car", "medianStrip".
std::string_view to_string(ObstacleType type);
std::optional<ObstacleType> obstacle_type_from_string(std::string_view text);

/// Category tag (VEHICLE.CAR, MISC_OBJECT.POLE, ...) to obstacle type. Total.
ObstacleType map_obstacle_type(std::string_view category);

struct CrState {
  int time_step = 0;
  Vec2 position;
  double orientation = 0.0;
  double velocity = 0.0;
  double steering_angle = 0.0;

  bool operator==(const CrState&) const = default;
};

struct Shape {
  double length = 0.0;
  double width = 0.0;

  bool operator==(const Shape&) const = default;
};

struct DynamicObstacle {
  int id = 0;
  ObstacleType type = ObstacleType::Unknown;
  Shape shape;
  CrState initial_state;
  std::vector<CrState> trajectory;  // time steps initial+1, initial+2, ...
  std::string name;                 // not serialized
};

struct StaticObstacle {
  int id = 0;
  ObstacleType type = ObstacleType::Unknown;
  Shape shape;
  CrState initial_state;
  std::string name;  // not serialized
};

struct OrientedRectangle {
  double length = 0.0;
  double width = 0.0;
  Vec2 center;
  double orientation = 0.0;

  bool operator==(const OrientedRectangle&) const = default;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Interval&) const = default;
};

struct Goal {
  OrientedRectangle region;
  int step_lo = 0;
  int step_hi = 0;
  std::optional<Interval> orientation;
  std::optional<Interval> velocity;
};

struct PlanningProblem {
  int id = 0;
  CrState initial_state;
  Goal goal;
};

struct ScenarioInfo {
  std::string benchmark_id;
  std::string author;
  std::string affiliation;
  std::string source;
  std::string date;
  double dt = 0.1;
};

struct Scenario {
  ScenarioInfo info;
  LaneletNetwork network;
  std::vector<DynamicObstacle> dynamic_obstacles;
  std::vector<StaticObstacle> static_obstacles;
  PlanningProblem planning_problem;
  // Rendering aids; not part of the XML.
  std::string ego_name;
  Shape ego_shape;
  std::vector<CrState> ego_trajectory;
};

struct GoalRecipe {
  double length_factor = 3.0;
  double width_factor = 2.0;
  double time_fraction = 0.8;
  double orientation_tolerance = 0.35;
};

struct BuilderConfig {
  double dt_cr = 0.1;
  std::optional<std::string> ego;
  GoalRecipe goal;
  std::string stem = "scenario";
  std::string author = "osc2cr";
  std::string affiliation;
  std::string source = "OpenSCENARIO conversion";
  std::string date;
};

/// Table-driven state mapping; orientation normalized to (-pi, pi].
CrState convert_state(const sim::EntityState& state, int time_step);

/// Resamples a dt_sim trajectory to dt_cr. Output states carry their output
/// index in `frame`. Integer ratios pick every r-th state unchanged; other
/// ratios interpolate linearly (heading along the shortest arc). A trailing
/// partial interval is dropped.
std::vector<sim::EntityState> resample_trajectory(const std::vector<sim::EntityState>& states, double dt_sim,
                                                  double dt_cr);

/// Index of the ego entity: override name, then ego/hero/ego_vehicle
/// (case-insensitive), then the first vehicle.
std::size_t find_ego_vehicle(const std::vector<sim::EntityTrace>& entities,
                             const std::optional<std::string>& override_name = std::nullopt);

PlanningProblem build_planning_problem(const std::vector<CrState>& ego_trajectory, const Shape& ego_shape,
                                       const GoalRecipe& recipe = {}, int id = 1);

/// "ZAM_" + CamelCase(stem) + "-1_1_T-1".
std::string benchmark_id(std::string_view stem);

Scenario build_scenario(const sim::SimulationTrace& trace, const LaneletNetwork& network,
                        const BuilderConfig& config = {});

}  // namespace osc2cr::cr
