#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "osc2cr/error.hpp"
#include "osc2cr/geometry.hpp"
#include "osc2cr/xml.hpp"

// Typed model of the supported OpenSCENARIO subset. Every value type
// compares structurally so parse/serialize round trips can be checked with ==.
namespace osc2cr::osc {

struct FileHeader {
  std::string author;
  std::string date;
  std::string description;
  int rev_major = 1;
  int rev_minor = 0;

  bool operator==(const FileHeader&) const = default;
};

struct BoundingBox {
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;
  Vec2 center;

  bool operator==(const BoundingBox&) const = default;
};

struct Performance {
  double max_speed = 0.0;
  double max_accel = 0.0;
  double max_decel = 0.0;

  bool operator==(const Performance&) const = default;
};

struct EntityConfig {
  std::string name;
  std::string category;  // hierarchical tag, e.g. VEHICLE.CAR, PEDESTRIAN, MISC_OBJECT.POLE
  BoundingBox bounding_box;
  std::optional<Performance> performance;

  bool operator==(const EntityConfig&) const = default;
};

struct LanePosition {
  std::string road_id;
  int lane_id = 0;
  double s = 0.0;
  double offset = 0.0;

  bool operator==(const LanePosition&) const = default;
};

struct WorldPosition {
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;

  bool operator==(const WorldPosition&) const = default;
};

using Position = std::variant<LanePosition, WorldPosition>;

enum class DynamicsShape { Step, Linear, Cubic, Sinusoidal };
enum class DynamicsDimension { Time, Distance, Rate };

struct TransitionDynamics {
  DynamicsShape shape = DynamicsShape::Step;
  DynamicsDimension dimension = DynamicsDimension::Time;
  double value = 0.0;

  bool operator==(const TransitionDynamics&) const = default;
};

struct Teleport {
  Position position;
  bool operator==(const Teleport&) const = default;
};

struct SpeedAbsolute {
  double target = 0.0;
  TransitionDynamics dynamics;
  bool operator==(const SpeedAbsolute&) const = default;
};

struct SpeedRelative {
  std::string reference;
  double delta = 0.0;
  TransitionDynamics dynamics;
  bool continuous = false;
  bool operator==(const SpeedRelative&) const = default;
};

/// Lane delta counts lanes in driving direction; positive is to the left.
struct LaneChangeRelative {
  std::string reference;
  int lane_delta = 0;
  TransitionDynamics dynamics;
  double target_offset = 0.0;
  bool operator==(const LaneChangeRelative&) const = default;
};

struct LaneChangeAbsolute {
  int target_lane = 0;
  TransitionDynamics dynamics;
  double target_offset = 0.0;
  bool operator==(const LaneChangeAbsolute&) const = default;
};

struct TimedPose {
  double time = 0.0;
  Position position;
  bool operator==(const TimedPose&) const = default;
};

/// Vertex times are relative to the action start unless `absolute_time`.
struct FollowPolyline {
  std::vector<TimedPose> vertices;
  bool absolute_time = false;
  bool operator==(const FollowPolyline&) const = default;
};

using ActionKind =
    std::variant<Teleport, SpeedAbsolute, SpeedRelative, LaneChangeRelative, LaneChangeAbsolute, FollowPolyline>;

struct Action {
  std::string name;
  ActionKind kind;
  bool operator==(const Action&) const = default;
};

enum class Rule { LessThan, GreaterThan, EqualTo };
enum class Edge { Rising, Falling, RisingOrFalling, None };
enum class DistanceAxis { Longitudinal, Lateral, Cartesian };
enum class ElementType { Story, Act, ManeuverGroup, Maneuver, Event, Action };
enum class ElementState { Running, Complete };

struct SimulationTimeCondition {
  double threshold = 0.0;
  Rule rule = Rule::GreaterThan;
  bool operator==(const SimulationTimeCondition&) const = default;
};

struct RelativeDistanceCondition {
  std::string entity_a;  // triggering entity
  std::string entity_b;
  DistanceAxis axis = DistanceAxis::Longitudinal;
  double threshold = 0.0;
  Rule rule = Rule::LessThan;
  bool operator==(const RelativeDistanceCondition&) const = default;
};

struct SpeedCondition {
  std::string entity;
  double threshold = 0.0;
  Rule rule = Rule::GreaterThan;
  bool operator==(const SpeedCondition&) const = default;
};

struct TraveledDistanceCondition {
  std::string entity;
  double threshold = 0.0;
  bool operator==(const TraveledDistanceCondition&) const = default;
};

struct StoryboardElementStateCondition {
  ElementType type = ElementType::Event;
  std::string element;
  ElementState state = ElementState::Complete;
  bool operator==(const StoryboardElementStateCondition&) const = default;
};

using ConditionKind = std::variant<SimulationTimeCondition, RelativeDistanceCondition, SpeedCondition,
                                   TraveledDistanceCondition, StoryboardElementStateCondition>;

struct Condition {
  std::string name;
  double delay = 0.0;
  Edge edge = Edge::Rising;
  ConditionKind kind;
  bool operator==(const Condition&) const = default;
};

/// Conditions in a group are AND-ed.
struct ConditionGroup {
  std::vector<Condition> conditions;
  bool operator==(const ConditionGroup&) const = default;
};

/// Groups are OR-ed. A trigger with no groups never fires.
struct Trigger {
  std::vector<ConditionGroup> groups;
  bool operator==(const Trigger&) const = default;
};

enum class Priority { Overwrite, Skip, Parallel };

struct Event {
  std::string name;
  Priority priority = Priority::Overwrite;
  int maximum_execution_count = 1;
  std::vector<Action> actions;
  std::optional<Trigger> start_trigger;  // absent: starts as soon as its act runs
  bool operator==(const Event&) const = default;
};

struct Maneuver {
  std::string name;
  std::vector<Event> events;
  bool operator==(const Maneuver&) const = default;
};

struct ManeuverGroup {
  std::string name;
  int maximum_execution_count = 1;
  std::vector<std::string> actors;
  std::vector<Maneuver> maneuvers;
  bool operator==(const ManeuverGroup&) const = default;
};

struct Act {
  std::string name;
  std::vector<ManeuverGroup> maneuver_groups;
  std::optional<Trigger> start_trigger;
  std::optional<Trigger> stop_trigger;
  bool operator==(const Act&) const = default;
};

struct Story {
  std::string name;
  std::vector<Act> acts;
  bool operator==(const Story&) const = default;
};

struct InitAction {
  std::string entity;
  ActionKind action;
  bool operator==(const InitAction&) const = default;
};

struct Storyboard {
  std::vector<InitAction> init_actions;
  std::vector<Story> stories;
  std::optional<Trigger> stop_trigger;
  bool operator==(const Storyboard&) const = default;
};

struct ScenarioDocument {
  FileHeader header;
  std::string road_network_ref;
  std::vector<EntityConfig> entities;
  Storyboard storyboard;

  const EntityConfig* find_entity(std::string_view name) const;
  bool operator==(const ScenarioDocument&) const = default;
};

using ParameterOverrides = std::map<std::string, std::string, std::less<>>;

struct ParseOptions {
  ParameterOverrides overrides;
  /// Directory searched for catalog files; empty disables catalog lookup.
  std::filesystem::path base_dir;
  Edge default_edge = Edge::Rising;
};

struct ParseResult {
  ScenarioDocument document;
  Diagnostics warnings;
};

/// Substitutes every `$name` reference in attribute values. Declarations are
/// scoped to the element that holds them; overrides replace (or add to) the
/// top-level declarations. Declaration values are rewritten to their effective
/// values, which makes the operation idempotent.
xml::Node resolve_parameters(xml::Node root, const ParameterOverrides& overrides);

ParseResult parse_openscenario(std::string_view xml_text, const ParseOptions& options = {});

/// Reference and consistency checks; never throws.
Diagnostics validate_storyboard(const ScenarioDocument& document);

/// Serializes the supported subset back to OpenSCENARIO 1.0 XML.
std::string write_openscenario(const ScenarioDocument& document);

std::string_view to_string(ElementType type);
std::string_view to_string(Rule rule);
std::string_view to_string(Edge edge);

}  // namespace osc2cr::osc
