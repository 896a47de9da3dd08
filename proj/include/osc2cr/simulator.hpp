#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "osc2cr/error.hpp"
#include "osc2cr/lanelet.hpp"
#include "osc2cr/opendrive.hpp"
#include "osc2cr/openscenario.hpp"

namespace osc2cr::sim {

using Frame = std::int64_t;

struct SimConfig {
  double dt_sim = 0.01;
  double t_max = 60.0;

  /// Last frame index allowed by t_max, i.e. floor(t_max / dt_sim) with a
  /// tolerance for representation error. Throws InvalidValue on bad config.
  Frame max_frame() const;
};

/// Lane-following bookkeeping. `offset` is lateral, relative to the lane
/// center, in the road's t direction.
struct LaneRef {
  std::string road_id;
  std::size_t section = 0;
  int lane_id = 0;
  double s = 0.0;
  double offset = 0.0;

  bool operator==(const LaneRef&) const = default;
};

struct EntityState {
  Frame frame = 0;
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;
  double speed = 0.0;
  double wheel_angle = 0.0;
  std::optional<LaneRef> lane_ref;

  Vec2 position() const { return {x, y}; }
  bool operator==(const EntityState&) const = default;
};

enum class Phase { Standby, Running, Complete };
enum class TerminationReason { StopTrigger, AllComplete, TMax };

std::string_view to_string(Phase phase);
std::string_view to_string(TerminationReason reason);

/// One storyboard state change. Action instances (one per actor) carry the
/// entity name; all other entries leave it empty.
struct PhaseTransition {
  std::string path;
  osc::ElementType type = osc::ElementType::Event;
  std::string entity;
  Phase phase = Phase::Standby;
  Frame frame = 0;

  bool operator==(const PhaseTransition&) const = default;
};

struct EntityTrace {
  std::string name;
  std::string category;
  osc::BoundingBox bounding_box;
  std::vector<EntityState> states;  // frames 0..N, contiguous
};

struct SimulationTrace {
  double dt_sim = 0.01;
  std::vector<EntityTrace> entities;
  TerminationReason reason = TerminationReason::TMax;
  std::vector<PhaseTransition> log;
  Diagnostics diagnostics;
  /// Frames at which each condition evaluated true (post edge and delay);
  /// filled only when RunOptions::record_conditions is set.
  std::map<std::string, std::vector<Frame>> condition_log;

  Frame last_frame() const { return entities.empty() ? 0 : entities.front().states.back().frame; }
  double duration() const { return static_cast<double>(last_frame()) * dt_sim; }
  const EntityTrace* find(std::string_view name) const;
  /// First frame at which `path` (non-instance entry) entered `phase`.
  std::optional<Frame> first_transition(std::string_view path, Phase phase) const;
};

struct RunOptions {
  bool record_conditions = false;
};

/// Edge and delay filter applied to one condition's raw predicate. Feed it
/// exactly one raw value per frame, starting at frame 0.
class ConditionFilter {
 public:
  ConditionFilter(osc::Edge edge, Frame delay_frames);

  bool update(bool raw);

 private:
  osc::Edge edge_;
  Frame delay_;
  std::optional<bool> previous_;
  std::deque<bool> pending_;
};

/// Converts a condition delay in seconds to whole frames (round to nearest).
Frame delay_frames(double delay, double dt_sim);

/// Fraction of a transition completed at normalized time tau in [0, 1].
double shape_fraction(osc::DynamicsShape shape, double tau);
/// d(shape_fraction)/d(tau).
double shape_slope(osc::DynamicsShape shape, double tau);

/// Lane reached by moving `steps` lanes to the left in driving direction
/// (negative steps move right); lane 0 is skipped.
int step_lane(int lane_id, int steps);
/// Inverse of step_lane: number of left steps from `from` to `to`.
int lane_steps(int from, int to);

/// Per-entity values visible to conditions at one frame.
struct EntitySample {
  EntityState state;
  double traveled = 0.0;
};

struct Snapshot {
  Frame frame = 0;
  double dt_sim = 0.01;
  std::map<std::string, EntitySample, std::less<>> entities;
  std::map<std::pair<osc::ElementType, std::string>, Phase> elements;
};

/// Raw (pre-edge) predicate of a condition on one snapshot.
bool evaluate_raw(const osc::ConditionKind& condition, const Snapshot& snapshot, const odr::OpenDriveMap& map);

/// Distance used by RelativeDistance conditions.
double relative_distance(const EntityState& a, const EntityState& b, osc::DistanceAxis axis,
                         const odr::OpenDriveMap& map);

/// Frame-0 states in declaration order of document.entities.
std::vector<EntityState> init_entities(const osc::ScenarioDocument& document, const odr::OpenDriveMap& map);

class Simulator {
 public:
  Simulator(const osc::ScenarioDocument& document, const odr::OpenDriveMap& map, const LaneletNetwork& network,
            SimConfig config = {}, RunOptions options = {});
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Advances one frame. Returns false once the run has terminated; the
  /// termination check runs before any state change of the frame.
  bool step();
  bool finished() const;
  Frame frame() const;
  const SimulationTrace& trace() const;
  SimulationTrace take_trace();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimulationTrace run(const osc::ScenarioDocument& document, const odr::OpenDriveMap& map,
                    const LaneletNetwork& network, SimConfig config = {}, RunOptions options = {});

/// One CSV row per (frame, entity): frame,name,x,y,h,speed,wheel_angle.
std::string trace_csv(const SimulationTrace& trace);

}  // namespace osc2cr::sim
