#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "osc2cr/error.hpp"
#include "osc2cr/geometry.hpp"

namespace osc2cr {

using Polyline = std::vector<Vec2>;

struct Adjacency {
  int id = 0;
  bool same_direction = true;

  bool operator==(const Adjacency&) const = default;
};

/// Where a lanelet came from in the source road network. Not serialized.
struct LaneletSource {
  std::string road_id;
  std::size_t section = 0;
  int lane_id = 0;

  bool operator==(const LaneletSource&) const = default;
};

/// Drivable lane segment. Both bounds run in driving direction and carry the
/// same number of vertices.
struct Lanelet {
  int id = 0;
  Polyline left_bound;
  Polyline right_bound;
  std::vector<int> successors;
  std::vector<int> predecessors;
  std::optional<Adjacency> adj_left;
  std::optional<Adjacency> adj_right;
  std::optional<LaneletSource> source;

  Polyline centerline() const;
};

struct LaneletNetwork {
  std::vector<Lanelet> lanelets;  // sorted by id
  std::string frame = "global_cartesian";
  Diagnostics warnings;

  const Lanelet* find(int id) const;
  std::optional<int> lanelet_at(const std::string& road_id, std::size_t section, int lane_id) const;
  int max_id() const { return lanelets.empty() ? 0 : lanelets.back().id; }
};

/// Cumulative arc length of a polyline, starting at 0.
std::vector<double> arc_lengths(const Polyline& line);

}  // namespace osc2cr
