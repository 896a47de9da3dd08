#include "osc2cr/lanelet.hpp"

#include <algorithm>

namespace osc2cr {

Polyline Lanelet::centerline() const {
  Polyline out;
  out.reserve(left_bound.size());
  for (std::size_t i = 0; i < left_bound.size() && i < right_bound.size(); ++i) {
    out.push_back((left_bound[i] + right_bound[i]) * 0.5);
  }
  return out;
}

const Lanelet* LaneletNetwork::find(int id) const {
  auto it = std::lower_bound(lanelets.begin(), lanelets.end(), id,
                             [](const Lanelet& l, int v) { return l.id < v; });
  return it != lanelets.end() && it->id == id ? &*it : nullptr;
}

std::optional<int> LaneletNetwork::lanelet_at(const std::string& road_id, std::size_t section,
                                              int lane_id) const {
  for (const auto& l : lanelets) {
    if (l.source && l.source->road_id == road_id && l.source->section == section &&
        l.source->lane_id == lane_id) {
      return l.id;
    }
  }
  return std::nullopt;
}

std::vector<double> arc_lengths(const Polyline& line) {
  std::vector<double> out(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i) out[i] = out[i - 1] + (line[i] - line[i - 1]).norm();
  return out;
}

}  // namespace osc2cr
