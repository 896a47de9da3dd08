#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "osc2cr/commonroad_io.hpp"
#include "osc2cr/pipeline.hpp"
#include "osc2cr/xml.hpp"

using namespace osc2cr;
using namespace osc2cr::cr;

namespace {

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

const Scenario& overtake() {
  static const Scenario sc = convert_scenario(fixture::scenario_path("overtake.xosc")).scenario;
  return sc;
}

Scenario minimal() {
  Scenario sc;
  sc.info = {"ZAM_Empty-1_1_T-1", "a", "", "s", "2024-01-01", 0.1};
  sc.planning_problem.id = 1;
  sc.planning_problem.initial_state = {0, {0, 0}, 0, 0, 0};
  sc.planning_problem.goal.region = {3, 2, {1, 1}, 0};
  return sc;
}

}  // namespace

TEST(CommonRoadXml, OvertakeRoundTrips) {
  const std::string text = to_xml(overtake());
  const Scenario back = read_commonroad_xml(text);
  std::string why;
  EXPECT_TRUE(structurally_equal(overtake(), back, 1e-6, &why)) << why;
  EXPECT_EQ(to_xml(back), text);
}

TEST(CommonRoadXml, RootAttributesAndVersion) {
  const auto root = xml::parse(to_xml(overtake()));
  EXPECT_EQ(root.name, "commonRoad");
  EXPECT_EQ(root.attr("commonRoadVersion"), "2023.1");
  EXPECT_EQ(root.attr("timeStepSize"), "0.100000");
  EXPECT_EQ(root.attr("benchmarkID"), "ZAM_Overtake-1_1_T-1");
  EXPECT_EQ(root.children_named("lanelet").size(), overtake().network.lanelets.size());
  EXPECT_EQ(root.children_named("dynamicObstacle").size(), 1u);
  EXPECT_EQ(root.children_named("planningProblem").size(), 1u);
}

TEST(CommonRoadXml, SixDecimalCoordinates) {
  Scenario sc = minimal();
  sc.planning_problem.initial_state.position = {1.0 / 3.0, -2.0 / 3.0};
  const std::string text = to_xml(sc);
  EXPECT_NE(text.find("<x>0.333333</x>"), std::string::npos);
  EXPECT_NE(text.find("<y>-0.666667</y>"), std::string::npos);
}

TEST(CommonRoadXml, ZeroObstaclesIsValid) {
  const Scenario sc = minimal();
  const std::string text = to_xml(sc);
  const auto root = xml::parse(text);
  EXPECT_TRUE(root.children_named("dynamicObstacle").empty());
  EXPECT_TRUE(root.children_named("staticObstacle").empty());
  EXPECT_EQ(root.children_named("planningProblem").size(), 1u);
  EXPECT_TRUE(structurally_equal(sc, read_commonroad_xml(text)));
}

TEST(CommonRoadXml, NonFiniteValuesAreRejected) {
  Scenario sc = overtake();
  sc.dynamic_obstacles[0].trajectory[3].position.x = std::numeric_limits<double>::quiet_NaN();
  try {
    (void)to_xml(sc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SerializationOverflow);
  }
  Scenario inf = minimal();
  inf.planning_problem.goal.region.center.y = std::numeric_limits<double>::infinity();
  EXPECT_THROW((void)to_xml(inf), Error);
}

TEST(CommonRoadXml, InvalidShapesAndGoalWindow) {
  Scenario sc = minimal();
  sc.static_obstacles.push_back({2, ObstacleType::Pillar, {0.0, 1.0}, {0, {0, 0}, 0, 0, 0}, "p"});
  EXPECT_THROW((void)to_xml(sc), Error);
  Scenario window = minimal();
  window.planning_problem.goal.step_lo = 5;
  window.planning_problem.goal.step_hi = 4;
  EXPECT_THROW((void)to_xml(window), Error);
}

TEST(CommonRoadXml, WriteReportsByteCount) {
  const auto path = std::filesystem::temp_directory_path() / "osc2cr_unit_write.xml";
  const std::size_t n = write_xml(overtake(), path);
  EXPECT_EQ(n, std::filesystem::file_size(path));
  EXPECT_EQ(read_text_file(path), to_xml(overtake()));
  std::filesystem::remove(path);
  EXPECT_THROW((void)write_xml(overtake(), "/nonexistent-dir/x/y.xml"), Error);
}

TEST(CommonRoadXml, ReaderRejectsForeignDocuments) {
  EXPECT_THROW((void)read_commonroad_xml("<scenario/>"), Error);
  EXPECT_THROW((void)read_commonroad_xml("<commonRoad"), Error);
}

TEST(CommonRoadXml, StructuralEqualityExplainsMismatches) {
  Scenario a = overtake();
  Scenario b = a;
  b.dynamic_obstacles[0].trajectory.back().velocity += 1e-3;
  std::string why;
  EXPECT_FALSE(structurally_equal(a, b, 1e-6, &why));
  EXPECT_FALSE(why.empty());
  EXPECT_TRUE(structurally_equal(a, b, 1e-2));
}

TEST(CommonRoadXml, ByteDeterminism) {
  const auto again = convert_scenario(fixture::scenario_path("overtake.xosc")).scenario;
  EXPECT_EQ(to_xml(again), to_xml(overtake()));
  EXPECT_EQ(render_svg(again), render_svg(overtake()));
}

TEST(Svg, OvertakeHasEgoAndObstacleTrajectories) {
  const std::string svg = render_svg(overtake());
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_EQ(count(svg, "class=\"trajectory\""), 2u);
  EXPECT_EQ(count(svg, "class=\"goal-region\""), 1u);
  EXPECT_EQ(count(svg, "id=\"ego\""), 1u);
  EXPECT_EQ(count(svg, "class=\"lanelet\""), overtake().network.lanelets.size());
  // Parses as XML.
  EXPECT_EQ(xml::parse(svg).name, "svg");
}

TEST(Svg, EmptyNetworkGivesMinimalCanvas) {
  const std::string svg = render_svg(minimal());
  const auto root = xml::parse(svg);
  EXPECT_EQ(root.name, "svg");
  EXPECT_NE(svg.find("<g class=\"canvas\">"), std::string::npos);
  EXPECT_EQ(count(svg, "class=\"lanelet\""), 0u);
  EXPECT_EQ(count(svg, "class=\"trajectory\""), 0u);
  EXPECT_EQ(count(svg, "class=\"goal-region\""), 1u);
}

TEST(Svg, StaticObstaclesAreDrawn) {
  const auto sc = convert_scenario(fixture::scenario_path("lane_keep.xosc")).scenario;
  const std::string svg = render_svg(sc);
  EXPECT_EQ(count(svg, "class=\"static-obstacle\""), 1u);
  EXPECT_EQ(count(svg, "class=\"trajectory\""), 2u);
}
