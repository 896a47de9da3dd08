#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "osc2cr/opendrive.hpp"
#include "osc2cr/pipeline.hpp"

using namespace osc2cr;
using odr::parse_opendrive;

namespace {

std::string road_with_geometry(const std::string& geometry, double length) {
  char len[32];
  std::snprintf(len, sizeof len, "%.17g", length);
  return std::string("<OpenDRIVE><header/><road id=\"1\" length=\"") + len +
         "\" junction=\"-1\"><planView><geometry s=\"0\" x=\"0\" y=\"0\" hdg=\"0\" length=\"" + len + "\">" +
         geometry +
         "</geometry></planView><lanes><laneSection s=\"0\"><center><lane id=\"0\" type=\"none\"/></center>"
         "<right><lane id=\"-1\" type=\"driving\"><width sOffset=\"0\" a=\"3.5\" b=\"0\" c=\"0\" "
         "d=\"0\"/></lane></right></laneSection></lanes></road></OpenDRIVE>";
}

odr::GeometrySegment spiral(double x, double y, double h, double k0, double k1, double length) {
  return {0.0, {x, y}, h, length, odr::Spiral{k0, k1}};
}

}  // namespace

TEST(OpenDrive, MinimalRoadHasOneSegmentAndSection) {
  const auto map = parse_opendrive(fixture::straight_xodr(100.0, 1));
  ASSERT_EQ(map.roads.size(), 1u);
  EXPECT_EQ(map.roads[0].geometry.size(), 1u);
  EXPECT_EQ(map.roads[0].sections.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<odr::Line>(map.roads[0].geometry[0].kind));
  EXPECT_TRUE(map.warnings.empty());
}

TEST(OpenDrive, ArcCurvatureIsTranscribed) {
  const auto map = parse_opendrive(road_with_geometry("<arc curvature=\"0.01\"/>", 50));
  const auto* arc = std::get_if<odr::Arc>(&map.roads[0].geometry[0].kind);
  ASSERT_NE(arc, nullptr);
  EXPECT_EQ(arc->curvature, 0.01);
}

TEST(OpenDrive, ElevationProfileIsIgnoredWithOneWarning) {
  std::string xodr = fixture::straight_xodr(100.0, 1);
  xodr.insert(xodr.find("<lanes>"), "<elevationProfile><elevation s=\"0\" a=\"1\" b=\"0\" c=\"0\" d=\"0\"/></elevationProfile>");
  const auto map = parse_opendrive(xodr);
  ASSERT_EQ(map.roads.size(), 1u);
  EXPECT_EQ(map.warnings.size(), 1u);
}

TEST(OpenDrive, UnknownPrimitiveIsRejected) {
  try {
    (void)parse_opendrive(road_with_geometry("<bezier/>", 10));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedGeometry);
  }
}

TEST(OpenDrive, WrongRootAndBrokenXmlAreErrors) {
  EXPECT_THROW((void)parse_opendrive("<NotDrive/>"), Error);
  try {
    (void)parse_opendrive("<OpenDRIVE><road>");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedXml);
  }
}

TEST(OpenDrive, LaneBorderRecordsAreUnsupported) {
  std::string xodr = fixture::straight_xodr(100.0, 1);
  const auto pos = xodr.find("<width", xodr.find("id=\"-1\""));
  xodr.replace(pos, 6, "<border");
  try {
    (void)parse_opendrive(xodr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedLaneBorder);
  }
}

TEST(ReferenceLine, LineAndQuarterArcClosedForms) {
  const auto line_map = parse_opendrive(road_with_geometry("<line/>", 100));
  const Pose p = odr::eval_reference_line(line_map.roads[0], 10.0);
  EXPECT_EQ(p.position.x, 10.0);
  EXPECT_EQ(p.position.y, 0.0);
  EXPECT_EQ(p.heading, 0.0);

  const double quarter = std::numbers::pi / 0.1 / 2.0;
  const auto arc_map = parse_opendrive(road_with_geometry("<arc curvature=\"0.1\"/>", quarter));
  const Pose q = odr::eval_reference_line(arc_map.roads[0], quarter);
  EXPECT_NEAR(q.position.x, 10.0, 1e-9);
  EXPECT_NEAR(q.position.y, 10.0, 1e-9);
  EXPECT_NEAR(q.heading, std::numbers::pi / 2, 1e-12);
}

TEST(ReferenceLine, OutOfRangeBeyondRoadLength) {
  const auto map = parse_opendrive(road_with_geometry("<line/>", 100));
  EXPECT_THROW((void)odr::eval_reference_line(map.roads[0], 100.5), Error);
  EXPECT_THROW((void)odr::eval_reference_line(map.roads[0], -0.5), Error);
}

TEST(ReferenceLine, SpiralMatchesRk4Oracle) {
  const auto seg = spiral(0, 0, 0, 0.0, 0.02, 30.0);
  const Pose p = seg.eval(30.0);
  const auto o = oracle::clothoid_rk4({0, 0, 0}, 0.0, 0.02, 30.0);
  EXPECT_NEAR(p.position.x, o.x, 1e-6);
  EXPECT_NEAR(p.position.y, o.y, 1e-6);
  EXPECT_NEAR(p.heading, o.h, 1e-9);
}

TEST(ReferenceLine, RandomSpiralsMatchRk4Oracle) {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> curv(-0.1, 0.1);
  std::uniform_real_distribution<double> len(1.0, 200.0);
  std::uniform_real_distribution<double> coord(-100.0, 100.0);
  std::uniform_real_distribution<double> head(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double x = coord(rng), y = coord(rng), h = head(rng);
    const double k0 = curv(rng), k1 = curv(rng), l = len(rng);
    const Pose p = spiral(x, y, h, k0, k1, l).eval(l);
    const auto o = oracle::clothoid_rk4({x, y, h}, k0, k1, l);
    EXPECT_LE(std::hypot(p.position.x - o.x, p.position.y - o.y), 1e-6)
        << "k0=" << k0 << " k1=" << k1 << " length=" << l;
  }
}

TEST(ReferenceLine, RandomLinesAndArcsMatchClosedForms) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> curv(0.001, 0.1);
  std::uniform_real_distribution<double> len(1.0, 200.0);
  std::uniform_real_distribution<double> head(-3.0, 3.0);
  for (int i = 0; i < 100; ++i) {
    const double h = head(rng), l = len(rng), k = (i % 2 == 0 ? 1 : -1) * curv(rng);
    const odr::GeometrySegment line{0.0, {3.0, -4.0}, h, l, odr::Line{}};
    const auto lo = oracle::line_end({3.0, -4.0, h}, l);
    EXPECT_NEAR(line.eval(l).position.x, lo.x, 1e-9);
    EXPECT_NEAR(line.eval(l).position.y, lo.y, 1e-9);
    const odr::GeometrySegment arc{0.0, {3.0, -4.0}, h, l, odr::Arc{k}};
    const auto ao = oracle::arc_end({3.0, -4.0, h}, k, l);
    EXPECT_NEAR(arc.eval(l).position.x, ao.x, 1e-9);
    EXPECT_NEAR(arc.eval(l).position.y, ao.y, 1e-9);
  }
}

TEST(ReferenceLine, CurvedCorpusMapIsContinuousAtJoints) {
  const auto map = parse_opendrive(osc2cr::read_text_file(fixture::scenario_path("curved_road.xodr")));
  for (const auto& road : map.roads) {
    for (std::size_t i = 1; i < road.geometry.size(); ++i) {
      const auto& prev = road.geometry[i - 1];
      const Pose end = prev.eval(prev.length);
      const Pose start = road.geometry[i].eval(0.0);
      EXPECT_LE((end.position - start.position).norm(), 1e-4) << "road " << road.id << " joint " << i;
      EXPECT_LE(std::abs(angle_diff(end.heading, start.heading)), 1e-4);
    }
  }
  // Road 1 ends where road 2 begins.
  const Pose a = odr::eval_reference_line(*map.find("1"), map.find("1")->length);
  const Pose b = odr::eval_reference_line(*map.find("2"), 0.0);
  EXPECT_LE((a.position - b.position).norm(), 1e-4);
}

TEST(Locate, LaneCentersOnStraightRoad) {
  const auto map = parse_opendrive(fixture::straight_xodr());
  for (int lane : {-2, -1, 1, 2}) {
    const Pose p = odr::locate(map, "1", lane, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(p.position.x, 0.0);
    EXPECT_NEAR(p.position.y, oracle::uniform_lane_center(lane, 3.5), 1e-12) << lane;
  }
  EXPECT_NEAR(odr::locate(map, "1", -1, 10.0, 0.5).position.y, -1.25, 1e-12);
  EXPECT_NEAR(odr::locate(map, "1", 1, 10.0, 0.0).heading, std::numbers::pi, 1e-12);
}

TEST(Locate, CenterLaneIsReferenceLine) {
  const auto map = parse_opendrive(osc2cr::read_text_file(fixture::scenario_path("curved_road.xodr")));
  for (double s : {0.0, 40.0, 65.0, 139.0}) {
    const Pose ref = odr::eval_reference_line(*map.find("1"), s);
    const Pose c = odr::locate(map, "1", 0, s, 0.0);
    EXPECT_EQ(c, ref);
  }
}

TEST(Locate, ErrorsForUnknownRoadLaneAndRange) {
  const auto map = parse_opendrive(fixture::straight_xodr(100.0));
  auto code_of = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code_of([&] { (void)odr::locate(map, "9", -1, 1.0, 0.0); }), ErrorCode::UnknownRoad);
  EXPECT_EQ(code_of([&] { (void)odr::locate(map, "1", -7, 1.0, 0.0); }), ErrorCode::UnknownLane);
  EXPECT_EQ(code_of([&] { (void)odr::locate(map, "1", -1, 101.0, 0.0); }), ErrorCode::OutOfRange);
}

TEST(Project, RecoversLaneCoordinates) {
  const auto map = parse_opendrive(fixture::straight_xodr());
  const auto rc = odr::project(map, {42.0, -5.0});
  ASSERT_TRUE(rc.has_value());
  EXPECT_EQ(rc->road_id, "1");
  EXPECT_EQ(rc->lane_id, -2);
  EXPECT_NEAR(rc->s, 42.0, 1e-6);
  EXPECT_NEAR(rc->t, -5.0, 1e-6);
  EXPECT_FALSE(odr::project(map, {42.0, -50.0}).has_value());
}

TEST(Lanelets, StraightRoadCountsAndVertices) {
  const auto map = parse_opendrive(fixture::straight_xodr(100.0, 1));
  const auto net = odr::convert_opendrive_to_lanelets(map, {1.0, {"driving"}});
  ASSERT_EQ(net.lanelets.size(), 2u);
  for (const auto& ll : net.lanelets) {
    EXPECT_EQ(ll.left_bound.size(), 101u);
    EXPECT_EQ(ll.right_bound.size(), 101u);
  }
  // Adjacent in opposite directions across the center line.
  const auto& a = net.lanelets[0];
  const auto& b = net.lanelets[1];
  ASSERT_TRUE(a.adj_left.has_value());
  EXPECT_EQ(a.adj_left->id, b.id);
  EXPECT_FALSE(a.adj_left->same_direction);
}

TEST(Lanelets, RightLaneBoundsFollowDrivingDirection) {
  const auto map = parse_opendrive(fixture::straight_xodr(100.0, 2));
  const auto net = odr::convert_opendrive_to_lanelets(map);
  const auto id = net.lanelet_at("1", 0, -1);
  ASSERT_TRUE(id.has_value());
  const Lanelet* ll = net.find(*id);
  EXPECT_NEAR(ll->left_bound.front().y, 0.0, 1e-12);
  EXPECT_NEAR(ll->right_bound.front().y, -3.5, 1e-12);
  EXPECT_LT(ll->left_bound.front().x, ll->left_bound.back().x);
  const Lanelet* opposite = net.find(*net.lanelet_at("1", 0, 1));
  EXPECT_GT(opposite->left_bound.front().x, opposite->left_bound.back().x);
  EXPECT_NEAR(opposite->left_bound.front().y, 0.0, 1e-12);
}

TEST(Lanelets, ZeroWidthLaneIsDropped) {
  std::string xodr = fixture::straight_xodr(100.0, 1);
  xodr.insert(xodr.find("</right>"),
              "<lane id=\"-2\" type=\"driving\"><width sOffset=\"0\" a=\"0\" b=\"0\" c=\"0\" d=\"0\"/></lane>");
  const auto net = odr::convert_opendrive_to_lanelets(parse_opendrive(xodr));
  EXPECT_EQ(net.lanelets.size(), 2u);
  EXPECT_FALSE(net.lanelet_at("1", 0, -2).has_value());
}

TEST(Lanelets, LinkedRoadsProduceSymmetricSuccessors) {
  const auto map = parse_opendrive(osc2cr::read_text_file(fixture::scenario_path("curved_road.xodr")));
  const auto net = odr::convert_opendrive_to_lanelets(map);
  const Lanelet* first = net.find(*net.lanelet_at("1", 0, -1));
  const Lanelet* second = net.find(*net.lanelet_at("2", 0, -1));
  ASSERT_EQ(first->successors.size(), 1u);
  EXPECT_EQ(first->successors[0], second->id);
  ASSERT_EQ(second->predecessors.size(), 1u);
  EXPECT_EQ(second->predecessors[0], first->id);
  // Opposite lane runs the other way: road 2 lane 1 feeds road 1 lane 1.
  const Lanelet* back2 = net.find(*net.lanelet_at("2", 0, 1));
  const Lanelet* back1 = net.find(*net.lanelet_at("1", 0, 1));
  ASSERT_EQ(back2->successors.size(), 1u);
  EXPECT_EQ(back2->successors[0], back1->id);
}

TEST(Lanelets, DanglingLinkIsDowngradedToWarning) {
  std::string xodr = fixture::straight_xodr(100.0, 1);
  xodr.insert(xodr.find("<planView>"),
              "<link><successor elementType=\"road\" elementId=\"99\" contactPoint=\"start\"/></link>");
  const auto map = parse_opendrive(xodr);
  const auto net = odr::convert_opendrive_to_lanelets(map);
  EXPECT_EQ(net.lanelets.size(), 2u);
  bool mentioned = false;
  for (const auto& w : net.warnings) mentioned = mentioned || w.message.find("99") != std::string::npos;
  for (const auto& w : map.warnings) mentioned = mentioned || w.message.find("99") != std::string::npos;
  EXPECT_TRUE(mentioned);
  for (const auto& ll : net.lanelets) EXPECT_TRUE(ll.successors.empty());
}

TEST(Lanelets, BoundsAreMonotoneAndSampledDensely) {
  const auto map = parse_opendrive(osc2cr::read_text_file(fixture::scenario_path("curved_road.xodr")));
  const auto net = odr::convert_opendrive_to_lanelets(map, {0.5, {"driving"}});
  for (const auto& ll : net.lanelets) {
    ASSERT_EQ(ll.left_bound.size(), ll.right_bound.size());
    ASSERT_GE(ll.left_bound.size(), 2u);
    for (const auto* bound : {&ll.left_bound, &ll.right_bound}) {
      const auto s = arc_lengths(*bound);
      for (std::size_t i = 1; i < s.size(); ++i) EXPECT_GT(s[i], s[i - 1]);
    }
    // Reference spacing is at most the sampling step; lateral offsets stretch
    // the outer bound by at most 1 + |t| kappa.
    const auto c = arc_lengths(ll.centerline());
    for (std::size_t i = 1; i < c.size(); ++i) EXPECT_LE(c[i] - c[i - 1], 0.5 * 1.2);
  }
}

TEST(Lanelets, ConversionIsDeterministic) {
  const std::string text = osc2cr::read_text_file(fixture::scenario_path("curved_road.xodr"));
  const auto a = odr::convert_opendrive_to_lanelets(parse_opendrive(text));
  const auto b = odr::convert_opendrive_to_lanelets(parse_opendrive(text));
  ASSERT_EQ(a.lanelets.size(), b.lanelets.size());
  for (std::size_t i = 0; i < a.lanelets.size(); ++i) {
    EXPECT_EQ(a.lanelets[i].left_bound, b.lanelets[i].left_bound);
    EXPECT_EQ(a.lanelets[i].right_bound, b.lanelets[i].right_bound);
  }
}
