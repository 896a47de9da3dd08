#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "osc2cr/openscenario.hpp"
#include "osc2cr/pipeline.hpp"

using namespace osc2cr;
using namespace osc2cr::osc;

namespace {

std::string wrap(const std::string& params, const std::string& init, const std::string& stories,
                 const std::string& stop = "") {
  return "<?xml version=\"1.0\"?><OpenSCENARIO><FileHeader revMajor=\"1\" revMinor=\"0\" date=\"2024-03-01\" "
         "author=\"me\" description=\"d\"/><ParameterDeclarations>" +
         params +
         "</ParameterDeclarations><RoadNetwork><LogicFile filepath=\"m.xodr\"/></RoadNetwork><Entities>"
         "<ScenarioObject name=\"Ego\"><Vehicle name=\"v\" vehicleCategory=\"car\"><BoundingBox><Center x=\"1\" "
         "y=\"0\" z=\"0.7\"/><Dimensions width=\"2\" length=\"5\" height=\"1.5\"/></BoundingBox></Vehicle>"
         "</ScenarioObject></Entities><Storyboard><Init><Actions><Private entityRef=\"Ego\"><PrivateAction>"
         "<TeleportAction><Position><LanePosition roadId=\"1\" laneId=\"-1\" s=\"10\" offset=\"0\"/></Position>"
         "</TeleportAction></PrivateAction>" +
         init + "</Private></Actions></Init>" + stories + stop + "</Storyboard></OpenSCENARIO>";
}

std::string speed_init(const std::string& value) {
  return "<PrivateAction><LongitudinalAction><SpeedAction><SpeedActionDynamics dynamicsShape=\"step\" value=\"0\" "
         "dynamicsDimension=\"time\"/><SpeedActionTarget><AbsoluteTargetSpeed value=\"" +
         value + "\"/></SpeedActionTarget></SpeedAction></LongitudinalAction></PrivateAction>";
}

std::string story_with_action(const std::string& action_xml, const std::string& condition_entity = "Ego") {
  return "<Story name=\"S\"><Act name=\"A\"><ManeuverGroup name=\"G\" maximumExecutionCount=\"1\"><Actors "
         "selectTriggeringEntities=\"false\"><EntityRef entityRef=\"Ego\"/></Actors><Maneuver name=\"M\">"
         "<Event name=\"E\" priority=\"overwrite\"><Action name=\"X\">" +
         action_xml +
         "</Action><StartTrigger><ConditionGroup><Condition name=\"c\" delay=\"0\" conditionEdge=\"rising\">"
         "<ByEntityCondition><TriggeringEntities triggeringEntitiesRule=\"any\"><EntityRef entityRef=\"" +
         condition_entity +
         "\"/></TriggeringEntities><EntityCondition><SpeedCondition value=\"5\" rule=\"greaterThan\"/>"
         "</EntityCondition></ByEntityCondition></Condition></ConditionGroup></StartTrigger></Event></Maneuver>"
         "</ManeuverGroup><StartTrigger><ConditionGroup><Condition name=\"go\" delay=\"0\" conditionEdge=\"none\">"
         "<ByValueCondition><SimulationTimeCondition value=\"0\" rule=\"greaterThan\"/></ByValueCondition>"
         "</Condition></ConditionGroup></StartTrigger></Act></Story>";
}

const std::string kSpeedAction =
    "<PrivateAction><LongitudinalAction><SpeedAction><SpeedActionDynamics dynamicsShape=\"linear\" value=\"2\" "
    "dynamicsDimension=\"time\"/><SpeedActionTarget><AbsoluteTargetSpeed value=\"20\"/></SpeedActionTarget>"
    "</SpeedAction></LongitudinalAction></PrivateAction>";

const std::string kStop =
    "<StopTrigger><ConditionGroup><Condition name=\"end\" delay=\"0\" conditionEdge=\"rising\"><ByValueCondition>"
    "<SimulationTimeCondition value=\"10\" rule=\"greaterThan\"/></ByValueCondition></Condition></ConditionGroup>"
    "</StopTrigger>";

double init_speed_of(const ScenarioDocument& doc) {
  for (const auto& ia : doc.storyboard.init_actions) {
    if (const auto* s = std::get_if<SpeedAbsolute>(&ia.action)) return s->target;
  }
  return -1.0;
}

ErrorCode code_of(const std::string& text, const ParseOptions& options = {}) {
  try {
    (void)parse_openscenario(text, options);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

bool same_tree(const xml::Node& a, const xml::Node& b) {
  if (a.name != b.name || a.attributes != b.attributes || a.text != b.text) return false;
  if (a.children.size() != b.children.size()) return false;
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!same_tree(a.children[i], b.children[i])) return false;
  }
  return true;
}

ScenarioDocument overtake() {
  ParseOptions po;
  po.base_dir = fixture::scenario_path("");
  return parse_openscenario(read_text_file(fixture::scenario_path("overtake.xosc")), po).document;
}

}  // namespace

TEST(OpenScenario, OvertakeStructure) {
  const auto doc = overtake();
  EXPECT_EQ(doc.road_network_ref, "straight_road.xodr");
  ASSERT_EQ(doc.entities.size(), 2u);
  for (const auto& e : doc.entities) EXPECT_EQ(e.category, "VEHICLE.CAR");
  ASSERT_EQ(doc.storyboard.stories.size(), 1u);
  const auto& act = doc.storyboard.stories[0].acts.at(0);
  ASSERT_EQ(act.maneuver_groups.size(), 1u);
  ASSERT_EQ(act.maneuver_groups[0].maneuvers.size(), 1u);
  const auto& events = act.maneuver_groups[0].maneuvers[0].events;
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].name, "LaneChangeLeft");
  EXPECT_EQ(events[1].name, "LaneChangeRight");
  const auto* left = std::get_if<LaneChangeRelative>(&events[0].actions.at(0).kind);
  ASSERT_NE(left, nullptr);
  EXPECT_EQ(left->lane_delta, 1);
  const auto* right = std::get_if<LaneChangeRelative>(&events[1].actions.at(0).kind);
  ASSERT_NE(right, nullptr);
  EXPECT_EQ(right->lane_delta, -1);

  const auto& gap = events[0].start_trigger->groups.at(0).conditions.at(0);
  const auto* rd = std::get_if<RelativeDistanceCondition>(&gap.kind);
  ASSERT_NE(rd, nullptr);
  EXPECT_EQ(rd->threshold, 20.0);
  EXPECT_EQ(rd->rule, Rule::LessThan);
  EXPECT_EQ(gap.edge, Edge::Rising);
  EXPECT_EQ(events[1].start_trigger->groups.at(0).conditions.at(0).delay, 5.0);
  EXPECT_EQ(doc.header.author, "osc2cr corpus");
  EXPECT_EQ(doc.header.rev_major, 1);
}

TEST(OpenScenario, OvertakeValidatesWithoutErrors) {
  const auto diags = validate_storyboard(overtake());
  EXPECT_EQ(count_severity(diags, Severity::Error), 0u);
}

TEST(OpenScenario, InitOnlyStoryboardHasNoStories) {
  const auto r = parse_openscenario(wrap("", speed_init("3"), ""));
  EXPECT_TRUE(r.document.storyboard.stories.empty());
  EXPECT_EQ(init_speed_of(r.document), 3.0);
}

TEST(OpenScenario, UnknownActionWarnsAndNeverReachesTheModel) {
  const std::string custom = "<UserDefinedAction><CustomCommandAction type=\"x\">go</CustomCommandAction></UserDefinedAction>";
  const auto r = parse_openscenario(wrap("", "", story_with_action(custom + "</Action><Action name=\"Y\">" + kSpeedAction), kStop));
  EXPECT_GE(r.warnings.size(), 1u);
  bool mentioned = false;
  for (const auto& w : r.warnings) mentioned = mentioned || w.message.find("CustomCommandAction") != std::string::npos;
  EXPECT_TRUE(mentioned);
  // The event keeps its supported action only.
  const auto& ev = r.document.storyboard.stories[0].acts[0].maneuver_groups[0].maneuvers[0].events[0];
  ASSERT_EQ(ev.actions.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<SpeedAbsolute>(ev.actions[0].kind));
}

TEST(OpenScenario, EventWithOnlyPlaceholdersIsDropped) {
  const std::string custom = "<UserDefinedAction><CustomCommandAction type=\"x\">go</CustomCommandAction></UserDefinedAction>";
  const auto r = parse_openscenario(wrap("", "", story_with_action(custom), kStop));
  EXPECT_TRUE(r.document.storyboard.stories[0].acts[0].maneuver_groups[0].maneuvers[0].events.empty());
}

TEST(Parameters, DeclarationAndOverridePrecedence) {
  const std::string decl = "<ParameterDeclaration name=\"speed\" parameterType=\"double\" value=\"30\"/>";
  const auto plain = parse_openscenario(wrap(decl, speed_init("$speed"), ""));
  EXPECT_EQ(init_speed_of(plain.document), 30.0);
  ParseOptions po;
  po.overrides["speed"] = "25";
  const auto over = parse_openscenario(wrap(decl, speed_init("$speed"), ""), po);
  EXPECT_EQ(init_speed_of(over.document), 25.0);
}

TEST(Parameters, ErrorsAreTyped) {
  EXPECT_EQ(code_of(wrap("", speed_init("$missing"), "")), ErrorCode::UnresolvedParameter);
  EXPECT_EQ(code_of(wrap("", speed_init("${1 + 2}"), "")), ErrorCode::UnsupportedExpression);
  const std::string bad = "<ParameterDeclaration name=\"n\" parameterType=\"integer\" value=\"2.5\"/>";
  EXPECT_EQ(code_of(wrap(bad, speed_init("1"), "")), ErrorCode::TypeMismatch);
  ParseOptions po;
  po.overrides["n"] = "x";
  const std::string good = "<ParameterDeclaration name=\"n\" parameterType=\"double\" value=\"2.5\"/>";
  EXPECT_EQ(code_of(wrap(good, speed_init("$n"), ""), po), ErrorCode::TypeMismatch);
}

TEST(Parameters, ResolutionIsIdempotent) {
  const std::string decl =
      "<ParameterDeclaration name=\"a\" parameterType=\"double\" value=\"4\"/>"
      "<ParameterDeclaration name=\"b\" parameterType=\"double\" value=\"$a\"/>";
  const auto root = xml::parse(wrap(decl, speed_init("$b"), ""));
  ParameterOverrides ov{{"a", "7"}};
  const auto once = resolve_parameters(root, ov);
  const auto twice = resolve_parameters(once, ov);
  EXPECT_TRUE(same_tree(once, twice));
  EXPECT_FALSE(same_tree(root, once));
}

TEST(Validation, DanglingEntityReferenceIsAnError) {
  const auto r = parse_openscenario(wrap("", "", story_with_action(kSpeedAction, "Ghost"), kStop));
  const auto diags = validate_storyboard(r.document);
  ASSERT_EQ(count_severity(diags, Severity::Error), 1u);
  bool named = false;
  for (const auto& d : diags) named = named || d.message.find("Ghost") != std::string::npos;
  EXPECT_TRUE(named);
}

TEST(Validation, MissingStopTriggerWarns) {
  const auto r = parse_openscenario(wrap("", "", story_with_action(kSpeedAction)));
  const auto diags = validate_storyboard(r.document);
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].severity, Severity::Warning);
  EXPECT_EQ(diags[0].message, "no stop trigger; t_max applies");
}

TEST(Validation, UnknownElementInStateConditionIsAnError) {
  auto doc = fixture::single_maneuver({fixture::car("Ego")}, {fixture::place("Ego", -1, 5)}, {"Ego"}, {});
  Event ev{"E", Priority::Overwrite, 1, {{"a", SpeedAbsolute{5.0, {}}}},
           fixture::trigger_of({{"c", 0.0, Edge::None, StoryboardElementStateCondition{ElementType::Event, "Nope",
                                                                                       ElementState::Complete}}})};
  doc.storyboard.stories[0].acts[0].maneuver_groups[0].maneuvers[0].events.push_back(ev);
  doc.storyboard.stop_trigger = fixture::trigger_of({fixture::time_condition(1.0)});
  EXPECT_EQ(count_severity(validate_storyboard(doc), Severity::Error), 1u);
}

TEST(OpenScenario, StructuralErrors) {
  EXPECT_EQ(code_of("<OpenSCENARIO><FileHeader/>"), ErrorCode::MalformedXml);
  std::string dup = wrap("", "", "");
  dup.insert(dup.find("</Entities>"), dup.substr(dup.find("<ScenarioObject"),
                                                 dup.find("</ScenarioObject>") + 17 - dup.find("<ScenarioObject")));
  EXPECT_EQ(code_of(dup), ErrorCode::DuplicateEntityName);
  std::string no_map = wrap("", "", "");
  no_map.erase(no_map.find("<RoadNetwork>"), no_map.find("</RoadNetwork>") + 14 - no_map.find("<RoadNetwork>"));
  EXPECT_EQ(code_of(no_map), ErrorCode::MissingRoadNetwork);
}

TEST(OpenScenario, ErrorsReportTheOffendingLine) {
  const std::string text =
      "<OpenSCENARIO>\n<FileHeader/>\n<RoadNetwork><LogicFile filepath=\"m.xodr\"/></RoadNetwork>\n<Entities>\n"
      "<ScenarioObject name=\"E\"><Vehicle name=\"v\" vehicleCategory=\"car\"><BoundingBox><Center x=\"0\" y=\"0\" "
      "z=\"0\"/>\n<Dimensions width=\"abc\" length=\"5\" height=\"1\"/></BoundingBox></Vehicle></ScenarioObject>\n"
      "</Entities><Storyboard><Init><Actions/></Init></Storyboard></OpenSCENARIO>";
  try {
    (void)parse_openscenario(text);
    FAIL();
  } catch (const Error& e) {
    ASSERT_TRUE(e.line().has_value());
    EXPECT_EQ(*e.line(), 6);
  }
}

TEST(Catalogs, EntriesResolveBesideTheScenario) {
  ParseOptions po;
  po.base_dir = fixture::data_path("catalog");
  const auto r = parse_openscenario(read_text_file(fixture::data_path("catalog/uses_catalog.xosc")), po);
  ASSERT_EQ(r.document.entities.size(), 2u);
  EXPECT_EQ(r.document.entities[0].bounding_box.length, 4.5);
  EXPECT_EQ(r.document.entities[1].bounding_box.length, 6.0);
  EXPECT_EQ(r.document.entities[0].category, "VEHICLE.CAR");
}

TEST(Catalogs, MissingCatalogIsAnError) {
  EXPECT_EQ(code_of(read_text_file(fixture::data_path("catalog/uses_catalog.xosc"))), ErrorCode::CatalogNotFound);
  ParseOptions po;
  po.base_dir = fixture::scenario_path("");
  EXPECT_EQ(code_of(read_text_file(fixture::data_path("catalog/uses_catalog.xosc")), po), ErrorCode::CatalogNotFound);
}

TEST(RoundTrip, CorpusDocumentsAreFixedPoints) {
  for (const char* name : {"overtake.xosc", "pedestrian_collision.xosc", "lane_keep.xosc", "speed_profile.xosc",
                           "no_stop_trigger.xosc", "curved_road.xosc"}) {
    ParseOptions po;
    po.base_dir = fixture::scenario_path("");
    const auto first = parse_openscenario(read_text_file(fixture::scenario_path(name)), po).document;
    const std::string written = write_openscenario(first);
    const auto second = parse_openscenario(written, po).document;
    EXPECT_EQ(first, second) << name;
    EXPECT_EQ(write_openscenario(second), written) << name;
  }
}

TEST(RoundTrip, RandomStoryboardsAreFixedPoints) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 50; ++i) {
    const auto doc = fixture::random_storyboard(rng);
    const auto back = parse_openscenario(write_openscenario(doc)).document;
    EXPECT_EQ(back.entities, doc.entities) << i;
    EXPECT_EQ(back.storyboard, doc.storyboard) << i;
  }
}
