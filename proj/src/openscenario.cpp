#include "osc2cr/openscenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace osc2cr::osc {

const EntityConfig* ScenarioDocument::find_entity(std::string_view name) const {
  for (const auto& e : entities) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

std::string_view to_string(ElementType type) {
  switch (type) {
    case ElementType::Story: return "story";
    case ElementType::Act: return "act";
    case ElementType::ManeuverGroup: return "maneuverGroup";
    case ElementType::Maneuver: return "maneuver";
    case ElementType::Event: return "event";
    case ElementType::Action: return "action";
  }
  return "";
}

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::LessThan: return "lessThan";
    case Rule::GreaterThan: return "greaterThan";
    case Rule::EqualTo: return "equalTo";
  }
  return "";
}

std::string_view to_string(Edge edge) {
  switch (edge) {
    case Edge::Rising: return "rising";
    case Edge::Falling: return "falling";
    case Edge::RisingOrFalling: return "risingOrFalling";
    case Edge::None: return "none";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Parameters

namespace {

using Scope = std::map<std::string, std::string, std::less<>>;

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string substitute(std::string_view raw, const Scope& scope, int line) {
  if (raw.find('$') == std::string_view::npos) return std::string{raw};
  std::string out;
  for (std::size_t i = 0; i < raw.size();) {
    if (raw[i] != '$') {
      out += raw[i++];
      continue;
    }
    if (i + 1 < raw.size() && raw[i + 1] == '{') {
      throw Error(ErrorCode::UnsupportedExpression,
                  "expression '" + std::string{raw.substr(i)} + "' (only $name references are supported)", line);
    }
    std::size_t j = i + 1;
    if (j >= raw.size() || !is_ident_start(raw[j])) {
      throw Error(ErrorCode::UnresolvedParameter, "malformed reference in '" + std::string{raw} + "'", line);
    }
    while (j < raw.size() && is_ident_char(raw[j])) ++j;
    const std::string name{raw.substr(i + 1, j - i - 1)};
    auto it = scope.find(name);
    if (it == scope.end()) throw Error(ErrorCode::UnresolvedParameter, "$" + name, line);
    out += it->second;
    i = j;
  }
  return out;
}

void check_type(const std::string& name, const std::string& type, const std::string& value, int line) {
  bool ok = true;
  if (type == "integer" || type == "int") {
    ok = xml::to_int(value).has_value();
  } else if (type == "unsignedInt" || type == "unsignedShort") {
    auto v = xml::to_int(value);
    ok = v && *v >= 0;
  } else if (type == "double") {
    ok = xml::to_double(value).has_value();
  } else if (type == "boolean") {
    ok = value == "true" || value == "false";
  }
  if (!ok) {
    throw Error(ErrorCode::TypeMismatch, name + " declared " + type + " but has value '" + value + "'", line);
  }
}

void declare(xml::Node& decls, Scope& scope, const ParameterOverrides* overrides) {
  for (auto& d : decls.children) {
    if (d.name != "ParameterDeclaration") continue;
    const std::string name = d.required("name");
    std::string value = substitute(d.optional("value"), scope, d.line);
    if (overrides != nullptr) {
      if (auto it = overrides->find(name); it != overrides->end()) value = it->second;
    }
    check_type(name, d.optional("parameterType", "string"), value, d.line);
    d.set_attr("value", value);
    scope[name] = value;
  }
}

void resolve_node(xml::Node& node, Scope scope, const ParameterOverrides* overrides) {
  for (auto& c : node.children) {
    if (c.name == "ParameterDeclarations") declare(c, scope, overrides);
  }
  for (auto& [key, value] : node.attributes) value = substitute(value, scope, node.line);
  for (auto& c : node.children) {
    if (c.name == "ParameterDeclarations") continue;
    resolve_node(c, scope, nullptr);
  }
}

}  // namespace

xml::Node resolve_parameters(xml::Node root, const ParameterOverrides& overrides) {
  Scope scope;
  for (const auto& [k, v] : overrides) scope[k] = v;
  resolve_node(root, std::move(scope), &overrides);
  return root;
}

// ---------------------------------------------------------------------------
// Typed parsing

namespace {

std::string upper(std::string_view s) {
  std::string out{s};
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

struct Parser {
  const ParseOptions& options;
  Diagnostics warnings;

  void warn(std::string msg, int line) { warnings.push_back({Severity::Warning, std::move(msg), line}); }

  [[noreturn]] static void invalid(const xml::Node& n, const std::string& what) {
    throw Error(ErrorCode::InvalidValue, "<" + n.name + "> " + what, n.line);
  }

  static const xml::Node& require_child(const xml::Node& n, std::string_view name) {
    const xml::Node* c = n.child(name);
    if (c == nullptr) {
      throw Error(ErrorCode::MissingAttribute, "<" + n.name + "> requires child <" + std::string{name} + ">", n.line);
    }
    return *c;
  }

  BoundingBox read_box(const xml::Node& n) const {
    BoundingBox box;
    const xml::Node& dims = require_child(n, "Dimensions");
    box.length = dims.required_double("length");
    box.width = dims.required_double("width");
    box.height = dims.optional_double("height", 0.0);
    if (const auto* c = n.child("Center")) box.center = {c->optional_double("x", 0.0), c->optional_double("y", 0.0)};
    if (!(box.length > 0.0 && box.width > 0.0)) invalid(dims, "length and width must be positive");
    return box;
  }

  EntityConfig read_object(const xml::Node& obj, const std::string& name) {
    EntityConfig e;
    e.name = name;
    if (obj.name == "Vehicle") {
      e.category = "VEHICLE." + upper(obj.optional("vehicleCategory", "car"));
      if (const auto* perf = obj.child("Performance")) {
        Performance p{perf->required_double("maxSpeed"), perf->required_double("maxAcceleration"),
                      perf->required_double("maxDeceleration")};
        if (!(p.max_speed > 0 && p.max_accel > 0 && p.max_decel > 0)) {
          invalid(*perf, "performance limits must be positive");
        }
        e.performance = p;
      }
    } else if (obj.name == "Pedestrian") {
      const std::string cat = upper(obj.optional("pedestrianCategory", "pedestrian"));
      e.category = cat == "PEDESTRIAN" ? "PEDESTRIAN" : "PEDESTRIAN." + cat;
    } else if (obj.name == "MiscObject") {
      e.category = "MISC_OBJECT." + upper(obj.optional("miscObjectCategory", "none"));
    } else {
      invalid(obj, "is not a supported entity object");
    }
    e.bounding_box = read_box(require_child(obj, "BoundingBox"));
    return e;
  }

  xml::Node load_catalog_entry(const xml::Node& ref) {
    const std::string catalog = ref.required("catalogName");
    const std::string entry = ref.required("entryName");
    if (options.base_dir.empty()) {
      throw Error(ErrorCode::CatalogNotFound, "catalog '" + catalog + "' (no scenario directory known)", ref.line);
    }
    std::vector<std::filesystem::path> files;
    std::error_code ec;
    for (const auto& f : std::filesystem::directory_iterator(options.base_dir, ec)) {
      if (f.path().extension() == ".xosc") files.push_back(f.path());
    }
    std::sort(files.begin(), files.end());
    ParameterOverrides assignments;
    if (const auto* pa = ref.child("ParameterAssignments")) {
      for (const auto* a : pa->children_named("ParameterAssignment")) {
        assignments[a->required("parameterRef")] = a->required("value");
      }
    }
    for (const auto& path : files) {
      std::ifstream in(path, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      xml::Node root;
      try {
        root = xml::parse(buf.str());
      } catch (const Error&) {
        continue;
      }
      const xml::Node* cat = root.child("Catalog");
      if (cat == nullptr || cat->optional("name") != catalog) continue;
      for (const auto& item : cat->children) {
        if (item.optional("name") != entry) continue;
        return resolve_parameters(item, assignments);
      }
      throw Error(ErrorCode::CatalogNotFound, "entry '" + entry + "' not in catalog '" + catalog + "'", ref.line);
    }
    throw Error(ErrorCode::CatalogNotFound,
                "catalog '" + catalog + "' not found beside the scenario in " + options.base_dir.string(), ref.line);
  }

  std::vector<EntityConfig> read_entities(const xml::Node& n) {
    std::vector<EntityConfig> out;
    std::set<std::string> names;
    for (const auto& so : n.children) {
      if (so.name != "ScenarioObject") {
        warn("entity selection <" + so.name + "> ignored", so.line);
        continue;
      }
      const std::string name = so.required("name");
      if (!names.insert(name).second) throw Error(ErrorCode::DuplicateEntityName, name, so.line);
      const xml::Node* obj = nullptr;
      xml::Node resolved;
      for (const auto& c : so.children) {
        if (c.name == "Vehicle" || c.name == "Pedestrian" || c.name == "MiscObject") {
          obj = &c;
        } else if (c.name == "CatalogReference") {
          resolved = load_catalog_entry(c);
          obj = &resolved;
        }
      }
      if (obj == nullptr) invalid(so, "has no Vehicle, Pedestrian, MiscObject or CatalogReference");
      out.push_back(read_object(*obj, name));
    }
    return out;
  }

  std::optional<Position> read_position(const xml::Node& n) {
    const xml::Node* p = n.children.empty() ? nullptr : &n.children.front();
    if (p == nullptr) invalid(n, "is empty");
    if (p->name == "LanePosition") {
      return LanePosition{p->required("roadId"), static_cast<int>(p->required_int("laneId")),
                          p->required_double("s"), p->optional_double("offset", 0.0)};
    }
    if (p->name == "WorldPosition") {
      return WorldPosition{p->required_double("x"), p->required_double("y"), p->optional_double("h", 0.0)};
    }
    warn("unsupported position <" + p->name + "> replaced by placeholder", p->line);
    return std::nullopt;
  }

  TransitionDynamics read_dynamics(const xml::Node& n) {
    TransitionDynamics d;
    const std::string shape = n.required("dynamicsShape");
    if (shape == "step") {
      d.shape = DynamicsShape::Step;
    } else if (shape == "linear") {
      d.shape = DynamicsShape::Linear;
    } else if (shape == "cubic") {
      d.shape = DynamicsShape::Cubic;
    } else if (shape == "sinusoidal") {
      d.shape = DynamicsShape::Sinusoidal;
    } else {
      invalid(n, "dynamicsShape '" + shape + "'");
    }
    const std::string dim = n.optional("dynamicsDimension", "time");
    if (dim == "time") {
      d.dimension = DynamicsDimension::Time;
    } else if (dim == "distance") {
      d.dimension = DynamicsDimension::Distance;
    } else if (dim == "rate") {
      d.dimension = DynamicsDimension::Rate;
    } else {
      invalid(n, "dynamicsDimension '" + dim + "'");
    }
    d.value = n.optional_double("value", 0.0);
    if (d.value < 0.0) invalid(n, "dynamics value must be non-negative");
    return d;
  }

  std::optional<ActionKind> read_private_action(const xml::Node& pa) {
    const xml::Node* a = pa.children.empty() ? nullptr : &pa.children.front();
    if (a == nullptr) invalid(pa, "is empty");
    auto unsupported = [&](const xml::Node& n) -> std::optional<ActionKind> {
      warn("unsupported action <" + n.name + "> replaced by placeholder", n.line);
      return std::nullopt;
    };
    if (a->name == "TeleportAction") {
      auto pos = read_position(require_child(*a, "Position"));
      if (!pos) return std::nullopt;
      return Teleport{*pos};
    }
    if (a->name == "LongitudinalAction") {
      const xml::Node* sa = a->child("SpeedAction");
      if (sa == nullptr) return unsupported(a->children.empty() ? *a : a->children.front());
      const TransitionDynamics dyn = read_dynamics(require_child(*sa, "SpeedActionDynamics"));
      const xml::Node& target = require_child(*sa, "SpeedActionTarget");
      if (const auto* abs = target.child("AbsoluteTargetSpeed")) return SpeedAbsolute{abs->required_double("value"), dyn};
      if (const auto* rel = target.child("RelativeTargetSpeed")) {
        if (rel->optional("speedTargetValueType", "delta") != "delta") return unsupported(*rel);
        return SpeedRelative{rel->required("entityRef"), rel->required_double("value"), dyn,
                             rel->optional_bool("continuous", false)};
      }
      return unsupported(target);
    }
    if (a->name == "LateralAction") {
      const xml::Node* lc = a->child("LaneChangeAction");
      if (lc == nullptr) return unsupported(a->children.empty() ? *a : a->children.front());
      const TransitionDynamics dyn = read_dynamics(require_child(*lc, "LaneChangeActionDynamics"));
      const double offset = lc->optional_double("targetLaneOffset", 0.0);
      const xml::Node& target = require_child(*lc, "LaneChangeTarget");
      if (const auto* rel = target.child("RelativeTargetLane")) {
        return LaneChangeRelative{rel->required("entityRef"), static_cast<int>(rel->required_int("value")), dyn,
                                  offset};
      }
      if (const auto* abs = target.child("AbsoluteTargetLane")) {
        return LaneChangeAbsolute{static_cast<int>(abs->required_int("value")), dyn, offset};
      }
      return unsupported(target);
    }
    if (a->name == "RoutingAction") {
      const xml::Node* ft = a->child("FollowTrajectoryAction");
      if (ft == nullptr) return unsupported(a->children.empty() ? *a : a->children.front());
      const xml::Node* traj = ft->child("Trajectory");
      if (traj == nullptr) {
        if (const auto* ref = ft->child("TrajectoryRef")) traj = ref->child("Trajectory");
      }
      if (traj == nullptr) return unsupported(*ft);
      const xml::Node* poly = require_child(*traj, "Shape").child("Polyline");
      if (poly == nullptr) return unsupported(require_child(*traj, "Shape"));
      FollowPolyline fp;
      double scale = 1.0;
      double offset = 0.0;
      if (const auto* tr = ft->child("TimeReference")) {
        const xml::Node* timing = tr->child("Timing");
        if (timing == nullptr) return unsupported(*tr);
        fp.absolute_time = timing->optional("domainAbsoluteRelative", "relative") == "absolute";
        scale = timing->optional_double("scale", 1.0);
        offset = timing->optional_double("offset", 0.0);
      }
      for (const auto* v : poly->children_named("Vertex")) {
        auto pos = read_position(require_child(*v, "Position"));
        if (!pos) return std::nullopt;
        fp.vertices.push_back({v->required_double("time") * scale + offset, *pos});
      }
      if (fp.vertices.size() < 2) invalid(*poly, "needs at least two vertices");
      for (std::size_t i = 1; i < fp.vertices.size(); ++i) {
        if (!(fp.vertices[i].time > fp.vertices[i - 1].time)) invalid(*poly, "vertex times must increase");
      }
      return fp;
    }
    return unsupported(*a);
  }

  Rule read_rule(const xml::Node& n, bool& ok) {
    const std::string r = n.required("rule");
    ok = true;
    if (r == "lessThan") return Rule::LessThan;
    if (r == "greaterThan") return Rule::GreaterThan;
    if (r == "equalTo") return Rule::EqualTo;
    ok = false;
    return Rule::LessThan;
  }

  std::optional<ConditionKind> read_condition_kind(const xml::Node& c) {
    auto unsupported = [&](const xml::Node& n) -> std::optional<ConditionKind> {
      warn("unsupported condition <" + n.name + "> replaced by placeholder", n.line);
      return std::nullopt;
    };
    if (const auto* bv = c.child("ByValueCondition")) {
      const xml::Node* k = bv->children.empty() ? nullptr : &bv->children.front();
      if (k == nullptr) invalid(*bv, "is empty");
      if (k->name == "SimulationTimeCondition") {
        bool ok = true;
        const Rule rule = read_rule(*k, ok);
        if (!ok) return unsupported(*k);
        return SimulationTimeCondition{k->required_double("value"), rule};
      }
      if (k->name == "StoryboardElementStateCondition") {
        StoryboardElementStateCondition s;
        const std::string type = k->required("storyboardElementType");
        if (type == "story") {
          s.type = ElementType::Story;
        } else if (type == "act") {
          s.type = ElementType::Act;
        } else if (type == "maneuverGroup") {
          s.type = ElementType::ManeuverGroup;
        } else if (type == "maneuver") {
          s.type = ElementType::Maneuver;
        } else if (type == "event") {
          s.type = ElementType::Event;
        } else if (type == "action") {
          s.type = ElementType::Action;
        } else {
          invalid(*k, "storyboardElementType '" + type + "'");
        }
        s.element = k->required("storyboardElementRef");
        const std::string state = k->required("state");
        if (state == "completeState") {
          s.state = ElementState::Complete;
        } else if (state == "runningState") {
          s.state = ElementState::Running;
        } else {
          return unsupported(*k);
        }
        return s;
      }
      return unsupported(*k);
    }
    if (const auto* be = c.child("ByEntityCondition")) {
      const xml::Node& te = require_child(*be, "TriggeringEntities");
      const auto refs = te.children_named("EntityRef");
      if (refs.empty()) invalid(te, "lists no entity");
      if (refs.size() > 1) warn("only the first triggering entity is evaluated", te.line);
      const std::string entity = refs.front()->required("entityRef");
      const xml::Node& ec = require_child(*be, "EntityCondition");
      const xml::Node* k = ec.children.empty() ? nullptr : &ec.children.front();
      if (k == nullptr) invalid(ec, "is empty");
      if (k->name == "RelativeDistanceCondition") {
        bool ok = true;
        const Rule rule = read_rule(*k, ok);
        if (!ok) return unsupported(*k);
        RelativeDistanceCondition r;
        r.entity_a = entity;
        r.entity_b = k->required("entityRef");
        r.threshold = k->required_double("value");
        r.rule = rule;
        const std::string type = k->required("relativeDistanceType");
        if (type == "longitudinal") {
          r.axis = DistanceAxis::Longitudinal;
        } else if (type == "lateral") {
          r.axis = DistanceAxis::Lateral;
        } else if (type == "cartesianDistance" || type == "euclidianDistance" || type == "cartesian") {
          r.axis = DistanceAxis::Cartesian;
        } else {
          return unsupported(*k);
        }
        if (k->optional_bool("freespace", false)) {
          warn("freespace distance not supported; reference points are used", k->line);
        }
        return r;
      }
      if (k->name == "SpeedCondition") {
        bool ok = true;
        const Rule rule = read_rule(*k, ok);
        if (!ok) return unsupported(*k);
        return SpeedCondition{entity, k->required_double("value"), rule};
      }
      if (k->name == "TraveledDistanceCondition") {
        return TraveledDistanceCondition{entity, k->required_double("value")};
      }
      return unsupported(*k);
    }
    return unsupported(c.children.empty() ? c : c.children.front());
  }

  std::optional<Trigger> read_trigger(const xml::Node* n) {
    if (n == nullptr) return std::nullopt;
    Trigger t;
    for (const auto* g : n->children_named("ConditionGroup")) {
      ConditionGroup group;
      bool usable = true;
      for (const auto* c : g->children_named("Condition")) {
        Condition cond;
        cond.name = c->optional("name");
        cond.delay = c->optional_double("delay", 0.0);
        if (cond.delay < 0.0) invalid(*c, "delay must be non-negative");
        cond.edge = options.default_edge;
        if (auto e = c->attr("conditionEdge")) {
          if (*e == "rising") {
            cond.edge = Edge::Rising;
          } else if (*e == "falling") {
            cond.edge = Edge::Falling;
          } else if (*e == "risingOrFalling") {
            cond.edge = Edge::RisingOrFalling;
          } else if (*e == "none") {
            cond.edge = Edge::None;
          } else {
            invalid(*c, "conditionEdge '" + std::string{*e} + "'");
          }
        }
        auto kind = read_condition_kind(*c);
        if (!kind) {
          usable = false;
          continue;
        }
        cond.kind = std::move(*kind);
        group.conditions.push_back(std::move(cond));
      }
      if (!usable) {
        warn("condition group dropped because it contains a placeholder", g->line);
        continue;
      }
      if (!group.conditions.empty()) t.groups.push_back(std::move(group));
    }
    return t;
  }

  Priority read_priority(const xml::Node& n) {
    const std::string p = n.optional("priority", "overwrite");
    if (p == "overwrite" || p == "override") return Priority::Overwrite;
    if (p == "skip") return Priority::Skip;
    if (p == "parallel") return Priority::Parallel;
    invalid(n, "priority '" + p + "'");
  }

  std::optional<Event> read_event(const xml::Node& n) {
    Event e;
    e.name = n.required("name");
    e.priority = read_priority(n);
    e.maximum_execution_count = static_cast<int>(n.optional_int("maximumExecutionCount", 1));
    if (e.maximum_execution_count < 1) invalid(n, "maximumExecutionCount must be >= 1");
    for (const auto* a : n.children_named("Action")) {
      const xml::Node* pa = a->child("PrivateAction");
      if (pa == nullptr) {
        std::string what = a->name;
        if (!a->children.empty()) {
          const xml::Node& outer = a->children.front();
          what = outer.name + (outer.children.empty() ? "" : "/" + outer.children.front().name);
        }
        warn("unsupported action <" + what + "> replaced by placeholder", a->line);
        continue;
      }
      auto kind = read_private_action(*pa);
      if (kind) e.actions.push_back({a->optional("name"), std::move(*kind)});
    }
    e.start_trigger = read_trigger(n.child("StartTrigger"));
    if (e.actions.empty()) {
      warn("event '" + e.name + "' dropped: it holds only placeholder actions", n.line);
      return std::nullopt;
    }
    return e;
  }

  Storyboard read_storyboard(const xml::Node& n) {
    Storyboard sb;
    if (const auto* init = n.child("Init")) {
      if (const auto* actions = init->child("Actions")) {
        for (const auto& c : actions->children) {
          if (c.name != "Private") {
            warn("init action <" + c.name + "> ignored", c.line);
            continue;
          }
          const std::string entity = c.required("entityRef");
          for (const auto* pa : c.children_named("PrivateAction")) {
            auto kind = read_private_action(*pa);
            if (kind) sb.init_actions.push_back({entity, std::move(*kind)});
          }
        }
      }
    }
    for (const auto* st : n.children_named("Story")) {
      Story story;
      story.name = st->optional("name");
      for (const auto* ac : st->children_named("Act")) {
        Act act;
        act.name = ac->required("name");
        for (const auto* mg : ac->children_named("ManeuverGroup")) {
          ManeuverGroup group;
          group.name = mg->optional("name");
          group.maximum_execution_count = static_cast<int>(mg->optional_int("maximumExecutionCount", 1));
          if (group.maximum_execution_count < 1) invalid(*mg, "maximumExecutionCount must be >= 1");
          if (const auto* actors = mg->child("Actors")) {
            if (actors->optional_bool("selectTriggeringEntities", false)) {
              warn("selectTriggeringEntities is not supported; listed actors are used", actors->line);
            }
            for (const auto* r : actors->children_named("EntityRef")) group.actors.push_back(r->required("entityRef"));
          }
          for (const auto* m : mg->children_named("Maneuver")) {
            Maneuver man;
            man.name = m->optional("name");
            for (const auto* ev : m->children_named("Event")) {
              if (auto e = read_event(*ev)) man.events.push_back(std::move(*e));
            }
            group.maneuvers.push_back(std::move(man));
          }
          if (!mg->children_named("CatalogReference").empty()) {
            warn("maneuver catalog references are not supported", mg->line);
          }
          act.maneuver_groups.push_back(std::move(group));
        }
        act.start_trigger = read_trigger(ac->child("StartTrigger"));
        act.stop_trigger = read_trigger(ac->child("StopTrigger"));
        if (!act.start_trigger) warn("act '" + act.name + "' has no start trigger; it starts immediately", ac->line);
        story.acts.push_back(std::move(act));
      }
      sb.stories.push_back(std::move(story));
    }
    sb.stop_trigger = read_trigger(n.child("StopTrigger"));
    return sb;
  }
};

}  // namespace

ParseResult parse_openscenario(std::string_view xml_text, const ParseOptions& options) {
  xml::Node root = xml::parse(xml_text);
  if (root.name != "OpenSCENARIO") {
    throw Error(ErrorCode::MalformedXml, "root element is <" + root.name + ">, expected <OpenSCENARIO>", root.line);
  }
  root = resolve_parameters(std::move(root), options.overrides);

  Parser p{options, {}};
  ParseResult result;
  ScenarioDocument& doc = result.document;
  if (const auto* fh = root.child("FileHeader")) {
    doc.header.author = fh->optional("author");
    doc.header.date = fh->optional("date");
    doc.header.description = fh->optional("description");
    doc.header.rev_major = static_cast<int>(fh->optional_int("revMajor", 1));
    doc.header.rev_minor = static_cast<int>(fh->optional_int("revMinor", 0));
    if (doc.header.rev_major != 1 || doc.header.rev_minor < 0 || doc.header.rev_minor > 2) {
      p.warn("OpenSCENARIO version " + std::to_string(doc.header.rev_major) + "." +
                 std::to_string(doc.header.rev_minor) + " outside the tested 1.0-1.2 range",
             fh->line);
    }
  } else {
    p.warn("missing <FileHeader>", root.line);
  }
  const xml::Node* rn = root.child("RoadNetwork");
  const xml::Node* logic = rn ? rn->child("LogicFile") : nullptr;
  if (logic == nullptr || logic->optional("filepath").empty()) {
    throw Error(ErrorCode::MissingRoadNetwork, "no <RoadNetwork><LogicFile filepath=.../>", rn ? rn->line : root.line);
  }
  doc.road_network_ref = logic->required("filepath");
  if (const auto* ents = root.child("Entities")) doc.entities = p.read_entities(*ents);
  if (const auto* sb = root.child("Storyboard")) {
    doc.storyboard = p.read_storyboard(*sb);
  } else {
    p.warn("missing <Storyboard>", root.line);
  }
  result.warnings = std::move(p.warnings);
  return result;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct Validator {
  const ScenarioDocument& doc;
  Diagnostics out;
  std::multiset<std::pair<ElementType, std::string>> elements;

  void error(std::string msg) { out.push_back({Severity::Error, std::move(msg), std::nullopt}); }

  void entity(const std::string& name, const std::string& where) {
    if (doc.find_entity(name) == nullptr) error(where + " references unknown entity '" + name + "'");
  }

  void action(const ActionKind& a, const std::string& where) {
    if (const auto* r = std::get_if<SpeedRelative>(&a)) entity(r->reference, where);
    if (const auto* r = std::get_if<LaneChangeRelative>(&a)) entity(r->reference, where);
  }

  void trigger(const std::optional<Trigger>& t, const std::string& where) {
    if (!t) return;
    for (const auto& g : t->groups) {
      for (const auto& c : g.conditions) {
        std::visit(
            [&](const auto& k) {
              using K = std::decay_t<decltype(k)>;
              if constexpr (std::is_same_v<K, RelativeDistanceCondition>) {
                entity(k.entity_a, where);
                entity(k.entity_b, where);
              } else if constexpr (std::is_same_v<K, SpeedCondition> || std::is_same_v<K, TraveledDistanceCondition>) {
                entity(k.entity, where);
              } else if constexpr (std::is_same_v<K, StoryboardElementStateCondition>) {
                const auto n = elements.count({k.type, k.element});
                if (n == 0) {
                  error(where + " references unknown " + std::string{to_string(k.type)} + " '" + k.element + "'");
                } else if (n > 1) {
                  out.push_back({Severity::Warning,
                                 where + ": " + std::string{to_string(k.type)} + " name '" + k.element +
                                     "' is ambiguous; the first match is used",
                                 std::nullopt});
                }
              }
            },
            c.kind);
      }
    }
  }
};

}  // namespace

Diagnostics validate_storyboard(const ScenarioDocument& doc) {
  Validator v{doc, {}, {}};
  const Storyboard& sb = doc.storyboard;
  for (const auto& st : sb.stories) {
    v.elements.insert({ElementType::Story, st.name});
    for (const auto& act : st.acts) {
      v.elements.insert({ElementType::Act, act.name});
      for (const auto& mg : act.maneuver_groups) {
        v.elements.insert({ElementType::ManeuverGroup, mg.name});
        for (const auto& m : mg.maneuvers) {
          v.elements.insert({ElementType::Maneuver, m.name});
          for (const auto& e : m.events) {
            v.elements.insert({ElementType::Event, e.name});
            for (const auto& a : e.actions) v.elements.insert({ElementType::Action, a.name});
          }
        }
      }
    }
  }

  std::set<std::string> positioned;
  for (const auto& ia : sb.init_actions) {
    v.entity(ia.entity, "init action");
    v.action(ia.action, "init action for '" + ia.entity + "'");
    if (std::holds_alternative<Teleport>(ia.action)) positioned.insert(ia.entity);
  }
  for (const auto& e : doc.entities) {
    if (!positioned.count(e.name)) v.error("entity '" + e.name + "' has no initial position");
  }

  bool any_stop = sb.stop_trigger.has_value();
  for (const auto& st : sb.stories) {
    for (const auto& act : st.acts) {
      any_stop = any_stop || act.stop_trigger.has_value();
      v.trigger(act.start_trigger, "act '" + act.name + "' start trigger");
      v.trigger(act.stop_trigger, "act '" + act.name + "' stop trigger");
      for (const auto& mg : act.maneuver_groups) {
        for (const auto& actor : mg.actors) v.entity(actor, "maneuver group '" + mg.name + "'");
        for (const auto& m : mg.maneuvers) {
          for (const auto& e : m.events) {
            for (const auto& a : e.actions) v.action(a.kind, "event '" + e.name + "'");
            v.trigger(e.start_trigger, "event '" + e.name + "' start trigger");
          }
        }
      }
    }
  }
  v.trigger(sb.stop_trigger, "storyboard stop trigger");
  if (!any_stop) v.out.push_back({Severity::Warning, "no stop trigger; t_max applies", std::nullopt});
  return v.out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using xml::exact;
using Attrs = xml::Writer::Attrs;

std::string lower(std::string_view s) {
  std::string out{s};
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view shape_name(DynamicsShape s) {
  switch (s) {
    case DynamicsShape::Step: return "step";
    case DynamicsShape::Linear: return "linear";
    case DynamicsShape::Cubic: return "cubic";
    case DynamicsShape::Sinusoidal: return "sinusoidal";
  }
  return "";
}

std::string_view dimension_name(DynamicsDimension d) {
  switch (d) {
    case DynamicsDimension::Time: return "time";
    case DynamicsDimension::Distance: return "distance";
    case DynamicsDimension::Rate: return "rate";
  }
  return "";
}

struct Emitter {
  xml::Writer w;

  void position(const Position& p) {
    w.open("Position");
    if (const auto* lp = std::get_if<LanePosition>(&p)) {
      w.empty("LanePosition", {{"roadId", lp->road_id},
                               {"laneId", std::to_string(lp->lane_id)},
                               {"s", exact(lp->s)},
                               {"offset", exact(lp->offset)}});
    } else {
      const auto& wp = std::get<WorldPosition>(p);
      w.empty("WorldPosition", {{"x", exact(wp.x)}, {"y", exact(wp.y)}, {"h", exact(wp.h)}});
    }
    w.close();
  }

  void dynamics(std::string_view tag, const TransitionDynamics& d) {
    w.empty(tag, {{"dynamicsShape", std::string{shape_name(d.shape)}},
                  {"value", exact(d.value)},
                  {"dynamicsDimension", std::string{dimension_name(d.dimension)}}});
  }

  void private_action(const ActionKind& a) {
    w.open("PrivateAction");
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Teleport>) {
            w.open("TeleportAction");
            position(k.position);
            w.close();
          } else if constexpr (std::is_same_v<K, SpeedAbsolute> || std::is_same_v<K, SpeedRelative>) {
            w.open("LongitudinalAction");
            w.open("SpeedAction");
            dynamics("SpeedActionDynamics", k.dynamics);
            w.open("SpeedActionTarget");
            if constexpr (std::is_same_v<K, SpeedAbsolute>) {
              w.empty("AbsoluteTargetSpeed", {{"value", exact(k.target)}});
            } else {
              w.empty("RelativeTargetSpeed", {{"entityRef", k.reference},
                                              {"value", exact(k.delta)},
                                              {"speedTargetValueType", "delta"},
                                              {"continuous", k.continuous ? "true" : "false"}});
            }
            w.close();
            w.close();
            w.close();
          } else if constexpr (std::is_same_v<K, LaneChangeRelative> || std::is_same_v<K, LaneChangeAbsolute>) {
            w.open("LateralAction");
            w.open("LaneChangeAction", {{"targetLaneOffset", exact(k.target_offset)}});
            dynamics("LaneChangeActionDynamics", k.dynamics);
            w.open("LaneChangeTarget");
            if constexpr (std::is_same_v<K, LaneChangeRelative>) {
              w.empty("RelativeTargetLane", {{"entityRef", k.reference}, {"value", std::to_string(k.lane_delta)}});
            } else {
              w.empty("AbsoluteTargetLane", {{"value", std::to_string(k.target_lane)}});
            }
            w.close();
            w.close();
            w.close();
          } else if constexpr (std::is_same_v<K, FollowPolyline>) {
            w.open("RoutingAction");
            w.open("FollowTrajectoryAction");
            w.open("Trajectory", {{"name", "polyline"}, {"closed", "false"}});
            w.open("Shape");
            w.open("Polyline");
            for (const auto& v : k.vertices) {
              w.open("Vertex", {{"time", exact(v.time)}});
              position(v.position);
              w.close();
            }
            w.close();
            w.close();
            w.close();
            w.open("TimeReference");
            w.empty("Timing", {{"domainAbsoluteRelative", k.absolute_time ? "absolute" : "relative"},
                               {"scale", "1"},
                               {"offset", "0"}});
            w.close();
            w.empty("TrajectoryFollowingMode", {{"followingMode", "position"}});
            w.close();
            w.close();
          }
        },
        a);
    w.close();
  }

  void rule_attr(Attrs& attrs, Rule r) { attrs.emplace_back("rule", std::string{to_string(r)}); }

  void condition(const Condition& c) {
    w.open("Condition", {{"name", c.name}, {"delay", exact(c.delay)}, {"conditionEdge", std::string{to_string(c.edge)}}});
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, SimulationTimeCondition>) {
            w.open("ByValueCondition");
            Attrs a{{"value", exact(k.threshold)}};
            rule_attr(a, k.rule);
            w.empty("SimulationTimeCondition", a);
            w.close();
          } else if constexpr (std::is_same_v<K, StoryboardElementStateCondition>) {
            w.open("ByValueCondition");
            w.empty("StoryboardElementStateCondition",
                    {{"storyboardElementType", std::string{to_string(k.type)}},
                     {"storyboardElementRef", k.element},
                     {"state", k.state == ElementState::Complete ? "completeState" : "runningState"}});
            w.close();
          } else {
            w.open("ByEntityCondition");
            w.open("TriggeringEntities", {{"triggeringEntitiesRule", "any"}});
            if constexpr (std::is_same_v<K, RelativeDistanceCondition>) {
              w.empty("EntityRef", {{"entityRef", k.entity_a}});
            } else {
              w.empty("EntityRef", {{"entityRef", k.entity}});
            }
            w.close();
            w.open("EntityCondition");
            if constexpr (std::is_same_v<K, RelativeDistanceCondition>) {
              const char* type = k.axis == DistanceAxis::Longitudinal ? "longitudinal"
                                 : k.axis == DistanceAxis::Lateral    ? "lateral"
                                                                      : "cartesianDistance";
              Attrs a{{"entityRef", k.entity_b}, {"relativeDistanceType", type}, {"value", exact(k.threshold)},
                      {"freespace", "false"}};
              rule_attr(a, k.rule);
              w.empty("RelativeDistanceCondition", a);
            } else if constexpr (std::is_same_v<K, SpeedCondition>) {
              Attrs a{{"value", exact(k.threshold)}};
              rule_attr(a, k.rule);
              w.empty("SpeedCondition", a);
            } else {
              w.empty("TraveledDistanceCondition", {{"value", exact(k.threshold)}});
            }
            w.close();
            w.close();
          }
        },
        c.kind);
    w.close();
  }

  void trigger(std::string_view tag, const std::optional<Trigger>& t) {
    if (!t) return;
    w.open(tag);
    for (const auto& g : t->groups) {
      w.open("ConditionGroup");
      for (const auto& c : g.conditions) condition(c);
      w.close();
    }
    w.close();
  }

  void entity(const EntityConfig& e) {
    w.open("ScenarioObject", {{"name", e.name}});
    const auto dot = e.category.find('.');
    const std::string head = e.category.substr(0, dot);
    const std::string tail = dot == std::string::npos ? std::string{} : lower(e.category.substr(dot + 1));
    if (head == "VEHICLE") {
      w.open("Vehicle", {{"name", e.name}, {"vehicleCategory", tail}});
    } else if (head == "PEDESTRIAN") {
      w.open("Pedestrian", {{"name", e.name}, {"model", e.name}, {"mass", "80"},
                            {"pedestrianCategory", tail.empty() ? "pedestrian" : tail}});
    } else {
      w.open("MiscObject", {{"name", e.name}, {"mass", "0"}, {"miscObjectCategory", tail}});
    }
    w.open("BoundingBox");
    w.empty("Center", {{"x", exact(e.bounding_box.center.x)}, {"y", exact(e.bounding_box.center.y)}, {"z", "0"}});
    w.empty("Dimensions", {{"width", exact(e.bounding_box.width)},
                           {"length", exact(e.bounding_box.length)},
                           {"height", exact(e.bounding_box.height)}});
    w.close();
    if (e.performance) {
      w.empty("Performance", {{"maxSpeed", exact(e.performance->max_speed)},
                              {"maxAcceleration", exact(e.performance->max_accel)},
                              {"maxDeceleration", exact(e.performance->max_decel)}});
    }
    w.close();
    w.close();
  }
};

}  // namespace

std::string write_openscenario(const ScenarioDocument& doc) {
  Emitter em;
  auto& w = em.w;
  w.open("OpenSCENARIO");
  w.empty("FileHeader", {{"revMajor", std::to_string(doc.header.rev_major)},
                         {"revMinor", std::to_string(doc.header.rev_minor)},
                         {"date", doc.header.date},
                         {"description", doc.header.description},
                         {"author", doc.header.author}});
  w.open("RoadNetwork");
  w.empty("LogicFile", {{"filepath", doc.road_network_ref}});
  w.close();
  w.open("Entities");
  for (const auto& e : doc.entities) em.entity(e);
  w.close();
  w.open("Storyboard");
  w.open("Init");
  w.open("Actions");
  for (const auto& ia : doc.storyboard.init_actions) {
    w.open("Private", {{"entityRef", ia.entity}});
    em.private_action(ia.action);
    w.close();
  }
  w.close();
  w.close();
  for (const auto& st : doc.storyboard.stories) {
    w.open("Story", {{"name", st.name}});
    for (const auto& act : st.acts) {
      w.open("Act", {{"name", act.name}});
      for (const auto& mg : act.maneuver_groups) {
        w.open("ManeuverGroup",
               {{"maximumExecutionCount", std::to_string(mg.maximum_execution_count)}, {"name", mg.name}});
        w.open("Actors", {{"selectTriggeringEntities", "false"}});
        for (const auto& a : mg.actors) w.empty("EntityRef", {{"entityRef", a}});
        w.close();
        for (const auto& m : mg.maneuvers) {
          w.open("Maneuver", {{"name", m.name}});
          for (const auto& e : m.events) {
            const char* prio = e.priority == Priority::Overwrite ? "overwrite"
                               : e.priority == Priority::Skip    ? "skip"
                                                                 : "parallel";
            w.open("Event", {{"name", e.name},
                             {"priority", prio},
                             {"maximumExecutionCount", std::to_string(e.maximum_execution_count)}});
            for (const auto& a : e.actions) {
              w.open("Action", {{"name", a.name}});
              em.private_action(a.kind);
              w.close();
            }
            em.trigger("StartTrigger", e.start_trigger);
            w.close();
          }
          w.close();
        }
        w.close();
      }
      em.trigger("StartTrigger", act.start_trigger);
      em.trigger("StopTrigger", act.stop_trigger);
      w.close();
    }
    w.close();
  }
  em.trigger("StopTrigger", doc.storyboard.stop_trigger);
  w.close();
  return w.finish();
}

}  // namespace osc2cr::osc
