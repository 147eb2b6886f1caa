#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "irvo/lint.hpp"

namespace irvo {

namespace {

// The world a relation touches at one endpoint. Transducers expose a real
// face and a virtual face; which one is in play depends on the direction.
std::optional<World> endpoint_face(const Entity& e, bool incoming) {
  switch (e.kind) {
    case EntityKind::User: return World::Real;
    case EntityKind::InternalModel: return World::Virtual;
    case EntityKind::Sensor: return incoming ? World::Real : World::Virtual;
    case EntityKind::Effector: return incoming ? World::Virtual : World::Real;
    case EntityKind::MixedGroup: return std::nullopt;
    default: return e.world;
  }
}

bool is_transducer(const Entity& e) {
  return e.kind == EntityKind::Sensor || e.kind == EntityKind::Effector;
}

std::vector<std::string> sorted_ids(const Model& m, EntityKind kind) {
  std::vector<std::string> out;
  for (const auto& [id, e] : m.entities)
    if (e.kind == kind) out.push_back(id);
  return out;  // map order is already sorted
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

// Objects a user acts on: walk salient (or all) Action relations from the
// user through tools and transducers, stopping at the first object.
std::set<std::string> acted_objects(const Model& m, const std::string& user, bool salient_only) {
  std::set<std::string> acted;
  std::set<std::string> visited{user};
  std::vector<std::string> frontier{user};
  while (!frontier.empty()) {
    std::string node = frontier.back();
    frontier.pop_back();
    for (const Relation& r : m.relations) {
      if (r.kind != RelationKind::Action) continue;
      if (salient_only && !r.salient) continue;
      if (r.from.entity != node) continue;
      const Entity* target = find_entity(m, r.to.entity);
      if (!target || visited.count(target->id)) continue;
      if (target->kind == EntityKind::Object) {
        acted.insert(target->id);
        continue;  // objects end an action chain
      }
      if (target->kind == EntityKind::Tool || is_transducer(*target)) {
        visited.insert(target->id);
        frontier.push_back(target->id);
      }
    }
  }
  return acted;
}

// Tools a user engages along those same chains.
std::set<std::string> engaged_tools(const Model& m, const std::string& user) {
  std::set<std::string> tools;
  std::set<std::string> visited{user};
  std::vector<std::string> frontier{user};
  while (!frontier.empty()) {
    std::string node = frontier.back();
    frontier.pop_back();
    for (const Relation& r : m.relations) {
      if (r.kind != RelationKind::Action || !r.salient) continue;
      if (r.from.entity != node) continue;
      const Entity* target = find_entity(m, r.to.entity);
      if (!target || visited.count(target->id)) continue;
      if (target->kind == EntityKind::Tool || is_transducer(*target)) {
        if (target->kind == EntityKind::Tool) tools.insert(target->id);
        visited.insert(target->id);
        frontier.push_back(target->id);
      }
    }
  }
  return tools;
}

// Perception of the tool itself: a path to the user whose intermediate
// nodes are transducers only. Going through another tool or an object is
// perceiving that thing, not this one.
bool tool_felt(const Model& m, const std::string& tool, const std::string& user,
               bool salient_only) {
  std::set<std::string> visited{tool};
  std::vector<std::string> frontier{tool};
  while (!frontier.empty()) {
    std::string node = frontier.back();
    frontier.pop_back();
    for (const Relation* r : traversal_relations(m, salient_only)) {
      if (r->from.entity != node) continue;
      if (r->to.entity == user) return true;
      const Entity* target = find_entity(m, r->to.entity);
      if (!target || visited.count(target->id)) continue;
      if (is_transducer(*target)) {
        visited.insert(target->id);
        frontier.push_back(target->id);
      }
    }
  }
  return false;
}

bool any_user_perceives(const Model& m, const std::string& node,
                        const std::vector<std::string>& users) {
  for (const std::string& u : users)
    if (reaches(m, node, u, {.salient_only = false})) return true;
  return false;
}

void sort_findings(std::vector<Finding>& findings) {
  std::sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
    const std::string& an = a.nodes.empty() ? std::string() : a.nodes.front();
    const std::string& bn = b.nodes.empty() ? std::string() : b.nodes.front();
    return std::tie(a.rule, an, a.message, a.nodes) < std::tie(b.rule, bn, b.message, b.nodes);
  });
}

}  // namespace

const char* to_string(Severity s) {
  switch (s) {
    case Severity::Info: return "info";
    case Severity::Warning: return "warning";
    case Severity::Error: return "error";
  }
  return "?";
}

std::optional<Severity> severity_from_string(std::string_view s) {
  if (s == "info") return Severity::Info;
  if (s == "warning") return Severity::Warning;
  if (s == "error") return Severity::Error;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// S1 + S5 + S6

std::vector<Finding> rule_worlds(const Model& m) {
  std::vector<Finding> out;
  for (const auto& [id, e] : m.entities) {
    switch (e.kind) {
      case EntityKind::User:
        if (e.world != World::Real)
          out.push_back({"S1", Severity::Error, "user '" + id + "' must be in the real world",
                         {id}});
        break;
      case EntityKind::InternalModel:
        if (e.world != World::Virtual)
          out.push_back({"S1", Severity::Error,
                         "internal model '" + id + "' must be in the virtual world", {id}});
        if (e.place)
          out.push_back({"S6", Severity::Error,
                         "internal model '" + id + "' cannot occupy a place", {id}});
        break;
      case EntityKind::Sensor:
      case EntityKind::Effector:
        if (e.world)
          out.push_back({"S1", Severity::Error,
                         "transducer '" + id + "' straddles both worlds and takes no world tag",
                         {id}});
        break;
      case EntityKind::Tool:
      case EntityKind::Object:
        if (!e.world)
          out.push_back({"S1", Severity::Error, "'" + id + "' has no world tag", {id}});
        else if (*e.world == World::Virtual && e.place)
          out.push_back({"S6", Severity::Error,
                         "virtual entity '" + id + "' carries a place; the virtual world has no "
                         "physical borders", {id}});
        break;
      case EntityKind::MixedGroup: {
        if (e.world)
          out.push_back({"S1", Severity::Error, "group '" + id + "' takes no world tag", {id}});
        bool real = false, virt = false, shape_ok = e.members.size() >= 2;
        for (const std::string& member : e.members) {
          const Entity* me = find_entity(m, member);
          if (!me || (me->kind != EntityKind::Tool && me->kind != EntityKind::Object)) {
            shape_ok = false;
            continue;
          }
          real = real || me->world == World::Real;
          virt = virt || me->world == World::Virtual;
        }
        if (!shape_ok)
          out.push_back({"S5", Severity::Error,
                         "group '" + id + "' must hold two or more tools or objects", {id}});
        else if (!real || !virt)
          out.push_back({"S5", Severity::Error,
                         "group '" + id + "' does not span both worlds", {id}});
        break;
      }
    }
  }
  // Partition: no entity belongs to two groups.
  std::map<std::string, std::vector<std::string>> owners;
  for (const auto& [id, e] : m.entities)
    if (e.kind == EntityKind::MixedGroup)
      for (const std::string& member : e.members) owners[member].push_back(id);
  for (const auto& [member, groups] : owners)
    if (groups.size() > 1)
      out.push_back({"S5", Severity::Error,
                     "'" + member + "' belongs to several groups (" + join_ids(groups) + ")",
                     {member}});
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------
// S2 + S3 + S4

namespace {

// Can this relation legitimately cross from place a to place b?
std::optional<std::string> crossing_problem(const Model& m, const Relation& r,
                                            const std::string& pa, const std::string& pb) {
  const PlaceBoundary* b = find_boundary(m, pa, pb);
  if (!b)
    return "'" + r.id + "' crosses from '" + pa + "' to '" + pb + "' with no declared boundary";
  switch (b->kind) {
    case BoundaryKind::Opaque:
      return "'" + r.id + "' crosses the opaque boundary between '" + pa + "' and '" + pb + "'";
    case BoundaryKind::AudioPermeable:
      if (effective_channel(m, r) == Channel::A) return std::nullopt;
      return "'" + r.id + "' crosses the audio boundary between '" + pa + "' and '" + pb +
             "' on a non-audio channel";
    case BoundaryKind::Mirror: {
      const Entity* target = find_entity(m, r.to.entity);
      bool ok = r.kind == RelationKind::Perception && target &&
                target->kind == EntityKind::User &&
                effective_place(m, target->id) == b->viewer &&
                effective_channel(m, r) == Channel::V;
      if (ok) return std::nullopt;
      return "'" + r.id + "' cannot pass the mirror between '" + pa + "' and '" + pb +
             "'; only sight into a user in '" + (b->viewer ? *b->viewer : std::string("?")) +
             "' passes";
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<Finding> rule_transducers(const Model& m) {
  std::vector<Finding> out;

  // S2: world coherence and place boundaries for every relation.
  for (const Relation& r : m.relations) {
    const Entity* from = find_entity(m, r.from.entity);
    const Entity* to = find_entity(m, r.to.entity);
    if (!from || !to) continue;
    auto from_face = endpoint_face(*from, false);
    auto to_face = endpoint_face(*to, true);
    if (!from_face || !to_face) continue;
    if (*from_face != *to_face) {
      if (!is_transducer(*from) && !is_transducer(*to))
        out.push_back({"S2", Severity::Error,
                       "'" + r.id + "' connects '" + from->id + "' and '" + to->id +
                       "' across worlds without a transducer", {r.id}});
      continue;  // transducer face mismatches are S3's business
    }
    if (*from_face == World::Real) {
      auto pa = effective_place(m, from->id);
      auto pb = effective_place(m, to->id);
      if (pa && pb && *pa != *pb)
        if (auto problem = crossing_problem(m, r, *pa, *pb))
          out.push_back({"S2", Severity::Error, *problem, {r.id}});
    }
  }

  // S3 + S4: one finding per offending transducer each.
  for (const auto& [id, e] : m.entities) {
    if (!is_transducer(e)) continue;
    std::vector<std::string> wrong_way;
    std::vector<std::string> wrong_channel;
    for (const Relation& r : m.relations) {
      bool outgoing = r.from.entity == id;
      bool incoming = r.to.entity == id;
      if (!outgoing && !incoming) continue;

      if (outgoing) {
        auto mine = endpoint_face(e, false);
        const Entity* other = find_entity(m, r.to.entity);
        auto theirs = other ? endpoint_face(*other, true) : std::nullopt;
        if (mine && theirs && *mine != *theirs) wrong_way.push_back(r.id);
      }
      if (incoming) {
        auto mine = endpoint_face(e, true);
        const Entity* other = find_entity(m, r.from.entity);
        auto theirs = other ? endpoint_face(*other, false) : std::nullopt;
        if (mine && theirs && *mine != *theirs) wrong_way.push_back(r.id);
      }

      if (e.channel) {
        std::vector<Channel> evidence;
        if (r.channel) evidence.push_back(*r.channel);
        if (r.from.channel) evidence.push_back(*r.from.channel);
        if (r.to.channel) evidence.push_back(*r.to.channel);
        const Entity* other = find_entity(m, outgoing ? r.to.entity : r.from.entity);
        if (other && is_transducer(*other) && other->channel)
          evidence.push_back(*other->channel);
        if (std::any_of(evidence.begin(), evidence.end(),
                        [&](Channel c) { return c != *e.channel; }))
          wrong_channel.push_back(r.id);
      }
    }
    if (!wrong_way.empty()) {
      std::sort(wrong_way.begin(), wrong_way.end());
      wrong_way.erase(std::unique(wrong_way.begin(), wrong_way.end()), wrong_way.end());
      Finding f{"S3", Severity::Error,
                std::string(e.kind == EntityKind::Sensor ? "sensor" : "effector") + " '" + id +
                "' is crossed in the wrong direction by " + join_ids(wrong_way), {id}};
      f.nodes.insert(f.nodes.end(), wrong_way.begin(), wrong_way.end());
      out.push_back(std::move(f));
    }
    if (!wrong_channel.empty()) {
      std::sort(wrong_channel.begin(), wrong_channel.end());
      wrong_channel.erase(std::unique(wrong_channel.begin(), wrong_channel.end()),
                          wrong_channel.end());
      Finding f{"S4", Severity::Error,
                "transducer '" + id + "' carries channel " + to_string(*e.channel) +
                " but is crossed on another channel by " + join_ids(wrong_channel), {id}};
      f.nodes.insert(f.nodes.end(), wrong_channel.begin(), wrong_channel.end());
      out.push_back(std::move(f));
    }
  }
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------
// R1

std::vector<Finding> rule_loop(const Model& m) {
  std::vector<Finding> out;
  std::vector<std::string> users = sorted_ids(m, EntityKind::User);
  std::vector<std::string> objects = sorted_ids(m, EntityKind::Object);

  if (m.intent == TaskIntent::PerceptionOnly) {
    for (const std::string& tool : sorted_ids(m, EntityKind::Tool))
      out.push_back({"R1", Severity::Error,
                     "tool '" + tool + "' has no role in a perception-only task", {tool}});
    for (const std::string& u : users) {
      bool fed = std::any_of(objects.begin(), objects.end(), [&](const std::string& o) {
        return reaches(m, o, u, {.salient_only = true});
      });
      if (!fed)
        out.push_back({"R1", Severity::Error, "no object is perceived by '" + u + "'", {u}});
    }
    sort_findings(out);
    return out;
  }

  for (const std::string& u : users) {
    std::set<std::string> acted = acted_objects(m, u, true);
    bool closed = std::any_of(acted.begin(), acted.end(), [&](const std::string& o) {
      return reaches(m, o, u, {.salient_only = true});
    });
    if (closed) continue;

    std::set<std::string> acted_all = acted_objects(m, u, false);
    bool dashed_loop = std::any_of(acted_all.begin(), acted_all.end(), [&](const std::string& o) {
      return reaches(m, o, u, {.salient_only = false});
    });
    std::string message = "no action-perception loop for user '" + u + "'";
    if (acted.empty() && acted_all.empty())
      message += "; no action chain reaches an object";
    else if (dashed_loop)
      message += "; a loop exists but only through dashed relations";
    out.push_back({"R1", Severity::Error, std::move(message), {u}});
  }
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------
// R2

std::vector<Finding> rule_observability(const Model& m) {
  std::vector<Finding> out;
  for (const std::string& u : sorted_ids(m, EntityKind::User)) {
    for (const std::string& tool : engaged_tools(m, u)) {
      if (tool_felt(m, tool, u, true)) continue;
      if (tool_felt(m, tool, u, false))
        out.push_back({"R2", Severity::Info,
                       "tool '" + tool + "' is felt by '" + u +
                       "' only through dashed relations", {tool, u}});
      else
        out.push_back({"R2", Severity::Warning,
                       "tool '" + tool + "' gives no perceptible feedback to '" + u + "'",
                       {tool, u}});
    }
  }
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------
// R4

std::vector<Finding> rule_continuity(const Model& m) {
  std::vector<Finding> out;
  std::vector<std::string> users = sorted_ids(m, EntityKind::User);

  for (const auto& [gid, g] : m.entities) {
    if (g.kind != EntityKind::MixedGroup) continue;

    for (const std::string& member : g.members)
      if (find_entity(m, member) && !any_user_perceives(m, member, users))
        out.push_back({"R4", Severity::Warning,
                       "member '" + member + "' of '" + gid + "' is perceived by no user",
                       {gid, member}});

    // When several members arrive at one user on the same channel, their
    // final perception legs must converge through a single merge node.
    for (const std::string& u : users) {
      std::map<Channel, std::map<std::string, std::set<Port>>> legs;
      for (const std::string& member : g.members) {
        if (!find_entity(m, member)) continue;
        auto paths = perception_paths(m, member, u);
        if (!paths.ok()) continue;
        for (const PerceptionPath& p : paths.value()) {
          const Relation* last = find_relation(m, p.relations.back());
          if (!last || !last->salient || !last->to.channel) continue;
          legs[*last->to.channel][member].insert(last->from);
        }
      }
      for (const auto& [ch, by_member] : legs) {
        if (by_member.size() < 2) continue;
        std::set<Port> needed;
        for (const auto& [member, ports] : by_member) needed.insert(ports.begin(), ports.end());
        bool converged = false;
        for (const MergeNode& node : m.merges) {
          if (node.output.entity != u || node.output.channel != ch) continue;
          bool covers = std::all_of(needed.begin(), needed.end(), [&](const Port& p) {
            return std::any_of(node.inputs.begin(), node.inputs.end(), [&](const Port& in) {
              return in.entity == p.entity &&
                     (!in.channel || !p.channel || *in.channel == *p.channel);
            });
          });
          if (covers) { converged = true; break; }
        }
        if (!converged) {
          std::vector<std::string> members;
          for (const auto& [member, ports] : by_member) members.push_back(member);
          out.push_back({"R4", Severity::Warning,
                         "members of '" + gid + "' (" + join_ids(members) + ") reach '" + u +
                         "' on channel " + to_string(ch) +
                         " without converging through one merge node", {gid, u}});
        }
      }
    }
  }
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------
// R5

std::vector<Finding> rule_wysiwis(const Model& m, std::vector<std::string>* notes) {
  std::vector<Finding> out;
  std::vector<std::string> users = sorted_ids(m, EntityKind::User);
  if (users.size() < 2) {
    out.push_back({"R5", Severity::Info, "single-user model; sharing holds trivially", {}});
    return out;
  }
  if (notes)
    notes->push_back("R5 applied globally; users are not scoped to their places");

  std::set<std::string> grouped;
  for (const auto& [id, e] : m.entities)
    if (e.kind == EntityKind::MixedGroup)
      for (const std::string& member : e.members) grouped.insert(member);

  // Shared units: every mixed group, plus every ungrouped domain object.
  // Seeing any member of a group counts as seeing the shared thing.
  std::vector<std::pair<std::string, std::vector<std::string>>> units;
  for (const auto& [id, e] : m.entities) {
    if (e.kind == EntityKind::MixedGroup) units.push_back({id, e.members});
    else if (e.kind == EntityKind::Object && !grouped.count(id)) units.push_back({id, {id}});
  }

  for (const auto& [unit, members] : units) {
    for (const std::string& u : users) {
      bool seen = std::any_of(members.begin(), members.end(), [&](const std::string& member) {
        return find_entity(m, member) && reaches(m, member, u, {.salient_only = false});
      });
      if (!seen)
        out.push_back({"R5", Severity::Warning,
                       "user '" + u + "' perceives no part of '" + unit + "' (" +
                       join_ids(members) + ")", {unit, u}});
    }
  }
  sort_findings(out);
  return out;
}

// ---------------------------------------------------------------------------
// Report assembly and formats

LintReport check(const Model& m) {
  LintReport report;
  report.model = m.name;
  auto take = [&](std::vector<Finding> findings) {
    report.findings.insert(report.findings.end(), findings.begin(), findings.end());
  };
  take(rule_worlds(m));
  take(rule_transducers(m));
  take(rule_loop(m));
  take(rule_observability(m));
  take(rule_continuity(m));
  take(rule_wysiwis(m, &report.notes));
  sort_findings(report.findings);
  for (const Finding& f : report.findings) {
    if (f.severity == Severity::Error) ++report.errors;
    if (f.severity == Severity::Warning) ++report.warnings;
    if (f.severity == Severity::Info) ++report.infos;
  }
  return report;
}

std::string report_to_json(const LintReport& report) {
  nlohmann::ordered_json j;
  j["schema"] = "irvo-lint/1";
  j["model"] = report.model;
  j["findings"] = nlohmann::ordered_json::array();
  for (const Finding& f : report.findings) {
    nlohmann::ordered_json jf;
    jf["rule"] = f.rule;
    jf["severity"] = to_string(f.severity);
    jf["message"] = f.message;
    jf["nodes"] = f.nodes;
    j["findings"].push_back(std::move(jf));
  }
  j["summary"] = {{"errors", report.errors},
                  {"warnings", report.warnings},
                  {"infos", report.infos}};
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

Result<LintReport> report_from_json(std::string_view text) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    return Error{ErrorCode::BadInput, "report", "not a JSON object"};
  if (!j.contains("schema") || j["schema"] != "irvo-lint/1")
    return Error{ErrorCode::BadInput, "report", "unsupported schema"};
  LintReport report;
  if (!j.contains("model") || !j["model"].is_string())
    return Error{ErrorCode::BadInput, "report", "missing model name"};
  report.model = j["model"].get<std::string>();
  if (j.contains("findings")) {
    if (!j["findings"].is_array())
      return Error{ErrorCode::BadInput, "findings", "expected an array"};
    for (const auto& jf : j["findings"]) {
      Finding f;
      if (!jf.contains("rule") || !jf.contains("severity") || !jf.contains("message"))
        return Error{ErrorCode::BadInput, "findings", "finding lacks a field"};
      f.rule = jf["rule"].get<std::string>();
      auto sev = severity_from_string(jf["severity"].get<std::string>());
      if (!sev) return Error{ErrorCode::BadInput, f.rule, "unknown severity"};
      f.severity = *sev;
      f.message = jf["message"].get<std::string>();
      if (jf.contains("nodes"))
        for (const auto& n : jf["nodes"]) f.nodes.push_back(n.get<std::string>());
      if (f.severity == Severity::Error) ++report.errors;
      if (f.severity == Severity::Warning) ++report.warnings;
      if (f.severity == Severity::Info) ++report.infos;
      report.findings.push_back(std::move(f));
    }
  }
  if (j.contains("notes"))
    for (const auto& n : j["notes"]) report.notes.push_back(n.get<std::string>());
  return report;
}

std::string report_to_text(const LintReport& report) {
  std::ostringstream out;
  out << report.model << ": " << report.errors << " error(s), " << report.warnings
      << " warning(s), " << report.infos << " info(s)\n";
  for (const Finding& f : report.findings) {
    out << "  [" << f.rule << "] " << to_string(f.severity) << ": " << f.message;
    if (!f.nodes.empty()) out << " {" << join_ids(f.nodes) << "}";
    out << "\n";
  }
  for (const std::string& note : report.notes) out << "  note: " << note << "\n";
  return out.str();
}

}  // namespace irvo
