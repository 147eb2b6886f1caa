#include <algorithm>

#include "irvo/dsl.hpp"

namespace irvo::dsl {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string port_text(const Model& m, const Port& p) {
  std::string out = p.entity;
  if (p.channel) out += "." + std::string(to_string(*p.channel));
  return out;
}

std::string mobility_clause(const Mobility& mob) {
  if (mob.kind == MobilityKind::Unspecified) return "";
  std::string out = " mobility ";
  if (mob.reference) out += *mob.reference + "/";
  out += to_string(mob.kind);
  return out;
}

std::string entity_line(const Model& m, const Entity& e) {
  std::string out = to_string(e.kind);
  out += " " + e.id;
  // Users are real and the internal model virtual by definition; only
  // tools and objects carry an explicit tag.
  if ((e.kind == EntityKind::Tool || e.kind == EntityKind::Object) && e.world)
    out += std::string(" ") + to_string(*e.world);
  if (e.kind == EntityKind::Sensor || e.kind == EntityKind::Effector)
    out += std::string(" channel ") + to_string(*e.channel);
  if (e.place) out += " @" + *e.place;
  out += mobility_clause(e.mobility);
  if (e.stack) out += " stack";
  if (e.nested_in) out += " in " + *e.nested_in;
  return out;
}

}  // namespace

std::string serialize(const Model& m) {
  std::string out = "model " + quote(m.name) + " {\n";
  out += std::string("  intent ") + to_string(m.intent) + "\n";

  for (const std::string& place : m.places) out += "  place " + place + "\n";

  for (const PlaceBoundary& pb : m.boundaries) {
    out += "  boundary " + pb.a + " " + pb.b + " " + to_string(pb.kind);
    if (pb.viewer) out += " viewer " + *pb.viewer;
    out += "\n";
  }

  std::vector<const Entity*> ordered;
  ordered.reserve(m.entities.size());
  for (const auto& [id, e] : m.entities) ordered.push_back(&e);
  std::stable_sort(ordered.begin(), ordered.end(), [](const Entity* a, const Entity* b) {
    return std::make_pair(kind_rank(a->kind), a->id) < std::make_pair(kind_rank(b->kind), b->id);
  });

  for (const Entity* e : ordered) {
    if (e->kind == EntityKind::MixedGroup) continue;
    out += "  " + entity_line(m, *e) + "\n";
  }
  for (const Entity* e : ordered) {
    if (e->kind != EntityKind::MixedGroup) continue;
    out += "  mixed " + e->id + " { ";
    for (size_t i = 0; i < e->members.size(); ++i) {
      if (i) out += ", ";
      out += e->members[i];
    }
    out += " }\n";
  }

  for (const Relation& r : m.relations) {
    out += "  rel " + port_text(m, r.from) + " -> " + port_text(m, r.to);
    out += std::string(" ") + to_string(r.kind);
    if (!r.salient) out += " dashed";
    if (r.channel) out += std::string(" channel ") + to_string(*r.channel);
    if (r.annotation) out += " " + quote(*r.annotation);
    out += "\n";
  }

  for (const MergeNode& n : m.merges) {
    out += "  merge " + n.id + " { ";
    for (size_t i = 0; i < n.inputs.size(); ++i) {
      if (i) out += ", ";
      out += port_text(m, n.inputs[i]);
    }
    out += " } -> " + port_text(m, n.output) + "\n";
  }

  out += "}\n";
  return out;
}

}  // namespace irvo::dsl
