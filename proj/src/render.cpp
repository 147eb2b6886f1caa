#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "irvo/render.hpp"

namespace irvo {

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string world_tag(const Entity& e) {
  switch (e.kind) {
    case EntityKind::User: return "U";
    case EntityKind::InternalModel: return "M";
    case EntityKind::Sensor:
      return e.channel ? std::string("S:") + to_string(*e.channel) : std::string("S");
    case EntityKind::Effector:
      return e.channel ? std::string("E:") + to_string(*e.channel) : std::string("E");
    case EntityKind::MixedGroup: return "mixed";
    case EntityKind::Tool: return e.world == World::Virtual ? "Tv" : "Tr";
    case EntityKind::Object: return e.world == World::Virtual ? "Ov" : "Or";
  }
  return "?";
}

std::string mobility_glyph(const Model& m, const Entity& e) {
  Mobility mob = effective_mobility(m, e.id);
  std::string glyph;
  switch (mob.kind) {
    case MobilityKind::Mobile: glyph = "↔"; break;        // left-right arrow
    case MobilityKind::TaskFixed: glyph = "×"; break;     // multiplication sign
    case MobilityKind::AlwaysFixed: glyph = "⊗"; break;   // circled times
    case MobilityKind::Unspecified: return "";
  }
  if (mob.reference) glyph += " " + *mob.reference;
  return " " + glyph;
}

std::string node_line(const Model& m, const Entity& e) {
  std::ostringstream out;
  out << "\"" << dot_escape(e.id) << "\" [label=\""
      << dot_escape(e.id + " [" + world_tag(e) + "]" + mobility_glyph(m, e)) << "\"";
  switch (e.kind) {
    case EntityKind::User: out << ", shape=circle"; break;
    case EntityKind::Tool: out << ", shape=box"; break;
    case EntityKind::Object: out << ", shape=box, style=rounded"; break;
    case EntityKind::InternalModel: out << ", shape=component"; break;
    case EntityKind::Sensor: out << ", shape=trapezium"; break;
    case EntityKind::Effector: out << ", shape=invtrapezium"; break;
    case EntityKind::MixedGroup: out << ", shape=box, style=dashed"; break;
  }
  if (e.stack) out << ", peripheries=2";
  out << "];";
  return out.str();
}

const char* arrowhead(RelationKind k) {
  switch (k) {
    case RelationKind::Action: return "normal";
    case RelationKind::Perception: return "vee";
    case RelationKind::Communication: return "diamond";
  }
  return "normal";
}

bool is_transducer_kind(EntityKind k) {
  return k == EntityKind::Sensor || k == EntityKind::Effector;
}

}  // namespace

std::string to_dot(const Model& m, const RenderOptions& opts) {
  std::ostringstream out;
  out << "digraph \"" << dot_escape(m.name) << "\" {\n";
  out << "  rankdir=LR;\n";
  out << "  node [fontsize=10];\n";
  out << "  edge [fontsize=9];\n";

  for (const PlaceBoundary& b : m.boundaries) {
    out << "  // boundary " << b.a << " -- " << b.b << " " << to_string(b.kind);
    if (b.viewer) out << " viewer=" << *b.viewer;
    out << "\n";
  }

  // Which merge node, if any, consumes each perception relation.
  std::map<std::string, std::string> junction_of;
  for (const MergeNode& node : m.merges) {
    for (const Relation& r : m.relations) {
      if (junction_of.count(r.id)) continue;
      if (r.kind != RelationKind::Perception) continue;
      if (r.to.entity != node.output.entity || r.to.channel != node.output.channel) continue;
      bool covered = std::any_of(node.inputs.begin(), node.inputs.end(), [&](const Port& in) {
        return in.entity == r.from.entity &&
               (!in.channel || !r.from.channel || *in.channel == *r.from.channel);
      });
      if (covered) junction_of[r.id] = "merge_" + node.id;
    }
  }

  // For the transducer-free view, pair incoming and outgoing legs.
  std::set<std::string> collapsed;  // hidden transducer ids
  std::set<std::string> collapsed_rels;
  if (!opts.show_transducers) {
    for (const auto& [id, e] : m.entities) {
      if (!is_transducer_kind(e.kind)) continue;
      bool has_in = false, has_out = false;
      for (const Relation& r : m.relations) {
        if (r.to.entity == id) has_in = true;
        if (r.from.entity == id) has_out = true;
      }
      if (has_in && has_out) {
        collapsed.insert(id);
        for (const Relation& r : m.relations)
          if (r.to.entity == id || r.from.entity == id) collapsed_rels.insert(r.id);
      }
    }
  }

  auto in_real = [&](const Entity& e) {
    return e.kind == EntityKind::User ||
           ((e.kind == EntityKind::Tool || e.kind == EntityKind::Object) &&
            e.world == World::Real);
  };
  auto in_virtual = [&](const Entity& e) {
    return e.kind == EntityKind::InternalModel ||
           ((e.kind == EntityKind::Tool || e.kind == EntityKind::Object) &&
            e.world == World::Virtual);
  };

  out << "  subgraph cluster_real {\n    label=\"R\";\n";
  if (opts.cluster_places) {
    for (const std::string& place : m.places) {
      std::vector<const Entity*> here;
      for (const auto& [id, e] : m.entities)
        if (in_real(e) && effective_place(m, id) == place) here.push_back(&e);
      if (here.empty()) continue;
      out << "    subgraph \"cluster_place_" << dot_escape(place) << "\" {\n";
      out << "      label=\"" << dot_escape(place) << "\";\n";
      for (const Entity* e : here) out << "      " << node_line(m, *e) << "\n";
      out << "    }\n";
    }
    for (const auto& [id, e] : m.entities)
      if (in_real(e) && !effective_place(m, id)) out << "    " << node_line(m, e) << "\n";
  } else {
    for (const auto& [id, e] : m.entities)
      if (in_real(e)) out << "    " << node_line(m, e) << "\n";
  }
  out << "  }\n";

  bool any_transducer_shown = false;
  for (const auto& [id, e] : m.entities)
    if (is_transducer_kind(e.kind) && !collapsed.count(id)) any_transducer_shown = true;
  if (any_transducer_shown) {
    out << "  subgraph cluster_transducers {\n    label=\"R/V\";\n";
    for (const auto& [id, e] : m.entities)
      if (is_transducer_kind(e.kind) && !collapsed.count(id))
        out << "    " << node_line(m, e) << "\n";
    out << "  }\n";
  }

  out << "  subgraph cluster_virtual {\n    label=\"V\";\n";
  for (const auto& [id, e] : m.entities)
    if (in_virtual(e)) out << "    " << node_line(m, e) << "\n";
  out << "  }\n";

  for (const auto& [id, e] : m.entities)
    if (e.kind == EntityKind::MixedGroup) out << "  " << node_line(m, e) << "\n";

  for (const MergeNode& node : m.merges)
    out << "  \"merge_" << dot_escape(node.id)
        << "\" [label=\"⊕\", shape=circle, fixedsize=true, width=0.25];\n";

  // Structural dotted links: group membership and nesting.
  for (const auto& [id, e] : m.entities) {
    if (e.kind == EntityKind::MixedGroup)
      for (const std::string& member : e.members)
        out << "  \"" << dot_escape(id) << "\" -> \"" << dot_escape(member)
            << "\" [style=dotted, arrowhead=none];\n";
    if (e.nested_in)
      out << "  \"" << dot_escape(id) << "\" -> \"" << dot_escape(*e.nested_in)
          << "\" [style=dotted, arrowhead=none, label=\"in\"];\n";
  }

  auto edge_attrs = [&](const Relation& r, bool to_junction) {
    std::ostringstream attrs;
    attrs << "arrowhead=" << (to_junction ? "none" : arrowhead(r.kind));
    if (!r.salient) attrs << ", style=dashed";
    std::string label;
    if (auto ch = effective_channel(m, r)) label = to_string(*ch);
    if (r.annotation) label += (label.empty() ? "" : " ") + *r.annotation;
    if (!label.empty()) attrs << ", label=\"" << dot_escape(label) << "\"";
    return attrs.str();
  };

  for (const Relation& r : m.relations) {
    if (!opts.show_dashed && !r.salient) continue;
    if (collapsed_rels.count(r.id)) continue;
    auto junction = junction_of.find(r.id);
    std::string target = junction != junction_of.end() ? junction->second : r.to.entity;
    out << "  \"" << dot_escape(r.from.entity) << "\" -> \"" << dot_escape(target) << "\" ["
        << edge_attrs(r, junction != junction_of.end()) << "];\n";
  }

  // Collapsed transducers: join each incoming leg to each outgoing leg.
  for (const std::string& id : collapsed) {
    for (const Relation& in : m.relations) {
      if (in.to.entity != id) continue;
      for (const Relation& rel_out : m.relations) {
        if (rel_out.from.entity != id) continue;
        bool salient = in.salient && rel_out.salient;
        if (!opts.show_dashed && !salient) continue;
        auto junction = junction_of.find(rel_out.id);
        std::string target =
            junction != junction_of.end() ? junction->second : rel_out.to.entity;
        out << "  \"" << dot_escape(in.from.entity) << "\" -> \"" << dot_escape(target)
            << "\" [arrowhead="
            << (junction != junction_of.end() ? "none" : arrowhead(rel_out.kind));
        if (!salient) out << ", style=dashed";
        std::string label = "via " + id;
        if (auto ch = effective_channel(m, rel_out)) label += std::string(" ") + to_string(*ch);
        out << ", label=\"" << dot_escape(label) << "\"];\n";
      }
    }
  }

  // One edge from each junction into its user port.
  for (const MergeNode& node : m.merges) {
    out << "  \"merge_" << dot_escape(node.id) << "\" -> \"" << dot_escape(node.output.entity)
        << "\" [arrowhead=vee";
    if (node.output.channel) out << ", label=\"" << to_string(*node.output.channel) << "\"";
    out << "];\n";
  }

  out << "}\n";
  return out.str();
}

}  // namespace irvo
