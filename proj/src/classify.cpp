#include <algorithm>
#include <cctype>

#include "irvo/classify.hpp"

namespace irvo {

const char* to_string(StyleLabel label) {
  switch (label) {
    case StyleLabel::WIMP: return "WIMP";
    case StyleLabel::VR: return "VR";
    case StyleLabel::AR: return "AR";
    case StyleLabel::AV: return "AV";
    case StyleLabel::MR: return "MR";
  }
  return "?";
}

std::string case_name(const CaseInstance& c) {
  std::string name = c.tool_world == World::Real ? "Tr" : "Tv";
  name += c.object_world == World::Real ? "Or" : "Ov";
  return name;
}

bool DeviceProfile::matches(const std::string& id) const {
  if (ids.count(id)) return true;
  std::string token;
  for (char ch : id + "_") {
    if (ch == '_' || ch == '-') {
      if (!token.empty() && ids.count(token)) return true;
      token.clear();
    } else {
      token += ch;
    }
  }
  return false;
}

DeviceProfile DeviceProfile::standard() { return DeviceProfile{{"mouse", "keyboard", "screen"}}; }

DeviceProfile profile_from_text(std::string_view text) {
  DeviceProfile profile;
  std::string line;
  for (size_t i = 0; i <= text.size(); ++i) {
    if (i < text.size() && text[i] != '\n') {
      line += text[i];
      continue;
    }
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
    size_t start = 0;
    while (start < line.size() && std::isspace(static_cast<unsigned char>(line[start]))) ++start;
    if (start < line.size()) profile.ids.insert(line.substr(start));
    line.clear();
  }
  return profile;
}

namespace {

bool in_group(const Model& m, const std::string& id) {
  for (const auto& [gid, g] : m.entities)
    if (g.kind == EntityKind::MixedGroup)
      if (std::find(g.members.begin(), g.members.end(), id) != g.members.end()) return true;
  return false;
}

// Salient action chains from a user, through tools and transducers, ending
// at the first object reached. Every tool on the chain pairs with that
// object.
void chase(const Model& m, const std::string& node, std::set<std::string>& on_path,
           std::vector<std::string>& tools, std::set<CaseInstance>& out) {
  for (const Relation& r : m.relations) {
    if (r.kind != RelationKind::Action || !r.salient) continue;
    if (r.from.entity != node) continue;
    const Entity* target = find_entity(m, r.to.entity);
    if (!target || on_path.count(target->id)) continue;
    if (target->kind == EntityKind::Object) {
      if (!target->world) continue;
      for (const std::string& tool : tools) {
        const Entity* te = find_entity(m, tool);
        if (!te || !te->world) continue;
        out.insert({tool, target->id, *te->world, *target->world, in_group(m, tool),
                    in_group(m, target->id)});
      }
      continue;
    }
    if (target->kind == EntityKind::Tool || target->kind == EntityKind::Sensor ||
        target->kind == EntityKind::Effector) {
      on_path.insert(target->id);
      if (target->kind == EntityKind::Tool) tools.push_back(target->id);
      chase(m, target->id, on_path, tools, out);
      if (target->kind == EntityKind::Tool) tools.pop_back();
      on_path.erase(target->id);
    }
  }
}

}  // namespace

std::vector<CaseInstance> interaction_cases(const Model& m) {
  std::set<CaseInstance> found;
  for (const auto& [id, e] : m.entities) {
    if (e.kind != EntityKind::User) continue;
    std::set<std::string> on_path{id};
    std::vector<std::string> tools;
    chase(m, id, on_path, tools, found);
  }
  return {found.begin(), found.end()};
}

namespace {

// Transducers taking part in any relation; for the WIMP judgment all of
// them must be conventional devices.
bool crossings_standard(const Model& m, const DeviceProfile& profile) {
  for (const auto& [id, e] : m.entities) {
    if (e.kind != EntityKind::Sensor && e.kind != EntityKind::Effector) continue;
    bool used = std::any_of(m.relations.begin(), m.relations.end(), [&](const Relation& r) {
      return r.from.entity == id || r.to.entity == id;
    });
    if (used && !profile.matches(id)) return false;
  }
  return true;
}

}  // namespace

StyleLabel classify(const Model& m, const DeviceProfile& profile) {
  std::vector<CaseInstance> cases = interaction_cases(m);

  if (cases.empty()) {
    // Pure perception: the label hangs on what is being watched.
    for (const auto& [id, e] : m.entities)
      if (e.kind == EntityKind::Object && e.world == World::Real) return StyleLabel::AR;
    return StyleLabel::VR;
  }

  bool desktop_candidate = false;  // any case in WIMP/VR territory
  std::set<StyleLabel> labels;
  for (const CaseInstance& c : cases) {
    if (c.tool_mixed) {
      labels.insert(StyleLabel::AV);
    } else if (c.object_mixed) {
      labels.insert(StyleLabel::AR);
    } else if (c.object_world == World::Real) {
      labels.insert(StyleLabel::AR);
    } else if (c.tool_world == World::Real && !profile.matches(c.tool)) {
      labels.insert(StyleLabel::AV);  // tangible tool on a virtual object
    } else {
      desktop_candidate = true;
    }
  }
  if (desktop_candidate)
    labels.insert(crossings_standard(m, profile) ? StyleLabel::WIMP : StyleLabel::VR);

  if (labels.size() > 1) return StyleLabel::MR;
  return *labels.begin();
}

}  // namespace irvo
