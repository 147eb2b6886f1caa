#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "irvo/dsl.hpp"
#include "irvo/taskmap.hpp"

namespace irvo {

namespace {

std::optional<Error> conflict(const std::string& id, const char* attribute) {
  return Error{ErrorCode::AttributeConflict, id, attribute};
}

template <typename T>
std::optional<Error> join_field(std::optional<T>& a, const std::optional<T>& b,
                                const std::string& id, const char* attribute) {
  if (!b) return std::nullopt;
  if (!a) { a = b; return std::nullopt; }
  if (*a != *b) return conflict(id, attribute);
  return std::nullopt;
}

std::optional<Error> join_entity(Entity& a, const Entity& b) {
  if (a.kind != b.kind) return conflict(a.id, "kind");
  if (auto err = join_field(a.world, b.world, a.id, "world")) return err;
  if (auto err = join_field(a.channel, b.channel, a.id, "channel")) return err;
  if (auto err = join_field(a.place, b.place, a.id, "place")) return err;
  if (auto err = join_field(a.nested_in, b.nested_in, a.id, "nested_in")) return err;
  if (b.mobility.kind != MobilityKind::Unspecified) {
    if (a.mobility.kind == MobilityKind::Unspecified) a.mobility = b.mobility;
    else if (!(a.mobility == b.mobility)) return conflict(a.id, "mobility");
  }
  a.stack = a.stack || b.stack;
  if (!b.members.empty()) {
    a.members.insert(a.members.end(), b.members.begin(), b.members.end());
    std::sort(a.members.begin(), a.members.end());
    a.members.erase(std::unique(a.members.begin(), a.members.end()), a.members.end());
  }
  return std::nullopt;
}

using RelationKey = std::tuple<Port, Port, RelationKind, std::optional<Channel>>;

RelationKey key_of(const Relation& r) { return {r.from, r.to, r.kind, r.channel}; }

std::optional<Error> merge_into(Model& acc, const Model& next, std::set<std::string>& notes) {
  if (acc.intent != next.intent)
    return Error{ErrorCode::IncompatibleIntent, next.name,
                 "cannot merge a manipulation task with a perception-only task"};

  acc.places.insert(next.places.begin(), next.places.end());

  for (const PlaceBoundary& b : next.boundaries) {
    const PlaceBoundary* mine = find_boundary(acc, b.a, b.b);
    if (!mine) {
      acc.boundaries.push_back(b);
      continue;
    }
    if (mine->kind != b.kind || mine->viewer != b.viewer)
      return Error{ErrorCode::AttributeConflict, b.a + "/" + b.b, "boundary"};
  }
  std::sort(acc.boundaries.begin(), acc.boundaries.end(),
            [](const PlaceBoundary& x, const PlaceBoundary& y) {
              return std::tie(x.a, x.b) < std::tie(y.a, y.b);
            });

  for (const auto& [id, e] : next.entities) {
    auto mine = acc.entities.find(id);
    if (mine == acc.entities.end()) {
      acc.entities.emplace(id, e);
      continue;
    }
    if (auto err = join_entity(mine->second, e)) return err;
  }

  std::map<RelationKey, size_t> index;
  for (size_t i = 0; i < acc.relations.size(); ++i) index[key_of(acc.relations[i])] = i;
  for (const Relation& r : next.relations) {
    auto hit = index.find(key_of(r));
    if (hit == index.end()) {
      index[key_of(r)] = acc.relations.size();
      acc.relations.push_back(r);
      continue;
    }
    Relation& mine = acc.relations[hit->second];
    if (mine.salient != r.salient) {
      mine.salient = true;
      notes.insert("'" + r.from.entity + " -> " + r.to.entity +
                   "' is dashed in one diagram and salient in another; kept salient");
    }
    if (r.annotation) {
      if (!mine.annotation || *r.annotation < *mine.annotation) mine.annotation = r.annotation;
    }
  }

  for (const MergeNode& node : next.merges) {
    auto mine = std::find_if(acc.merges.begin(), acc.merges.end(),
                             [&](const MergeNode& n) { return n.id == node.id; });
    if (mine == acc.merges.end()) {
      acc.merges.push_back(node);
      continue;
    }
    if (!(mine->output == node.output)) return conflict(node.id, "merge output");
    mine->inputs.insert(mine->inputs.end(), node.inputs.begin(), node.inputs.end());
    std::sort(mine->inputs.begin(), mine->inputs.end());
    mine->inputs.erase(std::unique(mine->inputs.begin(), mine->inputs.end()),
                       mine->inputs.end());
  }
  return std::nullopt;
}

}  // namespace

Result<MergeResult> merge_models(const std::vector<Model>& models) {
  if (models.empty()) return Error{ErrorCode::EmptyInput, "", "nothing to merge"};
  MergeResult result;
  result.model = models.front();
  std::set<std::string> notes;
  for (size_t i = 1; i < models.size(); ++i)
    if (auto err = merge_into(result.model, models[i], notes)) return *err;

  std::map<std::string, std::vector<std::string>> owners;
  for (const auto& [id, e] : result.model.entities)
    if (e.kind == EntityKind::MixedGroup)
      for (const std::string& member : e.members) owners[member].push_back(id);
  for (const auto& [member, groups] : owners)
    if (groups.size() > 1) return Error{ErrorCode::AttributeConflict, member, "group"};

  for (size_t i = 0; i < result.model.relations.size(); ++i)
    result.model.relations[i].id = "r" + std::to_string(i + 1);

  // A union of healthy models can still breach a global invariant, e.g. a
  // nesting cycle assembled from two acyclic halves.
  for (const Error& err : validate_invariants(result.model))
    return Error{ErrorCode::AttributeConflict, err.subject, err.message()};

  result.notes.assign(notes.begin(), notes.end());
  return result;
}

// ---------------------------------------------------------------------------
// Linking

Result<std::string> link(const TaskTree& tree, LinkMap& links, const std::string& task,
                         Model model) {
  if (!tree.find(task)) return Error{ErrorCode::UnknownTask, task, "no such task"};

  std::vector<std::string> stack = tree.find(task)->children;
  while (!stack.empty()) {
    std::string cur = stack.back();
    stack.pop_back();
    if (links.count(cur))
      return Error{ErrorCode::ConflictingDescendantLink, cur,
                   "'" + cur + "' under '" + task + "' is already linked"};
    if (const TaskNode* n = tree.find(cur))
      stack.insert(stack.end(), n->children.begin(), n->children.end());
  }

  std::map<std::string, std::string> parent;
  for (const auto& [id, node] : tree.nodes)
    for (const std::string& c : node.children) parent[c] = id;
  for (auto it = parent.find(task); it != parent.end(); it = parent.find(it->second))
    if (links.count(it->second))
      return Error{ErrorCode::ConflictingDescendantLink, task,
                   "'" + task + "' lies under the linked task '" + it->second + "'"};

  links[task] = std::move(model);
  return task;
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

Result<Model> synth_node(const TaskTree& tree, const LinkMap& links, const std::string& id,
                         std::map<std::string, Model>& out, std::set<std::string>& notes) {
  const TaskNode* node = tree.find(id);
  if (!node) return Error{ErrorCode::UnknownTask, id, "tree references a missing task"};
  if (auto linked = links.find(id); linked != links.end()) {
    Model m = linked->second;
    m.name = id;
    out.insert_or_assign(id, m);
    return m;
  }
  if (node->children.empty())
    return Error{ErrorCode::UncoveredLeaf, id, "leaf task has no linked diagram"};
  std::vector<Model> kids;
  for (const std::string& c : node->children) {
    auto r = synth_node(tree, links, c, out, notes);
    if (!r) return r.error();
    kids.push_back(std::move(r.value()));
  }
  auto merged = merge_models(kids);
  if (!merged) return merged.error();
  for (const std::string& n : merged.value().notes) notes.insert(n);
  Model m = std::move(merged.value().model);
  m.name = id;
  out.insert_or_assign(id, m);
  return m;
}

}  // namespace

Result<std::map<std::string, Model>> synthesize(const TaskTree& tree, const LinkMap& links,
                                                std::vector<std::string>* notes) {
  std::map<std::string, Model> out;
  std::set<std::string> collected;
  auto r = synth_node(tree, links, tree.root, out, collected);
  if (!r) return r.error();
  if (notes) notes->insert(notes->end(), collected.begin(), collected.end());
  return out;
}

LinkMap factor_links(const TaskTree& tree, LinkMap links) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [id, node] : tree.nodes) {
      if (node.children.empty() || links.count(id)) continue;
      bool all_linked = std::all_of(node.children.begin(), node.children.end(),
                                    [&](const std::string& c) { return links.count(c) > 0; });
      if (!all_linked) continue;
      const Model& first = links.at(node.children.front());
      bool all_equal = std::all_of(node.children.begin(), node.children.end(),
                                   [&](const std::string& c) {
                                     return structural_equal(first, links.at(c));
                                   });
      if (!all_equal) continue;
      Model promoted = first;
      for (const std::string& c : node.children) links.erase(c);
      links.emplace(id, std::move(promoted));
      changed = true;
    }
  }
  return links;
}

// ---------------------------------------------------------------------------
// Odd configurations

std::vector<Finding> odd_configurations(const Model& root,
                                        const std::vector<std::pair<std::string, Model>>& leaves) {
  // Artifact clusters: entities minus users and the internal model,
  // connected by relations, group membership, or nesting.
  std::map<std::string, std::string> up;
  auto tracked = [&](const std::string& id) {
    const Entity* e = find_entity(root, id);
    return e && e->kind != EntityKind::User && e->kind != EntityKind::InternalModel;
  };
  for (const auto& [id, e] : root.entities)
    if (tracked(id)) up[id] = id;
  std::function<std::string(const std::string&)> find_root = [&](const std::string& x) {
    return up[x] == x ? x : up[x] = find_root(up[x]);
  };
  auto unite = [&](const std::string& a, const std::string& b) {
    if (!tracked(a) || !tracked(b)) return;
    up[find_root(a)] = find_root(b);
  };

  for (const Relation& r : root.relations) unite(r.from.entity, r.to.entity);
  for (const auto& [id, e] : root.entities) {
    if (e.kind == EntityKind::MixedGroup)
      for (const std::string& member : e.members) unite(id, member);
    if (e.nested_in) unite(id, *e.nested_in);
  }

  std::map<std::string, std::vector<std::string>> components;
  for (const auto& [id, r] : up) components[find_root(id)].push_back(id);

  struct Cluster {
    std::vector<std::string> artifacts;  // tools and objects, sorted
  };
  std::vector<Cluster> interesting;
  for (const auto& [key, ids] : components) {
    Cluster c;
    bool tool = false, object = false;
    for (const std::string& id : ids) {
      const Entity* e = find_entity(root, id);
      if (!e) continue;
      if (e->kind == EntityKind::Tool) { tool = true; c.artifacts.push_back(id); }
      if (e->kind == EntityKind::Object) { object = true; c.artifacts.push_back(id); }
    }
    if (tool && object) {
      std::sort(c.artifacts.begin(), c.artifacts.end());
      interesting.push_back(std::move(c));
    }
  }

  std::vector<Finding> out;
  if (interesting.size() < 2) return out;  // one cluster means nothing is isolated

  for (const Cluster& c : interesting) {
    std::vector<std::string> sources;
    for (const auto& [task, m] : leaves) {
      bool uses = std::any_of(c.artifacts.begin(), c.artifacts.end(),
                              [&](const std::string& id) { return m.entities.count(id) > 0; });
      if (uses) sources.push_back(task);
    }
    if (sources.size() == 1)
      out.push_back({"ODD", Severity::Info,
                     "isolated interaction cluster (" +
                         [&] {
                           std::string s;
                           for (size_t i = 0; i < c.artifacts.size(); ++i)
                             s += (i ? ", " : "") + c.artifacts[i];
                           return s;
                         }() +
                         ") appears only in task '" + sources.front() + "'",
                     c.artifacts});
  }
  std::sort(out.begin(), out.end(), [](const Finding& a, const Finding& b) {
    return a.nodes < b.nodes;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Tree file

namespace {

Result<Model> load_linked_model(const nlohmann::ordered_json& j, const std::string& base_dir) {
  if (j.is_object()) {
    auto m = dsl::model_from_json(j.dump());
    if (!m) return m.error();
    return m.value();
  }
  if (!j.is_string())
    return Error{ErrorCode::UnknownModelRef, "link", "link must be a path or a model object"};
  std::filesystem::path p = j.get<std::string>();
  if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
  std::ifstream in(p);
  if (!in) return Error{ErrorCode::UnknownModelRef, p.string(), "cannot open linked model"};
  std::stringstream buffer;
  buffer << in.rdbuf();
  if (p.extension() == ".json") {
    auto m = dsl::model_from_json(buffer.str());
    if (!m) return m.error();
    return m.value();
  }
  dsl::ParseResult parsed = dsl::parse(buffer.str());
  if (!parsed.ok())
    return Error{ErrorCode::UnknownModelRef, p.string(),
                 "linked model has " + std::to_string(parsed.error_count()) + " parse error(s)"};
  return *parsed.model;
}

Result<std::string> walk_tree(const nlohmann::ordered_json& j, TaskTree& tree,
                              std::vector<std::pair<std::string, nlohmann::ordered_json>>& raw) {
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
    return Error{ErrorCode::BadInput, "tree", "every task needs a string id"};
  TaskNode node;
  node.id = j["id"].get<std::string>();
  if (tree.nodes.count(node.id))
    return Error{ErrorCode::DuplicateId, node.id, "task listed twice"};
  node.name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>()
                                                          : node.id;
  if (j.contains("operator")) {
    if (!j["operator"].is_string())
      return Error{ErrorCode::BadInput, node.id, "operator must be a string"};
    node.op = j["operator"].get<std::string>();
  }
  if (j.contains("link")) raw.push_back({node.id, j["link"]});
  tree.nodes.emplace(node.id, node);  // reserve the id before recursing
  if (j.contains("children")) {
    if (!j["children"].is_array())
      return Error{ErrorCode::BadInput, node.id, "children must be an array"};
    for (const auto& c : j["children"]) {
      auto r = walk_tree(c, tree, raw);
      if (!r) return r.error();
      tree.nodes.at(node.id).children.push_back(r.value());
    }
  }
  return node.id;
}

}  // namespace

Result<TreeFile> load_tree(std::string_view text, const std::string& base_dir) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    return Error{ErrorCode::BadInput, "tree", "not a JSON object"};
  if (!j.contains("schema") || j["schema"] != "irvo-tree/1")
    return Error{ErrorCode::BadInput, "tree", "unsupported schema"};
  if (!j.contains("tree"))
    return Error{ErrorCode::BadInput, "tree", "missing tree object"};

  TreeFile out;
  std::vector<std::pair<std::string, nlohmann::ordered_json>> raw;
  auto root = walk_tree(j["tree"], out.tree, raw);
  if (!root) return root.error();
  out.tree.root = root.value();

  for (const auto& [task, jlink] : raw) {
    auto m = load_linked_model(jlink, base_dir);
    if (!m) return m.error();
    auto linked = link(out.tree, out.links, task, std::move(m.value()));
    if (!linked) return linked.error();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Renames

Result<std::string> apply_renames(Model& m, const std::map<std::string, std::string>& renames) {
  auto fresh = [&](const std::string& id) {
    auto it = renames.find(id);
    return it == renames.end() ? id : it->second;
  };

  std::map<std::string, Entity> moved;
  for (auto& [id, e] : m.entities) {
    Entity copy = e;
    copy.id = fresh(id);
    for (std::string& member : copy.members) member = fresh(member);
    std::sort(copy.members.begin(), copy.members.end());
    if (copy.nested_in) copy.nested_in = fresh(*copy.nested_in);
    if (copy.mobility.reference) copy.mobility.reference = fresh(*copy.mobility.reference);
    if (!moved.emplace(copy.id, std::move(copy)).second)
      return Error{ErrorCode::DuplicateId, fresh(id), "rename collides with another entity"};
  }
  m.entities = std::move(moved);
  for (Relation& r : m.relations) {
    r.from.entity = fresh(r.from.entity);
    r.to.entity = fresh(r.to.entity);
  }
  for (MergeNode& node : m.merges) {
    for (Port& p : node.inputs) p.entity = fresh(p.entity);
    std::sort(node.inputs.begin(), node.inputs.end());
    node.output.entity = fresh(node.output.entity);
  }
  return m.name;
}

}  // namespace irvo
