#include <algorithm>
#include <map>

#include "irvo/model.hpp"

namespace irvo {

std::vector<const Relation*> traversal_relations(const Model& m, bool salient_only) {
  std::vector<const Relation*> out;
  for (const Relation& r : m.relations) {
    if (r.kind == RelationKind::Communication) continue;
    if (salient_only && !r.salient) continue;
    out.push_back(&r);
  }
  return out;
}

namespace {

using Adjacency = std::map<std::string, std::vector<const Relation*>>;

Adjacency build_adjacency(const Model& m, const TraversalOptions& opts) {
  Adjacency adj;
  for (const Relation* r : traversal_relations(m, opts.salient_only))
    adj[r->from.entity].push_back(r);
  return adj;
}

bool is_user(const Model& m, const std::string& id) {
  const Entity* e = find_entity(m, id);
  return e && e->kind == EntityKind::User;
}

struct PathSearch {
  const Model& m;
  const Adjacency& adj;
  const std::string& target;
  std::vector<std::string> node_trail;
  std::vector<std::string> rel_trail;
  std::set<std::string> visited;
  std::vector<PerceptionPath>* sink = nullptr;  // null: existence check only
  bool found = false;

  // Depth-first over simple paths. Users are terminal: a path may end at
  // the target user but never continues through any user.
  void walk(const std::string& at) {
    if (found && !sink) return;
    auto it = adj.find(at);
    if (it == adj.end()) return;
    for (const Relation* r : it->second) {
      const std::string& next = r->to.entity;
      if (visited.count(next)) continue;
      if (next == target) {
        found = true;
        if (sink) {
          PerceptionPath p;
          p.nodes = node_trail;
          p.nodes.push_back(next);
          p.relations = rel_trail;
          p.relations.push_back(r->id);
          sink->push_back(std::move(p));
        } else {
          return;
        }
        continue;
      }
      if (is_user(m, next)) continue;
      visited.insert(next);
      node_trail.push_back(next);
      rel_trail.push_back(r->id);
      walk(next);
      rel_trail.pop_back();
      node_trail.pop_back();
      visited.erase(next);
      if (found && !sink) return;
    }
  }
};

}  // namespace

std::vector<PerceptionPath> simple_paths(const Model& m, const std::string& from,
                                         const std::string& to, TraversalOptions opts) {
  std::vector<PerceptionPath> paths;
  if (!find_entity(m, from) || !find_entity(m, to) || from == to) return paths;
  Adjacency adj = build_adjacency(m, opts);
  PathSearch search{m, adj, to};
  search.sink = &paths;
  search.visited.insert(from);
  search.node_trail.push_back(from);
  search.walk(from);
  std::sort(paths.begin(), paths.end());
  return paths;
}

bool reaches(const Model& m, const std::string& from, const std::string& to,
             TraversalOptions opts) {
  if (!find_entity(m, from) || !find_entity(m, to) || from == to) return false;
  Adjacency adj = build_adjacency(m, opts);
  PathSearch search{m, adj, to};
  search.visited.insert(from);
  search.node_trail.push_back(from);
  search.walk(from);
  return search.found;
}

Result<std::vector<PerceptionPath>> perception_paths(const Model& m, const std::string& object,
                                                     const std::string& user) {
  const Entity* obj = find_entity(m, object);
  if (!obj) return Error{ErrorCode::UnknownEntity, object, ""};
  const Entity* usr = find_entity(m, user);
  if (!usr) return Error{ErrorCode::UnknownEntity, user, ""};
  if (usr->kind != EntityKind::User) return Error{ErrorCode::InvalidKind, user, "not a user"};
  if (obj->kind != EntityKind::Tool && obj->kind != EntityKind::Object &&
      obj->kind != EntityKind::MixedGroup)
    return Error{ErrorCode::InvalidKind, object, "not a tool, object, or mixed group"};

  std::vector<std::string> sources;
  if (obj->kind == EntityKind::MixedGroup)
    sources = obj->members;
  else
    sources.push_back(object);

  std::vector<PerceptionPath> all;
  for (const std::string& source : sources) {
    auto paths = simple_paths(m, source, user);
    all.insert(all.end(), paths.begin(), paths.end());
  }
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace irvo
