#pragma once

#include <map>
#include <string>
#include <vector>

#include "irvo/lint.hpp"
#include "irvo/model.hpp"

namespace irvo {

// Task tree in the ConcurTaskTree shape. Temporal operators are carried as
// opaque text; only the tree structure matters here.
struct TaskNode {
  std::string id;
  std::string name;
  std::optional<std::string> op;
  std::vector<std::string> children;

  bool operator==(const TaskNode&) const = default;
};

struct TaskTree {
  std::string root;
  std::map<std::string, TaskNode> nodes;

  const TaskNode* find(const std::string& id) const {
    auto it = nodes.find(id);
    return it == nodes.end() ? nullptr : &it->second;
  }
};

// Task id -> the diagram modeling it.
using LinkMap = std::map<std::string, Model>;

// Records a link. Linking a sub-root claims the whole subtree: links above
// or below an existing link are rejected.
Result<std::string> link(const TaskTree& tree, LinkMap& links, const std::string& task,
                         Model model);

struct MergeResult {
  Model model;
  std::vector<std::string> notes;  // salience disagreements kept salient
};

// Union of the models keyed by entity identifier. Attributes must agree;
// relations deduplicate by (from, to, kind, channel); groups and merge
// nodes with one id unite.
Result<MergeResult> merge_models(const std::vector<Model>& models);

// Bottom-up synthesis: linked tasks use their diagram, inner tasks merge
// their children. Returns a model per covered task, each named after it.
Result<std::map<std::string, Model>> synthesize(const TaskTree& tree, const LinkMap& links,
                                                std::vector<std::string>* notes = nullptr);

// Replaces sibling links that reference structurally equal models by one
// link on the parent, repeatedly, until nothing changes.
LinkMap factor_links(const TaskTree& tree, LinkMap links);

// Flags connected clusters of the synthesized root (users and the internal
// model aside) that hold a tool-object pair, sit apart from every other
// such cluster, and stem from exactly one linked diagram.
std::vector<Finding> odd_configurations(const Model& root,
                                        const std::vector<std::pair<std::string, Model>>& leaves);

struct TreeFile {
  TaskTree tree;
  LinkMap links;
};

// Reads an "irvo-tree/1" document. Links may be file paths (resolved
// against base_dir, .irvo or .json by extension) or inline model objects.
Result<TreeFile> load_tree(std::string_view text, const std::string& base_dir);

// Aliases entity identifiers before a merge. Fails when a new name would
// collide with an entity the rename does not also move.
Result<std::string> apply_renames(Model& m, const std::map<std::string, std::string>& renames);

}  // namespace irvo
