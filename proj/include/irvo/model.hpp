#pragma once

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace irvo {

// Interaction channels between a user and the rest of the model.
// V = visual, A = audio, KH = kinesthetic/haptic, T = taste, S = smell.
enum class Channel { V, A, KH, T, S };

enum class World { Real, Virtual };

// world_of() answers with this: transducers sit across the boundary and
// mixed groups span it, so plain World is not enough.
enum class WorldView { Real, Virtual, Straddling };

enum class TaskIntent { Manipulation, PerceptionOnly };

enum class EntityKind { User, Tool, Object, InternalModel, Sensor, Effector, MixedGroup };

enum class RelationKind { Action, Perception, Communication };

// Opaque walls block everything, audio-permeable walls pass sound both
// ways, a mirror passes sight one way: the viewer place sees the other.
enum class BoundaryKind { Opaque, AudioPermeable, Mirror };

// Mobile = may move during the task, TaskFixed = fixed for the task's
// duration, AlwaysFixed = installed. Rendered as the glyphs (unicode arrows) / x / circled-x.
enum class MobilityKind { Unspecified, Mobile, TaskFixed, AlwaysFixed };

struct Mobility {
  MobilityKind kind = MobilityKind::Unspecified;
  // Entity the mobility is relative to; empty means world-absolute.
  std::optional<std::string> reference;

  bool operator==(const Mobility&) const = default;
};

struct Entity {
  std::string id;
  EntityKind kind = EntityKind::Object;
  // Absent for Sensor/Effector (they straddle) and for MixedGroup.
  std::optional<World> world;
  // Carried by transducers only.
  std::optional<Channel> channel;
  // MixedGroup members, kept sorted.
  std::vector<std::string> members;
  std::optional<std::string> place;
  std::optional<std::string> nested_in;
  Mobility mobility;
  bool stack = false;

  bool operator==(const Entity&) const = default;
};

// One end of a relation or merge. The channel is mandatory on user ports,
// forbidden on internal-model ports, optional elsewhere.
struct Port {
  std::string entity;
  std::optional<Channel> channel;

  bool operator==(const Port&) const = default;
  auto operator<=>(const Port&) const = default;
};

struct Relation {
  std::string id;  // assigned on insertion: r1, r2, ...
  Port from;
  Port to;
  RelationKind kind = RelationKind::Action;
  bool salient = true;  // false renders dashed: present but unimportant
  // Declared or user-derived channel; transducer inference stays a query
  // so that conflicting declarations survive for rule S4.
  std::optional<Channel> channel;
  std::optional<std::string> annotation;

  bool operator==(const Relation&) const = default;
};

// Perception merge: two or more perceived sources fused into one percept
// arriving at a single user port. Inputs name the source ports of already
// drawn perception relations; the node itself adds no edges.
struct MergeNode {
  std::string id;
  std::vector<Port> inputs;  // kept sorted
  Port output;               // must be a user port

  bool operator==(const MergeNode&) const = default;
};

struct PlaceBoundary {
  std::string a;  // normalized a < b
  std::string b;
  BoundaryKind kind = BoundaryKind::Opaque;
  std::optional<std::string> viewer;  // Mirror only: the place that can see through

  bool operator==(const PlaceBoundary&) const = default;
};

struct Model {
  std::string name;
  TaskIntent intent = TaskIntent::Manipulation;
  std::set<std::string> places;
  std::vector<PlaceBoundary> boundaries;  // sorted by (a, b)
  std::map<std::string, Entity> entities;
  std::vector<Relation> relations;  // insertion order
  std::vector<MergeNode> merges;

  bool operator==(const Model&) const = default;
};

// ---------------------------------------------------------------------------
// Errors

enum class ErrorCode {
  DuplicateId,
  UnknownPlace,
  UnknownEntity,
  UnknownEndpoint,
  UserInVirtualWorld,
  ModelInRealWorld,
  MissingWorld,
  WorldOnTransducer,
  MissingChannel,
  ChannelOnNonTransducer,
  PlaceOnInternalModel,
  StackOnNonObject,
  NestingCycle,
  SelfMobilityReference,
  SelfBoundary,
  DuplicateBoundary,
  BadMirrorViewer,
  MissingUserChannel,
  ForbiddenPortChannel,
  ChannelMismatch,
  CommunicationNotUserToUser,
  PerceptionNotIntoUser,
  ActionIntoUser,
  GroupAsEndpoint,
  AllSameWorld,
  MemberAlreadyGrouped,
  MemberNotToolOrObject,
  TooFewMembers,
  TooFewInputs,
  OutputNotUser,
  InvalidKind,
  EmptyInput,
  AttributeConflict,
  IncompatibleIntent,
  UnknownTask,
  ConflictingDescendantLink,
  UncoveredLeaf,
  UnknownModelRef,
  BadInput,
};

struct Error {
  ErrorCode code;
  std::string subject;  // offending identifier, when there is one
  std::string detail;

  std::string message() const;
};

const char* to_string(ErrorCode code);

template <typename T>
class Result {
 public:
  Result(T value) : value_(std::move(value)) {}
  Result(Error error) : error_(std::move(error)) {}

  bool ok() const { return value_.has_value(); }
  explicit operator bool() const { return ok(); }

  T& value() { return *value_; }
  const T& value() const { return *value_; }
  const Error& error() const { return *error_; }

 private:
  std::optional<T> value_;
  std::optional<Error> error_;
};

// ---------------------------------------------------------------------------
// Enum names

const char* to_string(Channel c);
const char* to_string(World w);
const char* to_string(WorldView w);
const char* to_string(TaskIntent i);
const char* to_string(EntityKind k);
const char* to_string(RelationKind k);
const char* to_string(BoundaryKind k);
const char* to_string(MobilityKind k);

std::optional<Channel> channel_from_string(std::string_view s);
std::optional<EntityKind> entity_kind_from_string(std::string_view s);
std::optional<RelationKind> relation_kind_from_string(std::string_view s);

// Sort rank used by the canonical serializer: users, tools, objects,
// internal model, sensors, effectors, mixed groups.
int kind_rank(EntityKind k);

// ---------------------------------------------------------------------------
// Construction operations. All of them validate first and leave the model
// untouched on error.

struct RelationSpec {
  Port from;
  Port to;
  RelationKind kind = RelationKind::Action;
  bool salient = true;
  std::optional<Channel> channel;
  std::optional<std::string> annotation;
};

Result<std::string> add_place(Model& m, const std::string& id);
Result<std::string> add_boundary(Model& m, const std::string& a, const std::string& b,
                                 BoundaryKind kind,
                                 const std::optional<std::string>& viewer = std::nullopt);
Result<std::string> add_entity(Model& m, Entity e);
Result<std::string> set_nested(Model& m, const std::string& id, const std::string& parent);
Result<std::string> set_mobility(Model& m, const std::string& id, Mobility mob);
Result<std::string> add_relation(Model& m, const RelationSpec& spec);
Result<std::string> compose_mixed(Model& m, const std::string& id,
                                  std::vector<std::string> members);
Result<std::string> add_merge(Model& m, const std::string& id, std::vector<Port> inputs,
                              Port output);

// Removal helpers. Dropping an entity also drops incident relations, merge
// nodes touching it, and its group memberships; a group left with fewer
// than two members or a single world disappears with them.
Result<std::string> remove_entity(Model& m, const std::string& id);
Result<std::string> remove_relation(Model& m, const std::string& id);
Result<std::string> remove_merge(Model& m, const std::string& id);

// ---------------------------------------------------------------------------
// Queries

Result<WorldView> world_of(const Model& m, const std::string& id);

const Entity* find_entity(const Model& m, const std::string& id);
const Relation* find_relation(const Model& m, const std::string& id);

// Declared channel when present, else a channel imposed by a user endpoint,
// else the channel of a transducer endpoint (from side first).
std::optional<Channel> effective_channel(const Model& m, const Relation& r);

// Mobility with the nesting default applied: an unspecified nested entity
// is task-fixed relative to whatever embeds it.
Mobility effective_mobility(const Model& m, const std::string& id);

// The entity's own place, or the nearest enclosing entity's place.
std::optional<std::string> effective_place(const Model& m, const std::string& id);

const PlaceBoundary* find_boundary(const Model& m, const std::string& a, const std::string& b);

// Structural equality: field-by-field, except that the model name is
// ignored and relations/merges compare as sets with relation ids erased.
// This is the equivalence the merge algebra and link factoring work up to.
bool structural_equal(const Model& lhs, const Model& rhs);

// Re-checks every construction invariant from scratch; used after bulk
// operations and by the parser fuzz harness. Empty result = healthy model.
std::vector<Error> validate_invariants(const Model& m);

// ---------------------------------------------------------------------------
// Perception paths

struct PerceptionPath {
  std::vector<std::string> nodes;      // entity ids, source first, user last
  std::vector<std::string> relations;  // relation ids, one per hop

  bool operator==(const PerceptionPath&) const = default;
  auto operator<=>(const PerceptionPath&) const = default;
};

struct TraversalOptions {
  bool salient_only = false;
};

// Relations that carry perception/action flow. Communication stays out:
// one user telling another about an object is not the second user
// perceiving it.
std::vector<const Relation*> traversal_relations(const Model& m, bool salient_only);

// Every acyclic directed path from `from` to `to`. Intermediate nodes are
// never users; parallel relations yield distinct paths. Sorted.
std::vector<PerceptionPath> simple_paths(const Model& m, const std::string& from,
                                         const std::string& to, TraversalOptions opts = {});

bool reaches(const Model& m, const std::string& from, const std::string& to,
             TraversalOptions opts = {});

// All perception routes from a tool/object (or any member of a mixed
// group) into any input channel of the given user.
Result<std::vector<PerceptionPath>> perception_paths(const Model& m, const std::string& object,
                                                     const std::string& user);

}  // namespace irvo
