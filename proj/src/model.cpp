#include "irvo/model.hpp"

#include <algorithm>

namespace irvo {

namespace {

bool is_transducer(EntityKind k) {
  return k == EntityKind::Sensor || k == EntityKind::Effector;
}

bool is_tool_or_object(EntityKind k) {
  return k == EntityKind::Tool || k == EntityKind::Object;
}

std::string next_relation_id(const Model& m) {
  return "r" + std::to_string(m.relations.size() + 1);
}

// Channels the relation is pinned to by something other than a transducer:
// user endpoints and the declared channel. These must agree at build time;
// disagreement with a transducer is left for the lint rules to report.
std::vector<std::pair<std::string, Channel>> pinned_channels(const Model& m,
                                                             const RelationSpec& spec) {
  std::vector<std::pair<std::string, Channel>> pins;
  auto add_user_pin = [&](const Port& p) {
    const Entity* e = find_entity(m, p.entity);
    if (e && e->kind == EntityKind::User && p.channel)
      pins.emplace_back(p.entity, *p.channel);
  };
  add_user_pin(spec.from);
  add_user_pin(spec.to);
  if (spec.channel) pins.emplace_back("declared", *spec.channel);
  return pins;
}

}  // namespace

const char* to_string(Channel c) {
  switch (c) {
    case Channel::V: return "V";
    case Channel::A: return "A";
    case Channel::KH: return "KH";
    case Channel::T: return "T";
    case Channel::S: return "S";
  }
  return "?";
}

const char* to_string(World w) { return w == World::Real ? "real" : "virtual"; }

const char* to_string(WorldView w) {
  switch (w) {
    case WorldView::Real: return "real";
    case WorldView::Virtual: return "virtual";
    case WorldView::Straddling: return "straddling";
  }
  return "?";
}

const char* to_string(TaskIntent i) {
  return i == TaskIntent::Manipulation ? "manipulation" : "perception";
}

const char* to_string(EntityKind k) {
  switch (k) {
    case EntityKind::User: return "user";
    case EntityKind::Tool: return "tool";
    case EntityKind::Object: return "object";
    case EntityKind::InternalModel: return "internal";
    case EntityKind::Sensor: return "sensor";
    case EntityKind::Effector: return "effector";
    case EntityKind::MixedGroup: return "mixed";
  }
  return "?";
}

const char* to_string(RelationKind k) {
  switch (k) {
    case RelationKind::Action: return "action";
    case RelationKind::Perception: return "perception";
    case RelationKind::Communication: return "communication";
  }
  return "?";
}

const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Opaque: return "opaque";
    case BoundaryKind::AudioPermeable: return "audio";
    case BoundaryKind::Mirror: return "mirror";
  }
  return "?";
}

const char* to_string(MobilityKind k) {
  switch (k) {
    case MobilityKind::Unspecified: return "unspecified";
    case MobilityKind::Mobile: return "free";
    case MobilityKind::TaskFixed: return "fixed";
    case MobilityKind::AlwaysFixed: return "pinned";
  }
  return "?";
}

std::optional<Channel> channel_from_string(std::string_view s) {
  if (s == "V") return Channel::V;
  if (s == "A") return Channel::A;
  if (s == "KH") return Channel::KH;
  if (s == "T") return Channel::T;
  if (s == "S") return Channel::S;
  return std::nullopt;
}

std::optional<EntityKind> entity_kind_from_string(std::string_view s) {
  if (s == "user") return EntityKind::User;
  if (s == "tool") return EntityKind::Tool;
  if (s == "object") return EntityKind::Object;
  if (s == "internal") return EntityKind::InternalModel;
  if (s == "sensor") return EntityKind::Sensor;
  if (s == "effector") return EntityKind::Effector;
  if (s == "mixed") return EntityKind::MixedGroup;
  return std::nullopt;
}

std::optional<RelationKind> relation_kind_from_string(std::string_view s) {
  if (s == "action") return RelationKind::Action;
  if (s == "perception") return RelationKind::Perception;
  if (s == "communication") return RelationKind::Communication;
  return std::nullopt;
}

int kind_rank(EntityKind k) {
  switch (k) {
    case EntityKind::User: return 0;
    case EntityKind::Tool: return 1;
    case EntityKind::Object: return 2;
    case EntityKind::InternalModel: return 3;
    case EntityKind::Sensor: return 4;
    case EntityKind::Effector: return 5;
    case EntityKind::MixedGroup: return 6;
  }
  return 7;
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownPlace: return "UnknownPlace";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::UserInVirtualWorld: return "UserInVirtualWorld";
    case ErrorCode::ModelInRealWorld: return "ModelInRealWorld";
    case ErrorCode::MissingWorld: return "MissingWorld";
    case ErrorCode::WorldOnTransducer: return "WorldOnTransducer";
    case ErrorCode::MissingChannel: return "MissingChannel";
    case ErrorCode::ChannelOnNonTransducer: return "ChannelOnNonTransducer";
    case ErrorCode::PlaceOnInternalModel: return "PlaceOnInternalModel";
    case ErrorCode::StackOnNonObject: return "StackOnNonObject";
    case ErrorCode::NestingCycle: return "NestingCycle";
    case ErrorCode::SelfMobilityReference: return "SelfMobilityReference";
    case ErrorCode::SelfBoundary: return "SelfBoundary";
    case ErrorCode::DuplicateBoundary: return "DuplicateBoundary";
    case ErrorCode::BadMirrorViewer: return "BadMirrorViewer";
    case ErrorCode::MissingUserChannel: return "MissingUserChannel";
    case ErrorCode::ForbiddenPortChannel: return "ForbiddenPortChannel";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::CommunicationNotUserToUser: return "CommunicationNotUserToUser";
    case ErrorCode::PerceptionNotIntoUser: return "PerceptionNotIntoUser";
    case ErrorCode::ActionIntoUser: return "ActionIntoUser";
    case ErrorCode::GroupAsEndpoint: return "GroupAsEndpoint";
    case ErrorCode::AllSameWorld: return "AllSameWorld";
    case ErrorCode::MemberAlreadyGrouped: return "MemberAlreadyGrouped";
    case ErrorCode::MemberNotToolOrObject: return "MemberNotToolOrObject";
    case ErrorCode::TooFewMembers: return "TooFewMembers";
    case ErrorCode::TooFewInputs: return "TooFewInputs";
    case ErrorCode::OutputNotUser: return "OutputNotUser";
    case ErrorCode::InvalidKind: return "InvalidKind";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AttributeConflict: return "AttributeConflict";
    case ErrorCode::IncompatibleIntent: return "IncompatibleIntent";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::ConflictingDescendantLink: return "ConflictingDescendantLink";
    case ErrorCode::UncoveredLeaf: return "UncoveredLeaf";
    case ErrorCode::UnknownModelRef: return "UnknownModelRef";
    case ErrorCode::BadInput: return "BadInput";
  }
  return "?";
}

std::string Error::message() const {
  std::string out = to_string(code);
  if (!subject.empty()) out += ": '" + subject + "'";
  if (!detail.empty()) out += " (" + detail + ")";
  return out;
}

const Entity* find_entity(const Model& m, const std::string& id) {
  auto it = m.entities.find(id);
  return it == m.entities.end() ? nullptr : &it->second;
}

const Relation* find_relation(const Model& m, const std::string& id) {
  for (const Relation& r : m.relations)
    if (r.id == id) return &r;
  return nullptr;
}

const PlaceBoundary* find_boundary(const Model& m, const std::string& a, const std::string& b) {
  const std::string& lo = std::min(a, b);
  const std::string& hi = std::max(a, b);
  for (const PlaceBoundary& pb : m.boundaries)
    if (pb.a == lo && pb.b == hi) return &pb;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Construction

Result<std::string> add_place(Model& m, const std::string& id) {
  if (id.empty()) return Error{ErrorCode::BadInput, id, "empty place id"};
  if (m.places.count(id)) return Error{ErrorCode::DuplicateId, id, "place already declared"};
  m.places.insert(id);
  return id;
}

Result<std::string> add_boundary(Model& m, const std::string& a, const std::string& b,
                                 BoundaryKind kind, const std::optional<std::string>& viewer) {
  if (!m.places.count(a)) return Error{ErrorCode::UnknownPlace, a, ""};
  if (!m.places.count(b)) return Error{ErrorCode::UnknownPlace, b, ""};
  if (a == b) return Error{ErrorCode::SelfBoundary, a, "boundary between a place and itself"};
  if (find_boundary(m, a, b))
    return Error{ErrorCode::DuplicateBoundary, a + "|" + b, "pair already has a boundary"};
  PlaceBoundary pb{std::min(a, b), std::max(a, b), kind, std::nullopt};
  if (kind == BoundaryKind::Mirror) {
    if (!viewer || (*viewer != a && *viewer != b))
      return Error{ErrorCode::BadMirrorViewer, viewer.value_or(""),
                   "mirror viewer must be one of the two places"};
    pb.viewer = viewer;
  } else if (viewer) {
    return Error{ErrorCode::BadMirrorViewer, *viewer, "viewer is only valid on a mirror"};
  }
  auto pos = std::lower_bound(m.boundaries.begin(), m.boundaries.end(), pb,
                              [](const PlaceBoundary& x, const PlaceBoundary& y) {
                                return std::tie(x.a, x.b) < std::tie(y.a, y.b);
                              });
  m.boundaries.insert(pos, pb);
  return pb.a + "|" + pb.b;
}

namespace {

Result<std::string> check_entity_shape(const Model& m, const Entity& e) {
  if (e.id.empty()) return Error{ErrorCode::BadInput, e.id, "empty entity id"};
  if (m.entities.count(e.id)) return Error{ErrorCode::DuplicateId, e.id, ""};

  switch (e.kind) {
    case EntityKind::User:
      if (e.world && *e.world != World::Real) return Error{ErrorCode::UserInVirtualWorld, e.id, ""};
      break;
    case EntityKind::Tool:
    case EntityKind::Object:
      if (!e.world) return Error{ErrorCode::MissingWorld, e.id, "tool/object needs a world tag"};
      break;
    case EntityKind::InternalModel:
      if (e.world && *e.world != World::Virtual)
        return Error{ErrorCode::ModelInRealWorld, e.id, ""};
      if (e.place) return Error{ErrorCode::PlaceOnInternalModel, e.id, ""};
      break;
    case EntityKind::Sensor:
    case EntityKind::Effector:
      if (e.world)
        return Error{ErrorCode::WorldOnTransducer, e.id, "transducers straddle the boundary"};
      if (!e.channel) return Error{ErrorCode::MissingChannel, e.id, "transducer needs a channel"};
      break;
    case EntityKind::MixedGroup:
      break;  // validated by compose_mixed
  }
  if (e.channel && !is_transducer(e.kind) && e.kind != EntityKind::MixedGroup)
    return Error{ErrorCode::ChannelOnNonTransducer, e.id, ""};
  if (e.stack && !is_tool_or_object(e.kind)) return Error{ErrorCode::StackOnNonObject, e.id, ""};
  if (e.place && !m.places.count(*e.place)) return Error{ErrorCode::UnknownPlace, *e.place, ""};
  if (!e.members.empty() && e.kind != EntityKind::MixedGroup)
    return Error{ErrorCode::BadInput, e.id, "members are only valid on a mixed group"};
  return e.id;
}

bool nesting_would_cycle(const Model& m, const std::string& child, const std::string& parent) {
  std::string cur = parent;
  for (size_t guard = 0; guard <= m.entities.size(); ++guard) {
    if (cur == child) return true;
    const Entity* e = find_entity(m, cur);
    if (!e || !e->nested_in) return false;
    cur = *e->nested_in;
  }
  return true;
}

}  // namespace

Result<std::string> add_entity(Model& m, Entity e) {
  if (e.kind == EntityKind::MixedGroup) return compose_mixed(m, e.id, e.members);

  auto shape = check_entity_shape(m, e);
  if (!shape) return shape;

  if (e.nested_in) {
    if (!find_entity(m, *e.nested_in)) return Error{ErrorCode::UnknownEntity, *e.nested_in, ""};
    if (*e.nested_in == e.id) return Error{ErrorCode::NestingCycle, e.id, ""};
  }
  if (e.mobility.reference) {
    if (*e.mobility.reference == e.id) return Error{ErrorCode::SelfMobilityReference, e.id, ""};
    if (!find_entity(m, *e.mobility.reference))
      return Error{ErrorCode::UnknownEntity, *e.mobility.reference, ""};
  }

  if (e.kind == EntityKind::User) e.world = World::Real;
  if (e.kind == EntityKind::InternalModel) e.world = World::Virtual;

  std::string id = e.id;
  m.entities.emplace(id, std::move(e));
  return id;
}

Result<std::string> set_nested(Model& m, const std::string& id, const std::string& parent) {
  const Entity* child = find_entity(m, id);
  if (!child) return Error{ErrorCode::UnknownEntity, id, ""};
  if (!find_entity(m, parent)) return Error{ErrorCode::UnknownEntity, parent, ""};
  if (child->kind == EntityKind::MixedGroup)
    return Error{ErrorCode::InvalidKind, id, "mixed groups cannot nest"};
  if (id == parent || nesting_would_cycle(m, id, parent))
    return Error{ErrorCode::NestingCycle, id, ""};
  m.entities[id].nested_in = parent;
  return id;
}

Result<std::string> set_mobility(Model& m, const std::string& id, Mobility mob) {
  if (!find_entity(m, id)) return Error{ErrorCode::UnknownEntity, id, ""};
  if (mob.reference) {
    if (*mob.reference == id) return Error{ErrorCode::SelfMobilityReference, id, ""};
    if (!find_entity(m, *mob.reference))
      return Error{ErrorCode::UnknownEntity, *mob.reference, ""};
  }
  m.entities[id].mobility = std::move(mob);
  return id;
}

namespace {

Result<std::string> check_port(const Model& m, const Port& p, const char* side) {
  const Entity* e = find_entity(m, p.entity);
  if (!e) return Error{ErrorCode::UnknownEndpoint, p.entity, side};
  if (e->kind == EntityKind::MixedGroup)
    return Error{ErrorCode::GroupAsEndpoint, p.entity,
                 "relations attach to members, not to the composition"};
  if (e->kind == EntityKind::User && !p.channel)
    return Error{ErrorCode::MissingUserChannel, p.entity, side};
  if (e->kind == EntityKind::InternalModel && p.channel)
    return Error{ErrorCode::ForbiddenPortChannel, p.entity,
                 "the internal model has no perceptual channels"};
  return p.entity;
}

}  // namespace

Result<std::string> add_relation(Model& m, const RelationSpec& spec) {
  if (auto r = check_port(m, spec.from, "from"); !r) return r;
  if (auto r = check_port(m, spec.to, "to"); !r) return r;

  const Entity& from = *find_entity(m, spec.from.entity);
  const Entity& to = *find_entity(m, spec.to.entity);

  switch (spec.kind) {
    case RelationKind::Communication:
      if (from.kind != EntityKind::User || to.kind != EntityKind::User)
        return Error{ErrorCode::CommunicationNotUserToUser, spec.from.entity + "->" + spec.to.entity, ""};
      break;
    case RelationKind::Perception:
      if (to.kind != EntityKind::User)
        return Error{ErrorCode::PerceptionNotIntoUser, spec.to.entity, ""};
      break;
    case RelationKind::Action:
      if (to.kind == EntityKind::User)
        return Error{ErrorCode::ActionIntoUser, spec.to.entity,
                     "flow into a user is perception"};
      break;
  }

  auto pins = pinned_channels(m, spec);
  for (size_t i = 1; i < pins.size(); ++i)
    if (pins[i].second != pins[0].second)
      return Error{ErrorCode::ChannelMismatch, spec.from.entity + "->" + spec.to.entity,
                   std::string(to_string(pins[0].second)) + " vs " + to_string(pins[i].second)};

  Relation r;
  r.id = next_relation_id(m);
  r.from = spec.from;
  r.to = spec.to;
  r.kind = spec.kind;
  r.salient = spec.salient;
  r.annotation = spec.annotation;
  // Only the declared channel is stored; port and transducer channels stay
  // derivable so the text form round-trips unchanged.
  r.channel = spec.channel;
  m.relations.push_back(std::move(r));
  return m.relations.back().id;
}

Result<std::string> compose_mixed(Model& m, const std::string& id,
                                  std::vector<std::string> members) {
  if (id.empty()) return Error{ErrorCode::BadInput, id, "empty group id"};
  if (m.entities.count(id)) return Error{ErrorCode::DuplicateId, id, ""};

  std::sort(members.begin(), members.end());
  for (size_t i = 1; i < members.size(); ++i)
    if (members[i] == members[i - 1])
      return Error{ErrorCode::MemberAlreadyGrouped, members[i], "listed twice"};
  if (members.size() < 2) return Error{ErrorCode::TooFewMembers, id, ""};

  bool any_real = false, any_virtual = false;
  for (const std::string& member : members) {
    const Entity* e = find_entity(m, member);
    if (!e) return Error{ErrorCode::UnknownEntity, member, ""};
    if (!is_tool_or_object(e->kind)) return Error{ErrorCode::MemberNotToolOrObject, member, ""};
    for (const auto& [gid, g] : m.entities)
      if (g.kind == EntityKind::MixedGroup &&
          std::find(g.members.begin(), g.members.end(), member) != g.members.end())
        return Error{ErrorCode::MemberAlreadyGrouped, member, "already in '" + gid + "'"};
    (e->world == World::Real ? any_real : any_virtual) = true;
  }
  if (!any_real || !any_virtual)
    return Error{ErrorCode::AllSameWorld, id, "a mixed composition spans both worlds"};

  Entity g;
  g.id = id;
  g.kind = EntityKind::MixedGroup;
  g.members = std::move(members);
  m.entities.emplace(id, std::move(g));
  return id;
}

Result<std::string> add_merge(Model& m, const std::string& id, std::vector<Port> inputs,
                              Port output) {
  if (id.empty()) return Error{ErrorCode::BadInput, id, "empty merge id"};
  for (const MergeNode& n : m.merges)
    if (n.id == id) return Error{ErrorCode::DuplicateId, id, ""};
  if (inputs.size() < 2) return Error{ErrorCode::TooFewInputs, id, ""};

  const Entity* out = find_entity(m, output.entity);
  if (!out) return Error{ErrorCode::UnknownEndpoint, output.entity, "output"};
  if (out->kind != EntityKind::User) return Error{ErrorCode::OutputNotUser, output.entity, ""};
  if (!output.channel) return Error{ErrorCode::MissingUserChannel, output.entity, "output"};

  for (const Port& in : inputs) {
    const Entity* e = find_entity(m, in.entity);
    if (!e) return Error{ErrorCode::UnknownEndpoint, in.entity, "input"};
    if (e->kind == EntityKind::MixedGroup)
      return Error{ErrorCode::GroupAsEndpoint, in.entity, ""};
    // An input pinned to another channel cannot fuse into this percept.
    std::optional<Channel> pinned = in.channel;
    if (!pinned && is_transducer(e->kind)) pinned = e->channel;
    if (pinned && *pinned != *output.channel)
      return Error{ErrorCode::ChannelMismatch, in.entity,
                   std::string(to_string(*pinned)) + " vs " + to_string(*output.channel)};
  }

  std::sort(inputs.begin(), inputs.end());
  inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
  if (inputs.size() < 2) return Error{ErrorCode::TooFewInputs, id, "inputs collapse to one"};

  m.merges.push_back(MergeNode{id, std::move(inputs), std::move(output)});
  return id;
}

// ---------------------------------------------------------------------------
// Removal

Result<std::string> remove_entity(Model& m, const std::string& id) {
  const Entity* e = find_entity(m, id);
  if (!e) return Error{ErrorCode::UnknownEntity, id, ""};

  m.entities.erase(id);
  std::erase_if(m.relations,
                [&](const Relation& r) { return r.from.entity == id || r.to.entity == id; });
  std::erase_if(m.merges, [&](const MergeNode& n) {
    if (n.output.entity == id) return true;
    for (const Port& p : n.inputs)
      if (p.entity == id) return true;
    return false;
  });

  std::vector<std::string> dead_groups;
  for (auto& [gid, g] : m.entities) {
    if (g.kind != EntityKind::MixedGroup) continue;
    std::erase(g.members, id);
    bool any_real = false, any_virtual = false;
    for (const std::string& member : g.members) {
      const Entity* me = find_entity(m, member);
      if (me && me->world == World::Real) any_real = true;
      if (me && me->world == World::Virtual) any_virtual = true;
    }
    if (g.members.size() < 2 || !any_real || !any_virtual) dead_groups.push_back(gid);
  }
  for (const std::string& gid : dead_groups) m.entities.erase(gid);

  for (auto& [eid, other] : m.entities) {
    if (other.nested_in == id) other.nested_in.reset();
    if (other.mobility.reference == id) other.mobility = Mobility{};
  }
  return id;
}

Result<std::string> remove_relation(Model& m, const std::string& id) {
  auto n = std::erase_if(m.relations, [&](const Relation& r) { return r.id == id; });
  if (n == 0) return Error{ErrorCode::UnknownEntity, id, "no such relation"};
  return id;
}

Result<std::string> remove_merge(Model& m, const std::string& id) {
  auto n = std::erase_if(m.merges, [&](const MergeNode& node) { return node.id == id; });
  if (n == 0) return Error{ErrorCode::UnknownEntity, id, "no such merge"};
  return id;
}

// ---------------------------------------------------------------------------
// Queries

Result<WorldView> world_of(const Model& m, const std::string& id) {
  const Entity* e = find_entity(m, id);
  if (!e) return Error{ErrorCode::UnknownEntity, id, ""};
  if (is_transducer(e->kind) || e->kind == EntityKind::MixedGroup) return WorldView::Straddling;
  if (e->world == World::Virtual) return WorldView::Virtual;
  return WorldView::Real;
}

std::optional<Channel> effective_channel(const Model& m, const Relation& r) {
  auto user_channel = [&](const Port& p) -> std::optional<Channel> {
    const Entity* e = find_entity(m, p.entity);
    if (e && e->kind == EntityKind::User) return p.channel;
    return std::nullopt;
  };
  if (auto c = user_channel(r.from)) return c;
  if (auto c = user_channel(r.to)) return c;
  if (r.channel) return r.channel;
  for (const Port* p : {&r.from, &r.to}) {
    const Entity* e = find_entity(m, p->entity);
    if (e && is_transducer(e->kind)) return e->channel;
  }
  if (r.from.channel) return r.from.channel;
  return r.to.channel;
}

Mobility effective_mobility(const Model& m, const std::string& id) {
  const Entity* e = find_entity(m, id);
  if (!e) return Mobility{};
  if (e->mobility.kind != MobilityKind::Unspecified) return e->mobility;
  if (e->nested_in) return Mobility{MobilityKind::TaskFixed, e->nested_in};
  return e->mobility;
}

std::optional<std::string> effective_place(const Model& m, const std::string& id) {
  const Entity* e = find_entity(m, id);
  size_t guard = 0;
  while (e && guard++ <= m.entities.size()) {
    if (e->place) return e->place;
    if (!e->nested_in) return std::nullopt;
    e = find_entity(m, *e->nested_in);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Structural equality

namespace {

using RelationKey = std::tuple<Port, Port, RelationKind, bool, std::optional<Channel>,
                               std::optional<std::string>>;

RelationKey relation_key(const Relation& r) {
  return {r.from, r.to, r.kind, r.salient, r.channel, r.annotation};
}

std::vector<RelationKey> sorted_relation_keys(const Model& m) {
  std::vector<RelationKey> keys;
  keys.reserve(m.relations.size());
  for (const Relation& r : m.relations) keys.push_back(relation_key(r));
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<MergeNode> sorted_merges(const Model& m) {
  std::vector<MergeNode> nodes = m.merges;
  std::sort(nodes.begin(), nodes.end(), [](const MergeNode& x, const MergeNode& y) {
    return std::tie(x.id, x.inputs, x.output) < std::tie(y.id, y.inputs, y.output);
  });
  return nodes;
}

}  // namespace

bool structural_equal(const Model& lhs, const Model& rhs) {
  return lhs.intent == rhs.intent && lhs.places == rhs.places &&
         lhs.boundaries == rhs.boundaries && lhs.entities == rhs.entities &&
         sorted_relation_keys(lhs) == sorted_relation_keys(rhs) &&
         sorted_merges(lhs) == sorted_merges(rhs);
}

// ---------------------------------------------------------------------------
// Invariant audit

std::vector<Error> validate_invariants(const Model& m) {
  std::vector<Error> out;
  auto bad = [&](ErrorCode code, std::string subject, std::string detail = "") {
    out.push_back(Error{code, std::move(subject), std::move(detail)});
  };

  for (const auto& [id, e] : m.entities) {
    if (id != e.id) bad(ErrorCode::BadInput, id, "key/id mismatch");
    switch (e.kind) {
      case EntityKind::User:
        if (e.world != World::Real) bad(ErrorCode::UserInVirtualWorld, id);
        break;
      case EntityKind::Tool:
      case EntityKind::Object:
        if (!e.world) bad(ErrorCode::MissingWorld, id);
        break;
      case EntityKind::InternalModel:
        if (e.world != World::Virtual) bad(ErrorCode::ModelInRealWorld, id);
        if (e.place) bad(ErrorCode::PlaceOnInternalModel, id);
        break;
      case EntityKind::Sensor:
      case EntityKind::Effector:
        if (e.world) bad(ErrorCode::WorldOnTransducer, id);
        if (!e.channel) bad(ErrorCode::MissingChannel, id);
        break;
      case EntityKind::MixedGroup: {
        if (e.members.size() < 2) bad(ErrorCode::TooFewMembers, id);
        bool any_real = false, any_virtual = false;
        for (const std::string& member : e.members) {
          const Entity* me = find_entity(m, member);
          if (!me) { bad(ErrorCode::UnknownEntity, member, "member of '" + id + "'"); continue; }
          if (!is_tool_or_object(me->kind)) bad(ErrorCode::MemberNotToolOrObject, member);
          if (me->world == World::Real) any_real = true;
          if (me->world == World::Virtual) any_virtual = true;
        }
        if (!e.members.empty() && (!any_real || !any_virtual)) bad(ErrorCode::AllSameWorld, id);
        if (!std::is_sorted(e.members.begin(), e.members.end()))
          bad(ErrorCode::BadInput, id, "members not sorted");
        break;
      }
    }
    if (e.channel && !is_transducer(e.kind)) bad(ErrorCode::ChannelOnNonTransducer, id);
    if (e.stack && !is_tool_or_object(e.kind)) bad(ErrorCode::StackOnNonObject, id);
    if (e.place && !m.places.count(*e.place)) bad(ErrorCode::UnknownPlace, *e.place);
    if (e.nested_in && !find_entity(m, *e.nested_in))
      bad(ErrorCode::UnknownEntity, *e.nested_in);
    if (e.mobility.reference) {
      if (*e.mobility.reference == id) bad(ErrorCode::SelfMobilityReference, id);
      else if (!find_entity(m, *e.mobility.reference))
        bad(ErrorCode::UnknownEntity, *e.mobility.reference);
    }
  }

  // Nesting must stay a forest.
  for (const auto& [id, e] : m.entities) {
    std::set<std::string> seen{id};
    const Entity* cur = &e;
    while (cur->nested_in) {
      if (!seen.insert(*cur->nested_in).second) { bad(ErrorCode::NestingCycle, id); break; }
      const Entity* parent = find_entity(m, *cur->nested_in);
      if (!parent) break;
      cur = parent;
    }
  }

  // Group membership is a partition.
  std::map<std::string, std::string> owner;
  for (const auto& [gid, g] : m.entities) {
    if (g.kind != EntityKind::MixedGroup) continue;
    for (const std::string& member : g.members) {
      auto [it, fresh] = owner.emplace(member, gid);
      if (!fresh) bad(ErrorCode::MemberAlreadyGrouped, member,
                      "in '" + it->second + "' and '" + gid + "'");
    }
  }

  std::set<std::string> rel_ids;
  for (const Relation& r : m.relations) {
    if (!rel_ids.insert(r.id).second) bad(ErrorCode::DuplicateId, r.id, "relation");
    RelationSpec spec{r.from, r.to, r.kind, r.salient, r.channel, r.annotation};
    Model probe = m;  // cheap enough at model scale; reuses the op checks verbatim
    probe.relations.clear();
    if (auto res = add_relation(probe, spec); !res) out.push_back(res.error());
  }

  std::set<std::string> merge_ids;
  for (const MergeNode& n : m.merges) {
    if (!merge_ids.insert(n.id).second) bad(ErrorCode::DuplicateId, n.id, "merge");
    Model probe = m;
    probe.merges.clear();
    if (auto res = add_merge(probe, n.id, n.inputs, n.output); !res) out.push_back(res.error());
  }

  for (const PlaceBoundary& pb : m.boundaries) {
    if (!m.places.count(pb.a)) bad(ErrorCode::UnknownPlace, pb.a);
    if (!m.places.count(pb.b)) bad(ErrorCode::UnknownPlace, pb.b);
    if (pb.a >= pb.b) bad(ErrorCode::BadInput, pb.a + "|" + pb.b, "boundary not normalized");
    if ((pb.kind == BoundaryKind::Mirror) != pb.viewer.has_value())
      bad(ErrorCode::BadMirrorViewer, pb.a + "|" + pb.b);
    else if (pb.viewer && *pb.viewer != pb.a && *pb.viewer != pb.b)
      bad(ErrorCode::BadMirrorViewer, *pb.viewer);
  }
  for (size_t i = 1; i < m.boundaries.size(); ++i)
    if (m.boundaries[i - 1].a == m.boundaries[i].a && m.boundaries[i - 1].b == m.boundaries[i].b)
      bad(ErrorCode::DuplicateBoundary, m.boundaries[i].a + "|" + m.boundaries[i].b);

  return out;
}

}  // namespace irvo
