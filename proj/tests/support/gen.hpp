#pragma once

#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "irvo/model.hpp"

// Deterministic random models. Everything is derived from a seeded
// mt19937 through plain modulo so the sequence is identical on every
// platform; construction goes through the public ops, and failed ops are
// simply skipped, so every produced model is valid by construction.

namespace testgen {

struct Rng {
  std::mt19937 engine;

  explicit Rng(uint32_t seed) : engine(seed) {}

  uint32_t below(uint32_t n) { return n ? engine() % n : 0; }
  bool chance(uint32_t percent) { return below(100) < percent; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(static_cast<uint32_t>(v.size()))];
  }
};

inline irvo::Channel random_channel(Rng& rng) {
  static const std::vector<irvo::Channel> all{irvo::Channel::V, irvo::Channel::A,
                                              irvo::Channel::KH, irvo::Channel::T,
                                              irvo::Channel::S};
  return rng.pick(all);
}

inline irvo::Model random_model(Rng& rng, int max_entities = 12) {
  using namespace irvo;
  Model m;
  m.name = "gen";
  m.intent = rng.chance(75) ? TaskIntent::Manipulation : TaskIntent::PerceptionOnly;

  std::vector<std::string> places;
  for (uint32_t i = 0, n = rng.below(3); i < n; ++i) {
    std::string id = "p" + std::to_string(i);
    if (add_place(m, id)) places.push_back(id);
  }

  std::vector<std::string> users, artifacts, plain;  // plain = relation endpoints
  auto put = [&](Entity e) {
    if ((int)m.entities.size() >= max_entities) return;
    if (e.world == World::Real && !places.empty() && rng.chance(40))
      e.place = rng.pick(places);
    std::string id = e.id;
    if (!add_entity(m, std::move(e))) return;
    plain.push_back(id);
    const Entity* stored = find_entity(m, id);
    if (stored->kind == EntityKind::User) users.push_back(id);
    if (stored->kind == EntityKind::Tool || stored->kind == EntityKind::Object)
      artifacts.push_back(id);
  };

  uint32_t nusers = 1 + rng.below(2);
  for (uint32_t i = 0; i < nusers; ++i)
    put({.id = "u" + std::to_string(i), .kind = EntityKind::User, .world = World::Real});
  for (uint32_t i = 0, n = rng.below(3); i < n; ++i)
    put({.id = "t" + std::to_string(i),
         .kind = EntityKind::Tool,
         .world = rng.chance(60) ? World::Real : World::Virtual,
         .stack = rng.chance(10)});
  for (uint32_t i = 0, n = 1 + rng.below(3); i < n; ++i)
    put({.id = "o" + std::to_string(i),
         .kind = EntityKind::Object,
         .world = rng.chance(55) ? World::Real : World::Virtual,
         .stack = rng.chance(10)});
  if (rng.chance(30))
    put({.id = "n0", .kind = EntityKind::InternalModel, .world = World::Virtual});
  for (uint32_t i = 0, n = rng.below(3); i < n; ++i)
    put({.id = "s" + std::to_string(i), .kind = EntityKind::Sensor,
         .channel = random_channel(rng)});
  for (uint32_t i = 0, n = rng.below(3); i < n; ++i)
    put({.id = "e" + std::to_string(i), .kind = EntityKind::Effector,
         .channel = random_channel(rng)});

  // Mirrors need a user place to make sense; add boundaries once users exist.
  for (size_t i = 0; i + 1 < places.size(); ++i)
    if (rng.chance(50)) {
      uint32_t kind = rng.below(3);
      if (kind == 2)
        add_boundary(m, places[i], places[i + 1], BoundaryKind::Mirror, places[i]);
      else
        add_boundary(m, places[i], places[i + 1],
                     kind ? BoundaryKind::AudioPermeable : BoundaryKind::Opaque);
    }

  for (const std::string& id : artifacts) {
    if (rng.chance(15)) set_nested(m, id, rng.pick(artifacts));
    if (rng.chance(25)) {
      static const std::vector<MobilityKind> kinds{MobilityKind::Mobile, MobilityKind::TaskFixed,
                                                   MobilityKind::AlwaysFixed};
      Mobility mob{rng.pick(kinds), std::nullopt};
      if (rng.chance(40)) {
        const std::string& ref = rng.pick(plain);
        if (ref != id) mob.reference = ref;
      }
      set_mobility(m, id, mob);
    }
  }

  for (uint32_t g = 0, n = rng.below(2); g < n; ++g) {
    std::vector<std::string> reals, virts;
    for (const std::string& id : artifacts) {
      const Entity* e = find_entity(m, id);
      (e->world == World::Real ? reals : virts).push_back(id);
    }
    if (reals.empty() || virts.empty()) break;
    std::vector<std::string> members{rng.pick(reals), rng.pick(virts)};
    if (rng.chance(30)) members.push_back(rng.pick(artifacts));
    compose_mixed(m, "g" + std::to_string(g), members);
  }

  // merge_models folds relations by (from, to, kind, channel); emitting two
  // relations with one key would make merge(m, m) differ from m.
  std::set<std::tuple<irvo::Port, irvo::Port, RelationKind, std::optional<Channel>>> rel_keys;
  uint32_t nrel = rng.below(2 * (uint32_t)m.entities.size() + 4);
  for (uint32_t i = 0; i < nrel; ++i) {
    const std::string& from = rng.pick(plain);
    const std::string& to = rng.pick(plain);
    if (from == to) continue;
    const Entity* fe = find_entity(m, from);
    const Entity* te = find_entity(m, to);
    RelationSpec spec;
    spec.from = {from, std::nullopt};
    spec.to = {to, std::nullopt};
    if (fe->kind == EntityKind::User) spec.from.channel = random_channel(rng);
    if (te->kind == EntityKind::User) {
      spec.to.channel = random_channel(rng);
      spec.kind = fe->kind == EntityKind::User && rng.chance(30)
                      ? RelationKind::Communication
                      : RelationKind::Perception;
    } else {
      spec.kind = RelationKind::Action;
      if (te->kind != EntityKind::InternalModel && rng.chance(15))
        spec.to.channel = random_channel(rng);
    }
    if (fe->kind != EntityKind::User && fe->kind != EntityKind::InternalModel &&
        rng.chance(15))
      spec.from.channel = random_channel(rng);
    spec.salient = rng.chance(80);
    if (rng.chance(10)) spec.channel = random_channel(rng);
    if (rng.chance(10)) spec.annotation = "a" + std::to_string(i);
    auto key = std::make_tuple(spec.from, spec.to, spec.kind, spec.channel);
    if (rel_keys.count(key)) continue;
    if (add_relation(m, spec)) rel_keys.insert(key);
  }

  // Occasionally fuse perception legs that already converge on one port.
  if (rng.chance(50)) {
    std::map<std::pair<std::string, Channel>, std::set<Port>> buckets;
    for (const Relation& r : m.relations)
      if (r.kind == RelationKind::Perception && r.to.channel) {
        const Entity* te = find_entity(m, r.to.entity);
        if (te && te->kind == EntityKind::User)
          buckets[{r.to.entity, *r.to.channel}].insert(r.from);
      }
    int made = 0;
    for (const auto& [key, ports] : buckets) {
      if (ports.size() < 2) continue;
      add_merge(m, "x" + std::to_string(made++),
                std::vector<Port>(ports.begin(), ports.end()),
                Port{key.first, key.second});
      if (made == 2) break;
    }
  }
  return m;
}

// A coherent submodel of `base`: drops entities at random but keeps the
// closure needed for validity (group members, nesting parents, mobility
// references), so any two slices of one base always merge cleanly.
inline irvo::Model slice(Rng& rng, const irvo::Model& base) {
  using namespace irvo;
  std::set<std::string> keep;
  for (const auto& [id, e] : base.entities)
    if (rng.chance(70)) keep.insert(id);
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& [id, e] : base.entities) {
      if (!keep.count(id)) continue;
      auto need = [&](const std::string& other) {
        if (!keep.count(other)) { keep.insert(other); grew = true; }
      };
      for (const std::string& member : e.members) need(member);
      if (e.nested_in) need(*e.nested_in);
      if (e.mobility.reference) need(*e.mobility.reference);
    }
  }

  Model sub;
  sub.name = base.name;
  sub.intent = base.intent;
  sub.places = base.places;
  sub.boundaries = base.boundaries;
  for (const auto& [id, e] : base.entities)
    if (keep.count(id)) sub.entities.emplace(id, e);
  for (const Relation& r : base.relations) {
    if (!keep.count(r.from.entity) || !keep.count(r.to.entity)) continue;
    if (!rng.chance(85)) continue;
    Relation copy = r;
    if (rng.chance(10)) copy.salient = !copy.salient;
    if (copy.annotation && rng.chance(20)) copy.annotation = "zz";
    sub.relations.push_back(std::move(copy));
  }
  for (const MergeNode& node : base.merges) {
    bool closed = keep.count(node.output.entity) > 0;
    for (const Port& in : node.inputs) closed = closed && keep.count(in.entity) > 0;
    if (closed && rng.chance(80)) sub.merges.push_back(node);
  }
  return sub;
}

}  // namespace testgen
