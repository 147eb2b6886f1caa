#include <json.hpp>

#include "irvo/dsl.hpp"

namespace irvo::dsl {

using nlohmann::ordered_json;

namespace {

ordered_json port_json(const Port& p) {
  ordered_json j;
  j["entity"] = p.entity;
  if (p.channel) j["channel"] = to_string(*p.channel);
  return j;
}

Result<Port> port_from(const ordered_json& j) {
  if (!j.is_object() || !j.contains("entity") || !j["entity"].is_string())
    return Error{ErrorCode::BadInput, "port", "endpoint must carry an entity name"};
  Port p{j["entity"].get<std::string>(), std::nullopt};
  if (j.contains("channel")) {
    if (!j["channel"].is_string())
      return Error{ErrorCode::BadInput, p.entity, "channel must be a string"};
    auto c = channel_from_string(j["channel"].get<std::string>());
    if (!c) return Error{ErrorCode::BadInput, p.entity, "unknown channel"};
    p.channel = c;
  }
  return p;
}

Result<std::string> req_string(const ordered_json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string())
    return Error{ErrorCode::BadInput, key, "expected a string field"};
  return j[key].get<std::string>();
}

}  // namespace

std::string to_json(const Model& m) {
  ordered_json j;
  j["schema"] = "irvo-json/1";
  j["name"] = m.name;
  j["intent"] = to_string(m.intent);
  j["places"] = ordered_json::array();
  for (const std::string& p : m.places) j["places"].push_back(p);

  j["boundaries"] = ordered_json::array();
  for (const PlaceBoundary& b : m.boundaries) {
    ordered_json jb;
    jb["a"] = b.a;
    jb["b"] = b.b;
    jb["kind"] = to_string(b.kind);
    if (b.viewer) jb["viewer"] = *b.viewer;
    j["boundaries"].push_back(std::move(jb));
  }

  j["entities"] = ordered_json::array();
  for (const auto& [id, e] : m.entities) {
    ordered_json je;
    je["id"] = id;
    je["kind"] = to_string(e.kind);
    if (e.world) je["world"] = to_string(*e.world);
    if (e.channel) je["channel"] = to_string(*e.channel);
    if (!e.members.empty()) je["members"] = e.members;
    if (e.place) je["place"] = *e.place;
    if (e.nested_in) je["nested_in"] = *e.nested_in;
    if (e.mobility.kind != MobilityKind::Unspecified) {
      je["mobility"] = ordered_json{{"kind", to_string(e.mobility.kind)}};
      if (e.mobility.reference) je["mobility"]["reference"] = *e.mobility.reference;
    }
    if (e.stack) je["stack"] = true;
    j["entities"].push_back(std::move(je));
  }

  j["relations"] = ordered_json::array();
  for (const Relation& r : m.relations) {
    ordered_json jr;
    jr["id"] = r.id;
    jr["from"] = port_json(r.from);
    jr["to"] = port_json(r.to);
    jr["kind"] = to_string(r.kind);
    jr["salient"] = r.salient;
    if (r.channel) jr["channel"] = to_string(*r.channel);
    if (r.annotation) jr["annotation"] = *r.annotation;
    j["relations"].push_back(std::move(jr));
  }

  j["merges"] = ordered_json::array();
  for (const MergeNode& node : m.merges) {
    ordered_json jn;
    jn["id"] = node.id;
    jn["inputs"] = ordered_json::array();
    for (const Port& p : node.inputs) jn["inputs"].push_back(port_json(p));
    jn["output"] = port_json(node.output);
    j["merges"].push_back(std::move(jn));
  }

  return j.dump(2) + "\n";
}

Result<Model> model_from_json(std::string_view text) {
  ordered_json j = ordered_json::parse(text, nullptr, false);
  if (j.is_discarded())
    return Error{ErrorCode::BadInput, "document", "not valid JSON"};
  if (!j.is_object())
    return Error{ErrorCode::BadInput, "document", "expected a JSON object"};
  auto schema = req_string(j, "schema");
  if (!schema) return schema.error();
  if (schema.value() != "irvo-json/1")
    return Error{ErrorCode::BadInput, schema.value(), "unsupported schema"};

  Model m;
  auto name = req_string(j, "name");
  if (!name) return name.error();
  m.name = name.value();

  if (j.contains("intent")) {
    auto intent = req_string(j, "intent");
    if (!intent) return intent.error();
    if (intent.value() == "perception") m.intent = TaskIntent::PerceptionOnly;
    else if (intent.value() == "manipulation") m.intent = TaskIntent::Manipulation;
    else return Error{ErrorCode::BadInput, intent.value(), "unknown intent"};
  }

  if (j.contains("places")) {
    if (!j["places"].is_array())
      return Error{ErrorCode::BadInput, "places", "expected an array"};
    for (const auto& p : j["places"]) {
      if (!p.is_string()) return Error{ErrorCode::BadInput, "places", "expected strings"};
      m.places.insert(p.get<std::string>());
    }
  }

  if (j.contains("boundaries")) {
    if (!j["boundaries"].is_array())
      return Error{ErrorCode::BadInput, "boundaries", "expected an array"};
    for (const auto& jb : j["boundaries"]) {
      PlaceBoundary b;
      auto a = req_string(jb, "a");
      if (!a) return a.error();
      auto bb = req_string(jb, "b");
      if (!bb) return bb.error();
      auto kind = req_string(jb, "kind");
      if (!kind) return kind.error();
      b.a = std::min(a.value(), bb.value());
      b.b = std::max(a.value(), bb.value());
      if (kind.value() == "opaque") b.kind = BoundaryKind::Opaque;
      else if (kind.value() == "audio") b.kind = BoundaryKind::AudioPermeable;
      else if (kind.value() == "mirror") b.kind = BoundaryKind::Mirror;
      else return Error{ErrorCode::BadInput, kind.value(), "unknown boundary kind"};
      if (jb.contains("viewer")) {
        auto v = req_string(jb, "viewer");
        if (!v) return v.error();
        b.viewer = v.value();
      }
      m.boundaries.push_back(std::move(b));
    }
    std::sort(m.boundaries.begin(), m.boundaries.end(),
              [](const PlaceBoundary& x, const PlaceBoundary& y) {
                return std::tie(x.a, x.b) < std::tie(y.a, y.b);
              });
  }

  if (j.contains("entities")) {
    if (!j["entities"].is_array())
      return Error{ErrorCode::BadInput, "entities", "expected an array"};
    for (const auto& je : j["entities"]) {
      Entity e;
      auto id = req_string(je, "id");
      if (!id) return id.error();
      e.id = id.value();
      auto kind = req_string(je, "kind");
      if (!kind) return kind.error();
      auto k = entity_kind_from_string(kind.value());
      if (!k) return Error{ErrorCode::BadInput, e.id, "unknown entity kind"};
      e.kind = *k;
      if (je.contains("world")) {
        auto w = req_string(je, "world");
        if (!w) return w.error();
        if (w.value() == "real") e.world = World::Real;
        else if (w.value() == "virtual") e.world = World::Virtual;
        else return Error{ErrorCode::BadInput, e.id, "unknown world"};
      }
      if (je.contains("channel")) {
        auto c = req_string(je, "channel");
        if (!c) return c.error();
        auto chan = channel_from_string(c.value());
        if (!chan) return Error{ErrorCode::BadInput, e.id, "unknown channel"};
        e.channel = chan;
      }
      if (je.contains("members")) {
        if (!je["members"].is_array())
          return Error{ErrorCode::BadInput, e.id, "members must be an array"};
        for (const auto& mm : je["members"]) {
          if (!mm.is_string()) return Error{ErrorCode::BadInput, e.id, "members must be strings"};
          e.members.push_back(mm.get<std::string>());
        }
        std::sort(e.members.begin(), e.members.end());
      }
      if (je.contains("place")) {
        auto p = req_string(je, "place");
        if (!p) return p.error();
        e.place = p.value();
      }
      if (je.contains("nested_in")) {
        auto p = req_string(je, "nested_in");
        if (!p) return p.error();
        e.nested_in = p.value();
      }
      if (je.contains("mobility")) {
        const auto& jm = je["mobility"];
        auto mk = req_string(jm, "kind");
        if (!mk) return mk.error();
        if (mk.value() == "free") e.mobility.kind = MobilityKind::Mobile;
        else if (mk.value() == "fixed") e.mobility.kind = MobilityKind::TaskFixed;
        else if (mk.value() == "pinned") e.mobility.kind = MobilityKind::AlwaysFixed;
        else return Error{ErrorCode::BadInput, e.id, "unknown mobility"};
        if (jm.contains("reference")) {
          auto ref = req_string(jm, "reference");
          if (!ref) return ref.error();
          e.mobility.reference = ref.value();
        }
      }
      if (je.contains("stack")) {
        if (!je["stack"].is_boolean())
          return Error{ErrorCode::BadInput, e.id, "stack must be a boolean"};
        e.stack = je["stack"].get<bool>();
      }
      if (m.entities.count(e.id))
        return Error{ErrorCode::DuplicateId, e.id, "entity listed twice"};
      m.entities.emplace(e.id, std::move(e));
    }
  }

  if (j.contains("relations")) {
    if (!j["relations"].is_array())
      return Error{ErrorCode::BadInput, "relations", "expected an array"};
    for (const auto& jr : j["relations"]) {
      Relation r;
      auto id = req_string(jr, "id");
      if (!id) return id.error();
      r.id = id.value();
      if (!jr.contains("from") || !jr.contains("to"))
        return Error{ErrorCode::BadInput, r.id, "relation needs from and to"};
      auto from = port_from(jr["from"]);
      if (!from) return from.error();
      r.from = from.value();
      auto to = port_from(jr["to"]);
      if (!to) return to.error();
      r.to = to.value();
      auto kind = req_string(jr, "kind");
      if (!kind) return kind.error();
      auto k = relation_kind_from_string(kind.value());
      if (!k) return Error{ErrorCode::BadInput, r.id, "unknown relation kind"};
      r.kind = *k;
      if (jr.contains("salient")) {
        if (!jr["salient"].is_boolean())
          return Error{ErrorCode::BadInput, r.id, "salient must be a boolean"};
        r.salient = jr["salient"].get<bool>();
      }
      if (jr.contains("channel")) {
        auto c = req_string(jr, "channel");
        if (!c) return c.error();
        auto chan = channel_from_string(c.value());
        if (!chan) return Error{ErrorCode::BadInput, r.id, "unknown channel"};
        r.channel = chan;
      }
      if (jr.contains("annotation")) {
        auto a = req_string(jr, "annotation");
        if (!a) return a.error();
        r.annotation = a.value();
      }
      m.relations.push_back(std::move(r));
    }
  }

  if (j.contains("merges")) {
    if (!j["merges"].is_array())
      return Error{ErrorCode::BadInput, "merges", "expected an array"};
    for (const auto& jn : j["merges"]) {
      MergeNode node;
      auto id = req_string(jn, "id");
      if (!id) return id.error();
      node.id = id.value();
      if (!jn.contains("inputs") || !jn["inputs"].is_array())
        return Error{ErrorCode::BadInput, node.id, "merge needs an inputs array"};
      for (const auto& ji : jn["inputs"]) {
        auto p = port_from(ji);
        if (!p) return p.error();
        node.inputs.push_back(p.value());
      }
      std::sort(node.inputs.begin(), node.inputs.end());
      if (!jn.contains("output"))
        return Error{ErrorCode::BadInput, node.id, "merge needs an output"};
      auto out = port_from(jn["output"]);
      if (!out) return out.error();
      node.output = out.value();
      m.merges.push_back(std::move(node));
    }
  }

  if (auto errors = validate_invariants(m); !errors.empty()) return errors.front();
  return m;
}

}  // namespace irvo::dsl
