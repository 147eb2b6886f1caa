#include <algorithm>
#include <cctype>
#include <set>

#include "irvo/dsl.hpp"

namespace irvo::dsl {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, Keyword, Str, LBrace, RBrace, Comma, Dot, Slash, At, Arrow, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

const std::set<std::string>& keywords() {
  static const std::set<std::string> kw = {
      "model",   "place",    "boundary", "user",       "tool",     "object",
      "internal","sensor",   "effector", "rel",        "mixed",    "merge",
      "intent",  "real",     "virtual",  "channel",    "mobility", "stack",
      "in",      "free",     "fixed",    "pinned",     "opaque",   "audio",
      "mirror",  "viewer",   "dashed",   "action",     "perception",
      "communication",       "manipulation"};
  return kw;
}

bool starts_item(const Token& t) {
  if (t.kind != Tok::Keyword) return false;
  static const std::set<std::string> starters = {"place", "boundary", "user",   "tool",
                                                 "object", "internal", "sensor", "effector",
                                                 "rel",    "mixed",    "merge",  "intent"};
  return starters.count(t.text) > 0;
}

SourceSpan span_of(const Token& t) {
  int len = static_cast<int>(t.text.size());
  if (t.kind == Tok::Str) len += 2;
  if (t.kind == Tok::Arrow) len = 2;
  if (len == 0) len = 1;
  return SourceSpan{t.line, t.col, len};
}

struct Lexer {
  std::string_view src;
  size_t pos = 0;
  int line = 1;
  int col = 1;
  std::vector<ParseDiagnostic>& diags;

  void advance() {
    if (pos < src.size() && src[pos] == '\n') { ++line; col = 1; }
    else ++col;
    ++pos;
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') advance();
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) { advance(); continue; }
      int tl = line, tc = col;
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string word;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
          word += src[pos];
          advance();
        }
        Tok kind = keywords().count(word) ? Tok::Keyword : Tok::Ident;
        out.push_back({kind, word, tl, tc});
        continue;
      }
      if (c == '"') {
        advance();
        std::string value;
        bool closed = false;
        while (pos < src.size()) {
          char d = src[pos];
          if (d == '"') { advance(); closed = true; break; }
          if (d == '\n') break;
          if (d == '\\' && pos + 1 < src.size()) {
            char e = src[pos + 1];
            advance();
            advance();
            switch (e) {
              case 'n': value += '\n'; break;
              case 't': value += '\t'; break;
              case '"': value += '"'; break;
              case '\\': value += '\\'; break;
              default: value += e;
            }
            continue;
          }
          value += d;
          advance();
        }
        if (!closed)
          diags.push_back({SourceSpan{tl, tc, 1}, "E-SYNTAX", "unterminated string"});
        out.push_back({Tok::Str, value, tl, tc});
        continue;
      }
      if (c == '-' && pos + 1 < src.size() && src[pos + 1] == '>') {
        advance();
        advance();
        out.push_back({Tok::Arrow, "->", tl, tc});
        continue;
      }
      Tok kind;
      switch (c) {
        case '{': kind = Tok::LBrace; break;
        case '}': kind = Tok::RBrace; break;
        case ',': kind = Tok::Comma; break;
        case '.': kind = Tok::Dot; break;
        case '/': kind = Tok::Slash; break;
        case '@': kind = Tok::At; break;
        default:
          diags.push_back({SourceSpan{tl, tc, 1}, "E-SYNTAX",
                           std::string("unexpected character '") + c + "'"});
          advance();
          continue;
      }
      out.push_back({kind, std::string(1, c), tl, tc});
      advance();
    }
    out.push_back({Tok::End, "", line, col});
    return out;
  }
};

// ---------------------------------------------------------------------------
// Item records: phase one keeps tokens so the semantic pass can point at
// the exact offender.

struct PlaceItem { Token id; };

struct BoundaryItem {
  Token a, b, kind;
  std::optional<Token> viewer;
};

struct EntityItem {
  Token kw, id;
  std::optional<Token> world, place, mob_ref, mob_kind, nested, stack_tok, chan;
};

struct EndpointItem {
  Token entity;
  std::optional<Token> channel;
};

struct RelItem {
  Token kw;
  EndpointItem from, to;
  Token kind;
  bool dashed = false;
  std::optional<Token> channel;
  std::optional<Token> annotation;
};

struct MixedItem {
  Token id;
  std::vector<Token> members;
};

struct MergeItem {
  Token id;
  std::vector<EndpointItem> inputs;
  EndpointItem output;
};

struct IntentItem { Token kw, value; };

struct Items {
  std::vector<PlaceItem> places;
  std::vector<BoundaryItem> boundaries;
  std::vector<EntityItem> entities;
  std::vector<MixedItem> groups;
  std::vector<RelItem> relations;
  std::vector<MergeItem> merges;
  std::vector<IntentItem> intents;
  std::string model_name;
};

// ---------------------------------------------------------------------------
// Phase one: structure

struct Parser {
  const std::vector<Token>& toks;
  size_t at = 0;
  std::vector<ParseDiagnostic>& diags;

  const Token& peek(size_t ahead = 0) const {
    size_t i = std::min(at + ahead, toks.size() - 1);
    return toks[i];
  }
  const Token& next() {
    const Token& t = toks[std::min(at, toks.size() - 1)];
    if (at < toks.size() - 1) ++at;
    return t;
  }
  bool at_keyword(const char* kw) const {
    return peek().kind == Tok::Keyword && peek().text == kw;
  }

  void error_here(const std::string& message) {
    diags.push_back({span_of(peek()), "E-SYNTAX", message});
  }

  void recover() {
    while (peek().kind != Tok::End && peek().kind != Tok::RBrace && !starts_item(peek())) next();
  }

  bool expect_keyword(const char* kw, const char* what) {
    if (at_keyword(kw)) { next(); return true; }
    error_here(std::string("expected '") + kw + "' " + what);
    return false;
  }

  std::optional<Token> expect_ident(const char* what) {
    if (peek().kind == Tok::Ident) return next();
    if (peek().kind == Tok::Keyword)
      error_here("keyword '" + peek().text + "' cannot be used as " + what);
    else
      error_here(std::string("expected ") + what);
    return std::nullopt;
  }

  std::optional<EndpointItem> parse_endpoint() {
    auto id = expect_ident("an entity name");
    if (!id) return std::nullopt;
    EndpointItem ep{*id, std::nullopt};
    if (peek().kind == Tok::Dot) {
      next();
      if (peek().kind == Tok::Ident || peek().kind == Tok::Keyword) ep.channel = next();
      else { error_here("expected a channel after '.'"); return std::nullopt; }
    }
    return ep;
  }

  // mobility := "mobility" [IDENT "/"] ("free"|"fixed"|"pinned")
  bool parse_mobility(EntityItem& e) {
    next();  // mobility
    if (peek().kind == Tok::Ident) {
      e.mob_ref = next();
      if (peek().kind != Tok::Slash) { error_here("expected '/' after mobility reference"); return false; }
      next();
    }
    if (at_keyword("free") || at_keyword("fixed") || at_keyword("pinned")) {
      e.mob_kind = next();
      return true;
    }
    error_here("expected 'free', 'fixed' or 'pinned'");
    return false;
  }

  void parse_entity(Items& items) {
    EntityItem e;
    e.kw = next();
    auto id = expect_ident("an entity name");
    if (!id) { recover(); return; }
    e.id = *id;
    bool transducer = e.kw.text == "sensor" || e.kw.text == "effector";
    if (transducer) {
      if (!expect_keyword("channel", "on a transducer")) { recover(); return; }
      if (peek().kind == Tok::Ident || peek().kind == Tok::Keyword) e.chan = next();
      else { error_here("expected a channel"); recover(); return; }
    } else if (at_keyword("real") || at_keyword("virtual")) {
      e.world = next();
    }
    if (peek().kind == Tok::At) {
      next();
      auto p = expect_ident("a place name");
      if (!p) { recover(); return; }
      e.place = *p;
    }
    if (at_keyword("mobility") && !parse_mobility(e)) { recover(); return; }
    if (!transducer) {
      if (at_keyword("stack")) e.stack_tok = next();
      if (at_keyword("in")) {
        next();
        auto p = expect_ident("an enclosing entity");
        if (!p) { recover(); return; }
        e.nested = *p;
      }
    }
    items.entities.push_back(std::move(e));
  }

  void parse_rel(Items& items) {
    RelItem r;
    r.kw = next();
    auto from = parse_endpoint();
    if (!from) { recover(); return; }
    r.from = *from;
    if (peek().kind != Tok::Arrow) { error_here("expected '->'"); recover(); return; }
    next();
    auto to = parse_endpoint();
    if (!to) { recover(); return; }
    r.to = *to;
    if (at_keyword("action") || at_keyword("perception") || at_keyword("communication")) {
      r.kind = next();
    } else {
      error_here("expected 'action', 'perception' or 'communication'");
      recover();
      return;
    }
    if (at_keyword("dashed")) { next(); r.dashed = true; }
    if (at_keyword("channel")) {
      next();
      if (peek().kind == Tok::Ident || peek().kind == Tok::Keyword) r.channel = next();
      else { error_here("expected a channel"); recover(); return; }
    }
    if (peek().kind == Tok::Str) r.annotation = next();
    items.relations.push_back(std::move(r));
  }

  void parse_mixed(Items& items) {
    next();  // mixed
    MixedItem g;
    auto id = expect_ident("a group name");
    if (!id) { recover(); return; }
    g.id = *id;
    if (peek().kind != Tok::LBrace) { error_here("expected '{'"); recover(); return; }
    next();
    while (true) {
      auto member = expect_ident("a member name");
      if (!member) { recover(); return; }
      g.members.push_back(*member);
      if (peek().kind == Tok::Comma) { next(); continue; }
      break;
    }
    if (peek().kind != Tok::RBrace) { error_here("expected '}'"); recover(); return; }
    next();
    items.groups.push_back(std::move(g));
  }

  void parse_merge(Items& items) {
    next();  // merge
    MergeItem node;
    auto id = expect_ident("a merge name");
    if (!id) { recover(); return; }
    node.id = *id;
    if (peek().kind != Tok::LBrace) { error_here("expected '{'"); recover(); return; }
    next();
    while (true) {
      auto ep = parse_endpoint();
      if (!ep) { recover(); return; }
      node.inputs.push_back(*ep);
      if (peek().kind == Tok::Comma) { next(); continue; }
      break;
    }
    if (peek().kind != Tok::RBrace) { error_here("expected '}'"); recover(); return; }
    next();
    if (peek().kind != Tok::Arrow) { error_here("expected '->'"); recover(); return; }
    next();
    auto out = parse_endpoint();
    if (!out) { recover(); return; }
    node.output = *out;
    items.merges.push_back(std::move(node));
  }

  void parse_boundary(Items& items) {
    next();  // boundary
    BoundaryItem b;
    auto a = expect_ident("a place name");
    if (!a) { recover(); return; }
    b.a = *a;
    auto bb = expect_ident("a place name");
    if (!bb) { recover(); return; }
    b.b = *bb;
    if (at_keyword("opaque") || at_keyword("audio") || at_keyword("mirror")) {
      b.kind = next();
    } else {
      error_here("expected 'opaque', 'audio' or 'mirror'");
      recover();
      return;
    }
    if (b.kind.text == "mirror") {
      if (!expect_keyword("viewer", "after 'mirror'")) { recover(); return; }
      auto v = expect_ident("a place name");
      if (!v) { recover(); return; }
      b.viewer = *v;
    }
    items.boundaries.push_back(std::move(b));
  }

  void parse_intent(Items& items) {
    IntentItem it;
    it.kw = next();
    if (at_keyword("manipulation") || at_keyword("perception")) {
      it.value = next();
      items.intents.push_back(it);
    } else {
      error_here("expected 'manipulation' or 'perception'");
      recover();
    }
  }

  std::optional<Items> run() {
    Items items;
    if (!expect_keyword("model", "at the start")) return std::nullopt;
    if (peek().kind != Tok::Str) { error_here("expected a quoted model name"); return std::nullopt; }
    items.model_name = next().text;
    if (peek().kind != Tok::LBrace) { error_here("expected '{'"); return std::nullopt; }
    next();

    while (peek().kind != Tok::RBrace && peek().kind != Tok::End) {
      if (at_keyword("place")) {
        next();
        if (auto id = expect_ident("a place name")) items.places.push_back({*id});
        else recover();
      } else if (at_keyword("boundary")) parse_boundary(items);
      else if (at_keyword("user") || at_keyword("tool") || at_keyword("object") ||
               at_keyword("internal")) parse_entity(items);
      else if (at_keyword("sensor") || at_keyword("effector")) parse_entity(items);
      else if (at_keyword("rel")) parse_rel(items);
      else if (at_keyword("mixed")) parse_mixed(items);
      else if (at_keyword("merge")) parse_merge(items);
      else if (at_keyword("intent")) parse_intent(items);
      else {
        error_here("expected a model item, found '" + peek().text + "'");
        next();
        recover();
      }
    }
    if (peek().kind != Tok::RBrace) { error_here("expected '}'"); return items; }
    next();
    if (peek().kind != Tok::End)
      error_here("trailing input after the model block");
    return items;
  }
};

// ---------------------------------------------------------------------------
// Phase two: semantics, via the core construction operations

struct Builder {
  Model m;
  std::vector<ParseDiagnostic>& diags;

  void emit(const Token& t, std::string code, std::string message) {
    diags.push_back({span_of(t), std::move(code), std::move(message)});
  }

  std::optional<Channel> channel_at(const Token& t) {
    auto c = channel_from_string(t.text);
    if (!c) emit(t, "E-BAD-CHANNEL", "unknown channel '" + t.text + "'");
    return c;
  }

  // Maps a core error onto the token that caused it.
  void core_error(const Error& err, const Token& fallback,
                  const std::map<ErrorCode, std::pair<std::string, const Token*>>& table) {
    auto it = table.find(err.code);
    const Token& t = (it != table.end() && it->second.second) ? *it->second.second : fallback;
    std::string code = it != table.end() ? it->second.first : "E-SEMANTIC";
    emit(t, code, err.message());
  }

  Port make_port(const EndpointItem& ep, bool& ok) {
    Port p{ep.entity.text, std::nullopt};
    if (ep.channel) {
      auto c = channel_at(*ep.channel);
      if (!c) ok = false;
      p.channel = c;
    }
    return p;
  }

  void build(const Items& items) {
    m.name = items.model_name;

    for (size_t i = 0; i < items.intents.size(); ++i) {
      if (i > 0) { emit(items.intents[i].kw, "E-DUP-INTENT", "intent declared twice"); continue; }
      m.intent = items.intents[i].value.text == "perception" ? TaskIntent::PerceptionOnly
                                                             : TaskIntent::Manipulation;
    }

    for (const PlaceItem& p : items.places)
      if (auto r = add_place(m, p.id.text); !r)
        emit(p.id, "E-DUP-ID", r.error().message());

    for (const BoundaryItem& b : items.boundaries) {
      BoundaryKind kind = BoundaryKind::Opaque;
      if (b.kind.text == "audio") kind = BoundaryKind::AudioPermeable;
      if (b.kind.text == "mirror") kind = BoundaryKind::Mirror;
      std::optional<std::string> viewer;
      if (b.viewer) viewer = b.viewer->text;
      if (auto r = add_boundary(m, b.a.text, b.b.text, kind, viewer); !r) {
        const Error& err = r.error();
        const Token* t = &b.a;
        std::string code = "E-SEMANTIC";
        switch (err.code) {
          case ErrorCode::UnknownPlace:
            t = err.subject == b.b.text ? &b.b : &b.a;
            code = "E-UNKNOWN-PLACE";
            break;
          case ErrorCode::SelfBoundary: code = "E-SELF-BOUNDARY"; t = &b.b; break;
          case ErrorCode::DuplicateBoundary: code = "E-DUP-BOUNDARY"; break;
          case ErrorCode::BadMirrorViewer:
            code = "E-BAD-VIEWER";
            if (b.viewer) t = &*b.viewer;
            break;
          default: break;
        }
        emit(*t, code, err.message());
      }
    }

    // Entities first without cross-references, then nesting and relative
    // mobility once every name is known; the file order is free.
    struct Deferred { Token id; Token ref; bool nesting; Mobility mob; };
    std::vector<Deferred> deferred;

    for (const EntityItem& e : items.entities) {
      Entity ent;
      ent.id = e.id.text;
      ent.kind = *entity_kind_from_string(e.kw.text);
      if (e.world) {
        ent.world = e.world->text == "real" ? World::Real : World::Virtual;
      } else if (ent.kind == EntityKind::Tool || ent.kind == EntityKind::Object) {
        ent.world = World::Real;
        emit(e.id, "W-DEFAULT-WORLD",
             std::string(to_string(ent.kind)) + " '" + ent.id + "' defaults to the real world");
      }
      if (e.chan) {
        auto c = channel_at(*e.chan);
        if (!c) continue;
        ent.channel = c;
      }
      if (e.place) ent.place = e.place->text;
      if (e.stack_tok) ent.stack = true;

      Mobility mob;
      if (e.mob_kind) {
        if (e.mob_kind->text == "free") mob.kind = MobilityKind::Mobile;
        if (e.mob_kind->text == "fixed") mob.kind = MobilityKind::TaskFixed;
        if (e.mob_kind->text == "pinned") mob.kind = MobilityKind::AlwaysFixed;
        if (e.mob_ref) mob.reference = e.mob_ref->text;
      }
      if (e.mob_kind && !e.mob_ref) ent.mobility = mob;

      auto r = add_entity(m, std::move(ent));
      if (!r) {
        const Error& err = r.error();
        const Token* t = &e.id;
        std::string code = "E-SEMANTIC";
        switch (err.code) {
          case ErrorCode::DuplicateId: code = "E-DUP-ID"; break;
          case ErrorCode::UserInVirtualWorld: code = "E-USER-WORLD"; t = &*e.world; break;
          case ErrorCode::ModelInRealWorld: code = "E-MODEL-WORLD"; t = &*e.world; break;
          case ErrorCode::PlaceOnInternalModel: code = "E-MODEL-PLACE"; t = &*e.place; break;
          case ErrorCode::UnknownPlace: code = "E-UNKNOWN-PLACE"; t = &*e.place; break;
          case ErrorCode::StackOnNonObject: code = "E-STACK"; t = &*e.stack_tok; break;
          default: break;
        }
        emit(*t, code, err.message());
        continue;
      }
      if (e.nested) deferred.push_back({e.id, *e.nested, true, {}});
      if (e.mob_kind && e.mob_ref) deferred.push_back({e.id, *e.mob_ref, false, mob});
    }

    for (const Deferred& d : deferred) {
      if (!find_entity(m, d.id.text)) continue;  // its add already failed
      auto r = d.nesting ? set_nested(m, d.id.text, d.ref.text)
                         : set_mobility(m, d.id.text, d.mob);
      if (!r) {
        const Error& err = r.error();
        std::string code = "E-SEMANTIC";
        switch (err.code) {
          case ErrorCode::UnknownEntity: code = "E-UNKNOWN-ENTITY"; break;
          case ErrorCode::NestingCycle: code = "E-NEST-CYCLE"; break;
          case ErrorCode::SelfMobilityReference: code = "E-SELF-REF"; break;
          case ErrorCode::InvalidKind: code = "E-NEST-CYCLE"; break;
          default: break;
        }
        emit(d.ref, code, err.message());
      }
    }

    for (const MixedItem& g : items.groups) {
      std::vector<std::string> members;
      for (const Token& t : g.members) members.push_back(t.text);
      if (auto r = compose_mixed(m, g.id.text, std::move(members)); !r) {
        const Error& err = r.error();
        const Token* t = &g.id;
        std::string code = "E-SEMANTIC";
        for (const Token& mt : g.members)
          if (mt.text == err.subject) t = &mt;
        switch (err.code) {
          case ErrorCode::DuplicateId: code = "E-DUP-ID"; t = &g.id; break;
          case ErrorCode::UnknownEntity: code = "E-UNKNOWN-ENTITY"; break;
          case ErrorCode::MemberNotToolOrObject:
          case ErrorCode::MemberAlreadyGrouped: code = "E-MIXED-MEMBER"; break;
          case ErrorCode::TooFewMembers: code = "E-MIXED-FEW"; t = &g.id; break;
          case ErrorCode::AllSameWorld: code = "E-MIXED-WORLDS"; t = &g.id; break;
          default: break;
        }
        emit(*t, code, err.message());
      }
    }

    for (const RelItem& rel : items.relations) {
      bool ok = true;
      RelationSpec spec;
      spec.from = make_port(rel.from, ok);
      spec.to = make_port(rel.to, ok);
      spec.kind = *relation_kind_from_string(rel.kind.text);
      spec.salient = !rel.dashed;
      if (rel.channel) {
        auto c = channel_at(*rel.channel);
        if (!c) ok = false;
        spec.channel = c;
      }
      if (rel.annotation) spec.annotation = rel.annotation->text;
      if (!ok) continue;
      if (auto r = add_relation(m, spec); !r) {
        const Error& err = r.error();
        const Token* t = &rel.kw;
        std::string code = "E-SEMANTIC";
        switch (err.code) {
          case ErrorCode::UnknownEndpoint:
            code = "E-UNKNOWN-ENTITY";
            t = err.subject == rel.to.entity.text ? &rel.to.entity : &rel.from.entity;
            break;
          case ErrorCode::GroupAsEndpoint:
            code = "E-GROUP-ENDPOINT";
            t = err.subject == rel.to.entity.text ? &rel.to.entity : &rel.from.entity;
            break;
          case ErrorCode::MissingUserChannel:
            code = "E-USER-CHANNEL";
            t = err.subject == rel.to.entity.text ? &rel.to.entity : &rel.from.entity;
            break;
          case ErrorCode::ForbiddenPortChannel:
            code = "E-PORT-CHANNEL";
            t = err.subject == rel.to.entity.text ? &rel.to.entity : &rel.from.entity;
            break;
          case ErrorCode::ChannelMismatch:
            code = "E-CHANNEL-MISMATCH";
            if (rel.channel) t = &*rel.channel;
            break;
          case ErrorCode::CommunicationNotUserToUser: code = "E-COMM-ENDPOINTS"; break;
          case ErrorCode::PerceptionNotIntoUser:
            code = "E-PERCEPTION-TARGET";
            t = &rel.to.entity;
            break;
          case ErrorCode::ActionIntoUser:
            code = "E-ACTION-TARGET";
            t = &rel.to.entity;
            break;
          default: break;
        }
        emit(*t, code, err.message());
      }
    }

    for (const MergeItem& node : items.merges) {
      bool ok = true;
      std::vector<Port> inputs;
      for (const EndpointItem& ep : node.inputs) inputs.push_back(make_port(ep, ok));
      Port output = make_port(node.output, ok);
      if (!ok) continue;
      if (auto r = add_merge(m, node.id.text, std::move(inputs), output); !r) {
        const Error& err = r.error();
        const Token* t = &node.id;
        std::string code = "E-SEMANTIC";
        for (const EndpointItem& ep : node.inputs)
          if (ep.entity.text == err.subject) t = &ep.entity;
        if (node.output.entity.text == err.subject) t = &node.output.entity;
        switch (err.code) {
          case ErrorCode::DuplicateId: code = "E-DUP-ID"; t = &node.id; break;
          case ErrorCode::TooFewInputs: code = "E-MERGE-FEW"; t = &node.id; break;
          case ErrorCode::OutputNotUser: code = "E-MERGE-OUTPUT"; break;
          case ErrorCode::MissingUserChannel: code = "E-USER-CHANNEL"; break;
          case ErrorCode::UnknownEndpoint: code = "E-UNKNOWN-ENTITY"; break;
          case ErrorCode::GroupAsEndpoint: code = "E-GROUP-ENDPOINT"; break;
          case ErrorCode::ChannelMismatch: code = "E-CHANNEL-MISMATCH"; break;
          default: break;
        }
        emit(*t, code, err.message());
      }
    }
  }
};

}  // namespace

ParseResult parse(std::string_view text) {
  ParseResult result;
  Lexer lexer{text, 0, 1, 1, result.diagnostics};
  std::vector<Token> tokens = lexer.run();

  Parser parser{tokens, 0, result.diagnostics};
  std::optional<Items> items = parser.run();

  if (items) {
    Builder builder{Model{}, result.diagnostics};
    builder.build(*items);
    // The parser is the only text entry point, so anything it accepts must
    // satisfy the construction invariants wholesale.
    if (result.diagnostics.empty() ||
        std::none_of(result.diagnostics.begin(), result.diagnostics.end(),
                     [](const ParseDiagnostic& d) { return d.is_error(); })) {
      for (const Error& err : validate_invariants(builder.m))
        result.diagnostics.push_back({SourceSpan{1, 1, 1}, "E-INTERNAL", err.message()});
    }
    if (std::none_of(result.diagnostics.begin(), result.diagnostics.end(),
                     [](const ParseDiagnostic& d) { return d.is_error(); }))
      result.model = std::move(builder.m);
  }

  std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(),
                   [](const ParseDiagnostic& x, const ParseDiagnostic& y) {
                     return std::tie(x.span.line, x.span.column, x.code) <
                            std::tie(y.span.line, y.span.column, y.code);
                   });
  return result;
}

}  // namespace irvo::dsl
