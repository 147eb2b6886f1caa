#include <doctest.h>

#include <algorithm>

#include "irvo/dsl.hpp"
#include "irvo/taskmap.hpp"
#include "support/gen.hpp"
#include "support/proc.hpp"

using namespace irvo;

namespace {

Model parse_ok(const std::string& text) {
  auto r = dsl::parse(text);
  REQUIRE_MESSAGE(r.ok(), text);
  return *r.model;
}

Model merged_ok(const std::vector<Model>& models) {
  auto r = merge_models(models);
  REQUIRE(r.ok());
  return r.value().model;
}

Error merged_err(const std::vector<Model>& models) {
  auto r = merge_models(models);
  REQUIRE_FALSE(r.ok());
  return r.error();
}

// The shared skeleton both conflict halves build on.
Model half(const std::string& extra) {
  return parse_ok("model \"half\" {\n  user u\n" + extra + "}");
}

TreeFile corpus_tree() {
  std::string dir = proc::corpus("tasks");
  auto loaded = load_tree(proc::read_file(dir + "/tree.json"), dir);
  REQUIRE(loaded.ok());
  return loaded.value();
}

}  // namespace

TEST_CASE("merging respects entity attributes") {
  SUBCASE("kind") {
    Error e = merged_err({half("  tool pen real\n"), half("  object pen real\n")});
    CHECK(e.code == ErrorCode::AttributeConflict);
    CHECK(e.subject == "pen");
    CHECK(e.detail == "kind");
  }
  SUBCASE("world") {
    Error e = merged_err({half("  tool pen real\n"), half("  tool pen virtual\n")});
    CHECK(e.code == ErrorCode::AttributeConflict);
    CHECK(e.detail == "world");
  }
  SUBCASE("channel") {
    Error e =
        merged_err({half("  sensor cam channel V\n"), half("  sensor cam channel A\n")});
    CHECK(e.detail == "channel");
  }
  SUBCASE("place") {
    Error e = merged_err({half("  place p\n  place q\n  tool pen real @p\n"),
                          half("  place p\n  place q\n  tool pen real @q\n")});
    CHECK(e.detail == "place");
  }
  SUBCASE("nesting") {
    Error e = merged_err(
        {half("  object desk real\n  object box real\n  object pen real in desk\n"),
         half("  object desk real\n  object box real\n  object pen real in box\n")});
    CHECK(e.detail == "nested_in");
  }
  SUBCASE("mobility disagreement") {
    Error e = merged_err({half("  tool pen real mobility free\n"),
                          half("  tool pen real mobility pinned\n")});
    CHECK(e.detail == "mobility");
  }
  SUBCASE("unspecified mobility adopts the specified one") {
    Model m = merged_ok({half("  tool pen real\n"), half("  tool pen real mobility free\n")});
    CHECK(m.entities.at("pen").mobility.kind == MobilityKind::Mobile);
  }
  SUBCASE("absent attributes fill in") {
    Model m = merged_ok({half("  place p\n  tool pen real\n"),
                         half("  place p\n  tool pen real @p\n")});
    CHECK(m.entities.at("pen").place == "p");
  }
}

TEST_CASE("merging respects boundaries and intent") {
  Error e = merged_err(
      {half("  place a\n  place b\n  boundary a b opaque\n"),
       half("  place a\n  place b\n  boundary a b audio\n")});
  CHECK(e.code == ErrorCode::AttributeConflict);
  CHECK(e.subject == "a/b");
  CHECK(e.detail == "boundary");

  Error i = merged_err({parse_ok("model \"x\" { user u }"),
                        parse_ok("model \"y\" { intent perception user u }")});
  CHECK(i.code == ErrorCode::IncompatibleIntent);

  CHECK(merged_err({}).code == ErrorCode::EmptyInput);
}

TEST_CASE("merged relations deduplicate and renumber") {
  Model a = parse_ok(
      "model \"a\" {\n"
      "  user u\n"
      "  tool pen real\n"
      "  object page real\n"
      "  rel u.KH -> pen action\n"
      "  rel pen -> page action dashed \"writes\"\n"
      "}");
  Model b = parse_ok(
      "model \"b\" {\n"
      "  user u\n"
      "  tool pen real\n"
      "  object page real\n"
      "  rel pen -> page action \"annotates\"\n"
      "  rel page -> u.V perception\n"
      "}");
  auto r = merge_models({a, b});
  REQUIRE(r.ok());
  const Model& m = r.value().model;
  REQUIRE(m.relations.size() == 3);
  for (size_t i = 0; i < m.relations.size(); ++i)
    CHECK(m.relations[i].id == "r" + std::to_string(i + 1));

  const Relation* shared = nullptr;
  for (const Relation& rel : m.relations)
    if (rel.from.entity == "pen" && rel.to.entity == "page") shared = &rel;
  REQUIRE(shared);
  CHECK(shared->salient);                      // dashed in a, salient in b
  CHECK(shared->annotation == "annotates");    // lexicographic minimum wins
  REQUIRE(r.value().notes.size() == 1);
  CHECK(r.value().notes[0] ==
        "'pen -> page' is dashed in one diagram and salient in another; kept salient");

  CHECK(m.name == "a");  // first input names the union

  // Distinct ports are distinct relations, not duplicates.
  Model c = parse_ok("model \"c\" { user u tool pen real rel u.KH -> pen action }");
  Model d = parse_ok("model \"d\" { user u tool pen real rel u.V -> pen action }");
  CHECK(merged_ok({c, d}).relations.size() == 2);
}

TEST_CASE("merged groups and merge nodes unite by id") {
  Model a = parse_ok(
      "model \"a\" {\n"
      "  user u\n"
      "  object page real\n"
      "  object scan virtual\n"
      "  mixed g { page, scan }\n"
      "  rel page -> u.V perception\n"
      "  rel scan -> u.V perception\n"
      "  merge fuse { page, scan } -> u.V\n"
      "}");
  SUBCASE("member union") {
    Model b = parse_ok(
        "model \"b\" {\n"
        "  object page real\n"
        "  object shadow virtual\n"
        "  mixed g { page, shadow }\n"
        "}");
    Model m = merged_ok({a, b});
    CHECK(m.entities.at("g").members ==
          std::vector<std::string>{"page", "scan", "shadow"});
  }
  SUBCASE("input union keeps sorted order") {
    Model b = parse_ok(
        "model \"b\" {\n"
        "  user u\n"
        "  object art real\n"
        "  object blot virtual\n"
        "  rel art -> u.V perception\n"
        "  rel blot -> u.V perception\n"
        "  merge fuse { art, blot } -> u.V\n"
        "}");
    Model m = merged_ok({a, b});
    REQUIRE(m.merges.size() == 1);
    REQUIRE(m.merges[0].inputs.size() == 4);
    CHECK(m.merges[0].inputs[0].entity == "art");
    CHECK(m.merges[0].inputs[3].entity == "scan");
  }
  SUBCASE("merge output conflict") {
    Model b = parse_ok(
        "model \"b\" {\n"
        "  user u\n"
        "  object art real\n"
        "  object blot virtual\n"
        "  rel art -> u.A perception\n"
        "  rel blot -> u.A perception\n"
        "  merge fuse { art, blot } -> u.A\n"
        "}");
    Error e = merged_err({a, b});
    CHECK(e.subject == "fuse");
    CHECK(e.detail == "merge output");
  }
  SUBCASE("one member in two groups") {
    Model b = parse_ok(
        "model \"b\" {\n"
        "  object page real\n"
        "  object ghost virtual\n"
        "  mixed h { ghost, page }\n"
        "}");
    Error e = merged_err({a, b});
    CHECK(e.subject == "page");
    CHECK(e.detail == "group");
  }
}

TEST_CASE("a union of healthy halves can breach global invariants") {
  Model a = half("  object desk real\n  object box real in desk\n");
  Model b = half("  object desk real in box\n  object box real\n");
  Error e = merged_err({a, b});
  CHECK(e.code == ErrorCode::AttributeConflict);
}

TEST_CASE("merge algebra on sliced families") {
  testgen::Rng rng(4242);
  int families = 0;
  while (families < 40) {
    Model base = testgen::random_model(rng);
    Model a = testgen::slice(rng, base);
    Model b = testgen::slice(rng, base);
    Model c = testgen::slice(rng, base);
    auto ab = merge_models({a, b});
    if (!ab.ok()) continue;  // slices share a base, but damage can still clash
    auto ba = merge_models({b, a});
    REQUIRE(ba.ok());
    CHECK(structural_equal(ab.value().model, ba.value().model));

    auto aa = merge_models({a, a});
    REQUIRE(aa.ok());
    CHECK(structural_equal(aa.value().model, a));

    auto ab_c = merge_models({ab.value().model, c});
    auto bc = merge_models({b, c});
    if (ab_c.ok() && bc.ok()) {
      auto a_bc = merge_models({a, bc.value().model});
      REQUIRE(a_bc.ok());
      CHECK(structural_equal(ab_c.value().model, a_bc.value().model));
    }
    ++families;
  }
}

TEST_CASE("linking guards the subtree") {
  TaskTree tree;
  tree.root = "root";
  tree.nodes["root"] = {"root", "root", std::nullopt, {"t1", "t2"}};
  tree.nodes["t1"] = {"t1", "t1", std::nullopt, {"t11", "t12"}};
  tree.nodes["t11"] = {"t11", "t11", std::nullopt, {}};
  tree.nodes["t12"] = {"t12", "t12", std::nullopt, {}};
  tree.nodes["t2"] = {"t2", "t2", std::nullopt, {}};
  Model m = parse_ok("model \"m\" { user u }");

  LinkMap links;
  CHECK(link(tree, links, "nowhere", m).error().code == ErrorCode::UnknownTask);

  REQUIRE(link(tree, links, "t11", m).ok());
  CHECK(link(tree, links, "t11", m).ok());  // re-linking the same task overwrites
  CHECK(link(tree, links, "t1", m).error().code == ErrorCode::ConflictingDescendantLink);
  CHECK(link(tree, links, "root", m).error().code == ErrorCode::ConflictingDescendantLink);

  LinkMap above;
  REQUIRE(link(tree, above, "t1", m).ok());
  CHECK(link(tree, above, "t11", m).error().code == ErrorCode::ConflictingDescendantLink);
  CHECK(link(tree, above, "t2", m).ok());
}

TEST_CASE("synthesis covers every inner task") {
  TreeFile tf = corpus_tree();
  auto models = synthesize(tf.tree, tf.links);
  REQUIRE(models.ok());
  CHECK(models.value().size() == 8);  // five leaves, t1, t2, root
  for (const auto& [task, m] : models.value()) CHECK(m.name == task);

  const Model& root = models.value().at("root");
  for (const char* id : {"T1", "T2", "T3", "O1", "O2", "O3", "u1"})
    CHECK(root.entities.count(id) == 1);

  LinkMap missing = tf.links;
  missing.erase("t12");
  auto broken = synthesize(tf.tree, missing);
  REQUIRE_FALSE(broken.ok());
  CHECK(broken.error().code == ErrorCode::UncoveredLeaf);
  CHECK(broken.error().subject == "t12");
}

TEST_CASE("factoring promotes equal sibling links") {
  TreeFile tf = corpus_tree();
  auto before = synthesize(tf.tree, tf.links);
  REQUIRE(before.ok());

  LinkMap factored = factor_links(tf.tree, tf.links);
  std::vector<std::string> keys;
  for (const auto& [task, m] : factored) keys.push_back(task);
  CHECK(keys == std::vector<std::string>{"t11", "t12", "t13", "t2"});

  auto after = synthesize(tf.tree, factored);
  REQUIRE(after.ok());
  CHECK(structural_equal(before.value().at("root"), after.value().at("root")));
  CHECK(structural_equal(before.value().at("t2"), after.value().at("t2")));
}

TEST_CASE("odd configurations flag single-task clusters") {
  TreeFile tf = corpus_tree();
  LinkMap factored = factor_links(tf.tree, tf.links);
  auto models = synthesize(tf.tree, factored);
  REQUIRE(models.ok());

  std::vector<std::pair<std::string, Model>> leaves;
  for (const auto& [task, m] : factored) leaves.push_back({task, m});

  auto odd = odd_configurations(models.value().at("root"), leaves);
  REQUIRE(odd.size() == 1);
  CHECK(odd[0].rule == "ODD");
  CHECK(odd[0].severity == Severity::Info);
  CHECK(odd[0].message == "isolated interaction cluster (O3, T3) appears only in task 't2'");
  CHECK(odd[0].nodes == std::vector<std::string>{"O3", "T3"});

  SUBCASE("a cluster in two tasks is not isolated") {
    leaves.push_back({"extra", leaves.back().second});
    CHECK(odd_configurations(models.value().at("root"), leaves).empty());
  }
  SUBCASE("one cluster alone is not isolated either") {
    Model lonely = parse_ok(
        "model \"lonely\" { user u tool T real object O real rel T -> O action }");
    CHECK(odd_configurations(lonely, {{"only", lonely}}).empty());
  }
}

TEST_CASE("tree files load and validate") {
  std::string dir = proc::corpus("tasks");

  SUBCASE("rejects a duplicated task id") {
    auto r = load_tree(R"({"schema":"irvo-tree/1","tree":{"id":"a","children":[
        {"id":"b"},{"id":"b"}]}})",
                       dir);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().code == ErrorCode::DuplicateId);
  }
  SUBCASE("rejects a dangling model path") {
    auto r = load_tree(R"({"schema":"irvo-tree/1","tree":{"id":"a","link":"missing.irvo"}})",
                       dir);
    REQUIRE_FALSE(r.ok());
    CHECK(r.error().code == ErrorCode::UnknownModelRef);
  }
  SUBCASE("rejects the wrong schema or shape") {
    CHECK_FALSE(load_tree(R"({"schema":"irvo-tree/2","tree":{"id":"a"}})", dir).ok());
    CHECK_FALSE(load_tree("[1,2]", dir).ok());
    CHECK_FALSE(load_tree("<xml/>", dir).ok());
    CHECK_FALSE(load_tree(R"({"schema":"irvo-tree/1"})", dir).ok());
    CHECK_FALSE(load_tree(R"({"schema":"irvo-tree/1","tree":{"id":5}})", dir).ok());
    auto bad_link =
        load_tree(R"({"schema":"irvo-tree/1","tree":{"id":"a","link":7}})", dir);
    REQUIRE_FALSE(bad_link.ok());
    CHECK(bad_link.error().code == ErrorCode::UnknownModelRef);
  }
  SUBCASE("accepts an inline model object") {
    Model m = parse_ok("model \"inline\" { user u object o real }");
    std::string doc = std::string(R"({"schema":"irvo-tree/1","tree":{"id":"a","link":)") +
                      dsl::to_json(m) + "}}";
    auto r = load_tree(doc, dir);
    REQUIRE(r.ok());
    REQUIRE(r.value().links.count("a") == 1);
    CHECK(structural_equal(r.value().links.at("a"), m));
  }
  SUBCASE("the corpus tree carries names and operators") {
    TreeFile tf = corpus_tree();
    CHECK(tf.tree.root == "root");
    CHECK(tf.tree.find("root")->name == "annotate documents");
    CHECK(tf.tree.find("t1")->op == ">>");
    CHECK(tf.links.size() == 5);
  }
}

TEST_CASE("renames move every reference") {
  Model m = parse_ok(
      "model \"m\" {\n"
      "  user u\n"
      "  tool pen real mobility u/free\n"
      "  object page real\n"
      "  object tray real\n"
      "  object scan virtual in tray\n"
      "  mixed g { page, scan }\n"
      "  rel pen -> page action\n"
      "  rel page -> u.V perception\n"
      "  rel scan -> u.V perception\n"
      "  merge fuse { page, scan } -> u.V\n"
      "}");
  auto r = apply_renames(m, {{"page", "sheet"}, {"u", "ursula"}});
  REQUIRE(r.ok());
  CHECK(m.entities.count("sheet") == 1);
  CHECK(m.entities.count("page") == 0);
  CHECK(m.entities.at("g").members == std::vector<std::string>{"scan", "sheet"});
  CHECK(m.entities.at("scan").nested_in == "tray");
  CHECK(m.entities.at("pen").mobility.reference == "ursula");
  CHECK(m.relations[0].to.entity == "sheet");
  CHECK(m.relations[1].to.entity == "ursula");
  CHECK(m.merges[0].inputs == std::vector<Port>{{"scan", std::nullopt}, {"sheet", std::nullopt}});
  CHECK(m.merges[0].output.entity == "ursula");
  CHECK(validate_invariants(m).empty());

  Model clash = parse_ok("model \"m\" { object a real object b real }");
  auto bad = apply_renames(clash, {{"a", "b"}});
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.error().code == ErrorCode::DuplicateId);

  Model swap = parse_ok("model \"m\" { object a real object b virtual mixed g { a, b } }");
  REQUIRE(apply_renames(swap, {{"a", "b"}, {"b", "a"}}).ok());
  CHECK(swap.entities.at("g").members == std::vector<std::string>{"a", "b"});
}
