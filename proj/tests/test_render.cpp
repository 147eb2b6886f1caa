#include <doctest.h>

#include "irvo/dsl.hpp"
#include "irvo/render.hpp"
#include "support/proc.hpp"

using namespace irvo;

namespace {

Model parse_ok(const std::string& text) {
  auto r = dsl::parse(text);
  REQUIRE_MESSAGE(r.ok(), text);
  return *r.model;
}

Model corpus_model(const std::string& name) {
  auto r = dsl::parse(proc::read_file(proc::corpus(name)));
  REQUIRE(r.ok());
  return *r.model;
}

bool has(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("dot output is framed and repeatable") {
  Model m = corpus_model("doubledesk.irvo");
  std::string dot = to_dot(m);
  CHECK(dot.rfind("digraph \"double-digital-desk\" {", 0) == 0);
  CHECK(dot.back() == '\n');
  CHECK(has(dot, "rankdir=LR;"));
  CHECK(dot == to_dot(m));
  CHECK(dot == to_dot(corpus_model("doubledesk.irvo")));
}

TEST_CASE("kinds get their shapes") {
  Model m = parse_ok(
      "model \"shapes\" {\n"
      "  user u\n"
      "  tool pen real\n"
      "  object page real stack\n"
      "  object ghost virtual\n"
      "  internal app\n"
      "  sensor cam channel V\n"
      "  effector horn channel A\n"
      "  mixed g { ghost, page }\n"
      "}");
  std::string dot = to_dot(m);
  CHECK(has(dot, "\"u\" [label=\"u [U]\", shape=circle];"));
  CHECK(has(dot, "\"pen\" [label=\"pen [Tr]\", shape=box];"));
  CHECK(has(dot, "\"page\" [label=\"page [Or]\", shape=box, style=rounded, peripheries=2];"));
  CHECK(has(dot, "\"ghost\" [label=\"ghost [Ov]\", shape=box, style=rounded];"));
  CHECK(has(dot, "\"app\" [label=\"app [M]\", shape=component];"));
  CHECK(has(dot, "\"cam\" [label=\"cam [S:V]\", shape=trapezium];"));
  CHECK(has(dot, "\"horn\" [label=\"horn [E:A]\", shape=invtrapezium];"));
  CHECK(has(dot, "\"g\" [label=\"g [mixed]\", shape=box, style=dashed];"));
  CHECK(has(dot, "\"g\" -> \"ghost\" [style=dotted, arrowhead=none];"));
  CHECK(has(dot, "\"g\" -> \"page\" [style=dotted, arrowhead=none];"));
}

TEST_CASE("mobility glyphs and nesting defaults appear in labels") {
  Model m = parse_ok(
      "model \"mob\" {\n"
      "  user u\n"
      "  tool pen real mobility u/free\n"
      "  object desk real mobility pinned\n"
      "  object pad real mobility fixed\n"
      "  object book real in desk\n"
      "}");
  std::string dot = to_dot(m);
  CHECK(has(dot, "\"pen\" [label=\"pen [Tr] ↔ u\""));
  CHECK(has(dot, "\"desk\" [label=\"desk [Or] ⊗\""));
  CHECK(has(dot, "\"pad\" [label=\"pad [Or] ×\""));
  // Nested and unspecified: task-fixed relative to the embedder.
  CHECK(has(dot, "\"book\" [label=\"book [Or] × desk\""));
  CHECK(has(dot, "\"book\" -> \"desk\" [style=dotted, arrowhead=none, label=\"in\"];"));
}

TEST_CASE("worlds and places cluster") {
  Model m = corpus_model("doubledesk.irvo");
  std::string dot = to_dot(m);
  CHECK(has(dot, "subgraph cluster_real {"));
  CHECK(has(dot, "subgraph cluster_virtual {"));
  CHECK(has(dot, "subgraph cluster_transducers {"));
  CHECK(has(dot, "subgraph \"cluster_place_desk_a\" {"));
  CHECK(has(dot, "subgraph \"cluster_place_desk_b\" {"));
  CHECK(has(dot, "// boundary desk_a -- desk_b opaque"));

  RenderOptions flat;
  flat.cluster_places = false;
  CHECK_FALSE(has(to_dot(m, flat), "cluster_place_"));

  Model mirror = parse_ok(
      "model \"m\" { place a place b boundary a b mirror viewer a user u @a }");
  CHECK(has(to_dot(mirror), "// boundary a -- b mirror viewer=a"));
}

TEST_CASE("relations draw with kind arrowheads and channel labels") {
  Model m = corpus_model("wimp_editor.irvo");
  std::string dot = to_dot(m);
  CHECK(has(dot, "\"max\" -> \"mouse\" [arrowhead=normal, label=\"KH\"];"));
  CHECK(has(dot, "\"screen\" -> \"max\" [arrowhead=vee, label=\"V\"];"));
  CHECK(has(dot, "\"mouse\" -> \"max\" [arrowhead=vee, style=dashed, label=\"KH\"];"));

  RenderOptions hide;
  hide.show_dashed = false;
  std::string trimmed = to_dot(m, hide);
  CHECK_FALSE(has(trimmed, "style=dashed, label=\"KH\""));
  CHECK(has(trimmed, "\"screen\" -> \"max\""));

  Model chat = parse_ok(
      "model \"m\" { user a user b rel a.A -> b.A communication \"status\" }");
  CHECK(has(to_dot(chat), "\"a\" -> \"b\" [arrowhead=diamond, label=\"A status\"];"));
}

TEST_CASE("merge nodes render as junctions") {
  Model m = corpus_model("doubledesk.irvo");
  std::string dot = to_dot(m);
  CHECK(has(dot, "\"merge_view_a\" [label=\"⊕\", shape=circle"));
  CHECK(has(dot, "\"paper_a\" -> \"merge_view_a\" [arrowhead=none, label=\"V\"];"));
  CHECK(has(dot, "\"projector_a\" -> \"merge_view_a\" [arrowhead=none, label=\"V\"];"));
  CHECK(has(dot, "\"merge_view_a\" -> \"alice\" [arrowhead=vee, label=\"V\"];"));
  // The pen's feedback is not an input of the merge; it keeps its own arrow.
  CHECK(has(dot, "\"pen_a\" -> \"alice\" [arrowhead=vee, label=\"V\"];"));
}

TEST_CASE("hiding transducers joins their legs") {
  Model m = corpus_model("wimp_editor.irvo");
  RenderOptions opts;
  opts.show_transducers = false;
  std::string dot = to_dot(m, opts);
  CHECK_FALSE(has(dot, "cluster_transducers"));
  CHECK_FALSE(has(dot, "\"mouse_sensor\" [label="));
  CHECK(has(dot, "\"mouse\" -> \"pointer\" [arrowhead=normal, label=\"via mouse_sensor KH\"];"));
  CHECK(has(dot, "\"doc\" -> \"max\" [arrowhead=vee, label=\"via screen V\"];"));
  CHECK(has(dot, "\"pointer\" -> \"max\" [arrowhead=vee, label=\"via screen V\"];"));

  // A transducer with only one leg stays visible: there is nothing to join.
  Model stub = parse_ok(
      "model \"m\" { object page real sensor cam channel V rel page -> cam action }");
  std::string stub_dot = to_dot(stub, opts);
  CHECK(has(stub_dot, "\"cam\" [label="));
  CHECK(has(stub_dot, "\"page\" -> \"cam\""));
}

TEST_CASE("quotes and backslashes survive escaping") {
  Model m = parse_ok(
      "model \"the \\\"desk\\\"\" {\n"
      "  user u\n"
      "  tool pen real\n"
      "  rel u.KH -> pen action \"push \\\"hard\\\"\"\n"
      "}");
  std::string dot = to_dot(m);
  CHECK(dot.rfind("digraph \"the \\\"desk\\\"\" {", 0) == 0);
  CHECK(has(dot, "label=\"KH push \\\"hard\\\"\""));
}
