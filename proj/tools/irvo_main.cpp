#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "irvo/classify.hpp"
#include "irvo/dsl.hpp"
#include "irvo/lint.hpp"
#include "irvo/render.hpp"
#include "irvo/taskmap.hpp"

namespace {

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void print_diagnostics(const std::string& path, const irvo::dsl::ParseResult& parsed) {
  for (const auto& d : parsed.diagnostics)
    std::cerr << path << ":" << d.span.line << ":" << d.span.column << ": " << d.code << ": "
              << d.message << "\n";
}

// Parses one model file, reporting problems like a compiler would.
// Exit code 2 on any failure.
std::optional<irvo::Model> load_model(const std::string& path, int& exit_code) {
  auto text = read_file(path);
  if (!text) {
    std::cerr << path << ": cannot open file\n";
    exit_code = 2;
    return std::nullopt;
  }
  irvo::dsl::ParseResult parsed = irvo::dsl::parse(*text);
  print_diagnostics(path, parsed);
  if (!parsed.ok()) {
    exit_code = 2;
    return std::nullopt;
  }
  return std::move(*parsed.model);
}

int severity_rank(irvo::Severity s) {
  switch (s) {
    case irvo::Severity::Info: return 0;
    case irvo::Severity::Warning: return 1;
    case irvo::Severity::Error: return 2;
  }
  return 2;
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

int run_check(const std::vector<std::string>& paths, const std::string& format,
              const std::string& threshold_name) {
  auto threshold = irvo::severity_from_string(threshold_name);
  if (!threshold) {
    std::cerr << "unknown severity '" << threshold_name << "'\n";
    return 2;
  }
  int exit_code = 0;
  std::vector<irvo::LintReport> reports;
  for (const std::string& path : paths) {
    auto model = load_model(path, exit_code);
    if (!model) return 2;
    reports.push_back(irvo::check(*model));
  }
  bool tripped = false;
  for (const irvo::LintReport& report : reports)
    for (const irvo::Finding& f : report.findings)
      if (severity_rank(f.severity) >= severity_rank(*threshold)) tripped = true;

  if (format == "json") {
    if (reports.size() == 1) {
      std::cout << irvo::report_to_json(reports.front());
    } else {
      nlohmann::ordered_json all = nlohmann::ordered_json::array();
      for (const irvo::LintReport& report : reports)
        all.push_back(nlohmann::ordered_json::parse(irvo::report_to_json(report)));
      std::cout << all.dump(2) << "\n";
    }
  } else {
    for (const irvo::LintReport& report : reports) std::cout << irvo::report_to_text(report);
  }
  return tripped ? 1 : 0;
}

std::optional<std::map<std::string, std::string>> load_rename_map(const std::string& path) {
  auto text = read_file(path);
  if (!text) return std::nullopt;
  std::map<std::string, std::string> renames;
  std::istringstream in(*text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string from, to;
    if (fields >> from >> to) renames[from] = to;
  }
  return renames;
}

int run_merge(const std::string& tree_path, const std::string& out_path,
              const std::string& all_out_dir, const std::string& rename_path) {
  auto text = read_file(tree_path);
  if (!text) {
    std::cerr << tree_path << ": cannot open file\n";
    return 2;
  }
  std::string base = std::filesystem::path(tree_path).parent_path().string();
  auto loaded = irvo::load_tree(*text, base.empty() ? "." : base);
  if (!loaded) {
    std::cerr << tree_path << ": " << loaded.error().message() << "\n";
    return 2;
  }
  irvo::TaskTree tree = std::move(loaded.value().tree);
  irvo::LinkMap links = std::move(loaded.value().links);

  if (!rename_path.empty()) {
    auto renames = load_rename_map(rename_path);
    if (!renames) {
      std::cerr << rename_path << ": cannot open rename map\n";
      return 2;
    }
    for (auto& [task, model] : links)
      if (auto r = irvo::apply_renames(model, *renames); !r) {
        std::cerr << task << ": " << r.error().message() << "\n";
        return 1;
      }
  }

  links = irvo::factor_links(tree, std::move(links));
  std::vector<std::string> notes;
  auto synthesized = irvo::synthesize(tree, links, &notes);
  if (!synthesized) {
    std::cerr << tree_path << ": " << synthesized.error().message() << "\n";
    return 1;
  }
  const irvo::Model& root = synthesized.value().at(tree.root);

  bool to_stdout = out_path.empty();
  if (to_stdout) {
    std::cout << irvo::dsl::serialize(root);
  } else if (!write_text(out_path, irvo::dsl::serialize(root))) {
    std::cerr << out_path << ": cannot write\n";
    return 2;
  }
  if (!all_out_dir.empty()) {
    std::filesystem::create_directories(all_out_dir);
    for (const auto& [task, model] : synthesized.value()) {
      std::string path = (std::filesystem::path(all_out_dir) / (task + ".irvo")).string();
      if (!write_text(path, irvo::dsl::serialize(model))) {
        std::cerr << path << ": cannot write\n";
        return 2;
      }
    }
  }

  std::vector<std::pair<std::string, irvo::Model>> leaves(links.begin(), links.end());
  std::ostream& side = to_stdout ? std::cerr : std::cout;
  for (const std::string& note : notes) side << "note: " << note << "\n";
  for (const irvo::Finding& f : irvo::odd_configurations(root, leaves))
    side << "[" << f.rule << "] " << irvo::to_string(f.severity) << ": " << f.message << "\n";
  return 0;
}

int run_classify(const std::string& path, const std::string& profile_path,
                 const std::string& format) {
  irvo::DeviceProfile profile = irvo::DeviceProfile::standard();
  if (!profile_path.empty()) {
    auto text = read_file(profile_path);
    if (!text) {
      std::cerr << profile_path << ": cannot open profile\n";
      return 2;
    }
    profile = irvo::profile_from_text(*text);
  }
  int exit_code = 0;
  auto model = load_model(path, exit_code);
  if (!model) return 2;

  irvo::StyleLabel label = irvo::classify(*model, profile);
  std::vector<irvo::CaseInstance> cases = irvo::interaction_cases(*model);
  if (format == "json") {
    nlohmann::ordered_json j;
    j["label"] = irvo::to_string(label);
    j["cases"] = nlohmann::ordered_json::array();
    for (const irvo::CaseInstance& c : cases) {
      nlohmann::ordered_json jc;
      jc["case"] = irvo::case_name(c);
      jc["tool"] = c.tool;
      jc["object"] = c.object;
      jc["tool_mixed"] = c.tool_mixed;
      jc["object_mixed"] = c.object_mixed;
      j["cases"].push_back(std::move(jc));
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << irvo::to_string(label) << "\n";
    for (const irvo::CaseInstance& c : cases) {
      std::cout << "  " << irvo::case_name(c) << " " << c.tool << " -> " << c.object;
      if (c.tool_mixed) std::cout << " [tool in mixed group]";
      if (c.object_mixed) std::cout << " [object in mixed group]";
      std::cout << "\n";
    }
    if (cases.empty()) std::cout << "  (no tool-object action chains)\n";
  }
  return 0;
}

int run_render(const std::string& path, const std::string& dot_path,
               const irvo::RenderOptions& opts) {
  int exit_code = 0;
  auto model = load_model(path, exit_code);
  if (!model) return 2;
  std::string dot = irvo::to_dot(*model, opts);
  if (dot_path.empty()) {
    std::cout << dot;
    return 0;
  }
  if (!write_text(dot_path, dot)) {
    std::cerr << dot_path << ": cannot write\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model checker for instrumented mixed-reality interaction diagrams"};
  app.require_subcommand(1);

  auto* check = app.add_subcommand("check", "Lint models against the rule catalog");
  std::vector<std::string> check_paths;
  std::string check_format = "text";
  std::string threshold = "error";
  check->add_option("paths", check_paths, "Model files (.irvo)")->required();
  check->add_option("--format", check_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));
  check->add_option("--severity-threshold", threshold,
                    "Lowest severity that fails the run (error, warning, info)")
      ->check(CLI::IsMember({"error", "warning", "info"}));

  auto* merge = app.add_subcommand("merge", "Synthesize a task tree's models into one");
  std::string tree_path, out_path, all_out_dir, rename_path;
  merge->add_option("tree", tree_path, "Task tree (irvo-tree/1 JSON)")->required();
  merge->add_option("--out", out_path, "Write the root model here instead of stdout");
  merge->add_option("--all-out", all_out_dir, "Directory for every synthesized task model");
  merge->add_option("--rename", rename_path, "Identifier alias map: 'old new' per line");

  auto* classify = app.add_subcommand("classify", "Label the interaction style");
  std::string classify_path, profile_path, classify_format = "text";
  classify->add_option("path", classify_path, "Model file")->required();
  classify->add_option("--profiles", profile_path, "Device profile, one identifier per line");
  classify->add_option("--format", classify_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  auto* render = app.add_subcommand("render", "Emit DOT text");
  std::string render_path, dot_path;
  irvo::RenderOptions opts;
  bool hide_dashed = false, hide_transducers = false, no_place_clusters = false;
  render->add_option("path", render_path, "Model file")->required();
  render->add_option("--dot", dot_path, "Output file instead of stdout");
  render->add_flag("--hide-dashed", hide_dashed, "Drop dashed relations");
  render->add_flag("--hide-transducers", hide_transducers,
                   "Collapse transducers into via-edges");
  render->add_flag("--no-place-clusters", no_place_clusters, "Do not box entities by place");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (check->parsed()) return run_check(check_paths, check_format, threshold);
  if (merge->parsed()) return run_merge(tree_path, out_path, all_out_dir, rename_path);
  if (classify->parsed()) return run_classify(classify_path, profile_path, classify_format);
  if (render->parsed()) {
    opts.show_dashed = !hide_dashed;
    opts.show_transducers = !hide_transducers;
    opts.cluster_places = !no_place_clusters;
    return run_render(render_path, dot_path, opts);
  }
  return 2;
}
