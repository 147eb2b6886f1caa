#pragma once

#include <string>
#include <vector>

#include "irvo/model.hpp"

namespace irvo {

enum class Severity { Info, Warning, Error };

const char* to_string(Severity s);
std::optional<Severity> severity_from_string(std::string_view s);

struct Finding {
  std::string rule;  // S1..S6, R1, R2, R4, R5
  Severity severity = Severity::Info;
  std::string message;
  std::vector<std::string> nodes;  // offending entity/relation ids

  bool operator==(const Finding&) const = default;
};

struct LintReport {
  std::string model;
  std::vector<Finding> findings;  // sorted by (rule, first node, message)
  std::vector<std::string> notes;
  int errors = 0;
  int warnings = 0;
  int infos = 0;
};

// The whole catalog at once. Findings are the multiset union of the
// individual rule functions below, deterministically ordered.
LintReport check(const Model& m);

// S1 world placement, S5 group shape, S6 places on virtual entities.
std::vector<Finding> rule_worlds(const Model& m);
// S2 boundary crossing, S3 transducer direction, S4 channel compatibility.
std::vector<Finding> rule_transducers(const Model& m);
// R1 action-perception loop.
std::vector<Finding> rule_loop(const Model& m);
// R2 tool observability, with the dashed downgrade.
std::vector<Finding> rule_observability(const Model& m);
// R4 perceptual continuity across mixed-group members.
std::vector<Finding> rule_continuity(const Model& m);
// R5 WYSIWIS. Appends a scope note when it actually runs.
std::vector<Finding> rule_wysiwis(const Model& m, std::vector<std::string>* notes = nullptr);

std::string report_to_json(const LintReport& report);
Result<LintReport> report_from_json(std::string_view text);

std::string report_to_text(const LintReport& report);

}  // namespace irvo
