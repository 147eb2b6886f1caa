#pragma once

#include <string>
#include <string_view>

#include "irvo/model.hpp"

namespace irvo::dsl {

// 1-based position of an offending token.
struct SourceSpan {
  int line = 1;
  int column = 1;
  int length = 0;

  bool operator==(const SourceSpan&) const = default;
};

// Codes are stable identifiers: E-* fails the parse, W-* does not.
struct ParseDiagnostic {
  SourceSpan span;
  std::string code;
  std::string message;

  bool is_error() const { return code.rfind("E-", 0) == 0; }
};

// A model is produced exactly when no E-* diagnostic was emitted; warnings
// may accompany a successful parse.
struct ParseResult {
  std::optional<Model> model;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
  int error_count() const {
    int n = 0;
    for (const auto& d : diagnostics) n += d.is_error();
    return n;
  }
};

ParseResult parse(std::string_view text);

// Canonical text form: fixed clause order, entities sorted by kind then
// id, relations in insertion order, two-space indent. A fixed point of
// parse followed by serialize.
std::string serialize(const Model& m);

// JSON projection ("irvo-json/1") and its inverse.
std::string to_json(const Model& m);
Result<Model> model_from_json(std::string_view text);

}  // namespace irvo::dsl
