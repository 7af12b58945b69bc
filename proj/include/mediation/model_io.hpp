#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mediation/error.hpp"
#include "mediation/model.hpp"

namespace mediation {

struct SourceLocation {
  std::size_t line = 1;
  std::size_t column = 1;
};

/// JSON pointer to the location of the value it names.
class SourceMap {
 public:
  /// Scans JSON text that is already known to be well formed. Duplicate
  /// object keys are collected rather than rejected.
  static SourceMap build(std::string_view text);

  std::optional<SourceLocation> find(const std::string& pointer) const;
  /// Location of the pointer or of its nearest mapped ancestor.
  SourceLocation locate(const std::string& pointer) const;

  struct Duplicate {
    std::string pointer;
    SourceLocation first, second;
  };
  const std::vector<Duplicate>& duplicates() const { return duplicates_; }

 private:
  std::map<std::string, SourceLocation> locations_;
  std::vector<Duplicate> duplicates_;
};

struct Diagnostic {
  SourceLocation location;
  std::string pointer;
  std::string message;
  std::optional<SourceLocation> related;

  /// "line:col: message", plus the related location when there is one.
  std::string render() const;
};

/// Syntax, structure and semantic errors of one model document.
class ModelError : public ValidationError {
 public:
  explicit ModelError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

struct ModelDocument {
  std::string text;
  ModelSpec spec;
  std::shared_ptr<const Scm> scm;
  SourceMap source_map;
};

/// Parses and validates a model document. Throws ModelError carrying every
/// finding with its location; CapacityError for oversized supports.
ModelDocument parse_model(std::string_view text);

/// Canonical form: fixed key order, two-space indent, trailing newline.
std::string print_model(const ModelSpec& spec);

}  // namespace mediation
