#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mediation/graph.hpp"

namespace mediation {

/// Ordered value labels of a finite variable plus the real number each label
/// contributes to effect differences (ordinal position unless overridden).
struct Domain {
  std::vector<std::string> labels;
  std::vector<double> codes;

  static Domain ordinal(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels.size()); }
  std::optional<int> find(std::string_view label) const;
  /// Throws ValidationError naming `variable` when the label is unknown.
  int index_of(std::string_view label, std::string_view variable) const;
  const std::string& label(int value) const { return labels.at(value); }
  double code(int value) const { return codes.at(value); }

  bool operator==(const Domain&) const = default;
};

// ---------------------------------------------------------------------------
// Raw model description, as read from a model document. Nothing here is
// checked until validate() or Scm construction.

struct ExogenousSpec {
  std::string name;
  std::vector<std::string> domain;
  /// Present for independent exogenous variables; absent in joint form.
  std::optional<std::map<std::string, double>> marginal;

  bool operator==(const ExogenousSpec&) const = default;
};

struct VariableSpec {
  std::string name;
  std::vector<std::string> domain;
  std::optional<std::map<std::string, double>> numeric_code;
  bool observable = true;
  std::vector<std::string> parents;
  std::vector<std::string> exo_parents;
  /// Comma-joined parent labels (endogenous parents first, then exogenous
  /// parents, each in declared order) to output label.
  std::map<std::string, std::string> table;

  bool operator==(const VariableSpec&) const = default;
};

struct ModelSpec {
  std::string name;
  std::vector<ExogenousSpec> exogenous;
  /// Joint table over every exogenous variable, keyed like structural
  /// tables; absent tuples carry zero mass. Mutually exclusive with
  /// per-variable marginals.
  std::optional<std::map<std::string, double>> joint;
  std::vector<VariableSpec> variables;

  bool operator==(const ModelSpec&) const = default;
};

/// One validation finding. `path` is a JSON pointer into the model document;
/// `related` optionally points at a second location (e.g. the first
/// declaration of a duplicate).
struct Violation {
  std::string path;
  std::string message;
  std::string related;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate(const ModelSpec& spec);

std::string join_key(const std::vector<std::string>& labels);

// ---------------------------------------------------------------------------
// Compiled model.

/// Full exogenous assignment, one value index per exogenous variable.
struct Unit {
  std::vector<int> values;

  auto operator<=>(const Unit&) const = default;
};

struct WeightedUnit {
  Unit unit;
  double probability = 0.0;
};

/// Full endogenous assignment, indexed like Scm::variable().
using World = std::vector<int>;

/// Partial endogenous assignment, kept sorted by variable index.
class Assignment {
 public:
  Assignment() = default;
  Assignment(std::initializer_list<std::pair<std::size_t, int>> entries);

  void set(std::size_t var, int value);
  std::optional<int> get(std::size_t var) const;
  bool contains(std::size_t var) const { return get(var).has_value(); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::size_t, int>>& entries() const {
    return entries_;
  }
  std::vector<std::size_t> variables() const;
  /// Entries of `other` override entries of this assignment.
  Assignment merged(const Assignment& other) const;
  bool matches(const World& world) const;

  auto operator<=>(const Assignment&) const = default;

 private:
  std::vector<std::pair<std::size_t, int>> entries_;
};

/// The do-set of an intervention; empty means observational.
struct Regime {
  Assignment fixings;

  static Regime observational() { return {}; }
  bool is_observational() const { return fixings.empty(); }

  auto operator<=>(const Regime&) const = default;
};

struct ExogenousVariable {
  std::string name;
  std::vector<std::string> labels;
};

struct Variable {
  std::string name;
  Domain domain;
  bool observable = true;
  std::vector<std::size_t> parents;
  std::vector<std::size_t> exo_parents;
  /// Outputs over the mixed-radix product of parent domains; the first
  /// endogenous parent varies slowest.
  std::vector<int> table;
};

/// Names and domains of the endogenous variables; all a dataset needs.
struct Schema {
  std::vector<std::string> names;
  std::vector<Domain> domains;
  std::vector<bool> observable;

  std::size_t size() const { return names.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ValidationError for unknown names.
  std::size_t index_of(std::string_view name) const;
};

inline constexpr std::size_t kUnitEnumerationCap = 10'000'000;

/// Finite-domain structural causal model. Immutable once built.
class Scm {
 public:
  /// Validates and compiles; throws ValidationError carrying every
  /// violation, CapacityError when the exogenous support exceeds
  /// kUnitEnumerationCap.
  explicit Scm(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }

  std::size_t size() const { return variables_.size(); }
  const Variable& variable(std::size_t i) const { return variables_.at(i); }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  const std::vector<ExogenousVariable>& exogenous() const { return exogenous_; }
  const std::vector<std::size_t>& topological_order() const { return order_; }
  const Schema& schema() const { return schema_; }

  /// Graph over exogenous blocks and endogenous variables. Exogenous
  /// variables whose joint does not factorize share one block node named by
  /// joining member names with "__".
  const CausalGraph& graph() const { return graph_; }
  bool markovian() const { return markovian_; }
  const std::vector<std::vector<std::size_t>>& exogenous_blocks() const {
    return blocks_;
  }

  /// Positive-probability exogenous tuples in lexicographic order.
  const std::vector<WeightedUnit>& units() const { return units_; }

  /// f_i applied to explicit parent values (aligned with variable(i).parents).
  int respond(std::size_t var, std::span<const int> parent_values,
              const Unit& unit) const;

  /// Endogenous parents of `var` by index.
  const std::vector<std::size_t>& parents(std::size_t var) const {
    return variables_.at(var).parents;
  }

 private:
  ModelSpec spec_;
  std::vector<ExogenousVariable> exogenous_;
  std::vector<Variable> variables_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::size_t> order_;
  Schema schema_;
  CausalGraph graph_;
  bool markovian_ = false;
  std::vector<std::vector<std::size_t>> blocks_;
  std::vector<WeightedUnit> units_;
};

/// Builds a regime from name/label pairs, validating both.
Regime make_regime(const Scm& scm,
                   const std::vector<std::pair<std::string, std::string>>& fixings);
Assignment make_assignment(
    const Scm& scm,
    const std::vector<std::pair<std::string, std::string>>& values);

std::string to_string(const Scm& scm, const Assignment& assignment);
std::string to_string(const Scm& scm, const Regime& regime);

}  // namespace mediation
