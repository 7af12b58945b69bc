#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mediation/counterfactual.hpp"
#include "mediation/model.hpp"

namespace mediation {

/// Maps an outcome value to a real number: the domain's numeric code, or an
/// indicator of one target value (probability-scale effects).
struct Outcome {
  std::size_t variable = 0;
  std::optional<int> indicator;

  double value(const Scm& scm, const World& world) const;
};

/// Parents of the outcome except the treatment; the default mediator set.
std::vector<std::size_t> default_mediators(const Scm& scm,
                                           std::size_t treatment,
                                           std::size_t outcome);

// Effects on the difference scale. Unit-level versions evaluate one unit;
// averages weight every enumerated unit by its probability and sum in
// enumeration order.

double cde_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
                int x_ref, const Assignment& setting, const Outcome& outcome);
double cde_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
               const Assignment& setting, const Outcome& outcome);

double nde_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
                int x_ref, const std::vector<std::size_t>& mediators,
                const Outcome& outcome);
double nde_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
               const std::vector<std::size_t>& mediators,
               const Outcome& outcome);

double nie_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
                int x_ref, const std::vector<std::size_t>& mediators,
                const Outcome& outcome);
double nie_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
               const std::vector<std::size_t>& mediators,
               const Outcome& outcome);

double te_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
               int x_ref, const Outcome& outcome);
double te_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
              const Outcome& outcome);

/// Total effect of x (against x_ref) in the path-surgered model.
double pse_unit(const Scm& scm, const PathSubgraph& subgraph, const Unit& unit,
                std::size_t treatment, int x, int x_ref,
                const Outcome& outcome);
double pse_avg(const Scm& scm, const PathSubgraph& subgraph,
               std::size_t treatment, int x, int x_ref, const Outcome& outcome);

enum class EffectPresence { controlled_direct, natural_direct, indirect };

struct EffectWitness {
  int x = 0;
  int x_ref = 0;
  /// Mediator setting; only filled for the controlled kind.
  Assignment setting;
};

/// Existential search over (x_ref, x) pairs in declared domain order, and
/// over settings of every parent of Y except X for the controlled kind.
std::optional<EffectWitness> has_effect(const Scm& scm, EffectPresence kind,
                                        const Unit& unit,
                                        std::size_t treatment,
                                        std::size_t outcome);

// ---------------------------------------------------------------------------
// Name-level query surface used by the CLI.

enum class EffectKind { cde, nde, nie, te, pse };

std::string to_string(EffectKind kind);
EffectKind parse_effect_kind(const std::string& text);

struct EffectQuery {
  EffectKind kind = EffectKind::te;
  std::string treatment;
  std::string x, x_ref;
  std::string outcome;
  /// Optional label: report effects on the indicator of this outcome value.
  std::optional<std::string> outcome_indicator;
  std::optional<std::vector<std::string>> mediators;
  std::vector<std::pair<std::string, std::string>> setting;
  std::optional<std::string> edges;
};

struct UnitValue {
  Unit unit;
  double probability = 0.0;
  double value = 0.0;
};

struct EffectReport {
  EffectQuery query;
  double value = 0.0;
  std::string method = "ground-truth enumeration";
  std::vector<std::string> mediators;
  /// True when the mediator set differs from the default parent set.
  bool custom_mediators = false;
  std::vector<UnitValue> per_unit;
  /// For TE: nie(x,x*), nde(x*,x), nde(x,x*), nie(x*,x).
  std::optional<std::array<double, 4>> decomposition;
};

EffectReport compute_effect(const Scm& scm, const EffectQuery& query,
                            bool per_unit = false);
/// The query's unit-level effect for one exogenous assignment.
double compute_unit_effect(const Scm& scm, const EffectQuery& query,
                           const Unit& unit);

}  // namespace mediation
