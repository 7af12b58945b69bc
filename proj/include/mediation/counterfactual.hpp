#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mediation/model.hpp"

namespace mediation {

/// Endogenous values of unit `unit` under `regime`, in topological order.
/// Fixed variables take their regime value.
World evaluate(const Scm& scm, const Unit& unit, const Regime& regime);

/// Y_{x, Z_{x_ref}(u)}(u): the outcome with the treatment at x and every
/// mediator frozen at the value it attains under the reference treatment.
int nested_outcome(const Scm& scm, const Unit& unit, std::size_t treatment,
                   int x, int x_ref, const std::vector<std::size_t>& mediators,
                   std::size_t outcome);

/// Edges selected for effect transmission, by endogenous variable index.
struct PathSubgraph {
  std::set<std::pair<std::size_t, std::size_t>> edges;

  bool contains(std::size_t parent, std::size_t child) const {
    return edges.count({parent, child}) > 0;
  }
};

/// Parses "A->B,C->D" against the model; every edge must exist.
PathSubgraph parse_subgraph(const Scm& scm, const std::string& text);
PathSubgraph full_subgraph(const Scm& scm);
/// Checks that every selected edge exists in the induced graph.
void validate_subgraph(const Scm& scm, const PathSubgraph& subgraph);

/// Modified model in which each equation reads parents without a selected
/// link to the child at their reference-world values. The reference world
/// is recomputed per unit from the original model, which must outlive this
/// object.
class PathSurgery {
 public:
  PathSurgery(const Scm& original, PathSubgraph subgraph,
              std::size_t treatment, int x_ref);

  const Scm& original() const { return *original_; }
  const PathSubgraph& subgraph() const { return subgraph_; }

  /// Parents of `var` that are read at their reference-world value.
  std::vector<std::size_t> frozen_parents(std::size_t var) const;

  World evaluate(const Unit& unit, const Regime& regime) const;

 private:
  const Scm* original_;
  PathSubgraph subgraph_;
  std::size_t treatment_;
  int x_ref_;
};

PathSurgery surgery(const Scm& scm, const PathSubgraph& subgraph,
                    std::size_t treatment, int x_ref);

/// Positive-probability units in lexicographic order of the exogenous
/// variables and their domains.
const std::vector<WeightedUnit>& enumerate_units(const Scm& scm);

/// Joint distribution of a set of variables under one regime.
struct Distribution {
  std::vector<std::size_t> variables;
  std::map<std::vector<int>, double> probability;
  Regime regime;

  /// Mass of a full assignment to `variables`, zero when absent.
  double at(const std::vector<int>& values) const;
  /// Total mass of the assignments consistent with `event` (whose variables
  /// must all be among `variables`).
  double mass(const Assignment& event) const;
};

/// Marginal of `over` under `regime` by full unit enumeration.
Distribution exact_distribution(const Scm& scm, const Regime& regime,
                                const std::vector<std::size_t>& over);

}  // namespace mediation
