#include "mediation/counterfactual.hpp"

#include <algorithm>
#include <sstream>

#include "mediation/error.hpp"

namespace mediation {

namespace {

void require_unit(const Scm& scm, const Unit& unit) {
  if (unit.values.size() != scm.exogenous().size())
    throw ValidationError("unit assigns " + std::to_string(unit.values.size()) +
                          " of " + std::to_string(scm.exogenous().size()) +
                          " exogenous variables");
  for (std::size_t i = 0; i < unit.values.size(); ++i) {
    int v = unit.values[i];
    if (v < 0 || v >= static_cast<int>(scm.exogenous()[i].labels.size()))
      throw ValidationError("unit value out of range for '" +
                            scm.exogenous()[i].name + "'");
  }
}

void require_regime(const Scm& scm, const Regime& regime) {
  for (const auto& [var, value] : regime.fixings.entries()) {
    if (var >= scm.size())
      throw ValidationError("regime fixes an unknown variable");
    if (value < 0 || value >= scm.variable(var).domain.size())
      throw ValidationError("regime value out of range for '" +
                            scm.variable(var).name + "'");
  }
}

World evaluate_unchecked(const Scm& scm, const Unit& unit,
                         const Regime& regime) {
  World world(scm.size(), 0);
  std::vector<int> inputs;
  for (std::size_t var : scm.topological_order()) {
    if (auto fixed = regime.fixings.get(var)) {
      world[var] = *fixed;
      continue;
    }
    inputs.clear();
    for (std::size_t p : scm.parents(var)) inputs.push_back(world[p]);
    world[var] = scm.respond(var, inputs, unit);
  }
  return world;
}

}  // namespace

World evaluate(const Scm& scm, const Unit& unit, const Regime& regime) {
  require_unit(scm, unit);
  require_regime(scm, regime);
  return evaluate_unchecked(scm, unit, regime);
}

int nested_outcome(const Scm& scm, const Unit& unit, std::size_t treatment,
                   int x, int x_ref, const std::vector<std::size_t>& mediators,
                   std::size_t outcome) {
  if (mediators.empty())
    throw ValidationError("mediator set must not be empty");
  for (std::size_t m : mediators) {
    if (m == outcome)
      throw ValidationError("outcome '" + scm.variable(outcome).name +
                            "' cannot be a mediator");
    if (m == treatment)
      throw ValidationError("treatment '" + scm.variable(treatment).name +
                            "' cannot be a mediator");
  }
  World reference = evaluate(scm, unit, Regime{{{treatment, x_ref}}});
  Regime nested{{{treatment, x}}};
  for (std::size_t m : mediators) nested.fixings.set(m, reference[m]);
  return evaluate(scm, unit, nested)[outcome];
}

PathSubgraph parse_subgraph(const Scm& scm, const std::string& text) {
  PathSubgraph g;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
    if (item.empty()) continue;
    auto arrow = item.find("->");
    if (arrow == std::string::npos)
      throw ValidationError("edge '" + item + "' must look like A->B");
    std::size_t p = scm.index_of(item.substr(0, arrow));
    std::size_t c = scm.index_of(item.substr(arrow + 2));
    g.edges.insert({p, c});
  }
  validate_subgraph(scm, g);
  return g;
}

PathSubgraph full_subgraph(const Scm& scm) {
  PathSubgraph g;
  for (std::size_t c = 0; c < scm.size(); ++c)
    for (std::size_t p : scm.parents(c)) g.edges.insert({p, c});
  return g;
}

void validate_subgraph(const Scm& scm, const PathSubgraph& subgraph) {
  for (const auto& [p, c] : subgraph.edges) {
    if (p >= scm.size() || c >= scm.size())
      throw ValidationError("subgraph edge refers to an unknown variable");
    const auto& parents = scm.parents(c);
    if (std::find(parents.begin(), parents.end(), p) == parents.end())
      throw ValidationError("edge " + scm.variable(p).name + "->" +
                            scm.variable(c).name +
                            " is not in the causal graph");
  }
}

PathSurgery::PathSurgery(const Scm& original, PathSubgraph subgraph,
                         std::size_t treatment, int x_ref)
    : original_(&original),
      subgraph_(std::move(subgraph)),
      treatment_(treatment),
      x_ref_(x_ref) {
  validate_subgraph(original, subgraph_);
  if (treatment >= original.size())
    throw ValidationError("unknown treatment variable");
  original.variable(treatment).domain.label(x_ref);
}

std::vector<std::size_t> PathSurgery::frozen_parents(std::size_t var) const {
  std::vector<std::size_t> out;
  for (std::size_t p : original_->parents(var))
    if (!subgraph_.contains(p, var)) out.push_back(p);
  return out;
}

World PathSurgery::evaluate(const Unit& unit, const Regime& regime) const {
  const Scm& scm = *original_;
  require_unit(scm, unit);
  require_regime(scm, regime);
  const World reference =
      evaluate_unchecked(scm, unit, Regime{{{treatment_, x_ref_}}});
  World world(scm.size(), 0);
  std::vector<int> inputs;
  for (std::size_t var : scm.topological_order()) {
    if (auto fixed = regime.fixings.get(var)) {
      world[var] = *fixed;
      continue;
    }
    inputs.clear();
    for (std::size_t p : scm.parents(var))
      inputs.push_back(subgraph_.contains(p, var) ? world[p] : reference[p]);
    world[var] = scm.respond(var, inputs, unit);
  }
  return world;
}

PathSurgery surgery(const Scm& scm, const PathSubgraph& subgraph,
                    std::size_t treatment, int x_ref) {
  return PathSurgery(scm, subgraph, treatment, x_ref);
}

const std::vector<WeightedUnit>& enumerate_units(const Scm& scm) {
  return scm.units();
}

double Distribution::at(const std::vector<int>& values) const {
  auto it = probability.find(values);
  return it == probability.end() ? 0.0 : it->second;
}

double Distribution::mass(const Assignment& event) const {
  std::vector<std::pair<std::size_t, int>> positions;
  for (const auto& [var, value] : event.entries()) {
    auto it = std::find(variables.begin(), variables.end(), var);
    if (it == variables.end())
      throw EstimandError("event variable is not part of the distribution");
    positions.emplace_back(static_cast<std::size_t>(it - variables.begin()),
                           value);
  }
  double total = 0.0;
  for (const auto& [key, p] : probability) {
    bool ok = true;
    for (const auto& [pos, value] : positions)
      if (key[pos] != value) {
        ok = false;
        break;
      }
    if (ok) total += p;
  }
  return total;
}

Distribution exact_distribution(const Scm& scm, const Regime& regime,
                                const std::vector<std::size_t>& over) {
  for (std::size_t v : over)
    if (v >= scm.size())
      throw ValidationError("distribution over an unknown variable");
  require_regime(scm, regime);
  Distribution d;
  d.variables = over;
  d.regime = regime;
  std::vector<int> key(over.size());
  for (const auto& wu : scm.units()) {
    World world = evaluate_unchecked(scm, wu.unit, regime);
    for (std::size_t k = 0; k < over.size(); ++k) key[k] = world[over[k]];
    d.probability[key] += wu.probability;
  }
  return d;
}

}  // namespace mediation
