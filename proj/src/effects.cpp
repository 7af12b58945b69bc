#include "mediation/effects.hpp"

#include <algorithm>
#include <functional>

#include "mediation/error.hpp"

namespace mediation {

double Outcome::value(const Scm& scm, const World& world) const {
  const int v = world.at(variable);
  if (indicator) return v == *indicator ? 1.0 : 0.0;
  return scm.variable(variable).domain.code(v);
}

std::vector<std::size_t> default_mediators(const Scm& scm,
                                           std::size_t treatment,
                                           std::size_t outcome) {
  std::vector<std::size_t> out;
  for (std::size_t p : scm.parents(outcome))
    if (p != treatment) out.push_back(p);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void require_query(const Scm& scm, std::size_t treatment, int x, int x_ref,
                   const Outcome& outcome) {
  if (treatment >= scm.size() || outcome.variable >= scm.size())
    throw ValidationError("unknown treatment or outcome variable");
  if (treatment == outcome.variable)
    throw ValidationError("treatment and outcome must differ");
  const Domain& d = scm.variable(treatment).domain;
  if (x < 0 || x >= d.size() || x_ref < 0 || x_ref >= d.size())
    throw ValidationError("treatment value out of range for '" +
                          scm.variable(treatment).name + "'");
  if (outcome.indicator &&
      (*outcome.indicator < 0 ||
       *outcome.indicator >= scm.variable(outcome.variable).domain.size()))
    throw ValidationError("indicator value out of range");
}

void require_mediators(const Scm& scm, std::size_t treatment,
                       const std::vector<std::size_t>& mediators,
                       std::size_t outcome) {
  if (mediators.empty())
    throw ValidationError("mediator set is empty: '" +
                          scm.variable(outcome).name +
                          "' has no parent besides the treatment");
  for (std::size_t m : mediators) {
    if (m >= scm.size()) throw ValidationError("unknown mediator");
    if (m == treatment || m == outcome)
      throw ValidationError("mediator set cannot contain '" +
                            scm.variable(m).name + "'");
  }
}

double average(const Scm& scm, const std::function<double(const Unit&)>& f) {
  double total = 0.0;
  for (const auto& wu : scm.units()) total += wu.probability * f(wu.unit);
  return total;
}

double outcome_under(const Scm& scm, const Unit& unit, const Regime& regime,
                     const Outcome& outcome) {
  return outcome.value(scm, evaluate(scm, unit, regime));
}

// Y with the treatment at `x_outer` and mediators at their x_inner values.
double crossed_outcome(const Scm& scm, const Unit& unit, std::size_t treatment,
                       int x_outer, int x_inner,
                       const std::vector<std::size_t>& mediators,
                       const Outcome& outcome) {
  const World inner = evaluate(scm, unit, Regime{{{treatment, x_inner}}});
  Regime regime{{{treatment, x_outer}}};
  for (std::size_t m : mediators) regime.fixings.set(m, inner[m]);
  return outcome_under(scm, unit, regime, outcome);
}

}  // namespace

double cde_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
                int x_ref, const Assignment& setting, const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  if (setting.contains(treatment) || setting.contains(outcome.variable))
    throw ValidationError(
        "controlled setting may not fix the treatment or the outcome");
  Regime treated{setting}, reference{setting};
  treated.fixings.set(treatment, x);
  reference.fixings.set(treatment, x_ref);
  return outcome_under(scm, unit, treated, outcome) -
         outcome_under(scm, unit, reference, outcome);
}

double cde_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
               const Assignment& setting, const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  return average(scm, [&](const Unit& u) {
    return cde_unit(scm, u, treatment, x, x_ref, setting, outcome);
  });
}

double nde_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
                int x_ref, const std::vector<std::size_t>& mediators,
                const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  require_mediators(scm, treatment, mediators, outcome.variable);
  return crossed_outcome(scm, unit, treatment, x, x_ref, mediators, outcome) -
         outcome_under(scm, unit, Regime{{{treatment, x_ref}}}, outcome);
}

double nde_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
               const std::vector<std::size_t>& mediators,
               const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  require_mediators(scm, treatment, mediators, outcome.variable);
  return average(scm, [&](const Unit& u) {
    return nde_unit(scm, u, treatment, x, x_ref, mediators, outcome);
  });
}

double nie_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
                int x_ref, const std::vector<std::size_t>& mediators,
                const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  require_mediators(scm, treatment, mediators, outcome.variable);
  return crossed_outcome(scm, unit, treatment, x_ref, x, mediators, outcome) -
         outcome_under(scm, unit, Regime{{{treatment, x_ref}}}, outcome);
}

double nie_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
               const std::vector<std::size_t>& mediators,
               const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  require_mediators(scm, treatment, mediators, outcome.variable);
  return average(scm, [&](const Unit& u) {
    return nie_unit(scm, u, treatment, x, x_ref, mediators, outcome);
  });
}

double te_unit(const Scm& scm, const Unit& unit, std::size_t treatment, int x,
               int x_ref, const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  return outcome_under(scm, unit, Regime{{{treatment, x}}}, outcome) -
         outcome_under(scm, unit, Regime{{{treatment, x_ref}}}, outcome);
}

double te_avg(const Scm& scm, std::size_t treatment, int x, int x_ref,
              const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  return average(scm, [&](const Unit& u) {
    return te_unit(scm, u, treatment, x, x_ref, outcome);
  });
}

namespace {

double pse_with(const PathSurgery& model, const Unit& unit,
                std::size_t treatment, int x, int x_ref,
                const Outcome& outcome) {
  const Scm& scm = model.original();
  return outcome.value(scm, model.evaluate(unit, Regime{{{treatment, x}}})) -
         outcome.value(scm, model.evaluate(unit, Regime{{{treatment, x_ref}}}));
}

}  // namespace

double pse_unit(const Scm& scm, const PathSubgraph& subgraph, const Unit& unit,
                std::size_t treatment, int x, int x_ref,
                const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  PathSurgery model = surgery(scm, subgraph, treatment, x_ref);
  return pse_with(model, unit, treatment, x, x_ref, outcome);
}

double pse_avg(const Scm& scm, const PathSubgraph& subgraph,
               std::size_t treatment, int x, int x_ref,
               const Outcome& outcome) {
  require_query(scm, treatment, x, x_ref, outcome);
  PathSurgery model = surgery(scm, subgraph, treatment, x_ref);
  return average(scm, [&](const Unit& u) {
    return pse_with(model, u, treatment, x, x_ref, outcome);
  });
}

std::optional<EffectWitness> has_effect(const Scm& scm, EffectPresence kind,
                                        const Unit& unit,
                                        std::size_t treatment,
                                        std::size_t outcome) {
  if (treatment >= scm.size() || outcome >= scm.size() || treatment == outcome)
    throw ValidationError("has_effect needs distinct known variables");
  const int n = scm.variable(treatment).domain.size();
  const auto mediators = default_mediators(scm, treatment, outcome);
  auto value_under = [&](const Regime& r) {
    return evaluate(scm, unit, r)[outcome];
  };

  for (int x_ref = 0; x_ref < n; ++x_ref)
    for (int x = 0; x < n; ++x) {
      if (x == x_ref) continue;
      switch (kind) {
        case EffectPresence::controlled_direct: {
          std::vector<int> radix;
          for (std::size_t m : mediators)
            radix.push_back(scm.variable(m).domain.size());
          std::vector<int> setting(mediators.size(), 0);
          while (true) {
            Assignment z;
            for (std::size_t k = 0; k < mediators.size(); ++k)
              z.set(mediators[k], setting[k]);
            Regime treated{z}, reference{z};
            treated.fixings.set(treatment, x);
            reference.fixings.set(treatment, x_ref);
            if (value_under(treated) != value_under(reference))
              return EffectWitness{x, x_ref, z};
            std::size_t pos = setting.size();
            bool done = true;
            while (pos > 0) {
              --pos;
              if (++setting[pos] < radix[pos]) {
                done = false;
                break;
              }
              setting[pos] = 0;
            }
            if (done) break;
          }
          break;
        }
        case EffectPresence::natural_direct:
        case EffectPresence::indirect: {
          const int outer = kind == EffectPresence::natural_direct ? x : x_ref;
          const int inner = kind == EffectPresence::natural_direct ? x_ref : x;
          const World inner_world =
              evaluate(scm, unit, Regime{{{treatment, inner}}});
          Regime crossed{{{treatment, outer}}};
          for (std::size_t m : mediators) crossed.fixings.set(m, inner_world[m]);
          if (value_under(crossed) != value_under(Regime{{{treatment, x_ref}}}))
            return EffectWitness{x, x_ref, {}};
          break;
        }
      }
    }
  return std::nullopt;
}

std::string to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::cde: return "CDE";
    case EffectKind::nde: return "NDE";
    case EffectKind::nie: return "NIE";
    case EffectKind::te: return "TE";
    case EffectKind::pse: return "PSE";
  }
  return "?";
}

EffectKind parse_effect_kind(const std::string& text) {
  std::string lower = text;
  std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
  if (lower == "cde") return EffectKind::cde;
  if (lower == "nde") return EffectKind::nde;
  if (lower == "nie") return EffectKind::nie;
  if (lower == "te") return EffectKind::te;
  if (lower == "pse") return EffectKind::pse;
  throw ValidationError("unknown effect kind '" + text + "'");
}

namespace {

// A name-level query resolved against the model, ready to evaluate units.
struct PreparedQuery {
  std::size_t x_var = 0, y_var = 0;
  int x = 0, x_ref = 0;
  Outcome outcome;
  std::vector<std::size_t> defaults, mediators;
  Assignment setting;
  std::optional<PathSubgraph> subgraph;
  EffectKind kind = EffectKind::te;

  PreparedQuery(const Scm& scm, const EffectQuery& query) : kind(query.kind) {
    x_var = scm.index_of(query.treatment);
    y_var = scm.index_of(query.outcome);
    const Domain& xd = scm.variable(x_var).domain;
    x = xd.index_of(query.x, query.treatment);
    x_ref = xd.index_of(query.x_ref, query.treatment);
    outcome = Outcome{y_var, std::nullopt};
    if (query.outcome_indicator)
      outcome.indicator = scm.variable(y_var).domain.index_of(
          *query.outcome_indicator, query.outcome);
    require_query(scm, x_var, x, x_ref, outcome);
    defaults = default_mediators(scm, x_var, y_var);
    mediators = defaults;
    if (query.mediators) {
      mediators.clear();
      for (const auto& m : *query.mediators) mediators.push_back(scm.index_of(m));
      std::sort(mediators.begin(), mediators.end());
      mediators.erase(std::unique(mediators.begin(), mediators.end()),
                      mediators.end());
    }
    switch (kind) {
      case EffectKind::cde:
        setting = make_assignment(scm, query.setting);
        if (setting.contains(x_var) || setting.contains(y_var))
          throw ValidationError(
              "controlled setting may not fix the treatment or the outcome");
        break;
      case EffectKind::nde:
      case EffectKind::nie:
        require_mediators(scm, x_var, mediators, y_var);
        break;
      case EffectKind::te:
        break;
      case EffectKind::pse:
        if (!query.edges)
          throw ValidationError("path-specific effects need an edge list");
        subgraph = parse_subgraph(scm, *query.edges);
        break;
    }
  }

  double at(const Scm& scm, const Unit& u) const {
    switch (kind) {
      case EffectKind::cde:
        return cde_unit(scm, u, x_var, x, x_ref, setting, outcome);
      case EffectKind::nde:
        return nde_unit(scm, u, x_var, x, x_ref, mediators, outcome);
      case EffectKind::nie:
        return nie_unit(scm, u, x_var, x, x_ref, mediators, outcome);
      case EffectKind::te:
        return te_unit(scm, u, x_var, x, x_ref, outcome);
      case EffectKind::pse:
        break;
    }
    return pse_unit(scm, *subgraph, u, x_var, x, x_ref, outcome);
  }
};

}  // namespace

EffectReport compute_effect(const Scm& scm, const EffectQuery& query,
                            bool per_unit) {
  const PreparedQuery q(scm, query);
  EffectReport report;
  report.query = query;
  switch (q.kind) {
    case EffectKind::cde:
      for (const auto& [var, value] : q.setting.entries())
        report.mediators.push_back(scm.variable(var).name);
      report.custom_mediators = q.setting.variables() != q.defaults;
      break;
    case EffectKind::nde:
    case EffectKind::nie:
      for (std::size_t m : q.mediators)
        report.mediators.push_back(scm.variable(m).name);
      report.custom_mediators = q.mediators != q.defaults;
      break;
    case EffectKind::te:
    case EffectKind::pse:
      break;
  }

  double total = 0.0;
  if (q.kind == EffectKind::pse) {
    const PathSurgery model = surgery(scm, *q.subgraph, q.x_var, q.x_ref);
    for (const auto& wu : scm.units()) {
      const double v =
          q.outcome.value(scm, model.evaluate(wu.unit, Regime{{{q.x_var, q.x}}})) -
          q.outcome.value(scm,
                          model.evaluate(wu.unit, Regime{{{q.x_var, q.x_ref}}}));
      total += wu.probability * v;
      if (per_unit) report.per_unit.push_back({wu.unit, wu.probability, v});
    }
  } else {
    for (const auto& wu : scm.units()) {
      const double v = q.at(scm, wu.unit);
      total += wu.probability * v;
      if (per_unit) report.per_unit.push_back({wu.unit, wu.probability, v});
    }
  }
  report.value = total;

  if (q.kind == EffectKind::te && !q.mediators.empty() &&
      std::find(q.mediators.begin(), q.mediators.end(), q.y_var) ==
          q.mediators.end() &&
      std::find(q.mediators.begin(), q.mediators.end(), q.x_var) ==
          q.mediators.end()) {
    report.mediators.clear();
    for (std::size_t m : q.mediators)
      report.mediators.push_back(scm.variable(m).name);
    report.custom_mediators = q.mediators != q.defaults;
    report.decomposition = std::array<double, 4>{
        nie_avg(scm, q.x_var, q.x, q.x_ref, q.mediators, q.outcome),
        nde_avg(scm, q.x_var, q.x_ref, q.x, q.mediators, q.outcome),
        nde_avg(scm, q.x_var, q.x, q.x_ref, q.mediators, q.outcome),
        nie_avg(scm, q.x_var, q.x_ref, q.x, q.mediators, q.outcome)};
  }
  return report;
}

double compute_unit_effect(const Scm& scm, const EffectQuery& query,
                           const Unit& unit) {
  return PreparedQuery(scm, query).at(scm, unit);
}

}  // namespace mediation
