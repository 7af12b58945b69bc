#include "mediation/estimand.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>

#include "mediation/effects.hpp"
#include "mediation/error.hpp"

namespace mediation {

Distribution ExactProvider::joint(const Regime& regime,
                                  const std::vector<std::size_t>& over) const {
  return exact_distribution(*scm_, regime, over);
}

DatasetProvider::DatasetProvider(Schema schema, std::vector<Dataset> datasets,
                                 std::optional<CausalGraph> graph,
                                 double smoothing)
    : schema_(std::move(schema)),
      datasets_(std::move(datasets)),
      graph_(std::move(graph)),
      smoothing_(smoothing) {
  if (!(smoothing_ >= 0.0))
    throw ValidationError("smoothing must be a nonnegative pseudo-count");
  for (const auto& d : datasets_)
    for (std::size_t c : d.columns)
      if (c >= schema_.size())
        throw ValidationError("dataset column outside the schema");
}

bool DatasetProvider::supports(const Regime& regime) const {
  return std::any_of(datasets_.begin(), datasets_.end(),
                     [&](const Dataset& d) { return d.regime == regime; });
}

std::size_t DatasetProvider::sample_size(const Regime& regime) const {
  std::size_t n = 0;
  for (const auto& d : datasets_)
    if (d.regime == regime) n += d.rows.size();
  return n;
}

Distribution DatasetProvider::joint(const Regime& regime,
                                    const std::vector<std::size_t>& over) const {
  if (!supports(regime))
    throw EstimandError("no dataset under regime '" +
                        format_regime(schema_, regime) + "'");
  Distribution out;
  out.variables = over;
  out.regime = regime;
  std::map<std::vector<int>, double> counts;
  double total = 0.0;
  std::vector<int> key(over.size());
  for (const auto& d : datasets_) {
    if (d.regime != regime) continue;
    std::vector<std::size_t> pos;
    for (std::size_t v : over) {
      auto it = std::find(d.columns.begin(), d.columns.end(), v);
      if (it == d.columns.end())
        throw EstimandError("dataset under '" + format_regime(schema_, regime) +
                            "' lacks column '" + schema_.names.at(v) + "'");
      pos.push_back(static_cast<std::size_t>(it - d.columns.begin()));
    }
    for (const auto& row : d.rows) {
      for (std::size_t k = 0; k < pos.size(); ++k) key[k] = row[pos[k]];
      counts[key] += 1.0;
      total += 1.0;
    }
  }
  if (smoothing_ > 0.0) {
    std::vector<int> lo(over.size()), hi(over.size());
    for (std::size_t k = 0; k < over.size(); ++k) {
      if (auto fixed = regime.fixings.get(over[k]))
        lo[k] = hi[k] = *fixed;
      else
        hi[k] = schema_.domains.at(over[k]).size() - 1;
    }
    std::vector<int> cell = lo;
    while (true) {
      counts[cell] += smoothing_;
      total += smoothing_;
      std::size_t k = cell.size();
      bool done = true;
      while (k > 0) {
        --k;
        if (cell[k] < hi[k]) {
          ++cell[k];
          done = false;
          break;
        }
        cell[k] = lo[k];
      }
      if (done) break;
    }
  }
  if (total > 0.0)
    for (const auto& [k, c] : counts) out.probability[k] = c / total;
  return out;
}

std::string to_string(Formula formula) {
  switch (formula) {
    case Formula::eq8: return "eq8";
    case Formula::eq15: return "eq15";
    case Formula::eq17: return "eq17";
    case Formula::eq26: return "eq26";
    case Formula::eq27: return "eq27";
  }
  return "?";
}

Formula parse_formula(const std::string& text) {
  for (Formula f : {Formula::eq8, Formula::eq15, Formula::eq17, Formula::eq26,
                    Formula::eq27})
    if (text == to_string(f)) return f;
  throw ValidationError("unknown formula '" + text +
                        "' (expected eq8, eq15, eq17, eq26 or eq27)");
}

bool targets_direct_effect(Formula formula) {
  return formula == Formula::eq8 || formula == Formula::eq15 ||
         formula == Formula::eq17;
}

bool is_experimental(Formula formula) {
  return formula == Formula::eq8 || formula == Formula::eq26;
}

std::string to_string(PremiseState state) {
  switch (state) {
    case PremiseState::verified: return "verified";
    case PremiseState::violated: return "violated";
    case PremiseState::unverified: return "unverified premises";
  }
  return "?";
}

std::string to_string(CrosscheckStatus status) {
  switch (status) {
    case CrosscheckStatus::pass: return "pass";
    case CrosscheckStatus::fail: return "fail";
    case CrosscheckStatus::not_applicable: return "not applicable (positivity)";
  }
  return "?";
}

namespace {

void validate_query(const Schema& schema, Formula formula,
                    const EstimandQuery& q) {
  auto known = [&](std::size_t v) {
    if (v >= schema.size())
      throw ValidationError("estimand query names an unknown variable");
  };
  known(q.treatment);
  known(q.outcome);
  if (q.treatment == q.outcome)
    throw ValidationError("treatment and outcome must differ");
  const int nx = schema.domains[q.treatment].size();
  if (q.x < 0 || q.x >= nx || q.x_ref < 0 || q.x_ref >= nx)
    throw ValidationError("treatment value out of range for '" +
                          schema.names[q.treatment] + "'");
  if (q.indicator && (*q.indicator < 0 ||
                      *q.indicator >= schema.domains[q.outcome].size()))
    throw ValidationError("indicator value out of range");
  if (q.mediators.empty())
    throw ValidationError("mediator set must not be empty");
  std::vector<std::size_t> seen{q.treatment, q.outcome};
  auto fresh = [&](std::size_t v, const char* role) {
    known(v);
    if (std::find(seen.begin(), seen.end(), v) != seen.end())
      throw ValidationError("variable '" + schema.names[v] +
                            "' appears twice in the query (as " + role + ")");
    seen.push_back(v);
  };
  for (std::size_t m : q.mediators) fresh(m, "mediator");
  for (std::size_t c : q.covariates) fresh(c, "covariate");
  if ((formula == Formula::eq17 || formula == Formula::eq27) &&
      !q.covariates.empty())
    throw ValidationError(to_string(formula) + " takes no covariate set");
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

// Calls fn for every value tuple of `vars` in lexicographic order.
void for_each_cell(const Schema& schema, const std::vector<std::size_t>& vars,
                   const std::function<void(const Assignment&)>& fn) {
  std::vector<int> cell(vars.size(), 0);
  while (true) {
    Assignment a;
    for (std::size_t k = 0; k < vars.size(); ++k) a.set(vars[k], cell[k]);
    fn(a);
    std::size_t k = vars.size();
    bool done = true;
    while (k > 0) {
      --k;
      if (++cell[k] < schema.domains[vars[k]].size()) {
        done = false;
        break;
      }
      cell[k] = 0;
    }
    if (done) break;
  }
}

// Joint plus the mean of the outcome over the rows consistent with an event.
class Table {
 public:
  Table(const DistributionProvider& provider, const Regime& regime,
        std::vector<std::size_t> over, const EstimandQuery& q)
      : schema_(&provider.schema()), q_(&q) {
    dist_ = provider.joint(regime, over);
  }

  double mass(const Assignment& event) const { return dist_.mass(event); }

  std::optional<double> mean_outcome(const Assignment& event) const {
    std::size_t ypos = position(q_->outcome);
    std::vector<std::pair<std::size_t, int>> positions;
    for (const auto& [var, value] : event.entries())
      positions.emplace_back(position(var), value);
    double m = 0.0, s = 0.0;
    for (const auto& [key, p] : dist_.probability) {
      bool ok = true;
      for (const auto& [pos, value] : positions)
        if (key[pos] != value) {
          ok = false;
          break;
        }
      if (!ok) continue;
      m += p;
      s += p * outcome_value(key[ypos]);
    }
    if (m <= 0.0) return std::nullopt;
    return s / m;
  }

  std::optional<double> conditional(const Assignment& event,
                                    const Assignment& given) const {
    const double g = mass(given);
    if (g <= 0.0) return std::nullopt;
    return mass(given.merged(event)) / g;
  }

 private:
  std::size_t position(std::size_t var) const {
    auto it = std::find(dist_.variables.begin(), dist_.variables.end(), var);
    return static_cast<std::size_t>(it - dist_.variables.begin());
  }
  double outcome_value(int v) const {
    if (q_->indicator) return v == *q_->indicator ? 1.0 : 0.0;
    return schema_->domains[q_->outcome].code(v);
  }

  const Schema* schema_;
  const EstimandQuery* q_;
  Distribution dist_;
};

std::string mass_text(double m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", m);
  return buf;
}

struct Context {
  const DistributionProvider& provider;
  const EstimandQuery& q;
  EstimandResult& result;
  std::vector<Regime> regimes_read;

  void require(const Regime& regime) {
    if (!provider.supports(regime))
      throw EstimandError(to_string(result.formula) + " needs data under '" +
                          format_regime(provider.schema(), regime) + "'");
  }

  Table table(const Regime& regime, std::vector<std::size_t> over) {
    require(regime);
    if (std::find(regimes_read.begin(), regimes_read.end(), regime) ==
        regimes_read.end())
      regimes_read.push_back(regime);
    return Table(provider, regime, std::move(over), q);
  }

  std::string cell_text(const Assignment& a) const {
    if (a.empty()) return "{}";
    const Schema& s = provider.schema();
    std::string out;
    for (const auto& [var, value] : a.entries())
      out += (out.empty() ? "" : ",") + s.names[var] + "=" +
             s.domains[var].label(value);
    return out;
  }

  void undefined(const std::string& what, const Assignment& stratum) {
    result.warnings.push_back("positivity: " + what + " is undefined in stratum " +
                              cell_text(stratum));
  }

  void finish() {
    for (const auto& r : regimes_read)
      if (!provider.exact())
        result.sample_sizes.emplace_back(
            format_regime(provider.schema(), r), provider.sample_size(r));
    if (result.positivity_violation())
      result.warnings.push_back(
          "positivity violation: strata of total mass " +
          mass_text(result.positivity_mass) + " could not be evaluated");
  }
};

Regime with_fix(Regime r, std::size_t var, int value) {
  r.fixings.set(var, value);
  return r;
}

Regime fix_all(std::size_t x_var, int x, const Assignment& z) {
  Regime r{z};
  r.fixings.set(x_var, x);
  return r;
}

NodeSet names_of(const Schema& s, const std::vector<std::size_t>& vars) {
  NodeSet out;
  for (std::size_t v : vars) out.insert(s.names[v]);
  return out;
}

void check_experimental_premises(const DistributionProvider& provider,
                                 const EstimandQuery& q, EstimandResult& r) {
  const CausalGraph* g = provider.graph();
  if (!g) {
    r.premises = PremiseState::unverified;
    r.premise_notes.push_back("no graph supplied; covariate set not checked");
    return;
  }
  const Schema& s = provider.schema();
  try {
    const bool ok = check_experimental_criterion(
        *g, s.names[q.treatment], names_of(s, q.mediators), s.names[q.outcome],
        names_of(s, q.covariates));
    r.premises = ok ? PremiseState::verified : PremiseState::violated;
    r.premise_notes.push_back(
        std::string("experimental criterion for W=") +
        to_string(names_of(s, q.covariates)) + (ok ? " holds" : " fails"));
  } catch (const CriterionError& e) {
    r.premises = PremiseState::violated;
    r.premise_notes.push_back(e.what());
  }
}

void check_observational_premises(const DistributionProvider& provider,
                                  const EstimandQuery& q, EstimandResult& r) {
  const CausalGraph* g = provider.graph();
  if (!g) {
    r.premises = PremiseState::unverified;
    r.premise_notes.push_back(
        "no graph supplied; Markov and back-door premises not checked");
    return;
  }
  const Schema& s = provider.schema();
  bool ok = true;
  auto note = [&](bool holds, const std::string& text) {
    r.premise_notes.push_back(text + (holds ? " holds" : " fails"));
    ok = ok && holds;
  };
  note(exogenous_roots_unshared(*g), "Markov property (no shared exogenous roots)");

  NodeSet allowed = names_of(s, q.mediators);
  allowed.insert(s.names[q.treatment]);
  bool parents_ok = true;
  for (const auto& p : g->parents(s.names[q.outcome]))
    if (!g->is_exogenous(p) && !allowed.count(p)) parents_ok = false;
  note(parents_ok, "parents of " + s.names[q.outcome] + " within {X} and Z");

  bool observed = true;
  for (std::size_t c : q.covariates)
    if (!s.observable[c]) observed = false;
  if (!observed) note(false, "covariates observable");

  const NodeSet cov = names_of(s, q.covariates);
  try {
    note(backdoor_admissible(*g, s.names[q.treatment], names_of(s, q.mediators),
                             cov),
         "back-door criterion for S=" + to_string(cov) + " between " +
             s.names[q.treatment] + " and Z");
  } catch (const CriterionError& e) {
    r.premise_notes.push_back(e.what());
    ok = false;
  }
  r.premises = ok ? PremiseState::verified : PremiseState::violated;
}

EstimandResult start(const DistributionProvider& provider, Formula formula,
                     const EstimandQuery& q) {
  validate_query(provider.schema(), formula, q);
  EstimandResult r;
  r.formula = formula;
  return r;
}

// eq8 when the formula targets the direct effect, eq26 otherwise. Both sum
// over (w, z) in lexicographic order with P(w) read under do(X=x*).
EstimandResult experimental(const DistributionProvider& provider,
                            Formula formula, const EstimandQuery& q) {
  EstimandResult result = start(provider, formula, q);
  check_experimental_premises(provider, q, result);
  Context ctx{provider, q, result, {}};
  const bool direct = formula == Formula::eq8;
  const auto w_vars = sorted(q.covariates);
  const auto z_vars = sorted(q.mediators);
  std::vector<std::size_t> wz = w_vars;
  wz.insert(wz.end(), z_vars.begin(), z_vars.end());
  std::vector<std::size_t> wy = w_vars;
  wy.push_back(q.outcome);

  const Regime ref = with_fix(Regime{}, q.treatment, q.x_ref);
  const Regime treated = with_fix(Regime{}, q.treatment, q.x);
  Table zw_ref = ctx.table(ref, wz);
  std::optional<Table> zw_treated;
  if (!direct) zw_treated.emplace(ctx.table(treated, wz));

  // Coverage: each z with positive mass needs its do(X, Z) regimes.
  std::vector<Assignment> needed_z;
  for_each_cell(provider.schema(), z_vars, [&](const Assignment& z) {
    double m = zw_ref.mass(z);
    if (!direct) m += zw_treated->mass(z);
    if (m > 0.0) needed_z.push_back(z);
  });
  std::vector<std::string> missing;
  for (const auto& z : needed_z) {
    std::vector<Regime> regs{fix_all(q.treatment, q.x_ref, z)};
    if (direct) regs.push_back(fix_all(q.treatment, q.x, z));
    for (const auto& r : regs)
      if (!provider.supports(r))
        missing.push_back(format_regime(provider.schema(), r));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw EstimandError(to_string(formula) + " needs data under: " + list);
  }
  std::map<std::vector<int>, Table> y_treated, y_ref;
  auto key = [](const Assignment& z) {
    std::vector<int> k;
    for (const auto& e : z.entries()) k.push_back(e.second);
    return k;
  };
  for (const auto& z : needed_z) {
    y_ref.emplace(key(z), ctx.table(fix_all(q.treatment, q.x_ref, z), wy));
    if (direct)
      y_treated.emplace(key(z), ctx.table(fix_all(q.treatment, q.x, z), wy));
  }

  double value = 0.0;
  for_each_cell(provider.schema(), w_vars, [&](const Assignment& w) {
    const double pw = zw_ref.mass(w);
    if (pw <= 0.0) {
      result.skipped_strata.push_back({w});
      return;
    }
    double stratum = 0.0;
    bool defined = true;
    for (const auto& z : needed_z) {
      const auto p_ref = zw_ref.conditional(z, w);
      std::optional<double> p_treated;
      if (!direct) p_treated = zw_treated->conditional(z, w);
      if (!p_ref || (!direct && !p_treated)) {
        ctx.undefined("P(Z | w)", w);
        defined = false;
        continue;
      }
      const double weight = direct ? *p_ref : *p_treated - *p_ref;
      if (direct ? weight <= 0.0 : (*p_ref <= 0.0 && *p_treated <= 0.0))
        continue;
      const auto e_ref = y_ref.at(key(z)).mean_outcome(w);
      if (!e_ref) {
        ctx.undefined("E(Y | do(x*, z), w) at " + ctx.cell_text(z), w);
        defined = false;
        continue;
      }
      if (direct) {
        const auto e_treated = y_treated.at(key(z)).mean_outcome(w);
        if (!e_treated) {
          ctx.undefined("E(Y | do(x, z), w) at " + ctx.cell_text(z), w);
          defined = false;
          continue;
        }
        stratum += (*e_treated - *e_ref) * weight;
      } else {
        stratum += *e_ref * weight;
      }
    }
    if (defined) {
      value += stratum * pw;
      result.evaluated_mass += pw;
    } else {
      result.positivity_mass += pw;
    }
  });
  result.value = value;
  ctx.finish();
  return result;
}

// eq15 (any S), eq17 (S empty) and eq27 (S empty, indirect).
EstimandResult observational(const DistributionProvider& provider,
                             Formula formula, const EstimandQuery& q) {
  EstimandResult result = start(provider, formula, q);
  check_observational_premises(provider, q, result);
  Context ctx{provider, q, result, {}};
  const bool direct = formula != Formula::eq27;
  const auto s_vars = sorted(q.covariates);
  const auto z_vars = sorted(q.mediators);
  std::vector<std::size_t> over{q.treatment};
  over.insert(over.end(), z_vars.begin(), z_vars.end());
  over.insert(over.end(), s_vars.begin(), s_vars.end());
  over.push_back(q.outcome);
  Table t = ctx.table(Regime{}, over);

  const Assignment at_x{{q.treatment, q.x}};
  const Assignment at_ref{{q.treatment, q.x_ref}};
  double value = 0.0;
  for_each_cell(provider.schema(), s_vars, [&](const Assignment& s) {
    const double ps = t.mass(s);
    if (ps <= 0.0) {
      result.skipped_strata.push_back({s});
      return;
    }
    double stratum = 0.0;
    bool defined = true;
    for_each_cell(provider.schema(), z_vars, [&](const Assignment& z) {
      if (!defined) return;
      const auto pz_ref = t.conditional(z, s.merged(at_ref));
      std::optional<double> pz_x;
      if (!direct) pz_x = t.conditional(z, at_x);
      if (!pz_ref || (!direct && !pz_x)) {
        ctx.undefined(direct ? "P(z | x*, s)" : "P(z | x)", s);
        defined = false;
        return;
      }
      if (*pz_ref <= 0.0 && (direct || *pz_x <= 0.0)) return;
      const auto e_ref = t.mean_outcome(z.merged(at_ref));
      if (!e_ref) {
        ctx.undefined("E(Y | x*, z) at " + ctx.cell_text(z), s);
        defined = false;
        return;
      }
      if (direct) {
        const auto e_x = t.mean_outcome(z.merged(at_x));
        if (!e_x) {
          ctx.undefined("E(Y | x, z) at " + ctx.cell_text(z), s);
          defined = false;
          return;
        }
        stratum += (*e_x - *e_ref) * *pz_ref;
      } else {
        stratum += *e_ref * (*pz_x - *pz_ref);
      }
    });
    if (defined) {
      value += stratum * ps;
      result.evaluated_mass += ps;
    } else {
      result.positivity_mass += ps;
    }
  });
  result.value = value;
  ctx.finish();
  return result;
}

}  // namespace

EstimandResult nde_eq8(const DistributionProvider& provider,
                       const EstimandQuery& query) {
  return experimental(provider, Formula::eq8, query);
}

EstimandResult nie_eq26(const DistributionProvider& provider,
                        const EstimandQuery& query) {
  return experimental(provider, Formula::eq26, query);
}

EstimandResult nde_eq15(const DistributionProvider& provider,
                        const EstimandQuery& query) {
  return observational(provider, Formula::eq15, query);
}

EstimandResult nde_eq17(const DistributionProvider& provider,
                        const EstimandQuery& query) {
  return observational(provider, Formula::eq17, query);
}

EstimandResult nie_eq27(const DistributionProvider& provider,
                        const EstimandQuery& query) {
  return observational(provider, Formula::eq27, query);
}

EstimandResult evaluate_estimand(const DistributionProvider& provider,
                                 Formula formula, const EstimandQuery& query) {
  if (is_experimental(formula))
    return experimental(provider, formula, query);
  return observational(provider, formula, query);
}

CrosscheckReport crosscheck(const Scm& scm, Formula formula,
                            const EstimandQuery& query) {
  CrosscheckReport report;
  report.formula = formula;
  ExactProvider provider(scm);
  report.estimate = evaluate_estimand(provider, formula, query);
  const Outcome y{query.outcome, query.indicator};
  report.ground_truth =
      targets_direct_effect(formula)
          ? nde_avg(scm, query.treatment, query.x, query.x_ref,
                    query.mediators, y)
          : nie_avg(scm, query.treatment, query.x, query.x_ref,
                    query.mediators, y);
  report.gap = std::fabs(report.estimate.value - report.ground_truth);
  if (report.estimate.positivity_violation())
    report.status = CrosscheckStatus::not_applicable;
  else
    report.status = report.gap < kCrosscheckTolerance ? CrosscheckStatus::pass
                                                      : CrosscheckStatus::fail;
  return report;
}

}  // namespace mediation
