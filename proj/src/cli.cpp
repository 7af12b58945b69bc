#include "mediation/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mediation/effects.hpp"
#include "mediation/error.hpp"
#include "mediation/estimand.hpp"
#include "mediation/fixtures.hpp"
#include "mediation/model_io.hpp"
#include "mediation/sampling.hpp"

namespace mediation::cli {

using ojson = nlohmann::ordered_json;

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  std::string s = buf;
  if (s == "-0") s = "0";
  return s;
}

std::string load_model_text(const std::string& model) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(model, ec)) {
    std::ifstream in(model, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  if (auto text = find_builtin_fixture(model)) return std::string(*text);
  std::string names;
  for (const auto& f : builtin_fixtures())
    names += (names.empty() ? "" : ", ") + std::string(f.name);
  throw ValidationError("model '" + model +
                        "' is neither a readable file nor a built-in fixture (" +
                        names + ")");
}

namespace {

// JSON number carrying exactly the digits shown in the text report.
ojson number(double v) { return std::stod(format_number(v)); }

struct Report {
  ojson doc = ojson::object();
  std::vector<std::string> lines;
  std::vector<std::string> warnings;
  int exit_code = 0;

  void line(const std::string& text) { lines.push_back(text); }

  void emit(std::ostream& out, bool machine) {
    if (machine) {
      doc["warnings"] = warnings;
      doc["exit_code"] = exit_code;
      out << doc.dump(2) << "\n";
      return;
    }
    for (const auto& l : lines) out << l << "\n";
    for (const auto& w : warnings) out << "warning: " << w << "\n";
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> split_pairs(
    const std::string& text, const std::string& flag) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& item : split_list(text)) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ValidationError(flag + " entry '" + item + "' must be VAR=value");
    out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "" : ",") + i;
  return out;
}

struct LoadedModel {
  std::string argument;
  ModelDocument doc;
  const Scm& scm() const { return *doc.scm; }
};

LoadedModel load(const std::string& argument) {
  const std::string text = load_model_text(argument);
  try {
    return {argument, parse_model(text)};
  } catch (const ModelError& e) {
    std::string message;
    for (const auto& d : e.diagnostics())
      message += (message.empty() ? "" : "\n") + argument + ":" + d.render();
    throw ValidationError(message);
  }
}

// Shared treatment/outcome flags.
struct QueryFlags {
  std::string model, treatment, outcome;
  std::string x = "1", x_ref = "0";
  std::string mediators;
  std::string indicator;
  std::string format = "text";

  void attach(CLI::App* app, bool with_values = true) {
    app->add_option("--model", model, "model file or built-in fixture name")
        ->required();
    app->add_option("--X", treatment, "treatment variable")->required();
    app->add_option("--Y", outcome, "outcome variable")->required();
    if (with_values) {
      app->add_option("--x", x, "treatment value (default 1)");
      app->add_option("--xref", x_ref, "reference treatment value (default 0)");
      app->add_option("--indicator", indicator,
                      "report effects on the indicator of this outcome value");
    }
    app->add_option("--Z", mediators,
                    "comma-separated mediator set (default: parents of Y except X)");
    app->add_option("--format", format, "text or machine")
        ->check(CLI::IsMember({"text", "machine"}));
  }

  std::vector<std::string> mediator_names(const Scm& scm) const {
    if (!mediators.empty()) return split_list(mediators);
    std::vector<std::string> out;
    for (std::size_t m : default_mediators(scm, scm.index_of(treatment),
                                           scm.index_of(outcome)))
      out.push_back(scm.variable(m).name);
    return out;
  }
};

NodeSet to_set(const std::vector<std::string>& names) {
  return NodeSet(names.begin(), names.end());
}

ojson set_json(const NodeSet& s) { return std::vector<std::string>(s.begin(), s.end()); }

Unit parse_unit(const Scm& scm, const std::string& text) {
  Unit unit;
  unit.values.assign(scm.exogenous().size(), -1);
  for (const auto& [name, label] : split_pairs(text, "--unit")) {
    std::size_t i = 0;
    while (i < scm.exogenous().size() && scm.exogenous()[i].name != name) ++i;
    if (i == scm.exogenous().size())
      throw ValidationError("--unit names unknown exogenous variable '" + name + "'");
    const auto& labels = scm.exogenous()[i].labels;
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end())
      throw ValidationError("--unit value '" + label +
                            "' is not in the domain of '" + name + "'");
    unit.values[i] = static_cast<int>(it - labels.begin());
  }
  for (std::size_t i = 0; i < unit.values.size(); ++i)
    if (unit.values[i] < 0)
      throw ValidationError("--unit leaves exogenous variable '" +
                            scm.exogenous()[i].name + "' unassigned");
  return unit;
}

std::string unit_text(const Scm& scm, const Unit& unit) {
  if (unit.values.empty()) return "{}";
  std::string out;
  for (std::size_t i = 0; i < unit.values.size(); ++i)
    out += (i ? "," : "") + scm.exogenous()[i].name + "=" +
           scm.exogenous()[i].labels[unit.values[i]];
  return out;
}

// ---------------------------------------------------------------------------

struct EffectsFlags : QueryFlags {
  std::string kind, setting, edges, unit;
  bool per_unit = false;
};

Report run_effects(const EffectsFlags& f) {
  const LoadedModel m = load(f.model);
  const Scm& scm = m.scm();
  EffectQuery q;
  q.kind = parse_effect_kind(f.kind);
  q.treatment = f.treatment;
  q.outcome = f.outcome;
  q.x = f.x;
  q.x_ref = f.x_ref;
  if (!f.indicator.empty()) q.outcome_indicator = f.indicator;
  if (!f.mediators.empty()) q.mediators = split_list(f.mediators);
  if (q.kind == EffectKind::cde) {
    if (f.setting.empty())
      throw ValidationError("CDE needs --z-setting VAR=value,...");
    q.setting = split_pairs(f.setting, "--z-setting");
  } else if (!f.setting.empty()) {
    throw ValidationError("--z-setting applies to CDE only");
  }
  if (q.kind == EffectKind::pse) {
    if (f.edges.empty()) throw ValidationError("PSE needs --edges A->B,...");
    q.edges = f.edges;
  } else if (!f.edges.empty()) {
    throw ValidationError("--edges applies to PSE only");
  }
  if (!f.mediators.empty() &&
      (q.kind == EffectKind::cde || q.kind == EffectKind::pse))
    throw ValidationError("--Z does not apply to " + to_string(q.kind));

  Report r;
  r.doc["command"] = "effects";
  r.doc["model"] = scm.name();
  r.doc["kind"] = to_string(q.kind);
  r.doc["X"] = q.treatment;
  r.doc["x"] = q.x;
  r.doc["x_ref"] = q.x_ref;
  r.doc["Y"] = q.outcome;
  if (q.outcome_indicator) r.doc["indicator"] = *q.outcome_indicator;
  r.line("model: " + scm.name());
  std::string target = q.outcome_indicator
                           ? "1[" + q.outcome + "=" + *q.outcome_indicator + "]"
                           : q.outcome;
  r.line("effect: " + to_string(q.kind) + " of " + q.treatment + " on " + target +
         " (x=" + q.x + ", x*=" + q.x_ref + ")");

  const EffectReport report = compute_effect(scm, q, f.per_unit);
  if (q.kind == EffectKind::cde) {
    r.line("setting: " + f.setting);
    r.doc["setting"] = f.setting;
  }
  if (q.kind == EffectKind::pse) {
    r.line("edges: " + f.edges);
    r.doc["edges"] = f.edges;
  }
  if (!report.mediators.empty() && q.kind != EffectKind::cde) {
    r.line("mediators: " + join(report.mediators) +
           (report.custom_mediators ? " (custom mediator set)" : ""));
    r.doc["mediators"] = report.mediators;
    r.doc["custom_mediators"] = report.custom_mediators;
  }
  r.line("method: " + report.method);
  r.doc["method"] = report.method;

  if (!f.unit.empty()) {
    const Unit u = parse_unit(scm, f.unit == "{}" ? "" : f.unit);
    const double v = compute_unit_effect(scm, q, u);
    r.line("unit: " + unit_text(scm, u));
    r.line("value: " + format_number(v));
    r.doc["level"] = "unit";
    r.doc["unit"] = unit_text(scm, u);
    r.doc["value"] = number(v);
    return r;
  }
  r.line("value: " + format_number(report.value));
  r.doc["level"] = "average";
  r.doc["value"] = number(report.value);
  if (report.decomposition) {
    const auto& d = *report.decomposition;
    r.line("decomposition: NIE(x,x*) - NDE(x*,x) = " + format_number(d[0]) +
           " - " + format_number(d[1]) + " = " + format_number(d[0] - d[1]));
    r.line("decomposition: NDE(x,x*) - NIE(x*,x) = " + format_number(d[2]) +
           " - " + format_number(d[3]) + " = " + format_number(d[2] - d[3]));
    r.doc["decomposition"] = {{"nie_x_xref", number(d[0])},
                              {"nde_xref_x", number(d[1])},
                              {"nde_x_xref", number(d[2])},
                              {"nie_xref_x", number(d[3])}};
  }
  if (f.per_unit) {
    ojson units = ojson::array();
    for (const auto& pu : report.per_unit) {
      r.line("  unit " + unit_text(scm, pu.unit) + "  p=" +
             format_number(pu.probability) + "  value=" + format_number(pu.value));
      units.push_back({{"unit", unit_text(scm, pu.unit)},
                       {"probability", number(pu.probability)},
                       {"value", number(pu.value)}});
    }
    r.doc["per_unit"] = units;
  }
  return r;
}

// ---------------------------------------------------------------------------

struct IdentifyFlags : QueryFlags {
  std::string mode = "theorem1", convention = "printed";
  std::string w, w0, w1, w2, w3;
  bool search = false;
};

void report_conditions(Report& r, const ConditionReport& c) {
  ojson entries = ojson::array();
  for (const auto& e : c.entries) {
    std::string text = e.label + " ";
    if (e.a.empty() && e.b.empty()) {
      text += e.note;
    } else {
      text += to_string(e.a) + " independent of " + to_string(e.b) + " given " +
              to_string(e.given) + " after " + to_string(e.mutilation);
      if (!e.note.empty()) text += " (" + e.note + ")";
    }
    r.line(text + ": " + (e.verdict ? "holds" : "fails"));
    entries.push_back({{"label", e.label},
                       {"a", set_json(e.a)},
                       {"b", set_json(e.b)},
                       {"given", set_json(e.given)},
                       {"delete_outgoing", set_json(e.mutilation.delete_outgoing_of)},
                       {"delete_incoming", set_json(e.mutilation.delete_incoming_of)},
                       {"verdict", e.verdict},
                       {"note", e.note}});
  }
  r.doc["conditions"] = entries;
  r.doc["overall"] = c.overall;
  r.line(std::string("overall: ") + (c.overall ? "identified" : "not established"));
}

Report run_identify(const IdentifyFlags& f) {
  const LoadedModel m = load(f.model);
  const Scm& scm = m.scm();
  const CausalGraph& g = scm.graph();
  scm.index_of(f.treatment);
  scm.index_of(f.outcome);
  const NodeSet z = to_set(f.mediator_names(scm));
  if (z.empty())
    throw ValidationError("mediator set is empty: '" + f.outcome +
                          "' has no parent besides '" + f.treatment + "'");
  const Corollary1Convention convention = f.convention == "backdoor-iv"
                                              ? Corollary1Convention::backdoor_iv()
                                              : Corollary1Convention::printed();
  Report r;
  r.doc["command"] = "identify";
  r.doc["model"] = scm.name();
  r.doc["mode"] = f.mode;
  r.doc["X"] = f.treatment;
  r.doc["Z"] = set_json(z);
  r.doc["Y"] = f.outcome;
  r.line("model: " + scm.name());
  r.line("query: natural effects of " + f.treatment + " on " + f.outcome +
         " through " + to_string(z));
  r.line("mode: " + f.mode);

  if (f.mode == "theorem1") {
    if (!f.w0.empty() || !f.w1.empty() || !f.w2.empty() || !f.w3.empty())
      throw ValidationError("--W0..--W3 apply to corollary1 mode; use --W");
    NodeSet w = to_set(split_list(f.w));
    if (f.search) {
      if (!f.w.empty()) throw ValidationError("--W and --witness-search conflict");
      auto found = search_witnesses(g, f.treatment, z, f.outcome, WitnessMode::theorem1);
      if (!found) {
        r.line("witness: none");
        r.doc["witness"] = nullptr;
        r.exit_code = 2;
        return r;
      }
      w = found->sets.w0;
      r.line("witness: W=" + to_string(w));
      r.doc["witness"] = {{"W", set_json(w)}};
    }
    const bool ok = check_experimental_criterion(g, f.treatment, z, f.outcome, w);
    MutilationSpec spec;
    spec.delete_outgoing_of = z;
    spec.delete_outgoing_of.insert(f.treatment);
    r.line(f.outcome + " independent of " + to_string(z) + " given " +
           to_string(w) + " after " + to_string(spec) + ": " +
           (ok ? "holds" : "fails"));
    r.line(std::string("experimentally identifiable with W=") + to_string(w) +
           ": " + (ok ? "yes" : "not established"));
    r.doc["W"] = set_json(w);
    r.doc["verdict"] = ok;
    if (!ok) r.exit_code = 2;
    return r;
  }

  if (!f.w.empty()) throw ValidationError("--W applies to theorem1 mode; use --W0..--W3");
  r.line("convention: " + f.convention);
  r.doc["convention"] = f.convention;
  Corollary1Sets sets{to_set(split_list(f.w0)), to_set(split_list(f.w1)),
                      to_set(split_list(f.w2)), to_set(split_list(f.w3))};
  if (f.search) {
    if (!f.w0.empty() || !f.w1.empty() || !f.w2.empty() || !f.w3.empty())
      throw ValidationError("--W0..--W3 and --witness-search conflict");
    auto found = search_witnesses(g, f.treatment, z, f.outcome,
                                  WitnessMode::corollary1, convention);
    if (!found) {
      r.line("witness: none");
      r.doc["witness"] = nullptr;
      r.exit_code = 2;
      return r;
    }
    sets = found->sets;
    r.line("witness: W0=" + to_string(sets.w0) + " W1=" + to_string(sets.w1) +
           " W2=" + to_string(sets.w2) + " W3=" + to_string(sets.w3));
    r.doc["witness"] = {{"W0", set_json(sets.w0)},
                        {"W1", set_json(sets.w1)},
                        {"W2", set_json(sets.w2)},
                        {"W3", set_json(sets.w3)}};
  }
  const ConditionReport c =
      check_corollary1(g, f.treatment, z, f.outcome, sets, convention);
  report_conditions(r, c);
  if (!c.overall) r.exit_code = 2;
  return r;
}

// ---------------------------------------------------------------------------

struct EstimateFlags : QueryFlags {
  std::string formula, provider = "exact", covariates, s_covariates;
  std::vector<std::string> data;
  double smoothing = 0.0;
  bool no_graph = false;
};

Dataset read_data_file(const Schema& schema, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read dataset '" + path + "'");
  std::ifstream side(path + ".regime", std::ios::binary);
  if (!side)
    throw ValidationError("dataset '" + path + "' has no regime declaration '" +
                          path + ".regime'");
  std::stringstream ss;
  ss << side.rdbuf();
  try {
    const Regime regime = parse_regime(schema, ss.str());
    return read_dataset(schema, in, regime);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

EstimandQuery build_query(const Scm& scm, const QueryFlags& f,
                          const std::vector<std::string>& covariates) {
  EstimandQuery q;
  q.treatment = scm.index_of(f.treatment);
  q.outcome = scm.index_of(f.outcome);
  const Domain& xd = scm.variable(q.treatment).domain;
  q.x = xd.index_of(f.x, f.treatment);
  q.x_ref = xd.index_of(f.x_ref, f.treatment);
  if (!f.indicator.empty())
    q.indicator = scm.variable(q.outcome).domain.index_of(f.indicator, f.outcome);
  for (const auto& name : f.mediator_names(scm))
    q.mediators.push_back(scm.index_of(name));
  for (const auto& name : covariates) q.covariates.push_back(scm.index_of(name));
  return q;
}

std::string names(const Schema& s, const std::vector<std::size_t>& vars) {
  NodeSet out;
  for (std::size_t v : vars) out.insert(s.names[v]);
  return to_string(out);
}

void describe(Report& r, const Schema& schema, const EstimandResult& res) {
  r.line("value: " + format_number(res.value));
  r.doc["value"] = number(res.value);
  r.line("premises: " + to_string(res.premises));
  for (const auto& n : res.premise_notes) r.line("  " + n);
  r.doc["premises"] = to_string(res.premises);
  r.doc["premise_notes"] = res.premise_notes;
  r.line("strata: evaluated mass " + format_number(res.evaluated_mass) +
         ", positivity mass " + format_number(res.positivity_mass) + ", " +
         std::to_string(res.skipped_strata.size()) + " skipped");
  ojson skipped = ojson::array();
  for (const auto& s : res.skipped_strata) {
    std::string cell;
    for (const auto& [var, value] : s.cell.entries())
      cell += (cell.empty() ? "" : ",") + schema.names[var] + "=" +
              schema.domains[var].label(value);
    r.line("  skipped stratum (zero mass): " + (cell.empty() ? "{}" : cell));
    skipped.push_back(cell);
  }
  r.doc["evaluated_mass"] = number(res.evaluated_mass);
  r.doc["positivity_mass"] = number(res.positivity_mass);
  r.doc["skipped_strata"] = skipped;
  ojson sizes = ojson::array();
  for (const auto& [regime, n] : res.sample_sizes) {
    r.line("sample: " + regime + " n=" + std::to_string(n));
    sizes.push_back({{"regime", regime}, {"n", n}});
  }
  r.doc["sample_sizes"] = sizes;
  for (const auto& w : res.warnings) r.warnings.push_back(w);
}

Report run_estimate(const EstimateFlags& f) {
  const LoadedModel m = load(f.model);
  const Scm& scm = m.scm();
  const Formula formula = parse_formula(f.formula);
  if (!f.covariates.empty() && !f.s_covariates.empty())
    throw ValidationError("give the covariate set once, with --W or --S");
  const std::string cov_text = f.covariates.empty() ? f.s_covariates : f.covariates;
  const EstimandQuery q = build_query(scm, f, split_list(cov_text));

  std::unique_ptr<DistributionProvider> provider;
  if (f.provider == "exact") {
    if (!f.data.empty()) throw ValidationError("--data needs --provider dataset");
    if (f.no_graph) throw ValidationError("--no-graph needs --provider dataset");
    if (f.smoothing != 0.0) throw ValidationError("--smoothing needs --provider dataset");
    provider = std::make_unique<ExactProvider>(scm);
  } else {
    if (f.data.empty()) throw ValidationError("--provider dataset needs --data FILE");
    std::vector<Dataset> sets;
    for (const auto& path : f.data) sets.push_back(read_data_file(scm.schema(), path));
    std::optional<CausalGraph> graph;
    if (!f.no_graph) graph = scm.graph();
    provider = std::make_unique<DatasetProvider>(scm.schema(), std::move(sets),
                                                 std::move(graph), f.smoothing);
  }
  const EstimandResult res = evaluate_estimand(*provider, formula, q);

  const Schema& s = scm.schema();
  Report r;
  r.doc["command"] = "estimate";
  r.doc["model"] = scm.name();
  r.doc["formula"] = to_string(formula);
  r.doc["target"] = targets_direct_effect(formula) ? "NDE" : "NIE";
  r.doc["provider"] = f.provider;
  r.doc["X"] = f.treatment;
  r.doc["x"] = f.x;
  r.doc["x_ref"] = f.x_ref;
  r.doc["Y"] = f.outcome;
  r.doc["Z"] = names(s, q.mediators);
  r.doc["covariates"] = names(s, q.covariates);
  r.line("model: " + scm.name());
  r.line("estimand: " + to_string(formula) + " for the natural " +
         (targets_direct_effect(formula) ? "direct" : "indirect") + " effect of " +
         f.treatment + " on " + f.outcome + " (x=" + f.x + ", x*=" + f.x_ref + ")");
  r.line("mediators: " + names(s, q.mediators));
  r.line(std::string(is_experimental(formula) ? "W" : "S") + ": " +
         names(s, q.covariates));
  r.line("provider: " + f.provider);
  describe(r, s, res);
  if (res.premises == PremiseState::violated || res.positivity_violation())
    r.exit_code = 2;
  return r;
}

// ---------------------------------------------------------------------------

struct SampleFlags {
  std::string model, regime, out, format = "text";
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

Report run_sample(const SampleFlags& f) {
  const LoadedModel m = load(f.model);
  const Scm& scm = m.scm();
  Regime regime;
  if (!f.regime.empty()) regime = make_regime(scm, split_pairs(f.regime, "--do"));
  const Dataset data = sample(scm, f.n, f.seed, regime);
  {
    std::ofstream out(f.out, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + f.out + "'");
    write_dataset(scm.schema(), data, out);
    std::ofstream side(f.out + ".regime", std::ios::binary);
    if (!side) throw ValidationError("cannot write '" + f.out + ".regime'");
    side << format_regime(scm.schema(), regime) << "\n";
  }
  Report r;
  const std::string regime_text = format_regime(scm.schema(), regime);
  r.doc["command"] = "sample";
  r.doc["model"] = scm.name();
  r.doc["n"] = f.n;
  r.doc["seed"] = f.seed;
  r.doc["regime"] = regime_text;
  r.doc["out"] = f.out;
  r.line("model: " + scm.name());
  r.line("wrote " + std::to_string(f.n) + " rows under " + regime_text + " to " +
         f.out + " (seed " + std::to_string(f.seed) + ")");
  r.line("regime declaration: " + f.out + ".regime");
  return r;
}

// ---------------------------------------------------------------------------

struct CheckFlags {
  std::string model, treatment, outcome, format = "text";
};

struct Battery {
  Report& r;
  ojson checks = ojson::array();
  int passed = 0, failed = 0, skipped = 0;

  void add(const std::string& where, const std::string& name,
           CrosscheckStatus status, double gap, const std::string& detail = {}) {
    std::string tag = status == CrosscheckStatus::pass   ? "pass"
                      : status == CrosscheckStatus::fail ? "FAIL"
                                                         : "n/a ";
    std::string text = tag + "  " + where + "  " + name;
    if (status != CrosscheckStatus::not_applicable)
      text += "  gap " + format_number(gap);
    if (!detail.empty()) text += "  (" + detail + ")";
    r.line(text);
    ojson entry = {{"where", where}, {"check", name}, {"status", to_string(status)}};
    if (status != CrosscheckStatus::not_applicable) entry["gap"] = number(gap);
    if (!detail.empty()) entry["detail"] = detail;
    checks.push_back(entry);
    if (status == CrosscheckStatus::pass) ++passed;
    else if (status == CrosscheckStatus::fail) ++failed;
    else ++skipped;
  }

  void identity(const std::string& where, const std::string& name, double lhs,
                double rhs) {
    const double gap = std::fabs(lhs - rhs);
    add(where, name,
        gap < kCrosscheckTolerance ? CrosscheckStatus::pass : CrosscheckStatus::fail,
        gap);
  }
};

std::string edges_text(const Scm& scm, const PathSubgraph& g) {
  std::string out;
  for (const auto& [p, c] : g.edges)
    out += (out.empty() ? "" : ",") + scm.variable(p).name + "->" + scm.variable(c).name;
  return out;
}

void check_pair(const Scm& scm, std::size_t x_var, std::size_t y_var, Battery& b) {
  const auto z = default_mediators(scm, x_var, y_var);
  const Outcome y{y_var, std::nullopt};
  const CausalGraph& g = scm.graph();
  const std::string xn = scm.variable(x_var).name, yn = scm.variable(y_var).name;
  NodeSet z_names;
  for (std::size_t v : z) z_names.insert(scm.variable(v).name);

  PathSubgraph direct, indirect = full_subgraph(scm);
  if (g.has_edge(xn, yn)) {
    direct.edges.insert({x_var, y_var});
    indirect.edges.erase({x_var, y_var});
  }
  const PathSubgraph all = full_subgraph(scm);

  // Witnesses do not depend on the value pair.
  std::optional<NodeSet> w;
  std::string w_note;
  try {
    if (auto found = search_witnesses(g, xn, z_names, yn, WitnessMode::theorem1))
      w = found->sets.w0;
    else
      w_note = "no covariate set passes the experimental criterion";
  } catch (const CapacityError& e) {
    w_note = e.what();
  }
  std::optional<NodeSet> s;
  std::string s_note;
  try {
    if (auto found = search_backdoor_set(g, xn, z_names))
      s = found;
    else
      s_note = "no back-door admissible set";
  } catch (const CapacityError& e) {
    s_note = e.what();
  }
  bool observed = scm.variable(x_var).observable && scm.variable(y_var).observable;
  for (std::size_t v : z) observed = observed && scm.variable(v).observable;

  const int n = scm.variable(x_var).domain.size();
  for (int x = 0; x < n; ++x)
    for (int xr = 0; xr < n; ++xr) {
      if (x == xr) continue;
      const auto& d = scm.variable(x_var).domain;
      const std::string where =
          xn + "->" + yn + " x=" + d.label(x) + " x*=" + d.label(xr);
      const double te = te_avg(scm, x_var, x, xr, y);
      const double nde = nde_avg(scm, x_var, x, xr, z, y);
      const double nie = nie_avg(scm, x_var, x, xr, z, y);
      const double nde_rev = nde_avg(scm, x_var, xr, x, z, y);
      const double nie_rev = nie_avg(scm, x_var, xr, x, z, y);
      b.identity(where, "TE(x,x*) = NIE(x,x*) - NDE(x*,x)", te, nie - nde_rev);
      b.identity(where, "TE(x,x*) = NDE(x,x*) - NIE(x*,x)", te, nde - nie_rev);
      b.identity(where, "PSE over {" + edges_text(scm, direct) + "} = NDE",
                 pse_avg(scm, direct, x_var, x, xr, y), nde);
      b.identity(where, "PSE over all edges except " + xn + "->" + yn + " = NIE",
                 pse_avg(scm, indirect, x_var, x, xr, y), nie);
      b.identity(where, "PSE over all edges = TE", pse_avg(scm, all, x_var, x, xr, y),
                 te);

      for (Formula f : {Formula::eq8, Formula::eq26, Formula::eq15, Formula::eq17,
                        Formula::eq27}) {
        const std::string name = to_string(f) + " = " +
                                 (targets_direct_effect(f) ? "NDE" : "NIE");
        if (!observed) {
          b.add(where, name, CrosscheckStatus::not_applicable, 0.0,
                "unobservable query variable");
          continue;
        }
        EstimandQuery q{x_var, x, xr, z, y_var, std::nullopt, {}};
        std::optional<NodeSet> cov;
        std::string note;
        if (is_experimental(f)) {
          cov = w;
          note = w_note;
        } else if (f == Formula::eq15) {
          cov = s;
          note = s_note;
        } else {
          cov = NodeSet{};
        }
        if (!cov) {
          b.add(where, name, CrosscheckStatus::not_applicable, 0.0, note);
          continue;
        }
        for (const auto& c : *cov) q.covariates.push_back(scm.index_of(c));
        const CrosscheckReport rep = crosscheck(scm, f, q);
        std::string label = (is_experimental(f) ? "W=" : "S=") + to_string(*cov);
        if (rep.estimate.premises == PremiseState::violated) {
          b.add(where, name, CrosscheckStatus::not_applicable, 0.0,
                "premises fail for " + label);
          continue;
        }
        if (rep.status == CrosscheckStatus::not_applicable) {
          b.add(where, name, rep.status, 0.0, "positivity fails for " + label);
          continue;
        }
        const double accounted =
            rep.estimate.evaluated_mass + rep.estimate.positivity_mass;
        if (std::fabs(accounted - 1.0) >= kCrosscheckTolerance) {
          b.add(where, name, CrosscheckStatus::fail, rep.gap,
                "stratum mass " + format_number(accounted));
          continue;
        }
        if (is_experimental(f) || f == Formula::eq15)
          b.add(where, name, rep.status, rep.gap, label);
        else
          b.add(where, name, rep.status, rep.gap);
      }
    }
}

Report run_check(const CheckFlags& f) {
  const LoadedModel m = load(f.model);
  const Scm& scm = m.scm();
  std::optional<std::size_t> only_x, only_y;
  if (!f.treatment.empty()) only_x = scm.index_of(f.treatment);
  if (!f.outcome.empty()) only_y = scm.index_of(f.outcome);

  Report r;
  r.doc["command"] = "check";
  r.doc["model"] = scm.name();
  r.line("model: " + scm.name());
  Battery b{r};
  for (std::size_t x = 0; x < scm.size(); ++x)
    for (std::size_t yv = 0; yv < scm.size(); ++yv) {
      if (x == yv || (only_x && *only_x != x) || (only_y && *only_y != yv)) continue;
      if (default_mediators(scm, x, yv).empty()) continue;
      if (!descendants(scm.graph(), {scm.variable(x).name})
               .count(scm.variable(yv).name))
        continue;
      check_pair(scm, x, yv, b);
    }
  r.doc["checks"] = b.checks;
  r.doc["passed"] = b.passed;
  r.doc["failed"] = b.failed;
  r.doc["not_applicable"] = b.skipped;
  r.line("checks: " + std::to_string(b.passed) + " passed, " +
         std::to_string(b.failed) + " failed, " + std::to_string(b.skipped) +
         " not applicable");
  if (b.passed + b.failed == 0)
    r.warnings.push_back(
        "no pair with Y downstream of X and a nonempty mediator set");
  if (b.failed > 0) r.exit_code = 2;
  return r;
}

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::validation:
    case ErrorKind::capacity: return 1;
    case ErrorKind::criterion:
    case ErrorKind::estimand: return 2;
  }
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Causal mediation analysis over discrete structural models",
               "mediate"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  EffectsFlags ef;
  auto* effects = app.add_subcommand("effects", "ground-truth effects by enumeration");
  ef.attach(effects);
  effects->add_option("--kind", ef.kind, "CDE, NDE, NIE, TE or PSE")->required();
  effects->add_option("--z-setting", ef.setting, "CDE mediator setting VAR=value,...");
  effects->add_option("--edges", ef.edges, "PSE edge subgraph A->B,C->D");
  effects->add_option("--unit", ef.unit, "unit-level effect at U=value,...");
  effects->add_flag("--per-unit", ef.per_unit, "list every unit's contribution");

  IdentifyFlags idf;
  auto* identify = app.add_subcommand("identify", "graphical identification tests");
  idf.attach(identify, false);
  identify->add_option("--mode", idf.mode, "theorem1 or corollary1")
      ->check(CLI::IsMember({"theorem1", "corollary1"}));
  identify->add_option("--W", idf.w, "covariate set (theorem1)");
  identify->add_option("--W0", idf.w0, "covariate set W0 (corollary1)");
  identify->add_option("--W1", idf.w1, "covariate set W1 (corollary1)");
  identify->add_option("--W2", idf.w2, "covariate set W2 (corollary1)");
  identify->add_option("--W3", idf.w3, "covariate set W3 (corollary1)");
  identify->add_flag("--witness-search", idf.search, "search for covariate sets");
  identify->add_option("--convention", idf.convention, "printed or backdoor-iv")
      ->check(CLI::IsMember({"printed", "backdoor-iv"}));

  EstimateFlags esf;
  auto* estimate = app.add_subcommand("estimate", "evaluate an identification formula");
  esf.attach(estimate);
  estimate->add_option("--formula", esf.formula, "eq8, eq15, eq17, eq26 or eq27")
      ->required();
  estimate->add_option("--provider", esf.provider, "exact or dataset")
      ->check(CLI::IsMember({"exact", "dataset"}));
  estimate->add_option("--data", esf.data, "dataset file (repeatable)");
  estimate->add_option("--W", esf.covariates, "covariate set for eq8/eq26");
  estimate->add_option("--S", esf.s_covariates, "back-door set for eq15");
  estimate->add_option("--smoothing", esf.smoothing, "add-one style pseudo-count")
      ->check(CLI::NonNegativeNumber);
  estimate->add_flag("--no-graph", esf.no_graph,
                     "pure-data mode: do not check premises against the model graph");

  SampleFlags sf;
  auto* sample_cmd = app.add_subcommand("sample", "draw a dataset from a model");
  sample_cmd->add_option("--model", sf.model, "model file or built-in fixture name")
      ->required();
  sample_cmd->add_option("--n", sf.n, "number of rows")->required()->check(
      CLI::PositiveNumber);
  sample_cmd->add_option("--seed", sf.seed, "generator seed")->required();
  sample_cmd->add_option("--do", sf.regime, "intervention VAR=value,...");
  sample_cmd->add_option("--out", sf.out, "output path")->required();
  sample_cmd->add_option("--format", sf.format, "text or machine")
      ->check(CLI::IsMember({"text", "machine"}));

  CheckFlags cf;
  auto* check = app.add_subcommand("check", "crosscheck battery over a model");
  check->add_option("--model", cf.model, "model file or built-in fixture name")
      ->required();
  check->add_option("--X", cf.treatment, "restrict to this treatment");
  check->add_option("--Y", cf.outcome, "restrict to this outcome");
  check->add_option("--format", cf.format, "text or machine")
      ->check(CLI::IsMember({"text", "machine"}));

  std::string print_target;
  auto* print = app.add_subcommand("print", "print a model in canonical form");
  print->add_option("--model", print_target, "model file or built-in fixture name")
      ->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    Report r;
    std::string format = "text";
    if (effects->parsed()) {
      r = run_effects(ef);
      format = ef.format;
    } else if (identify->parsed()) {
      r = run_identify(idf);
      format = idf.format;
    } else if (estimate->parsed()) {
      r = run_estimate(esf);
      format = esf.format;
    } else if (sample_cmd->parsed()) {
      r = run_sample(sf);
      format = sf.format;
    } else if (check->parsed()) {
      r = run_check(cf);
      format = cf.format;
    } else {
      const LoadedModel m = load(print_target);
      out << print_model(m.doc.spec);
      return 0;
    }
    r.emit(out, format == "machine");
    return r.exit_code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace mediation::cli
