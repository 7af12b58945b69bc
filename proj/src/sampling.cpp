#include "mediation/sampling.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "mediation/counterfactual.hpp"
#include "mediation/error.hpp"

namespace mediation {

Dataset sample(const Scm& scm, std::size_t n, std::uint64_t seed,
               const Regime& regime, const SampleOptions& options) {
  if (n == 0) throw ValidationError("sample size must be at least 1");
  for (std::size_t v : options.randomized) {
    if (v >= scm.size()) throw ValidationError("randomized unknown variable");
    if (regime.fixings.contains(v))
      throw ValidationError("variable '" + scm.variable(v).name +
                            "' is both fixed and randomized");
  }

  Dataset data;
  data.regime = regime;
  data.seed = seed;
  for (std::size_t v = 0; v < scm.size(); ++v)
    if (options.include_unobserved || scm.variable(v).observable)
      data.columns.push_back(v);

  const auto& units = scm.units();
  std::vector<double> weights;
  weights.reserve(units.size());
  for (const auto& wu : units) weights.push_back(wu.probability);

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  data.rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    Regime row_regime = regime;
    for (std::size_t v : options.randomized) {
      std::uniform_int_distribution<int> draw(0, scm.variable(v).domain.size() - 1);
      row_regime.fixings.set(v, draw(rng));
    }
    const World world = evaluate(scm, units[pick(rng)].unit, row_regime);
    std::vector<int> row;
    row.reserve(data.columns.size());
    for (std::size_t c : data.columns) row.push_back(world[c]);
    data.rows.push_back(std::move(row));
  }
  return data;
}

void write_dataset(const Schema& schema, const Dataset& data,
                   std::ostream& out) {
  for (std::size_t k = 0; k < data.columns.size(); ++k)
    out << (k ? "," : "") << schema.names.at(data.columns[k]);
  out << '\n';
  for (const auto& row : data.rows) {
    for (std::size_t k = 0; k < row.size(); ++k)
      out << (k ? "," : "")
          << schema.domains.at(data.columns[k]).label(row[k]);
    out << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, delimiter)) out.push_back(cell);
  if (!line.empty() && line.back() == delimiter) out.emplace_back();
  return out;
}

}  // namespace

Dataset read_dataset(const Schema& schema, std::istream& in,
                     const Regime& regime, char delimiter) {
  Dataset data;
  data.regime = regime;
  std::string line;
  if (!std::getline(in, line))
    throw ValidationError("dataset is empty; expected a header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  for (const auto& name : split(line, delimiter)) {
    auto idx = schema.find(name);
    if (!idx)
      throw ValidationError("dataset line 1: unknown column '" + name + "'");
    if (std::find(data.columns.begin(), data.columns.end(), *idx) !=
        data.columns.end())
      throw ValidationError("dataset line 1: duplicate column '" + name + "'");
    data.columns.push_back(*idx);
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line, delimiter);
    if (cells.size() != data.columns.size())
      throw ValidationError("dataset line " + std::to_string(line_no) +
                            ": expected " +
                            std::to_string(data.columns.size()) +
                            " values, found " + std::to_string(cells.size()));
    std::vector<int> row;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::size_t var = data.columns[k];
      auto value = schema.domains[var].find(cells[k]);
      if (!value)
        throw ValidationError("dataset line " + std::to_string(line_no) +
                              ": value '" + cells[k] +
                              "' is not in the domain of '" +
                              schema.names[var] + "'");
      if (auto fixed = regime.fixings.get(var); fixed && *fixed != *value)
        throw ValidationError("dataset line " + std::to_string(line_no) +
                              ": '" + schema.names[var] +
                              "' contradicts the declared regime");
      row.push_back(*value);
    }
    data.rows.push_back(std::move(row));
  }
  return data;
}

std::string format_regime(const Schema& schema, const Regime& regime) {
  if (regime.is_observational()) return "observational";
  std::string out = "do:";
  bool first = true;
  for (const auto& [var, value] : regime.fixings.entries()) {
    if (!first) out += ",";
    out += schema.names.at(var) + "=" + schema.domains.at(var).label(value);
    first = false;
  }
  return out;
}

Regime parse_regime(const Schema& schema, std::string_view text) {
  std::string s(text);
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' '))
    s.pop_back();
  if (s == "observational") return Regime::observational();
  if (s.rfind("do:", 0) != 0)
    throw ValidationError("regime declaration '" + s +
                          "' must be 'observational' or 'do:VAR=value,...'");
  Regime regime;
  std::stringstream ss(s.substr(3));
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw ValidationError("regime entry '" + item + "' must be VAR=value");
    std::string name = item.substr(0, eq);
    std::size_t var = schema.index_of(name);
    if (regime.fixings.contains(var))
      throw ValidationError("regime fixes '" + name + "' twice");
    regime.fixings.set(var, schema.domains[var].index_of(item.substr(eq + 1), name));
  }
  if (regime.fixings.empty())
    throw ValidationError("regime declaration 'do:' fixes nothing");
  return regime;
}

}  // namespace mediation
