#include <doctest.h>

#include <random>
#include <sstream>

#include "mediation/counterfactual.hpp"
#include "mediation/error.hpp"
#include "mediation/model.hpp"
#include "mediation/sampling.hpp"
#include "support/helpers.hpp"
#include "support/random_scm.hpp"

using namespace mediation;

namespace {

VariableSpec var(std::string name, std::vector<std::string> domain,
                 std::vector<std::string> parents, std::vector<std::string> exo,
                 std::map<std::string, std::string> table) {
  VariableSpec v;
  v.name = std::move(name);
  v.domain = std::move(domain);
  v.parents = std::move(parents);
  v.exo_parents = std::move(exo);
  v.table = std::move(table);
  return v;
}

ModelSpec coin_model() {
  ModelSpec s;
  s.name = "coin";
  s.exogenous.push_back({"U", {"h", "t"}, std::map<std::string, double>{{"h", 0.3}, {"t", 0.7}}});
  s.variables.push_back(var("X", {"0", "1"}, {}, {"U"}, {{"h", "1"}, {"t", "0"}}));
  s.variables.push_back(var("Y", {"0", "1"}, {"X"}, {}, {{"0", "1"}, {"1", "0"}}));
  return s;
}

bool has_message(const ValidationReport& r, const std::string& path,
                 const std::string& message) {
  for (const auto& v : r.violations)
    if (v.path == path && v.message == message) return true;
  return false;
}

}  // namespace

TEST_CASE("validation reports mass, totality, domain and duplicate errors") {
  ModelSpec s = coin_model();
  (*s.exogenous[0].marginal)["t"] = 0.6;
  CHECK(has_message(validate(s), "/exogenous/0/marginal", "exogenous mass 0.9 ≠ 1"));

  s = coin_model();
  s.variables[1].table.erase("1");
  CHECK(has_message(validate(s), "/variables/1/table",
                    "table not total: missing tuple '1'"));

  s = coin_model();
  s.variables[1].table["1"] = "7";
  auto r = validate(s);
  REQUIRE_FALSE(r.ok());
  CHECK(r.violations[0].path == "/variables/1/table/1");

  s = coin_model();
  s.variables.push_back(s.variables[0]);
  r = validate(s);
  REQUIRE_FALSE(r.ok());
  CHECK(r.violations[0].message == "duplicate variable name 'X'");
  CHECK(r.violations[0].related == "/variables/0/name");
}

TEST_CASE("validation detects cycles") {
  ModelSpec s;
  s.name = "loop";
  s.variables.push_back(var("A", {"0", "1"}, {"B"}, {}, {{"0", "0"}, {"1", "1"}}));
  s.variables.push_back(var("B", {"0", "1"}, {"A"}, {}, {{"0", "0"}, {"1", "1"}}));
  auto r = validate(s);
  REQUIRE_FALSE(r.ok());
  bool found = false;
  for (const auto& v : r.violations)
    found = found || v.message.rfind("cycle detected: ", 0) == 0;
  CHECK(found);
  CHECK_THROWS_AS(Scm{s}, ValidationError);
}

TEST_CASE("units are enumerated with their probabilities") {
  Scm scm(coin_model());
  REQUIRE(scm.units().size() == 2);
  CHECK(scm.units()[0].probability == doctest::Approx(0.3));
  CHECK(scm.units()[1].probability == doctest::Approx(0.7));
  CHECK(scm.markovian());
}

TEST_CASE("evaluation under interventions") {
  Scm scm(coin_model());
  const Unit heads{{0}};
  CHECK(evaluate(scm, heads, {}) == World{1, 0});
  CHECK(evaluate(scm, heads, Regime{{{0, 0}}}) == World{0, 1});
  CHECK(evaluate(scm, heads, Regime{{{1, 1}}}) == World{1, 1});
  CHECK_THROWS_AS(evaluate(scm, Unit{{5}}, {}), ValidationError);
  CHECK_THROWS_AS(evaluate(scm, heads, Regime{{{0, 2}}}), ValidationError);
}

TEST_CASE("nested counterfactual freezes mediators at reference values") {
  const auto b = testing_support::fixture("fixtureB");
  const Unit u{};
  const std::size_t x = b->index_of("X"), z = b->index_of("Z"), y = b->index_of("Y");
  // Y_{1, Z_0} = 1 + 2*0
  CHECK(nested_outcome(*b, u, x, 1, 0, {z}, y) == 1);
  CHECK(nested_outcome(*b, u, x, 0, 1, {z}, y) == 2);
  CHECK_THROWS_AS(nested_outcome(*b, u, x, 1, 0, {}, y), ValidationError);
  CHECK_THROWS_AS(nested_outcome(*b, u, x, 1, 0, {y}, y), ValidationError);
}

TEST_CASE("path surgery on fixture D") {
  const auto d = testing_support::fixture("fixtureD");
  auto g = parse_subgraph(*d, "X->Z, Z->W, W->Y");
  PathSurgery s(*d, g, d->index_of("X"), 0);
  CHECK(s.frozen_parents(d->index_of("W")) == std::vector<std::size_t>{d->index_of("X")});
  const World w = s.evaluate(Unit{}, Regime{{{d->index_of("X"), 1}}});
  CHECK(w[d->index_of("Z")] == 1);
  CHECK(w[d->index_of("W")] == 1);
  CHECK(w[d->index_of("Y")] == 2);
  CHECK_THROWS_WITH_AS(parse_subgraph(*d, "X->Y"), "edge X->Y is not in the causal graph",
                       ValidationError);
}

TEST_CASE("correlated exogenous variables form one graph block") {
  ModelSpec s;
  s.name = "confounded";
  s.exogenous.push_back({"A", {"0", "1"}, std::nullopt});
  s.exogenous.push_back({"B", {"0", "1"}, std::nullopt});
  s.exogenous.push_back({"C", {"0", "1"}, std::nullopt});
  // A and B agree; C is independent of both.
  s.joint = std::map<std::string, double>{
      {"0,0,0", 0.25}, {"0,0,1", 0.25}, {"1,1,0", 0.25}, {"1,1,1", 0.25}};
  s.variables.push_back(var("X", {"0", "1"}, {}, {"A"}, {{"0", "0"}, {"1", "1"}}));
  s.variables.push_back(var("Y", {"0", "1"}, {"X"}, {"B", "C"},
                            {{"0,0,0", "0"}, {"0,0,1", "1"}, {"0,1,0", "1"}, {"0,1,1", "0"},
                             {"1,0,0", "1"}, {"1,0,1", "0"}, {"1,1,0", "0"}, {"1,1,1", "1"}}));
  Scm scm(s);
  CHECK(scm.exogenous_blocks() == std::vector<std::vector<std::size_t>>{{0, 1}, {2}});
  CHECK(scm.graph().has_node("A__B"));
  CHECK(scm.graph().has_edge("A__B", "X"));
  CHECK(scm.graph().has_edge("A__B", "Y"));
  CHECK_FALSE(scm.markovian());
  CHECK(scm.units().size() == 4);
}

TEST_CASE("exact distributions sum to one") {
  std::mt19937_64 rng(3);
  for (auto noise : {testing_support::NoiseKind::markovian,
                     testing_support::NoiseKind::correlated}) {
    testing_support::RandomScmOptions o;
    o.noise = noise;
    for (int i = 0; i < 10; ++i) {
      Scm scm(testing_support::random_model(rng, o));
      std::vector<std::size_t> all(scm.size());
      for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
      auto d = exact_distribution(scm, {}, all);
      double total = 0.0;
      for (const auto& [k, p] : d.probability) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(d.mass({}) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("sampling is seed-deterministic and round-trips through text") {
  const auto f = testing_support::fixture("fixtureF");
  const auto a = sample(*f, 500, 42, {});
  const auto b = sample(*f, 500, 42, {});
  const auto c = sample(*f, 500, 43, {});
  CHECK(a.rows == b.rows);
  CHECK(a.rows != c.rows);
  std::stringstream ss;
  write_dataset(f->schema(), a, ss);
  auto back = read_dataset(f->schema(), ss, {});
  CHECK(back.columns == a.columns);
  CHECK(back.rows == a.rows);
}

TEST_CASE("interventional samples respect the regime") {
  const auto f = testing_support::fixture("fixtureF");
  const Regime r = make_regime(*f, {{"X", "1"}});
  const auto d = sample(*f, 200, 1, r);
  for (const auto& row : d.rows) CHECK(row[0] == 1);
  CHECK(format_regime(f->schema(), r) == "do:X=1");
  CHECK(parse_regime(f->schema(), "do:X=1\n") == r);
  CHECK(parse_regime(f->schema(), "observational").is_observational());
  CHECK_THROWS_AS(parse_regime(f->schema(), "maybe"), ValidationError);
}

TEST_CASE("randomized columns are drawn uniformly") {
  const auto f = testing_support::fixture("fixtureF");
  SampleOptions o;
  o.randomized = {f->index_of("Z")};
  const auto d = sample(*f, 3000, 9, {}, o);
  std::vector<int> counts(3, 0);
  for (const auto& row : d.rows) ++counts[row[1]];
  for (int c : counts) CHECK(c > 850);
}

TEST_CASE("dataset reader reports line numbers") {
  const auto f = testing_support::fixture("fixtureF");
  std::stringstream bad_value("X,Z,Y\n0,1,0\n0,7,1\n");
  CHECK_THROWS_WITH(read_dataset(f->schema(), bad_value, {}),
                    "dataset line 3: value '7' is not in the domain of 'Z'");
  std::stringstream short_row("X,Z,Y\n0,1\n");
  CHECK_THROWS_WITH(read_dataset(f->schema(), short_row, {}),
                    "dataset line 2: expected 3 values, found 2");
  std::stringstream regime_clash("X,Z,Y\n0,1,0\n");
  CHECK_THROWS_AS(read_dataset(f->schema(), regime_clash, make_regime(*f, {{"X", "1"}})),
                  ValidationError);
  std::stringstream unknown("X,Q\n");
  CHECK_THROWS_AS(read_dataset(f->schema(), unknown, {}), ValidationError);
}
