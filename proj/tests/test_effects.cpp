#include <doctest.h>

#include <cmath>
#include <random>

#include "mediation/effects.hpp"
#include "mediation/error.hpp"
#include "support/helpers.hpp"
#include "support/random_scm.hpp"

using namespace mediation;
using testing_support::fixture;

namespace {

struct Names {
  std::size_t x, y;
  std::vector<std::size_t> z;
};

Names names(const Scm& scm, const std::string& z = "Z") {
  return {scm.index_of("X"), scm.index_of("Y"), {scm.index_of(z)}};
}

constexpr double kTol = 1e-9;

}  // namespace

TEST_CASE("aspirin fixture: no natural direct effect, nonzero controlled effect") {
  const auto a = fixture("fixtureA");
  const auto n = names(*a);
  const Outcome y{n.y, std::nullopt};
  const Unit u{};
  CHECK(nde_unit(*a, u, n.x, 1, 0, n.z, y) == 0.0);
  CHECK(cde_unit(*a, u, n.x, 1, 0, Assignment{{n.z[0], 1}}, y) == 1.0);
  CHECK(cde_unit(*a, u, n.x, 1, 0, Assignment{{n.z[0], 0}}, y) == 0.0);
  CHECK(nie_unit(*a, u, n.x, 1, 0, n.z, y) == 0.0);
  CHECK(te_avg(*a, n.x, 1, 0, y) == 1.0);
  CHECK(nde_avg(*a, n.x, 1, 0, n.z, y) == 0.0);

  auto cde = has_effect(*a, EffectPresence::controlled_direct, u, n.x, n.y);
  REQUIRE(cde);
  CHECK(cde->setting == Assignment{{n.z[0], 1}});
  // Only the reverse transition carries a natural direct effect: Y_{0,Z_1} = 0, Y_1 = 1.
  auto nde = has_effect(*a, EffectPresence::natural_direct, u, n.x, n.y);
  REQUIRE(nde);
  CHECK(nde->x == 0);
  CHECK(nde->x_ref == 1);
}

TEST_CASE("fixture B: NDE 1, NIE 2, TE 3") {
  const auto b = fixture("fixtureB");
  const auto n = names(*b);
  const Outcome y{n.y, std::nullopt};
  CHECK(nde_avg(*b, n.x, 1, 0, n.z, y) == 1.0);
  CHECK(nie_avg(*b, n.x, 1, 0, n.z, y) == 2.0);
  CHECK(te_avg(*b, n.x, 1, 0, y) == 3.0);
  CHECK(nde_unit(*b, Unit{}, n.x, 1, 0, n.z, y) == 1.0);
  CHECK(nie_unit(*b, Unit{}, n.x, 1, 0, n.z, y) == 2.0);
}

TEST_CASE("fixture D: path-specific effect along X->Z->W->Y") {
  const auto d = fixture("fixtureD");
  const auto g = parse_subgraph(*d, "X->Z,Z->W,W->Y");
  const Outcome y{d->index_of("Y"), std::nullopt};
  CHECK(pse_avg(*d, g, d->index_of("X"), 1, 0, y) == 2.0);
  CHECK(pse_unit(*d, g, Unit{}, d->index_of("X"), 1, 0, y) == 2.0);
}

TEST_CASE("fixture E matches the independent enumeration oracle") {
  const auto e = fixture("fixtureE");
  const auto n = names(*e);
  const Outcome y{n.y, std::nullopt};
  CHECK(std::fabs(nde_avg(*e, n.x, 1, 0, n.z, y) - 0.48) < kTol);
  CHECK(std::fabs(nie_avg(*e, n.x, 1, 0, n.z, y) - 0.24) < kTol);
  CHECK(std::fabs(te_avg(*e, n.x, 1, 0, y) - 0.32) < kTol);
  CHECK(std::fabs(nde_avg(*e, n.x, 0, 1, n.z, y) + 0.08) < kTol);
  CHECK(std::fabs(nie_avg(*e, n.x, 0, 1, n.z, y) - 0.16) < kTol);
  CHECK(std::fabs(te_avg(*e, n.x, 0, 1, y) + 0.32) < kTol);
}

TEST_CASE("averages are probability-weighted sums of unit effects") {
  const auto e = fixture("fixtureE");
  const auto n = names(*e);
  const Outcome y{n.y, std::nullopt};
  const Assignment z1{{n.z[0], 1}};
  double nde = 0, nie = 0, cde = 0;
  for (const auto& wu : e->units()) {
    nde += wu.probability * nde_unit(*e, wu.unit, n.x, 1, 0, n.z, y);
    nie += wu.probability * nie_unit(*e, wu.unit, n.x, 1, 0, n.z, y);
    cde += wu.probability * cde_unit(*e, wu.unit, n.x, 1, 0, z1, y);
  }
  CHECK(std::fabs(nde - nde_avg(*e, n.x, 1, 0, n.z, y)) < kTol);
  CHECK(std::fabs(nie - nie_avg(*e, n.x, 1, 0, n.z, y)) < kTol);
  CHECK(std::fabs(cde - cde_avg(*e, n.x, 1, 0, z1, y)) < kTol);
}

TEST_CASE("null transition gives zero for every kind") {
  const auto e = fixture("fixtureE");
  const auto n = names(*e);
  const Outcome y{n.y, std::nullopt};
  for (int x = 0; x < 2; ++x) {
    CHECK(nde_avg(*e, n.x, x, x, n.z, y) == 0.0);
    CHECK(nie_avg(*e, n.x, x, x, n.z, y) == 0.0);
    CHECK(te_avg(*e, n.x, x, x, y) == 0.0);
    CHECK(cde_avg(*e, n.x, x, x, Assignment{{n.z[0], 0}}, y) == 0.0);
    CHECK(pse_avg(*e, full_subgraph(*e), n.x, x, x, y) == 0.0);
  }
}

TEST_CASE("argument checks") {
  const auto e = fixture("fixtureE");
  const auto n = names(*e);
  const Outcome y{n.y, std::nullopt};
  CHECK_THROWS_AS(cde_avg(*e, n.x, 1, 0, Assignment{{n.x, 0}}, y), ValidationError);
  CHECK_THROWS_AS(cde_avg(*e, n.x, 1, 0, Assignment{{n.y, 0}}, y), ValidationError);
  CHECK_THROWS_AS(nde_avg(*e, n.x, 1, 0, {}, y), ValidationError);
  CHECK_THROWS_AS(te_avg(*e, n.x, 2, 0, y), ValidationError);
  CHECK_THROWS_AS(te_avg(*e, n.y, 1, 0, y), ValidationError);
}

TEST_CASE("constant outcome has no effect of any kind") {
  ModelSpec s;
  s.name = "flat";
  VariableSpec x{"X", {"0", "1"}, std::nullopt, true, {}, {}, {{"", "0"}}};
  VariableSpec z{"Z", {"0", "1"}, std::nullopt, true, {"X"}, {}, {{"0", "0"}, {"1", "1"}}};
  VariableSpec y{"Y", {"0", "1"}, std::nullopt, true, {"X", "Z"}, {},
                 {{"0,0", "1"}, {"0,1", "1"}, {"1,0", "1"}, {"1,1", "1"}}};
  s.variables = {x, z, y};
  Scm scm(s);
  for (auto k : {EffectPresence::controlled_direct, EffectPresence::natural_direct,
                 EffectPresence::indirect})
    CHECK_FALSE(has_effect(scm, k, Unit{}, 0, 2));
}

TEST_CASE("identities, reductions and antisymmetry on random models") {
  std::mt19937_64 rng(5);
  int models = 0;
  for (auto noise : {testing_support::NoiseKind::markovian,
                     testing_support::NoiseKind::correlated}) {
    testing_support::RandomScmOptions o;
    o.noise = noise;
    for (int i = 0; i < 25; ++i, ++models) {
      Scm scm(testing_support::random_model(rng, o));
      const std::size_t x = 0, yv = scm.size() - 1;
      const auto z = default_mediators(scm, x, yv);
      REQUIRE_FALSE(z.empty());
      const Outcome y{yv, std::nullopt};
      PathSubgraph direct, indirect = full_subgraph(scm);
      if (std::find(scm.parents(yv).begin(), scm.parents(yv).end(), x) !=
          scm.parents(yv).end()) {
        direct.edges.insert({x, yv});
        indirect.edges.erase({x, yv});
      }
      const int d = scm.variable(x).domain.size();
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          const double te = te_avg(scm, x, a, b, y);
          CHECK(std::fabs(te - (nie_avg(scm, x, a, b, z, y) - nde_avg(scm, x, b, a, z, y))) < kTol);
          CHECK(std::fabs(te - (nde_avg(scm, x, a, b, z, y) - nie_avg(scm, x, b, a, z, y))) < kTol);
          CHECK(std::fabs(te + te_avg(scm, x, b, a, y)) < kTol);
          CHECK(std::fabs(pse_avg(scm, direct, x, a, b, y) - nde_avg(scm, x, a, b, z, y)) < kTol);
          CHECK(std::fabs(pse_avg(scm, indirect, x, a, b, y) - nie_avg(scm, x, a, b, z, y)) < kTol);
          CHECK(std::fabs(pse_avg(scm, full_subgraph(scm), x, a, b, y) - te) < kTol);
          for (const auto& wu : scm.units()) {
            CHECK(pse_unit(scm, direct, wu.unit, x, a, b, y) ==
                  nde_unit(scm, wu.unit, x, a, b, z, y));
            CHECK(pse_unit(scm, indirect, wu.unit, x, a, b, y) ==
                  nie_unit(scm, wu.unit, x, a, b, z, y));
          }
        }
    }
  }
  CHECK(models == 50);
}

TEST_CASE("linear models are additive") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10; ++i) {
    Scm scm(testing_support::random_linear_model(rng));
    const std::size_t x = scm.index_of("X"), yv = scm.index_of("Y");
    const auto z = default_mediators(scm, x, yv);
    const Outcome y{yv, std::nullopt};
    CHECK(std::fabs(te_avg(scm, x, 1, 0, y) -
                    (nde_avg(scm, x, 1, 0, z, y) + nie_avg(scm, x, 1, 0, z, y))) < kTol);
  }
}

TEST_CASE("query surface: reports, decomposition and indicator outcomes") {
  const auto e = fixture("fixtureE");
  EffectQuery q;
  q.kind = EffectKind::te;
  q.treatment = "X";
  q.outcome = "Y";
  q.x = "1";
  q.x_ref = "0";
  auto r = compute_effect(*e, q);
  CHECK(r.method == "ground-truth enumeration");
  REQUIRE(r.decomposition);
  const auto& d = *r.decomposition;
  CHECK(std::fabs(r.value - (d[0] - d[1])) < kTol);
  CHECK(std::fabs(r.value - (d[2] - d[3])) < kTol);

  q.kind = EffectKind::nde;
  q.mediators = std::vector<std::string>{"Z"};
  r = compute_effect(*e, q, true);
  CHECK(r.custom_mediators);
  CHECK(r.per_unit.size() == e->units().size());
  CHECK(std::fabs(r.value - 0.48) < kTol);

  q.mediators.reset();
  q.kind = EffectKind::te;
  q.outcome_indicator = "1";
  r = compute_effect(*e, q);
  // y is binary with codes 0/1, so the indicator of y=1 equals the code.
  CHECK(std::fabs(r.value - 0.32) < kTol);
  q.outcome_indicator = "0";
  r = compute_effect(*e, q);
  CHECK(std::fabs(r.value + 0.32) < kTol);

  CHECK(parse_effect_kind("nde") == EffectKind::nde);
  CHECK_THROWS_AS(parse_effect_kind("ratio"), ValidationError);
  q.kind = EffectKind::pse;
  q.outcome_indicator.reset();
  CHECK_THROWS_AS(compute_effect(*e, q), ValidationError);
  q.edges = "X->Y";
  r = compute_effect(*e, q);
  CHECK(std::fabs(r.value - 0.48) < kTol);
}
