#include <doctest.h>

#include <random>

#include "mediation/error.hpp"
#include "mediation/graph.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"
#include "support/random_scm.hpp"

using namespace mediation;

namespace {

CausalGraph chain() { return CausalGraph::from_edges({{"X", "Z"}, {"Z", "Y"}}); }

}  // namespace

TEST_CASE("d-separation on the three canonical connections") {
  auto chain_g = chain();
  CHECK_FALSE(d_separated(chain_g, {"X"}, {"Y"}, {}));
  CHECK(d_separated(chain_g, {"X"}, {"Y"}, {"Z"}));

  auto fork = CausalGraph::from_edges({{"Z", "X"}, {"Z", "Y"}});
  CHECK_FALSE(d_separated(fork, {"X"}, {"Y"}, {}));
  CHECK(d_separated(fork, {"X"}, {"Y"}, {"Z"}));

  auto collider = CausalGraph::from_edges({{"X", "Z"}, {"Y", "Z"}, {"Z", "D"}});
  CHECK(d_separated(collider, {"X"}, {"Y"}, {}));
  CHECK_FALSE(d_separated(collider, {"X"}, {"Y"}, {"Z"}));
  CHECK_FALSE(d_separated(collider, {"X"}, {"Y"}, {"D"}));
}

TEST_CASE("d-separation rejects overlapping or unknown sets") {
  auto g = chain();
  CHECK_THROWS_AS(d_separated(g, {"X"}, {"X"}, {}), ValidationError);
  CHECK_THROWS_AS(d_separated(g, {"X"}, {"Y"}, {"Y"}), ValidationError);
  CHECK_THROWS_AS(d_separated(g, {"Q"}, {"Y"}, {}), ValidationError);
}

TEST_CASE("graph construction rejects cycles and edges into exogenous nodes") {
  CausalGraph g = chain();
  CHECK_THROWS_WITH_AS(g.add_edge("Y", "X"),
                       "cycle detected: edge Y->X closes a directed cycle",
                       ValidationError);
  g.add_node("U", true, false);
  CHECK_THROWS_AS(g.add_edge("X", "U"), ValidationError);
  CHECK_THROWS_AS(g.add_edge("X", "nowhere"), ValidationError);
}

TEST_CASE("mutilation deletes outgoing and incoming edges") {
  auto g = CausalGraph::from_edges({{"W", "X"}, {"X", "Z"}, {"Z", "Y"}, {"X", "Y"}});
  MutilationSpec out;
  out.delete_outgoing_of = {"X"};
  auto m = mutilate(g, out);
  CHECK(m.has_edge("W", "X"));
  CHECK_FALSE(m.has_edge("X", "Z"));
  CHECK_FALSE(m.has_edge("X", "Y"));
  MutilationSpec in;
  in.delete_incoming_of = {"X", "Y"};
  auto m2 = mutilate(g, in);
  CHECK_FALSE(m2.has_edge("W", "X"));
  CHECK(m2.has_edge("X", "Z"));
  CHECK_FALSE(m2.has_edge("Z", "Y"));
}

TEST_CASE("experimental criterion on fixture E") {
  const auto scm = testing_support::fixture("fixtureE");
  const auto& g = scm->graph();
  CHECK(check_experimental_criterion(g, "X", {"Z"}, "Y", {"W"}));
  CHECK_FALSE(check_experimental_criterion(g, "X", {"Z"}, "Y", {}));
  auto w = search_witnesses(g, "X", {"Z"}, "Y", WitnessMode::theorem1);
  REQUIRE(w);
  CHECK(w->sets.w0 == NodeSet{"W"});
}

TEST_CASE("experimental criterion refuses descendant covariates") {
  auto g = CausalGraph::from_edges({{"X", "Z"}, {"Z", "Y"}, {"X", "D"}, {"D", "Y"}});
  CHECK_THROWS_WITH_AS(check_experimental_criterion(g, "X", {"Z"}, "Y", {"D"}),
                       "covariate 'D' is a descendant of the treatment or a mediator",
                       CriterionError);
}

TEST_CASE("four-set criterion under the printed convention") {
  auto g = chain();
  auto r = check_corollary1(g, "X", {"Z"}, "Y", {});
  REQUIRE(r.entries.size() == 5);
  CHECK(r.entries[0].verdict);
  CHECK(r.entries[1].verdict);
  CHECK_FALSE(r.entries[2].verdict);
  CHECK_FALSE(r.entries[3].verdict);
  CHECK(r.entries[4].verdict);
  CHECK(r.failed_labels() == std::vector<std::string>{"(iii)", "(iv)"});
  CHECK_FALSE(r.overall);

  const auto e = testing_support::fixture("fixtureE");
  auto re = check_corollary1(e->graph(), "X", {"Z"}, "Y", {{"W"}, {}, {}, {}});
  CHECK(re.failed_labels() == std::vector<std::string>{"(iii)", "(iv)"});
}

TEST_CASE("back-door reading of condition (iv)") {
  auto g = chain();
  auto r = check_corollary1(g, "X", {"Z"}, "Y", {}, Corollary1Convention::backdoor_iv());
  CHECK(r.entries[3].verdict);
}

TEST_CASE("condition (v) names the offending descendant") {
  auto g = CausalGraph::from_edges({{"X", "Z"}, {"Z", "Y"}, {"X", "D"}});
  auto r = check_corollary1(g, "X", {"Z"}, "Y", {{"D"}, {}, {}, {}});
  CHECK_FALSE(r.entries[4].verdict);
  CHECK(r.entries[4].note == "W0 holds D, a descendant of X");
}

TEST_CASE("witness search prefers the smallest then lexicographically first set") {
  // Both A and B confound Z and Y; either alone fails, both are needed.
  auto g = CausalGraph::from_edges({{"A", "Z"}, {"A", "Y"}, {"B", "Z"}, {"B", "Y"},
                                    {"C", "Y"}, {"X", "Z"}, {"Z", "Y"}});
  auto w = search_witnesses(g, "X", {"Z"}, "Y", WitnessMode::theorem1);
  REQUIRE(w);
  CHECK(w->sets.w0 == NodeSet{"A", "B"});
}

TEST_CASE("witness search caps the candidate pool") {
  CausalGraph g;
  g.add_node("X");
  g.add_node("Z");
  g.add_node("Y");
  g.add_edge("X", "Z");
  g.add_edge("Z", "Y");
  for (int i = 0; i < 21; ++i) {
    const std::string n = "C" + std::to_string(i);
    g.add_node(n);
    g.add_edge(n, "Y");
  }
  CHECK_THROWS_AS(search_witnesses(g, "X", {"Z"}, "Y", WitnessMode::theorem1),
                  CapacityError);
}

TEST_CASE("back-door admissibility") {
  auto g = CausalGraph::from_edges({{"S", "X"}, {"S", "Z"}, {"X", "Z"}, {"Z", "Y"}});
  CHECK_FALSE(backdoor_admissible(g, "X", {"Z"}, {}));
  CHECK(backdoor_admissible(g, "X", {"Z"}, {"S"}));
  CHECK(search_backdoor_set(g, "X", {"Z"}) == NodeSet{"S"});
  CHECK_THROWS_AS(backdoor_admissible(g, "X", {"Y"}, {"Z"}), CriterionError);
  CHECK_THROWS_AS(backdoor_admissible(g, "X", {"X"}, {}), ValidationError);
}

TEST_CASE("d-separation and back-door agree with path enumeration") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 15; ++trial) {
    const auto g = testing_support::random_dag(rng, 6, 0.4);
    const auto& nodes = g.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j) {
        std::vector<std::string> rest;
        for (const auto& n : nodes)
          if (n != nodes[i] && n != nodes[j]) rest.push_back(n);
        for (unsigned mask = 0; mask < (1u << rest.size()); ++mask) {
          NodeSet z;
          for (std::size_t k = 0; k < rest.size(); ++k)
            if (mask & (1u << k)) z.insert(rest[k]);
          CHECK(d_separated(g, {nodes[i]}, {nodes[j]}, z) ==
                testing_support::path_d_separated(g, {nodes[i]}, {nodes[j]}, z));
          const auto desc = descendants(g, {nodes[i]});
          bool clean = true;
          for (const auto& n : z) clean = clean && !desc.count(n);
          if (clean)
            CHECK(backdoor_admissible(g, nodes[i], {nodes[j]}, z) ==
                  testing_support::path_backdoor_blocked(g, nodes[i], {nodes[j]}, z));
        }
      }
  }
}

TEST_CASE("exogenous sharing") {
  const auto e = testing_support::fixture("fixtureE");
  CHECK(exogenous_roots_unshared(e->graph()));
  CausalGraph g;
  g.add_node("U", true, false);
  g.add_node("A");
  g.add_node("B");
  g.add_edge("U", "A");
  g.add_edge("U", "B");
  CHECK_FALSE(exogenous_roots_unshared(g));
}
