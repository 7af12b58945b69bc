#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mediation {

/// Node sets are ordered by name, which is also the lexicographic order used
/// by every deterministic search in this module.
using NodeSet = std::set<std::string>;

struct Edge {
  std::string parent;
  std::string child;

  auto operator<=>(const Edge&) const = default;
};

std::string to_string(const Edge& edge);
std::string to_string(const NodeSet& nodes);

/// True when `name` is a nonempty token of letters, digits and underscores.
bool is_variable_token(std::string_view name);

/// Directed acyclic graph over named variables. Exogenous nodes are roots;
/// unobserved nodes never enter covariate searches.
class CausalGraph {
 public:
  CausalGraph() = default;

  /// Builds a graph of observed endogenous nodes from an edge list; nodes
  /// are created in order of first appearance.
  static CausalGraph from_edges(
      const std::vector<std::pair<std::string, std::string>>& edges);

  void add_node(const std::string& name, bool exogenous = false,
                bool observed = true);
  /// Rejects unknown endpoints, edges into exogenous nodes and cycles.
  void add_edge(const std::string& parent, const std::string& child);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& nodes() const { return names_; }
  std::vector<Edge> edges() const;

  bool has_node(std::string_view name) const;
  bool has_edge(std::string_view parent, std::string_view child) const;
  bool is_exogenous(std::string_view name) const;
  bool is_observed(std::string_view name) const;
  void set_observed(std::string_view name, bool observed);

  NodeSet parents(std::string_view name) const;
  NodeSet children(std::string_view name) const;
  std::vector<std::string> topological_order() const;

  // Index-level access for the algorithms below.
  std::size_t index(std::string_view name) const;
  const std::vector<std::size_t>& parent_indices(std::size_t i) const {
    return parents_[i];
  }
  const std::vector<std::size_t>& child_indices(std::size_t i) const {
    return children_[i];
  }

  bool operator==(const CausalGraph& other) const;

 private:
  bool reaches(std::size_t from, std::size_t to) const;

  std::vector<std::string> names_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<bool> exogenous_;
  std::vector<bool> observed_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

struct MutilationSpec {
  NodeSet delete_outgoing_of;
  NodeSet delete_incoming_of;

  bool operator==(const MutilationSpec&) const = default;
};

std::string to_string(const MutilationSpec& spec);

CausalGraph mutilate(const CausalGraph& graph, const MutilationSpec& spec);

/// Standard d-separation of `a` and `b` given `given` (reachability over
/// active trails). The three sets must be pairwise disjoint.
bool d_separated(const CausalGraph& graph, const NodeSet& a, const NodeSet& b,
                 const NodeSet& given);

/// Nodes reachable from `from` by directed paths, excluding `from` itself.
NodeSet descendants(const CausalGraph& graph, const NodeSet& from);

/// (Y indep Z | W) in the graph with every edge out of X and out of Z
/// removed. Throws CriterionError when W holds a descendant of X or Z.
bool check_experimental_criterion(const CausalGraph& graph,
                                  const std::string& treatment,
                                  const NodeSet& mediators,
                                  const std::string& outcome,
                                  const NodeSet& covariates);

/// Which edge classes a condition deletes, phrased relative to the query's
/// treatment and mediator set.
struct MutilationRule {
  bool out_of_treatment = false;
  bool out_of_mediators = false;
  bool into_treatment = false;
  bool into_mediators = false;

  MutilationSpec resolve(const std::string& treatment,
                         const NodeSet& mediators) const;
};

/// Mutilation used by conditions (i)-(iv) of the four-set nonexperimental
/// criterion. A plain subscript deletes outgoing edges, a bar deletes
/// incoming edges.
struct Corollary1Convention {
  MutilationRule condition_i{true, true, false, false};
  MutilationRule condition_ii{true, false, false, true};
  MutilationRule condition_iii{false, false, false, true};
  MutilationRule condition_iv{false, false, true, false};

  /// Bars read as printed; the default.
  static Corollary1Convention printed() { return {}; }
  /// Condition (iv) read as a back-door test: edges out of X deleted.
  static Corollary1Convention backdoor_iv() {
    Corollary1Convention c;
    c.condition_iv = MutilationRule{true, false, false, false};
    return c;
  }
};

struct Corollary1Sets {
  NodeSet w0, w1, w2, w3;
};

struct ConditionEntry {
  std::string label;
  MutilationSpec mutilation;
  NodeSet a, b, given;
  bool verdict = false;
  std::string note;
};

struct ConditionReport {
  std::vector<ConditionEntry> entries;
  bool overall = false;

  std::vector<std::string> failed_labels() const;
};

ConditionReport check_corollary1(
    const CausalGraph& graph, const std::string& treatment,
    const NodeSet& mediators, const std::string& outcome,
    const Corollary1Sets& sets,
    const Corollary1Convention& convention = Corollary1Convention::printed());

enum class WitnessMode { theorem1, corollary1 };

/// Candidate covariate sets found by search_witnesses. In theorem1 mode only
/// `w0` is meaningful.
struct Witness {
  Corollary1Sets sets;

  std::size_t total_size() const {
    return sets.w0.size() + sets.w1.size() + sets.w2.size() + sets.w3.size();
  }
};

inline constexpr std::size_t kSubsetSearchCap = 20;

/// First witness under (total size, then set-by-set lexicographic order),
/// drawn from observed nondescendants. Throws CapacityError when the
/// candidate pool exceeds kSubsetSearchCap.
std::optional<Witness> search_witnesses(
    const CausalGraph& graph, const std::string& treatment,
    const NodeSet& mediators, const std::string& outcome, WitnessMode mode,
    const Corollary1Convention& convention = Corollary1Convention::printed());

/// True iff `adjustment` blocks every back-door path from `treatment` to the
/// targets. Throws CriterionError when it holds a descendant of the
/// treatment.
bool backdoor_admissible(const CausalGraph& graph, const std::string& treatment,
                         const NodeSet& targets, const NodeSet& adjustment);

/// Smallest back-door admissible set over observed nondescendants of the
/// treatment (ties broken lexicographically), or nullopt.
std::optional<NodeSet> search_backdoor_set(const CausalGraph& graph,
                                           const std::string& treatment,
                                           const NodeSet& targets);

/// Every exogenous node has at most one child.
bool exogenous_roots_unshared(const CausalGraph& graph);

}  // namespace mediation
