#include "mediation/graph.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "mediation/error.hpp"

namespace mediation {

std::string to_string(const Edge& edge) {
  return edge.parent + "->" + edge.child;
}

std::string to_string(const NodeSet& nodes) {
  std::string out = "{";
  bool first = true;
  for (const auto& n : nodes) {
    if (!first) out += ", ";
    out += n;
    first = false;
  }
  return out + "}";
}

std::string to_string(const MutilationSpec& spec) {
  return "delete outgoing " + to_string(spec.delete_outgoing_of) +
         ", incoming " + to_string(spec.delete_incoming_of);
}

bool is_variable_token(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_';
  });
}

CausalGraph CausalGraph::from_edges(
    const std::vector<std::pair<std::string, std::string>>& edges) {
  CausalGraph g;
  for (const auto& [p, c] : edges) {
    if (!g.has_node(p)) g.add_node(p);
    if (!g.has_node(c)) g.add_node(c);
    g.add_edge(p, c);
  }
  return g;
}

void CausalGraph::add_node(const std::string& name, bool exogenous,
                           bool observed) {
  if (!is_variable_token(name))
    throw ValidationError("invalid variable name '" + name + "'");
  if (has_node(name))
    throw ValidationError("duplicate node '" + name + "'");
  index_.emplace(name, names_.size());
  names_.push_back(name);
  exogenous_.push_back(exogenous);
  observed_.push_back(observed);
  parents_.emplace_back();
  children_.emplace_back();
}

void CausalGraph::add_edge(const std::string& parent,
                           const std::string& child) {
  std::size_t p = index(parent);
  std::size_t c = index(child);
  if (exogenous_[c])
    throw ValidationError("exogenous node '" + child +
                          "' cannot have parents");
  if (p == c || reaches(c, p))
    throw ValidationError("cycle detected: edge " + parent + "->" + child +
                          " closes a directed cycle");
  if (std::find(children_[p].begin(), children_[p].end(), c) !=
      children_[p].end())
    return;
  children_[p].push_back(c);
  parents_[c].push_back(p);
}

std::vector<Edge> CausalGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t p = 0; p < size(); ++p)
    for (std::size_t c : children_[p]) out.push_back({names_[p], names_[c]});
  std::sort(out.begin(), out.end());
  return out;
}

bool CausalGraph::has_node(std::string_view name) const {
  return index_.find(name) != index_.end();
}

bool CausalGraph::has_edge(std::string_view parent,
                           std::string_view child) const {
  auto p = index_.find(parent);
  auto c = index_.find(child);
  if (p == index_.end() || c == index_.end()) return false;
  const auto& ch = children_[p->second];
  return std::find(ch.begin(), ch.end(), c->second) != ch.end();
}

bool CausalGraph::is_exogenous(std::string_view name) const {
  return exogenous_[index(name)];
}

bool CausalGraph::is_observed(std::string_view name) const {
  return observed_[index(name)];
}

void CausalGraph::set_observed(std::string_view name, bool observed) {
  observed_[index(name)] = observed;
}

NodeSet CausalGraph::parents(std::string_view name) const {
  NodeSet out;
  for (std::size_t p : parents_[index(name)]) out.insert(names_[p]);
  return out;
}

NodeSet CausalGraph::children(std::string_view name) const {
  NodeSet out;
  for (std::size_t c : children_[index(name)]) out.insert(names_[c]);
  return out;
}

std::vector<std::string> CausalGraph::topological_order() const {
  std::vector<std::size_t> indegree(size());
  for (std::size_t i = 0; i < size(); ++i) indegree[i] = parents_[i].size();
  std::vector<std::string> order;
  // Kahn's algorithm, always releasing the earliest declared ready node.
  std::vector<bool> done(size(), false);
  for (std::size_t step = 0; step < size(); ++step) {
    std::size_t next = size();
    for (std::size_t i = 0; i < size(); ++i)
      if (!done[i] && indegree[i] == 0) {
        next = i;
        break;
      }
    if (next == size()) throw ValidationError("cycle detected");
    done[next] = true;
    order.push_back(names_[next]);
    for (std::size_t c : children_[next]) --indegree[c];
  }
  return order;
}

std::size_t CausalGraph::index(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ValidationError("unknown node '" + std::string(name) + "'");
  return it->second;
}

bool CausalGraph::operator==(const CausalGraph& other) const {
  return names_ == other.names_ && exogenous_ == other.exogenous_ &&
         observed_ == other.observed_ && edges() == other.edges();
}

bool CausalGraph::reaches(std::size_t from, std::size_t to) const {
  std::vector<bool> seen(size(), false);
  std::vector<std::size_t> stack{from};
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (seen[v]) continue;
    seen[v] = true;
    for (std::size_t c : children_[v]) stack.push_back(c);
  }
  return false;
}

namespace {

std::vector<bool> membership(const CausalGraph& g, const NodeSet& set) {
  std::vector<bool> in(g.size(), false);
  for (const auto& n : set) in[g.index(n)] = true;
  return in;
}

void require_disjoint(const NodeSet& a, const NodeSet& b, const char* what) {
  for (const auto& n : a)
    if (b.count(n))
      throw ValidationError(std::string("node '") + n + "' appears in both " +
                            what);
}

NodeSet set_union(const NodeSet& a, const NodeSet& b) {
  NodeSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

}  // namespace

CausalGraph mutilate(const CausalGraph& graph, const MutilationSpec& spec) {
  auto drop_out = membership(graph, spec.delete_outgoing_of);
  auto drop_in = membership(graph, spec.delete_incoming_of);
  CausalGraph out;
  for (const auto& n : graph.nodes())
    out.add_node(n, graph.is_exogenous(n), graph.is_observed(n));
  for (const auto& e : graph.edges()) {
    if (drop_out[graph.index(e.parent)] || drop_in[graph.index(e.child)])
      continue;
    out.add_edge(e.parent, e.child);
  }
  return out;
}

bool d_separated(const CausalGraph& graph, const NodeSet& a, const NodeSet& b,
                 const NodeSet& given) {
  require_disjoint(a, b, "separated sets");
  require_disjoint(a, given, "a separated set and the conditioning set");
  require_disjoint(b, given, "a separated set and the conditioning set");
  const std::size_t n = graph.size();
  auto in_b = membership(graph, b);
  auto observed = membership(graph, given);

  // Ancestors of the conditioning set, including the set itself.
  std::vector<bool> anc(n, false);
  std::vector<std::size_t> stack;
  for (const auto& c : given) stack.push_back(graph.index(c));
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    if (anc[v]) continue;
    anc[v] = true;
    for (std::size_t p : graph.parent_indices(v)) stack.push_back(p);
  }

  // Active-trail reachability; `up` means the trail arrived from a child.
  std::vector<bool> seen_up(n, false), seen_down(n, false);
  std::vector<std::pair<std::size_t, bool>> queue;
  for (const auto& s : a) queue.emplace_back(graph.index(s), true);
  while (!queue.empty()) {
    auto [v, up] = queue.back();
    queue.pop_back();
    if (up ? seen_up[v] : seen_down[v]) continue;
    (up ? seen_up : seen_down)[v] = true;
    if (!observed[v] && in_b[v]) return false;
    if (up) {
      if (observed[v]) continue;
      for (std::size_t p : graph.parent_indices(v)) queue.emplace_back(p, true);
      for (std::size_t c : graph.child_indices(v)) queue.emplace_back(c, false);
    } else {
      if (!observed[v])
        for (std::size_t c : graph.child_indices(v))
          queue.emplace_back(c, false);
      if (anc[v])
        for (std::size_t p : graph.parent_indices(v))
          queue.emplace_back(p, true);
    }
  }
  return true;
}

NodeSet descendants(const CausalGraph& graph, const NodeSet& from) {
  std::vector<bool> seen(graph.size(), false);
  std::vector<std::size_t> stack;
  for (const auto& s : from)
    for (std::size_t c : graph.child_indices(graph.index(s)))
      stack.push_back(c);
  NodeSet out;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    out.insert(graph.nodes()[v]);
    for (std::size_t c : graph.child_indices(v)) stack.push_back(c);
  }
  for (const auto& s : from) out.erase(s);
  return out;
}

namespace {

NodeSet with(const NodeSet& set, const std::string& extra) {
  NodeSet out = set;
  out.insert(extra);
  return out;
}

void require_nodes(const CausalGraph& graph, const NodeSet& set) {
  for (const auto& n : set) graph.index(n);
}

std::optional<std::string> first_member_of(const NodeSet& set,
                                           const NodeSet& forbidden) {
  for (const auto& n : set)
    if (forbidden.count(n)) return n;
  return std::nullopt;
}

bool experimental_separation(const CausalGraph& graph,
                             const std::string& treatment,
                             const NodeSet& mediators,
                             const std::string& outcome,
                             const NodeSet& covariates) {
  MutilationSpec spec;
  spec.delete_outgoing_of = with(mediators, treatment);
  return d_separated(mutilate(graph, spec), {outcome}, mediators, covariates);
}

}  // namespace

bool check_experimental_criterion(const CausalGraph& graph,
                                  const std::string& treatment,
                                  const NodeSet& mediators,
                                  const std::string& outcome,
                                  const NodeSet& covariates) {
  graph.index(treatment);
  graph.index(outcome);
  require_nodes(graph, mediators);
  require_nodes(graph, covariates);
  NodeSet forbidden = descendants(graph, with(mediators, treatment));
  if (auto bad = first_member_of(covariates, forbidden))
    throw CriterionError("covariate '" + *bad +
                         "' is a descendant of the treatment or a mediator");
  return experimental_separation(graph, treatment, mediators, outcome,
                                 covariates);
}

MutilationSpec MutilationRule::resolve(const std::string& treatment,
                                       const NodeSet& mediators) const {
  MutilationSpec spec;
  if (out_of_treatment) spec.delete_outgoing_of.insert(treatment);
  if (out_of_mediators)
    spec.delete_outgoing_of.insert(mediators.begin(), mediators.end());
  if (into_treatment) spec.delete_incoming_of.insert(treatment);
  if (into_mediators)
    spec.delete_incoming_of.insert(mediators.begin(), mediators.end());
  return spec;
}

std::vector<std::string> ConditionReport::failed_labels() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (!e.verdict) out.push_back(e.label);
  return out;
}

namespace {

ConditionEntry separation_entry(const CausalGraph& graph, std::string label,
                                const MutilationSpec& spec, NodeSet a,
                                NodeSet b, NodeSet given) {
  ConditionEntry e;
  e.label = std::move(label);
  e.mutilation = spec;
  e.a = std::move(a);
  e.b = std::move(b);
  e.given = std::move(given);
  e.verdict = d_separated(mutilate(graph, spec), e.a, e.b, e.given);
  return e;
}

ConditionEntry descendant_entry(const CausalGraph& graph,
                                const std::string& treatment,
                                const NodeSet& mediators,
                                const Corollary1Sets& sets) {
  ConditionEntry e;
  e.label = "(v)";
  NodeSet of_x = descendants(graph, {treatment});
  NodeSet of_z = descendants(graph, mediators);
  std::vector<std::string> notes;
  auto scan = [&](const NodeSet& set, const NodeSet& forbidden,
                  const char* set_name, const char* source) {
    for (const auto& n : set)
      if (forbidden.count(n))
        notes.push_back(std::string(set_name) + " holds " + n +
                        ", a descendant of " + source);
  };
  scan(sets.w0, of_x, "W0", "X");
  scan(sets.w1, of_x, "W1", "X");
  scan(sets.w3, of_x, "W3", "X");
  scan(sets.w2, of_z, "W2", "Z");
  e.verdict = notes.empty();
  for (std::size_t i = 0; i < notes.size(); ++i)
    e.note += (i ? "; " : "") + notes[i];
  return e;
}

}  // namespace

ConditionReport check_corollary1(const CausalGraph& graph,
                                 const std::string& treatment,
                                 const NodeSet& mediators,
                                 const std::string& outcome,
                                 const Corollary1Sets& sets,
                                 const Corollary1Convention& convention) {
  graph.index(treatment);
  graph.index(outcome);
  for (const auto* s : {&mediators, &sets.w0, &sets.w1, &sets.w2, &sets.w3})
    require_nodes(graph, *s);

  const NodeSet w01 = set_union(sets.w0, sets.w1);
  ConditionReport report;
  report.entries.push_back(separation_entry(
      graph, "(i)", convention.condition_i.resolve(treatment, mediators),
      {outcome}, mediators, sets.w0));
  report.entries.push_back(separation_entry(
      graph, "(ii)", convention.condition_ii.resolve(treatment, mediators),
      {outcome}, {treatment}, w01));
  report.entries.push_back(separation_entry(
      graph, "(iii)", convention.condition_iii.resolve(treatment, mediators),
      {outcome}, mediators, with(set_union(w01, sets.w2), treatment)));
  report.entries.push_back(separation_entry(
      graph, "(iv)", convention.condition_iv.resolve(treatment, mediators),
      mediators, {treatment}, set_union(sets.w0, sets.w3)));
  report.entries.push_back(
      descendant_entry(graph, treatment, mediators, sets));
  report.overall = std::all_of(report.entries.begin(), report.entries.end(),
                               [](const auto& e) { return e.verdict; });
  return report;
}

namespace {

// Calls fn on every k-subset of pool in lexicographic order; stops early
// when fn returns true.
bool for_each_subset(const std::vector<std::string>& pool, std::size_t k,
                     const std::function<bool(const NodeSet&)>& fn) {
  if (k > pool.size()) return false;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    NodeSet subset;
    for (std::size_t i : idx) subset.insert(pool[i]);
    if (fn(subset)) return true;
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == pool.size() - k + pos - 1) --pos;
    if (pos == 0) return false;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

std::vector<std::string> candidate_pool(const CausalGraph& graph,
                                        const NodeSet& excluded) {
  std::vector<std::string> pool;
  for (const auto& n : graph.nodes())
    if (graph.is_observed(n) && !graph.is_exogenous(n) && !excluded.count(n))
      pool.push_back(n);
  std::sort(pool.begin(), pool.end());
  if (pool.size() > kSubsetSearchCap)
    throw CapacityError("covariate search over " +
                        std::to_string(pool.size()) +
                        " candidates exceeds the cap of " +
                        std::to_string(kSubsetSearchCap));
  return pool;
}

}  // namespace

std::optional<Witness> search_witnesses(const CausalGraph& graph,
                                        const std::string& treatment,
                                        const NodeSet& mediators,
                                        const std::string& outcome,
                                        WitnessMode mode,
                                        const Corollary1Convention& convention) {
  graph.index(treatment);
  graph.index(outcome);
  require_nodes(graph, mediators);
  const NodeSet query = with(with(mediators, treatment), outcome);

  if (mode == WitnessMode::theorem1) {
    NodeSet excluded =
        set_union(query, descendants(graph, with(mediators, treatment)));
    auto pool = candidate_pool(graph, excluded);
    std::optional<Witness> found;
    for (std::size_t k = 0; k <= pool.size() && !found; ++k)
      for_each_subset(pool, k, [&](const NodeSet& w) {
        if (!experimental_separation(graph, treatment, mediators, outcome, w))
          return false;
        found = Witness{{w, {}, {}, {}}};
        return true;
      });
    return found;
  }

  auto pool_x =
      candidate_pool(graph, set_union(query, descendants(graph, {treatment})));
  auto pool_z = candidate_pool(graph, set_union(query, descendants(graph, mediators)));
  const MutilationSpec m1 = convention.condition_i.resolve(treatment, mediators);
  const MutilationSpec m2 = convention.condition_ii.resolve(treatment, mediators);
  const MutilationSpec m3 = convention.condition_iii.resolve(treatment, mediators);
  const MutilationSpec m4 = convention.condition_iv.resolve(treatment, mediators);
  const CausalGraph g1 = mutilate(graph, m1), g2 = mutilate(graph, m2),
                    g3 = mutilate(graph, m3), g4 = mutilate(graph, m4);

  // Valid sets per condition, each list in (size, lexicographic) order.
  auto all_subsets = [](const std::vector<std::string>& pool) {
    std::vector<NodeSet> out;
    for (std::size_t k = 0; k <= pool.size(); ++k)
      for_each_subset(pool, k, [&](const NodeSet& s) {
        out.push_back(s);
        return false;
      });
    return out;
  };
  const auto subsets_x = all_subsets(pool_x);
  const auto subsets_z = all_subsets(pool_z);

  struct Branch {
    NodeSet w1;
    std::vector<NodeSet> w2;
  };
  struct Root {
    NodeSet w0;
    std::vector<Branch> branches;
    std::vector<NodeSet> w3;
  };
  std::vector<Root> roots;
  for (const auto& w0 : subsets_x) {
    if (!d_separated(g1, {outcome}, mediators, w0)) continue;
    Root root{w0, {}, {}};
    for (const auto& w3 : subsets_x)
      if (d_separated(g4, mediators, {treatment}, set_union(w0, w3)))
        root.w3.push_back(w3);
    if (root.w3.empty()) continue;
    for (const auto& w1 : subsets_x) {
      NodeSet w01 = set_union(w0, w1);
      if (!d_separated(g2, {outcome}, {treatment}, w01)) continue;
      Branch branch{w1, {}};
      for (const auto& w2 : subsets_z)
        if (d_separated(g3, {outcome}, mediators,
                        with(set_union(w01, w2), treatment)))
          branch.w2.push_back(w2);
      if (!branch.w2.empty()) root.branches.push_back(std::move(branch));
    }
    if (!root.branches.empty()) roots.push_back(std::move(root));
  }

  const std::size_t max_total = 3 * pool_x.size() + pool_z.size();
  for (std::size_t total = 0; total <= max_total; ++total)
    for (const auto& root : roots) {
      if (root.w0.size() > total) continue;
      for (const auto& branch : root.branches)
        for (const auto& w2 : branch.w2) {
          std::size_t used = root.w0.size() + branch.w1.size() + w2.size();
          if (used > total) continue;
          for (const auto& w3 : root.w3)
            if (w3.size() == total - used)
              return Witness{{root.w0, branch.w1, w2, w3}};
        }
    }
  return std::nullopt;
}

bool backdoor_admissible(const CausalGraph& graph, const std::string& treatment,
                         const NodeSet& targets, const NodeSet& adjustment) {
  graph.index(treatment);
  require_nodes(graph, targets);
  require_nodes(graph, adjustment);
  if (targets.count(treatment))
    throw ValidationError("treatment '" + treatment +
                          "' cannot be its own back-door target");
  NodeSet forbidden = descendants(graph, {treatment});
  if (auto bad = first_member_of(adjustment, forbidden))
    throw CriterionError("adjustment variable '" + *bad +
                         "' is a descendant of '" + treatment + "'");
  MutilationSpec spec;
  spec.delete_outgoing_of = {treatment};
  return d_separated(mutilate(graph, spec), {treatment}, targets, adjustment);
}

std::optional<NodeSet> search_backdoor_set(const CausalGraph& graph,
                                           const std::string& treatment,
                                           const NodeSet& targets) {
  NodeSet excluded = with(targets, treatment);
  excluded = set_union(excluded, descendants(graph, {treatment}));
  auto pool = candidate_pool(graph, excluded);
  std::optional<NodeSet> found;
  for (std::size_t k = 0; k <= pool.size() && !found; ++k)
    for_each_subset(pool, k, [&](const NodeSet& s) {
      if (!backdoor_admissible(graph, treatment, targets, s)) return false;
      found = s;
      return true;
    });
  return found;
}

bool exogenous_roots_unshared(const CausalGraph& graph) {
  for (std::size_t i = 0; i < graph.size(); ++i)
    if (graph.is_exogenous(graph.nodes()[i]) &&
        graph.child_indices(i).size() > 1)
      return false;
  return true;
}

}  // namespace mediation
