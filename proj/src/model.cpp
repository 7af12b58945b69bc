#include "mediation/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "mediation/error.hpp"

namespace mediation {

Domain Domain::ordinal(std::vector<std::string> labels) {
  Domain d;
  d.codes.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    d.codes[i] = static_cast<double>(i);
  d.labels = std::move(labels);
  return d;
}

std::optional<int> Domain::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<int>(i);
  return std::nullopt;
}

int Domain::index_of(std::string_view label, std::string_view variable) const {
  if (auto i = find(label)) return *i;
  throw ValidationError("value '" + std::string(label) +
                        "' is not in the domain of '" + std::string(variable) +
                        "'");
}

std::string ValidationReport::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "\n";
    out += v.path + ": " + v.message;
  }
  return out;
}

std::string join_key(const std::vector<std::string>& labels) {
  std::string out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ",";
    out += labels[i];
  }
  return out;
}

namespace {

constexpr double kMassTolerance = 1e-9;

bool is_label_token(std::string_view label) {
  if (label.empty()) return false;
  return std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '+' ||
           c == '.';
  });
}

std::string format_mass(double mass) {
  std::ostringstream os;
  os.precision(12);
  os << mass;
  return os.str();
}

// Visits every tuple of the mixed-radix product, first position slowest.
void for_each_tuple(const std::vector<int>& radix,
                    const std::function<void(const std::vector<int>&)>& fn) {
  for (int r : radix)
    if (r <= 0) return;
  std::vector<int> tuple(radix.size(), 0);
  while (true) {
    fn(tuple);
    std::size_t pos = radix.size();
    while (pos > 0) {
      --pos;
      if (++tuple[pos] < radix[pos]) break;
      tuple[pos] = 0;
      if (pos == 0) return;
    }
    if (radix.empty()) return;
  }
}

struct Validator {
  const ModelSpec& spec;
  ValidationReport report;
  std::map<std::string, std::size_t> endo_index;
  std::map<std::string, std::size_t> exo_index;

  void add(std::string path, std::string message, std::string related = {}) {
    report.violations.push_back(
        {std::move(path), std::move(message), std::move(related)});
  }

  std::string exo_path(std::size_t i) const {
    return spec.joint ? "/exogenous/variables/" + std::to_string(i)
                      : "/exogenous/" + std::to_string(i);
  }

  static std::string var_path(std::size_t i) {
    return "/variables/" + std::to_string(i);
  }

  bool check_labels(const std::vector<std::string>& labels,
                    const std::string& path) {
    bool ok = true;
    if (labels.empty()) {
      add(path, "domain must have at least one value");
      return false;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const std::string p = path + "/" + std::to_string(i);
      if (!is_label_token(labels[i])) {
        add(p, "invalid value label '" + labels[i] + "'");
        ok = false;
      } else if (!seen.insert(labels[i]).second) {
        add(p, "duplicate value label '" + labels[i] + "'");
        ok = false;
      }
    }
    return ok;
  }

  void check_mass(const std::map<std::string, double>& table,
                  const std::string& path) {
    double total = 0.0;
    for (const auto& [key, p] : table) {
      if (!std::isfinite(p) || p < 0.0)
        add(path + "/" + key, "probability " + format_mass(p) +
                                  " must be a finite nonnegative number");
      else
        total += p;
    }
    if (std::abs(total - 1.0) > kMassTolerance)
      add(path, "exogenous mass " + format_mass(total) + " ≠ 1");
  }

  void names() {
    std::map<std::string, std::string> declared;
    for (std::size_t i = 0; i < spec.exogenous.size(); ++i) {
      const auto& e = spec.exogenous[i];
      const std::string p = exo_path(i) + "/name";
      if (!is_variable_token(e.name)) {
        add(p, "invalid variable name '" + e.name + "'");
        continue;
      }
      auto [it, fresh] = declared.emplace(e.name, p);
      if (!fresh) {
        add(p, "duplicate variable name '" + e.name + "'", it->second);
        continue;
      }
      exo_index[e.name] = i;
    }
    for (std::size_t i = 0; i < spec.variables.size(); ++i) {
      const auto& v = spec.variables[i];
      const std::string p = var_path(i) + "/name";
      if (!is_variable_token(v.name)) {
        add(p, "invalid variable name '" + v.name + "'");
        continue;
      }
      auto [it, fresh] = declared.emplace(v.name, p);
      if (!fresh) {
        add(p, "duplicate variable name '" + v.name + "'", it->second);
        continue;
      }
      endo_index[v.name] = i;
    }
  }

  void exogenous() {
    bool domains_ok = true;
    for (std::size_t i = 0; i < spec.exogenous.size(); ++i) {
      const auto& e = spec.exogenous[i];
      if (!check_labels(e.domain, exo_path(i) + "/domain")) {
        domains_ok = false;
        continue;
      }
      if (spec.joint) {
        if (e.marginal)
          add(exo_path(i) + "/marginal",
              "marginal not allowed when a joint table is given");
        continue;
      }
      if (!e.marginal) {
        add(exo_path(i), "exogenous variable '" + e.name +
                             "' needs a marginal distribution");
        continue;
      }
      for (const auto& [label, p] : *e.marginal)
        if (std::find(e.domain.begin(), e.domain.end(), label) ==
            e.domain.end())
          add(exo_path(i) + "/marginal/" + label,
              "value '" + label + "' is not in the domain of '" + e.name +
                  "'");
      check_mass(*e.marginal, exo_path(i) + "/marginal");
    }
    if (spec.joint && domains_ok) {
      std::set<std::string> valid;
      std::vector<int> radix;
      for (const auto& e : spec.exogenous)
        radix.push_back(static_cast<int>(e.domain.size()));
      double size = 1.0;
      for (int r : radix) size *= r;
      if (size <= static_cast<double>(kUnitEnumerationCap)) {
        for_each_tuple(radix, [&](const std::vector<int>& t) {
          std::vector<std::string> labels;
          for (std::size_t k = 0; k < t.size(); ++k)
            labels.push_back(spec.exogenous[k].domain[t[k]]);
          valid.insert(join_key(labels));
        });
        for (const auto& [key, p] : *spec.joint)
          if (!valid.count(key))
            add("/exogenous/joint/" + key,
                "joint key '" + key + "' is not an exogenous tuple");
      }
      check_mass(*spec.joint, "/exogenous/joint");
    }
  }

  void variables() {
    for (std::size_t i = 0; i < spec.variables.size(); ++i) {
      const auto& v = spec.variables[i];
      const std::string base = var_path(i);
      const bool domain_ok = check_labels(v.domain, base + "/domain");
      if (v.numeric_code) {
        for (const auto& [label, code] : *v.numeric_code) {
          if (std::find(v.domain.begin(), v.domain.end(), label) ==
              v.domain.end())
            add(base + "/numeric_code/" + label,
                "value '" + label + "' is not in the domain of '" + v.name +
                    "'");
          if (!std::isfinite(code))
            add(base + "/numeric_code/" + label, "numeric code must be finite");
        }
      }
      bool parents_ok = true;
      std::set<std::string> seen;
      for (std::size_t k = 0; k < v.parents.size(); ++k) {
        const auto& p = v.parents[k];
        const std::string path = base + "/parents/" + std::to_string(k);
        if (!seen.insert(p).second) {
          add(path, "duplicate parent '" + p + "'");
          parents_ok = false;
        } else if (p == v.name) {
          add(path, "cycle detected: " + p + " -> " + p);
          parents_ok = false;
        } else if (!endo_index.count(p)) {
          add(path, exo_index.count(p)
                        ? "'" + p + "' is exogenous; list it in exo_parents"
                        : "unknown parent '" + p + "'");
          parents_ok = false;
        }
      }
      for (std::size_t k = 0; k < v.exo_parents.size(); ++k) {
        const auto& p = v.exo_parents[k];
        const std::string path = base + "/exo_parents/" + std::to_string(k);
        if (!seen.insert(p).second) {
          add(path, "duplicate parent '" + p + "'");
          parents_ok = false;
        } else if (!exo_index.count(p)) {
          add(path, "unknown exogenous parent '" + p + "'");
          parents_ok = false;
        }
      }
      if (parents_ok) table(i, domain_ok);
    }
  }

  const std::vector<std::string>& labels_of(const std::string& name) const {
    if (auto it = endo_index.find(name); it != endo_index.end())
      return spec.variables[it->second].domain;
    return spec.exogenous[exo_index.at(name)].domain;
  }

  void table(std::size_t i, bool domain_ok) {
    const auto& v = spec.variables[i];
    const std::string base = var_path(i) + "/table";
    std::vector<const std::vector<std::string>*> domains;
    for (const auto& p : v.parents) domains.push_back(&labels_of(p));
    for (const auto& p : v.exo_parents) domains.push_back(&labels_of(p));
    std::vector<int> radix;
    double size = 1.0;
    for (const auto* d : domains) {
      if (d->empty()) return;  // already reported on the parent
      radix.push_back(static_cast<int>(d->size()));
      size *= static_cast<double>(d->size());
    }
    if (size > static_cast<double>(kUnitEnumerationCap)) {
      add(base, "table for '" + v.name + "' is too large");
      return;
    }
    std::set<std::string> expected;
    for_each_tuple(radix, [&](const std::vector<int>& t) {
      std::vector<std::string> labels;
      for (std::size_t k = 0; k < t.size(); ++k)
        labels.push_back((*domains[k])[t[k]]);
      std::string key = join_key(labels);
      if (!v.table.count(key))
        add(base, "table not total: missing tuple '" + key + "'");
      expected.insert(std::move(key));
    });
    for (const auto& [key, out] : v.table) {
      if (!expected.count(key)) {
        add(base + "/" + key, "unknown table key '" + key + "' for '" +
                                  v.name + "'");
        continue;
      }
      if (domain_ok && std::find(v.domain.begin(), v.domain.end(), out) ==
                           v.domain.end())
        add(base + "/" + key, "output '" + out + "' is not in the domain of '" +
                                  v.name + "'");
    }
  }

  void cycles() {
    const std::size_t n = spec.variables.size();
    std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
    std::vector<std::size_t> stack;
    bool reported = false;
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
      if (reported) return;
      state[v] = 1;
      stack.push_back(v);
      for (const auto& p : spec.variables[v].parents) {
        auto it = endo_index.find(p);
        if (it == endo_index.end() || it->second == v) continue;
        std::size_t u = it->second;
        if (state[u] == 1) {
          // Cycle through parent links; print it in causal direction.
          auto from = std::find(stack.begin(), stack.end(), u);
          std::vector<std::size_t> cyc(from, stack.end());
          std::string text;
          for (auto c = cyc.rbegin(); c != cyc.rend(); ++c)
            text += spec.variables[*c].name + " -> ";
          text += spec.variables[*cyc.rbegin()].name;
          add(var_path(v) + "/parents", "cycle detected: " + text);
          reported = true;
          return;
        }
        if (state[u] == 0) visit(u);
        if (reported) return;
      }
      stack.pop_back();
      state[v] = 2;
    };
    for (std::size_t v = 0; v < n && !reported; ++v)
      if (state[v] == 0 && endo_index.count(spec.variables[v].name) &&
          endo_index.at(spec.variables[v].name) == v)
        visit(v);
  }
};

}  // namespace

ValidationReport validate(const ModelSpec& spec) {
  Validator v{spec, {}, {}, {}};
  if (spec.variables.empty())
    v.add("/variables", "model declares no endogenous variables");
  v.names();
  v.exogenous();
  v.variables();
  v.cycles();
  return std::move(v.report);
}

// ---------------------------------------------------------------------------

Assignment::Assignment(
    std::initializer_list<std::pair<std::size_t, int>> entries) {
  for (const auto& [var, value] : entries) set(var, value);
}

void Assignment::set(std::size_t var, int value) {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), var,
      [](const auto& e, std::size_t v) { return e.first < v; });
  if (it != entries_.end() && it->first == var)
    it->second = value;
  else
    entries_.insert(it, {var, value});
}

std::optional<int> Assignment::get(std::size_t var) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), var,
      [](const auto& e, std::size_t v) { return e.first < v; });
  if (it != entries_.end() && it->first == var) return it->second;
  return std::nullopt;
}

std::vector<std::size_t> Assignment::variables() const {
  std::vector<std::size_t> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

Assignment Assignment::merged(const Assignment& other) const {
  Assignment out = *this;
  for (const auto& [var, value] : other.entries_) out.set(var, value);
  return out;
}

bool Assignment::matches(const World& world) const {
  for (const auto& [var, value] : entries_)
    if (world.at(var) != value) return false;
  return true;
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

std::size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("unknown variable '" + std::string(name) + "'");
}

namespace {

// Probability vector over the full exogenous product.
std::vector<double> exogenous_joint(const ModelSpec& spec,
                                    const std::vector<int>& radix) {
  std::size_t total = 1;
  for (int r : radix) total *= static_cast<std::size_t>(r);
  std::vector<double> joint;
  joint.reserve(total);
  for_each_tuple(radix, [&](const std::vector<int>& t) {
    if (spec.joint) {
      std::vector<std::string> labels;
      for (std::size_t k = 0; k < t.size(); ++k)
        labels.push_back(spec.exogenous[k].domain[t[k]]);
      auto it = spec.joint->find(join_key(labels));
      joint.push_back(it == spec.joint->end() ? 0.0 : it->second);
    } else {
      double p = 1.0;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const auto& m = *spec.exogenous[k].marginal;
        auto it = m.find(spec.exogenous[k].domain[t[k]]);
        p *= it == m.end() ? 0.0 : it->second;
      }
      joint.push_back(p);
    }
  });
  if (radix.empty()) joint.assign(1, 1.0);
  return joint;
}

// Marginal of `joint` on the variables in `subset` (sorted indices).
std::vector<double> marginal_on(const std::vector<double>& joint,
                                const std::vector<int>& radix,
                                const std::vector<std::size_t>& subset) {
  std::size_t size = 1;
  for (std::size_t v : subset) size *= static_cast<std::size_t>(radix[v]);
  std::vector<double> out(size, 0.0);
  std::size_t flat = 0;
  for_each_tuple(radix, [&](const std::vector<int>& t) {
    std::size_t idx = 0;
    for (std::size_t v : subset) idx = idx * radix[v] + t[v];
    out[idx] += joint[flat++];
  });
  return out;
}

bool factorizes(const std::vector<double>& joint, const std::vector<int>& radix,
                const std::vector<std::size_t>& block,
                const std::vector<std::size_t>& left,
                const std::vector<std::size_t>& right) {
  auto pb = marginal_on(joint, radix, block);
  auto pl = marginal_on(joint, radix, left);
  auto pr = marginal_on(joint, radix, right);
  // Iterate the block product and compare with the product of marginals.
  std::vector<int> sub_radix;
  for (std::size_t v : block) sub_radix.push_back(radix[v]);
  std::size_t flat = 0;
  bool ok = true;
  for_each_tuple(sub_radix, [&](const std::vector<int>& t) {
    std::size_t li = 0, ri = 0;
    for (std::size_t k = 0; k < block.size(); ++k) {
      std::size_t v = block[k];
      if (std::binary_search(left.begin(), left.end(), v))
        li = li * radix[v] + t[k];
      else
        ri = ri * radix[v] + t[k];
    }
    if (std::abs(pb[flat++] - pl[li] * pr[ri]) > 1e-12) ok = false;
  });
  return ok;
}

void split_blocks(const std::vector<double>& joint,
                  const std::vector<int>& radix,
                  const std::vector<std::size_t>& block,
                  std::vector<std::vector<std::size_t>>& out) {
  constexpr std::size_t kMaxSplitSearch = 16;
  if (block.size() <= 1 || block.size() > kMaxSplitSearch) {
    out.push_back(block);
    return;
  }
  // Proper subsets containing the first member, in increasing bitmask order.
  const std::size_t n = block.size();
  for (std::size_t mask = 0; mask + 1 < (std::size_t{1} << (n - 1)); ++mask) {
    std::vector<std::size_t> left{block[0]}, right;
    for (std::size_t k = 1; k < n; ++k)
      ((mask >> (k - 1)) & 1 ? left : right).push_back(block[k]);
    if (right.empty()) continue;
    if (factorizes(joint, radix, block, left, right)) {
      split_blocks(joint, radix, left, out);
      split_blocks(joint, radix, right, out);
      return;
    }
  }
  out.push_back(block);
}

}  // namespace

Scm::Scm(ModelSpec spec) : spec_(std::move(spec)) {
  ValidationReport report = validate(spec_);
  if (!report.ok()) throw ValidationError(report.summary());

  std::map<std::string, std::size_t> exo_index;
  double support = 1.0;
  std::vector<int> radix;
  for (std::size_t i = 0; i < spec_.exogenous.size(); ++i) {
    const auto& e = spec_.exogenous[i];
    exogenous_.push_back({e.name, e.domain});
    exo_index[e.name] = i;
    radix.push_back(static_cast<int>(e.domain.size()));
    support *= static_cast<double>(e.domain.size());
  }
  if (support > static_cast<double>(kUnitEnumerationCap))
    throw CapacityError("exogenous support of " + format_mass(support) +
                        " tuples exceeds the cap of 10^7");

  for (std::size_t i = 0; i < spec_.variables.size(); ++i)
    index_.emplace(spec_.variables[i].name, i);

  for (const auto& vs : spec_.variables) {
    Variable v;
    v.name = vs.name;
    v.domain = Domain::ordinal(vs.domain);
    if (vs.numeric_code)
      for (const auto& [label, code] : *vs.numeric_code)
        v.domain.codes[*v.domain.find(label)] = code;
    v.observable = vs.observable;
    for (const auto& p : vs.parents) v.parents.push_back(index_.at(p));
    for (const auto& p : vs.exo_parents) v.exo_parents.push_back(exo_index.at(p));
    variables_.push_back(std::move(v));
  }

  for (std::size_t i = 0; i < variables_.size(); ++i) {
    auto& v = variables_[i];
    const auto& vs = spec_.variables[i];
    std::vector<int> r;
    std::vector<const std::vector<std::string>*> labels;
    for (std::size_t p : v.parents) {
      r.push_back(variables_[p].domain.size());
      labels.push_back(&variables_[p].domain.labels);
    }
    for (std::size_t p : v.exo_parents) {
      r.push_back(static_cast<int>(exogenous_[p].labels.size()));
      labels.push_back(&exogenous_[p].labels);
    }
    for_each_tuple(r, [&](const std::vector<int>& t) {
      std::vector<std::string> key;
      for (std::size_t k = 0; k < t.size(); ++k)
        key.push_back((*labels[k])[t[k]]);
      v.table.push_back(*v.domain.find(vs.table.at(join_key(key))));
    });
  }

  // Topological order, releasing the earliest declared ready variable.
  std::vector<bool> placed(variables_.size(), false);
  while (order_.size() < variables_.size()) {
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (placed[i]) continue;
      bool ready = std::all_of(variables_[i].parents.begin(),
                               variables_[i].parents.end(),
                               [&](std::size_t p) { return placed[p]; });
      if (ready) {
        placed[i] = true;
        order_.push_back(i);
        break;
      }
    }
  }

  for (const auto& v : variables_) {
    schema_.names.push_back(v.name);
    schema_.domains.push_back(v.domain);
    schema_.observable.push_back(v.observable);
  }

  const std::vector<double> joint = exogenous_joint(spec_, radix);
  std::size_t flat = 0;
  for_each_tuple(radix, [&](const std::vector<int>& t) {
    double p = joint[flat++];
    if (p > 0.0) units_.push_back({Unit{t}, p});
  });

  std::vector<std::size_t> all(exogenous_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (spec_.joint && !all.empty()) {
    split_blocks(joint, radix, all, blocks_);
    std::sort(blocks_.begin(), blocks_.end());
  } else {
    for (std::size_t i : all) blocks_.push_back({i});
  }

  std::vector<std::size_t> block_of(exogenous_.size());
  std::vector<std::string> block_names;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    std::string name;
    for (std::size_t k = 0; k < blocks_[b].size(); ++k) {
      if (k) name += "__";
      name += exogenous_[blocks_[b][k]].name;
      block_of[blocks_[b][k]] = b;
    }
    block_names.push_back(name);
    graph_.add_node(name, /*exogenous=*/true, /*observed=*/false);
  }
  for (const auto& v : variables_) graph_.add_node(v.name, false, v.observable);
  std::vector<std::size_t> exo_children(exogenous_.size(), 0);
  for (const auto& v : variables_) {
    for (std::size_t p : v.exo_parents) {
      graph_.add_edge(block_names[block_of[p]], v.name);
      ++exo_children[p];
    }
    for (std::size_t p : v.parents) graph_.add_edge(variables_[p].name, v.name);
  }

  markovian_ =
      std::all_of(blocks_.begin(), blocks_.end(),
                  [](const auto& b) { return b.size() == 1; }) &&
      std::all_of(exo_children.begin(), exo_children.end(),
                  [](std::size_t c) { return c <= 1; });
}

std::optional<std::size_t> Scm::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Scm::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw ValidationError("unknown variable '" + std::string(name) + "'");
}

int Scm::respond(std::size_t var, std::span<const int> parent_values,
                 const Unit& unit) const {
  const Variable& v = variables_[var];
  std::size_t idx = 0;
  for (std::size_t k = 0; k < v.parents.size(); ++k)
    idx = idx * static_cast<std::size_t>(variables_[v.parents[k]].domain.size()) +
          static_cast<std::size_t>(parent_values[k]);
  for (std::size_t p : v.exo_parents)
    idx = idx * exogenous_[p].labels.size() +
          static_cast<std::size_t>(unit.values[p]);
  return v.table[idx];
}

Assignment make_assignment(
    const Scm& scm,
    const std::vector<std::pair<std::string, std::string>>& values) {
  Assignment out;
  for (const auto& [name, label] : values) {
    std::size_t var = scm.index_of(name);
    if (out.contains(var))
      throw ValidationError("variable '" + name + "' assigned twice");
    out.set(var, scm.variable(var).domain.index_of(label, name));
  }
  return out;
}

Regime make_regime(
    const Scm& scm,
    const std::vector<std::pair<std::string, std::string>>& fixings) {
  return Regime{make_assignment(scm, fixings)};
}

std::string to_string(const Scm& scm, const Assignment& assignment) {
  std::string out;
  for (const auto& [var, value] : assignment.entries()) {
    if (!out.empty()) out += ",";
    out += scm.variable(var).name + "=" + scm.variable(var).domain.label(value);
  }
  return out;
}

std::string to_string(const Scm& scm, const Regime& regime) {
  if (regime.is_observational()) return "observational";
  return "do:" + to_string(scm, regime.fixings);
}

}  // namespace mediation
