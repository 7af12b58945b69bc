#include "random_scm.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace testing_support {

using mediation::CausalGraph;
using mediation::ExogenousSpec;
using mediation::ModelSpec;
using mediation::VariableSpec;

namespace {

std::vector<std::string> labels(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::to_string(i));
  return out;
}

int uniform(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) {
  return std::bernoulli_distribution(p)(rng);
}

std::vector<double> positive_weights(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> w(0.2, 1.0);
  std::vector<double> out(n);
  double total = 0.0;
  for (auto& x : out) total += (x = w(rng));
  for (auto& x : out) x /= total;
  return out;
}

ExogenousSpec exogenous(std::mt19937_64& rng, const std::string& name, int size) {
  ExogenousSpec e{name, labels(size), std::map<std::string, double>{}};
  const auto w = positive_weights(rng, size);
  for (int i = 0; i < size; ++i) (*e.marginal)[std::to_string(i)] = w[i];
  return e;
}

// Fills the table of `v` by calling f(endogenous values, exogenous values)
// for every parent tuple.
void fill_table(VariableSpec& v, const std::vector<int>& endo_sizes,
                const std::vector<int>& exo_sizes,
                const std::function<int(const std::vector<int>&,
                                        const std::vector<int>&)>& f) {
  std::vector<int> radix = endo_sizes;
  radix.insert(radix.end(), exo_sizes.begin(), exo_sizes.end());
  std::vector<int> cell(radix.size(), 0);
  while (true) {
    std::vector<int> endo(cell.begin(), cell.begin() + endo_sizes.size());
    std::vector<int> exo(cell.begin() + endo_sizes.size(), cell.end());
    std::vector<std::string> key;
    for (int c : cell) key.push_back(std::to_string(c));
    v.table[mediation::join_key(key)] = std::to_string(f(endo, exo));
    std::size_t k = cell.size();
    bool done = true;
    while (k > 0) {
      --k;
      if (++cell[k] < radix[k]) {
        done = false;
        break;
      }
      cell[k] = 0;
    }
    if (done) break;
  }
}

int index_of_tuple(const std::vector<int>& values, const std::vector<int>& radix) {
  int idx = 0;
  for (std::size_t k = 0; k < values.size(); ++k) idx = idx * radix[k] + values[k];
  return idx;
}

int product(const std::vector<int>& radix) {
  return std::accumulate(radix.begin(), radix.end(), 1, std::multiplies<int>());
}

// Variable whose single exogenous parent is mapped onto every output value
// for each endogenous parent configuration.
VariableSpec surjective_variable(std::mt19937_64& rng, const std::string& name,
                                 int size, const std::vector<std::string>& parents,
                                 const std::vector<int>& parent_sizes,
                                 const std::string& noise, int noise_size) {
  VariableSpec v;
  v.name = name;
  v.domain = labels(size);
  v.parents = parents;
  v.exo_parents = {noise};
  const int configs = product(parent_sizes);
  std::vector<std::vector<int>> maps(configs);
  for (auto& m : maps) {
    for (int i = 0; i < noise_size; ++i) m.push_back(i < size ? i : uniform(rng, 0, size - 1));
    std::shuffle(m.begin(), m.end(), rng);
  }
  fill_table(v, parent_sizes, {noise_size},
             [&](const std::vector<int>& endo, const std::vector<int>& exo) {
               return maps[index_of_tuple(endo, parent_sizes)][exo[0]];
             });
  return v;
}

VariableSpec random_variable(std::mt19937_64& rng, const std::string& name,
                             int size, const std::vector<std::string>& parents,
                             const std::vector<int>& parent_sizes,
                             const std::vector<std::string>& exo_parents,
                             const std::vector<int>& exo_sizes) {
  VariableSpec v;
  v.name = name;
  v.domain = labels(size);
  v.parents = parents;
  v.exo_parents = exo_parents;
  fill_table(v, parent_sizes, exo_sizes,
             [&](const std::vector<int>&, const std::vector<int>&) {
               return uniform(rng, 0, size - 1);
             });
  return v;
}

}  // namespace

ModelSpec random_model(std::mt19937_64& rng, const RandomScmOptions& o) {
  const int n = uniform(rng, std::max(3, o.min_vars), o.max_vars);
  std::vector<int> sizes(n);
  for (auto& s : sizes) s = uniform(rng, 2, o.max_domain);
  std::vector<std::vector<int>> parents(n);
  for (int j = 1; j < n; ++j)
    for (int i = 0; i < j; ++i)
      if (coin(rng, o.edge_probability) || (j == n - 1 && i == n - 2))
        parents[j].push_back(i);

  ModelSpec spec;
  spec.name = "random";
  auto name = [](int i) { return "V" + std::to_string(i); };

  std::vector<std::vector<int>> exo_of(n);
  std::vector<int> exo_sizes;
  if (o.noise == NoiseKind::markovian) {
    for (int j = 0; j < n; ++j) {
      const int size = o.surjective_noise ? sizes[j] + uniform(rng, 0, 1)
                                          : uniform(rng, 2, 3);
      spec.exogenous.push_back(exogenous(rng, "U" + std::to_string(j), size));
      exo_sizes.push_back(size);
      exo_of[j] = {j};
    }
  } else {
    const int k = uniform(rng, 2, 3);
    for (int i = 0; i < k; ++i) {
      spec.exogenous.push_back({"U" + std::to_string(i), labels(2), std::nullopt});
      exo_sizes.push_back(2);
    }
    std::map<std::string, double> joint;
    std::uniform_real_distribution<double> w(0.1, 1.0);
    double total = 0.0;
    std::vector<std::pair<std::string, double>> cells;
    for (int c = 0; c < (1 << k); ++c) {
      std::vector<std::string> key;
      for (int i = k - 1; i >= 0; --i) key.push_back(std::to_string((c >> i) & 1));
      const double p = (c == 0 || !coin(rng, 0.2)) ? w(rng) : 0.0;
      cells.emplace_back(mediation::join_key(key), p);
      total += p;
    }
    for (const auto& [key, p] : cells)
      if (p > 0.0) joint[key] = p / total;
    spec.joint = joint;
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < k; ++i)
        if (coin(rng, 0.5)) exo_of[j].push_back(i);
      if (exo_of[j].empty()) exo_of[j].push_back(uniform(rng, 0, k - 1));
    }
  }

  for (int j = 0; j < n; ++j) {
    std::vector<std::string> pn, en;
    std::vector<int> ps, es;
    for (int p : parents[j]) {
      pn.push_back(name(p));
      ps.push_back(sizes[p]);
    }
    for (int e : exo_of[j]) {
      en.push_back(spec.exogenous[e].name);
      es.push_back(exo_sizes[e]);
    }
    if (o.surjective_noise && o.noise == NoiseKind::markovian)
      spec.variables.push_back(
          surjective_variable(rng, name(j), sizes[j], pn, ps, en[0], es[0]));
    else
      spec.variables.push_back(random_variable(rng, name(j), sizes[j], pn, ps, en, es));
  }
  return spec;
}

ModelSpec random_linear_model(std::mt19937_64& rng) {
  ModelSpec spec;
  spec.name = "linear";
  const int k = uniform(rng, 1, 2);
  spec.exogenous.push_back(exogenous(rng, "U_X", 2));
  for (int i = 1; i <= k; ++i)
    spec.exogenous.push_back(exogenous(rng, "U_Z" + std::to_string(i), 2));
  spec.exogenous.push_back(exogenous(rng, "U_Y", 2));

  VariableSpec x;
  x.name = "X";
  x.domain = labels(2);
  x.exo_parents = {"U_X"};
  fill_table(x, {}, {2}, [](const auto&, const auto& u) { return u[0]; });
  spec.variables.push_back(x);

  // Z_i = a_i * X + sum_{j<i} d_ij Z_j + U_i
  std::vector<int> max_value{1};
  std::vector<std::string> names{"X"};
  for (int i = 1; i <= k; ++i) {
    std::vector<int> coef;
    int top = 1;
    for (std::size_t j = 0; j < names.size(); ++j) {
      coef.push_back(uniform(rng, 0, 2));
      top += coef.back() * max_value[j];
    }
    VariableSpec z;
    z.name = "Z" + std::to_string(i);
    z.domain = labels(top + 1);
    z.parents = names;
    z.exo_parents = {"U_Z" + std::to_string(i)};
    std::vector<int> sizes;
    for (int m : max_value) sizes.push_back(m + 1);
    fill_table(z, sizes, {2}, [&](const std::vector<int>& v, const std::vector<int>& u) {
      int s = u[0];
      for (std::size_t j = 0; j < v.size(); ++j) s += coef[j] * v[j];
      return s;
    });
    spec.variables.push_back(z);
    names.push_back(z.name);
    max_value.push_back(top);
  }
  std::vector<int> coef;
  int top = 1;
  for (std::size_t j = 0; j < names.size(); ++j) {
    coef.push_back(uniform(rng, j == names.size() - 1 ? 1 : 0, 2));
    top += coef.back() * max_value[j];
  }
  VariableSpec y;
  y.name = "Y";
  y.domain = labels(top + 1);
  y.parents = names;
  y.exo_parents = {"U_Y"};
  std::vector<int> sizes;
  for (int m : max_value) sizes.push_back(m + 1);
  fill_table(y, sizes, {2}, [&](const std::vector<int>& v, const std::vector<int>& u) {
    int s = u[0];
    for (std::size_t j = 0; j < v.size(); ++j) s += coef[j] * v[j];
    return s;
  });
  spec.variables.push_back(y);
  return spec;
}

ModelSpec random_chain_model(std::mt19937_64& rng) {
  ModelSpec spec;
  spec.name = "chain";
  const int nx = uniform(rng, 2, 3), nz = uniform(rng, 2, 3), ny = uniform(rng, 2, 3);
  const int ux = nx + uniform(rng, 0, 1), uz = nz + uniform(rng, 0, 1),
            uy = ny + uniform(rng, 0, 1);
  spec.exogenous = {exogenous(rng, "U_X", ux), exogenous(rng, "U_Z", uz),
                    exogenous(rng, "U_Y", uy)};
  spec.variables.push_back(surjective_variable(rng, "X", nx, {}, {}, "U_X", ux));
  spec.variables.push_back(surjective_variable(rng, "Z", nz, {"X"}, {nx}, "U_Z", uz));
  spec.variables.push_back(
      surjective_variable(rng, "Y", ny, {"X", "Z"}, {nx, nz}, "U_Y", uy));
  return spec;
}

CausalGraph random_dag(std::mt19937_64& rng, int nodes, double edge_probability) {
  std::vector<std::string> names;
  for (int i = 0; i < nodes; ++i) names.push_back("N" + std::to_string(i));
  std::vector<std::string> order = names;
  std::shuffle(order.begin(), order.end(), rng);
  CausalGraph g;
  for (const auto& n : names) g.add_node(n);
  for (int j = 1; j < nodes; ++j)
    for (int i = 0; i < j; ++i)
      if (coin(rng, edge_probability)) g.add_edge(order[i], order[j]);
  return g;
}

ModelSpec model_on_dag(std::mt19937_64& rng, const CausalGraph& dag) {
  ModelSpec spec;
  spec.name = "dag";
  std::map<std::string, int> size;
  for (const auto& n : dag.nodes()) size[n] = 2;
  for (const auto& n : dag.nodes()) {
    const int us = uniform(rng, 2, 3);
    spec.exogenous.push_back(exogenous(rng, "U_" + n, us));
    const auto parent_set = dag.parents(n);
    std::vector<std::string> parents(parent_set.begin(), parent_set.end());
    std::vector<int> ps;
    for (const auto& p : parents) ps.push_back(size[p]);
    spec.variables.push_back(
        random_variable(rng, n, size[n], parents, ps, {"U_" + n}, {us}));
  }
  return spec;
}

}  // namespace testing_support
