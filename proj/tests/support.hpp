#pragma once

// Shared fixtures: the six-variable example network, random networks,
// parameters and incomplete samples.

#include <rem/rem.hpp>

#include <random>
#include <string>
#include <vector>

namespace rem::testing {

// X1 -> X3, X2 -> X4, {X3, X4} -> X5, X5 -> X6, with X3 and X4 tied.
// X1..X5 are binary, X6 has four levels.
inline Network six_node(bool tied = true) {
  std::vector<Variable> vars;
  for (int i = 1; i <= 5; ++i) vars.push_back({"X" + std::to_string(i), {"a", "b"}, {}});
  vars.push_back({"X6", {"i0", "i1", "i2", "i3"}, {}});
  std::map<std::string, std::vector<std::string>> parents{
      {"X3", {"X1"}}, {"X4", {"X2"}}, {"X5", {"X3", "X4"}}, {"X6", {"X5"}}};
  std::vector<std::vector<std::string>> tying;
  if (tied) tying.push_back({"X3", "X4"});
  return build_network(std::move(vars), parents, tying);
}

inline Eigen::VectorXd normal_vector(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> z(0.0, sd);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = z(rng);
  return v;
}

inline Eigen::MatrixXd uniform_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (auto& x : m.reshaped()) x = u(rng);
  return m;
}

inline ParameterSet random_parameters(const Network& net, std::mt19937_64& rng, double sd = 1.0) {
  return ParameterSet::from_flat(net, normal_vector(rng, BlockLayout(net).total(), sd));
}

// Ancestral sampling of one complete configuration.
inline Config sample_config(const Network& net, const ParameterSet& params, std::mt19937_64& rng) {
  const auto tables = local_tables(net, params);
  Config x(net.size(), 0);
  for (std::size_t v : net.topological_order()) {
    const auto& p = tables[net.class_of(v)][net.parent_config(v, x)].probs;
    std::discrete_distribution<std::size_t> d(p.data(), p.data() + p.size());
    x[v] = d(rng);
  }
  return x;
}

struct Incompleteness {
  double missing = 0.3;
  double imprecise = 0.0;
};

// Observation derived from a sampled configuration: each cell is dropped
// with probability `missing`, or widened to a random candidate set of at
// least two levels (always containing the true one) with probability
// `imprecise`.
inline Observation random_observation(const Network& net, const ParameterSet& params, std::mt19937_64& rng,
                                      Incompleteness inc = {}) {
  const Config x = sample_config(net, params, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<std::size_t>> cand(net.size());
  for (std::size_t v = 0; v < net.size(); ++v) {
    const std::size_t k = net.variable(v).level_count();
    const double r = u(rng);
    if (r < inc.missing) {
      for (std::size_t i = 0; i < k; ++i) cand[v].push_back(i);
    } else if (r < inc.missing + inc.imprecise) {
      cand[v].push_back(x[v]);
      std::vector<std::size_t> others;
      for (std::size_t i = 0; i < k; ++i)
        if (i != x[v]) others.push_back(i);
      std::shuffle(others.begin(), others.end(), rng);
      const std::size_t extra = 1 + std::uniform_int_distribution<std::size_t>(0, others.size() - 1)(rng);
      cand[v].insert(cand[v].end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(extra));
    } else {
      cand[v].push_back(x[v]);
    }
  }
  return Observation(net, std::move(cand));
}

inline Sample random_sample(const Network& net, const ParameterSet& params, std::mt19937_64& rng, std::size_t rows,
                            Incompleteness inc = {}) {
  Sample s;
  for (std::size_t l = 0; l < rows; ++l) s.push_back(random_observation(net, params, rng, inc));
  return s;
}

struct RandomNetworkOptions {
  std::size_t min_vars = 2;
  std::size_t max_vars = 8;
  std::size_t max_levels = 3;
  std::size_t max_parents = 2;
  double tie_probability = 0.3;
  double affine_probability = 0.25;
  std::size_t max_configurations = 100000;
};

// Random DAG in declaration order with occasional tied twins (same level
// count and position-wise parent shapes) and affine local models.
inline Network random_network(std::mt19937_64& rng, const RandomNetworkOptions& opts = {}) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(opts.min_vars, opts.max_vars)(rng);
    std::vector<Variable> vars;
    std::vector<std::vector<std::size_t>> parents(n);
    std::vector<std::size_t> twin_of(n, n);
    std::size_t configs = 1;
    for (std::size_t j = 0; j < n; ++j) {
      Variable var;
      var.name = "V" + std::to_string(j);
      std::size_t levels = std::uniform_int_distribution<std::size_t>(2, opts.max_levels)(rng);

      // Try to tie to an earlier non-twin variable.
      if (j > 0 && u(rng) < opts.tie_probability) {
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, j - 1)(rng);
        const std::size_t root = twin_of[i] < n ? twin_of[i] : i;
        std::vector<std::size_t> ps;
        bool ok = true;
        for (std::size_t p : parents[root]) {
          std::vector<std::size_t> pool;
          for (std::size_t q = 0; q < j; ++q)
            if (vars[q].level_count() == vars[p].level_count() && std::find(ps.begin(), ps.end(), q) == ps.end())
              pool.push_back(q);
          if (pool.empty()) {
            ok = false;
            break;
          }
          ps.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
        }
        if (ok) {
          twin_of[j] = root;
          parents[j] = ps;
          levels = vars[root].level_count();
        }
      }
      if (twin_of[j] == n && j > 0) {
        const std::size_t k = std::uniform_int_distribution<std::size_t>(0, std::min(opts.max_parents, j))(rng);
        std::vector<std::size_t> pool(j);
        for (std::size_t q = 0; q < j; ++q) pool[q] = q;
        std::shuffle(pool.begin(), pool.end(), rng);
        parents[j].assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
      }
      for (std::size_t i = 0; i < levels; ++i) var.levels.push_back("l" + std::to_string(i));
      configs *= levels;
      vars.push_back(std::move(var));
    }
    if (configs > opts.max_configurations) continue;

    std::map<std::string, std::vector<std::string>> parent_map;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p : parents[j]) parent_map[vars[j].name].push_back(vars[p].name);
    std::vector<std::vector<std::string>> tying;
    for (std::size_t j = 0; j < n; ++j) {
      if (twin_of[j] != n) continue;
      std::vector<std::string> members{vars[j].name};
      for (std::size_t k = j + 1; k < n; ++k)
        if (twin_of[k] == j) members.push_back(vars[k].name);
      if (members.size() > 1) tying.push_back(members);
    }
    std::map<std::string, LocalModel> models;
    for (std::size_t j = 0; j < n; ++j) {
      if (twin_of[j] != n || vars[j].level_count() < 3 || u(rng) >= opts.affine_probability) continue;
      const auto k = static_cast<Eigen::Index>(vars[j].level_count() - 1);
      const auto d = std::uniform_int_distribution<Eigen::Index>(1, k - 1)(rng);
      Eigen::MatrixXd design(k, d);
      for (auto& x : design.reshaped()) x = std::uniform_real_distribution<double>(-1.5, 1.5)(rng);
      Eigen::VectorXd carrier(k + 1);
      for (auto& b : carrier) b = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
      models.emplace(vars[j].name, LocalModel::affine(design, carrier));
    }
    return build_network(std::move(vars), parent_map, tying, models);
  }
}

// Same graph with every tying class split into singleton classes.
inline Network untied_clone(const Network& net) {
  std::vector<Variable> vars = net.variables();
  std::map<std::string, std::vector<std::string>> parents;
  std::map<std::string, LocalModel> models;
  for (std::size_t v = 0; v < net.size(); ++v) {
    for (std::size_t p : net.parents(v)) parents[vars[v].name].push_back(vars[p].name);
    models.emplace(vars[v].name, net.local_model_of(v));
  }
  return build_network(std::move(vars), parents, {}, models);
}

// Copies each class block to every member's own class in the clone.
inline ParameterSet untied_parameters(const Network& net, const Network& clone, const ParameterSet& params) {
  ParameterSet out = ParameterSet::zeros(clone);
  for (std::size_t v = 0; v < net.size(); ++v) {
    const std::size_t c = net.class_of(v);
    const std::size_t cc = clone.class_of(v);
    for (std::size_t k = 0; k < net.tying_class(c).config_count; ++k) out.set({cc, k}, params.block({c, k}));
  }
  return out;
}

inline Observation observe(const Network& net, const std::vector<std::string>& labels) {
  std::vector<std::vector<std::size_t>> cand(net.size());
  for (std::size_t v = 0; v < net.size(); ++v) {
    const auto& var = net.variable(v);
    if (labels.at(v) == "?") {
      for (std::size_t i = 0; i < var.level_count(); ++i) cand[v].push_back(i);
    } else {
      cand[v] = {*var.level_index(labels[v])};
    }
  }
  return Observation(net, std::move(cand));
}

// Deliberately broken sample score: each family's expected counts are read
// with the first parent's level shifted by one, as an off-by-one parent index
// would. Used as a negative control for the check harness.
inline ScoreVector off_by_one_parent_score(const Network& net, const ParameterSet& params, const Sample& sample) {
  auto counts = family_expected_counts(net, params, sample);
  for (std::size_t v = 0; v < net.size(); ++v) {
    if (net.parents(v).empty()) continue;
    const std::size_t p = net.parents(v).front();
    const std::size_t card = net.variable(p).level_count();
    MarginalTable shifted = counts[v];
    Config x(net.size(), 0);
    for (std::size_t idx = 0; idx < counts[v].size(); ++idx) {
      const auto lv = counts[v].levels_at(idx);
      for (std::size_t k = 0; k < lv.size(); ++k) x[counts[v].vars[k]] = lv[k];
      x[p] = (x[p] + 1) % card;
      shifted.values[shifted.index_of(x)] = counts[v].values[idx];
    }
    counts[v] = std::move(shifted);
  }
  return score_from_counts(net, params, counts);
}

}  // namespace rem::testing
