#pragma once

// Exact posterior marginals by variable elimination. Evidence enters as
// indicator factors over the candidate sets; the elimination order is the
// greedy min-degree order with ties broken by declaration index.

#include <algorithm>
#include <cstddef>
#include <iterator>
#include <map>
#include <optional>
#include <vector>

#include "rem/error.hpp"
#include "rem/marginal.hpp"
#include "rem/network.hpp"
#include "rem/observation.hpp"
#include "rem/parameters.hpp"

namespace rem {

struct Factor {
  std::vector<std::size_t> vars;  // sorted
  std::vector<std::size_t> cards;
  std::vector<double> values;     // row-major, last variable fastest
};

namespace detail {

inline Factor multiply(const Factor& a, const Factor& b) {
  Factor out;
  std::set_union(a.vars.begin(), a.vars.end(), b.vars.begin(), b.vars.end(), std::back_inserter(out.vars));
  std::size_t n = 1;
  for (std::size_t v : out.vars) {
    auto ia = std::lower_bound(a.vars.begin(), a.vars.end(), v);
    std::size_t card = (ia != a.vars.end() && *ia == v) ? a.cards[ia - a.vars.begin()]
                                                         : b.cards[std::lower_bound(b.vars.begin(), b.vars.end(), v) -
                                                                   b.vars.begin()];
    out.cards.push_back(card);
    n *= card;
  }
  // Stride of each output variable inside a and b (0 when absent).
  const std::size_t k = out.vars.size();
  std::vector<std::size_t> sa(k, 0), sb(k, 0);
  auto strides = [&](const Factor& f, std::vector<std::size_t>& s) {
    std::size_t stride = 1;
    for (std::size_t j = f.vars.size(); j-- > 0;) {
      const auto pos = static_cast<std::size_t>(std::lower_bound(out.vars.begin(), out.vars.end(), f.vars[j]) -
                                                out.vars.begin());
      s[pos] = stride;
      stride *= f.cards[j];
    }
  };
  strides(a, sa);
  strides(b, sb);
  out.values.resize(n);
  std::vector<std::size_t> level(k, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t idx = 0; idx < n; ++idx) {
    out.values[idx] = a.values[ia] * b.values[ib];
    for (std::size_t j = k; j-- > 0;) {
      if (++level[j] < out.cards[j]) {
        ia += sa[j];
        ib += sb[j];
        break;
      }
      ia -= sa[j] * (out.cards[j] - 1);
      ib -= sb[j] * (out.cards[j] - 1);
      level[j] = 0;
    }
  }
  return out;
}

inline Factor sum_out(const Factor& f, std::size_t var) {
  const auto pos = static_cast<std::size_t>(std::lower_bound(f.vars.begin(), f.vars.end(), var) - f.vars.begin());
  Factor out;
  out.vars = f.vars;
  out.cards = f.cards;
  out.vars.erase(out.vars.begin() + static_cast<std::ptrdiff_t>(pos));
  out.cards.erase(out.cards.begin() + static_cast<std::ptrdiff_t>(pos));
  std::size_t inner = 1;
  for (std::size_t j = pos + 1; j < f.cards.size(); ++j) inner *= f.cards[j];
  const std::size_t card = f.cards[pos];
  const std::size_t outer = f.values.size() / (inner * card);
  out.values.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t c = 0; c < card; ++c)
      for (std::size_t i = 0; i < inner; ++i) out.values[o * inner + i] += f.values[(o * card + c) * inner + i];
  return out;
}

inline Factor conditional_factor(const Network& net, const LocalTables& tables, std::size_t v) {
  Factor f;
  f.vars = net.family(v);
  std::size_t n = 1;
  for (std::size_t u : f.vars) {
    f.cards.push_back(net.variable(u).level_count());
    n *= f.cards.back();
  }
  f.values.resize(n);
  const auto& fam = f.vars;
  const auto self = static_cast<std::size_t>(std::find(fam.begin(), fam.end(), v) - fam.begin());
  std::vector<std::size_t> level(fam.size(), 0);
  auto level_of = [&](std::size_t u) {
    return level[static_cast<std::size_t>(std::lower_bound(fam.begin(), fam.end(), u) - fam.begin())];
  };
  const auto& rows = tables[net.class_of(v)];
  for (std::size_t idx = 0; idx < n; ++idx) {
    f.values[idx] = rows[net.parent_config_with(v, level_of)].probs(static_cast<Eigen::Index>(level[self]));
    for (std::size_t j = fam.size(); j-- > 0;) {
      if (++level[j] < f.cards[j]) break;
      level[j] = 0;
    }
  }
  return f;
}

}  // namespace detail

// Unnormalized factor over `keep` (sorted, unique): sum of p(x | theta) over
// completions of y, grouped by the configuration of the kept variables.
inline Factor eliminate(const Network& net, const LocalTables& tables, const Observation& obs,
                        const std::vector<std::size_t>& keep) {
  std::vector<Factor> factors;
  factors.reserve(2 * net.size());
  for (std::size_t v = 0; v < net.size(); ++v) {
    factors.push_back(detail::conditional_factor(net, tables, v));
    if (!obs.is_missing(v)) {
      Factor ind;
      ind.vars = {v};
      ind.cards = {net.variable(v).level_count()};
      ind.values.assign(ind.cards[0], 0.0);
      for (std::size_t level : obs.candidates(v)) ind.values[level] = 1.0;
      factors.push_back(std::move(ind));
    }
  }

  std::vector<bool> pending(net.size(), true);
  for (std::size_t v : keep) pending[v] = false;
  for (;;) {
    std::size_t best = net.size();
    std::size_t best_degree = 0;
    for (std::size_t v = 0; v < net.size(); ++v) {
      if (!pending[v]) continue;
      std::vector<std::size_t> nbrs;
      for (const auto& f : factors)
        if (std::binary_search(f.vars.begin(), f.vars.end(), v)) nbrs.insert(nbrs.end(), f.vars.begin(), f.vars.end());
      std::sort(nbrs.begin(), nbrs.end());
      const auto degree = static_cast<std::size_t>(std::unique(nbrs.begin(), nbrs.end()) - nbrs.begin());
      if (best == net.size() || degree < best_degree) {
        best = v;
        best_degree = degree;
      }
    }
    if (best == net.size()) break;
    pending[best] = false;

    Factor prod;
    prod.values = {1.0};
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (std::binary_search(f.vars.begin(), f.vars.end(), best))
        prod = detail::multiply(prod, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(detail::sum_out(prod, best));
    factors = std::move(rest);
  }

  Factor result;
  result.values = {1.0};
  for (const auto& f : factors) result = detail::multiply(result, f);
  return result;
}

// p(y | theta). Zero is a legal value.
inline double likelihood(const Network& net, const LocalTables& tables, const Observation& obs) {
  return eliminate(net, tables, obs, {}).values.front();
}

inline double likelihood(const Network& net, const ParameterSet& params, const Observation& obs) {
  return likelihood(net, local_tables(net, params), obs);
}

// Posterior quantities for one observation, with marginals memoized by
// variable subset.
class RowPosterior {
 public:
  RowPosterior(const Network& net, const LocalTables& tables, const Observation& obs)
      : net_(&net), tables_(&tables), obs_(&obs) {}

  double likelihood() {
    if (!likelihood_) likelihood_ = rem::likelihood(*net_, *tables_, *obs_);
    return *likelihood_;
  }

  const MarginalTable& marginal(std::vector<std::size_t> subset) {
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    auto it = cache_.find(subset);
    if (it != cache_.end()) return it->second;
    for (std::size_t v : subset)
      if (v >= net_->size()) throw Error(ErrorKind::UnknownVariable, "variable index out of range");
    Factor f = eliminate(*net_, *tables_, *obs_, subset);
    double z = 0.0;
    for (double x : f.values) z += x;
    if (!(z > 0.0)) throw Error(ErrorKind::ZeroEvidenceProbability, "observation has zero probability");
    if (!likelihood_) likelihood_ = z;
    MarginalTable table(*net_, subset);
    for (std::size_t k = 0; k < table.size(); ++k) table.values[k] = f.values[k] / z;
    return cache_.emplace(std::move(subset), std::move(table)).first->second;
  }

  const MarginalTable& family(std::size_t v) { return marginal(net_->family(v)); }

  const MarginalTable& pair_family(std::size_t u, std::size_t v) {
    auto subset = net_->family(u);
    const auto& fv = net_->family(v);
    subset.insert(subset.end(), fv.begin(), fv.end());
    return marginal(std::move(subset));
  }

  const MarginalTable& parents(std::size_t v) { return marginal(net_->parents(v)); }

  const Network& network() const noexcept { return *net_; }
  const Observation& observation() const noexcept { return *obs_; }

 private:
  const Network* net_;
  const LocalTables* tables_;
  const Observation* obs_;
  std::optional<double> likelihood_;
  std::map<std::vector<std::size_t>, MarginalTable> cache_;
};

inline MarginalTable posterior_marginal(const Network& net, const ParameterSet& params, const Observation& obs,
                                        std::vector<std::size_t> subset) {
  const auto tables = local_tables(net, params);
  RowPosterior row(net, tables, obs);
  return row.marginal(std::move(subset));
}

inline MarginalTable family_marginal(const Network& net, const ParameterSet& params, const Observation& obs,
                                     std::size_t v) {
  return posterior_marginal(net, params, obs, net.family(v));
}

inline MarginalTable pair_family_marginal(const Network& net, const ParameterSet& params, const Observation& obs,
                                          std::size_t u, std::size_t v) {
  auto subset = net.family(u);
  const auto& fv = net.family(v);
  subset.insert(subset.end(), fv.begin(), fv.end());
  return posterior_marginal(net, params, obs, std::move(subset));
}

// n*(i_A) = sum_l p(i_A | y^l, theta).
inline MarginalTable expected_counts(const Network& net, const ParameterSet& params, const Sample& sample,
                                     std::vector<std::size_t> subset) {
  const auto tables = local_tables(net, params);
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  MarginalTable counts(net, subset);
  for (std::size_t l = 0; l < sample.size(); ++l) {
    RowPosterior row(net, tables, sample[l]);
    try {
      const auto& m = row.marginal(subset);
      for (std::size_t k = 0; k < counts.size(); ++k) counts.values[k] += m.values[k];
    } catch (const Error& e) {
      throw e.with_row(l);
    }
  }
  return counts;
}

}  // namespace rem
