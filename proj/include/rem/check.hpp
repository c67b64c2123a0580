#pragma once

// Self-verification harness: analytic score and information against central
// finite differences of the enumerated log-likelihood, and the elimination
// engine against brute-force enumeration.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rem/enumeration.hpp"
#include "rem/inference.hpp"
#include "rem/score_info.hpp"

namespace rem::check {

struct CheckOptions {
  double fd_step = 1e-5;      // score finite-difference step
  double hess_step = 1e-4;    // Hessian finite-difference step
  double grad_tol = 1e-6;     // relative, |a - b| / max(1, |a|, |b|)
  double hess_tol = 1e-4;     // absolute
  double oracle_tol = 1e-12;  // absolute, probabilities and marginals
  double symmetry_tol = 1e-10;
  std::size_t enum_cap = 1000000;
  bool pair_families = true;
};

struct CheckResult {
  std::string name;
  bool passed = true;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> results;

  bool passed() const {
    return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
  }

  const CheckResult* find(const std::string& name) const {
    for (const auto& r : results)
      if (r.name == name) return &r;
    return nullptr;
  }
};

using SampleScoreFn = std::function<ScoreVector(const Network&, const ParameterSet&, const Sample&)>;

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Central differences of the enumerated sample log-likelihood.
inline Eigen::VectorXd fd_gradient(const Network& net, const ParameterSet& params, const Sample& sample, double h) {
  const Eigen::VectorXd theta = params.flat();
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd up = theta, down = theta;
    up(i) += h;
    down(i) -= h;
    g(i) = (oracle::log_likelihood(net, ParameterSet::from_flat(net, up), sample) -
            oracle::log_likelihood(net, ParameterSet::from_flat(net, down), sample)) /
           (2.0 * h);
  }
  return g;
}

// Negative Hessian of the enumerated sample log-likelihood.
inline Eigen::MatrixXd fd_information(const Network& net, const ParameterSet& params, const Sample& sample, double h) {
  const Eigen::VectorXd theta = params.flat();
  const Eigen::Index n = theta.size();
  auto f = [&](Eigen::Index i, double di, Eigen::Index j, double dj) {
    Eigen::VectorXd x = theta;
    x(i) += di;
    x(j) += dj;
    return oracle::log_likelihood(net, ParameterSet::from_flat(net, x), sample);
  };
  Eigen::MatrixXd info(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double d2 = (f(i, h, j, h) - f(i, h, j, -h) - f(i, -h, j, h) + f(i, -h, j, -h)) / (4.0 * h * h);
      info(i, j) = info(j, i) = -d2;
    }
  }
  return info;
}

namespace detail {

inline void note(CheckResult& r, double err, const std::string& where) {
  if (err > r.max_error || (std::isnan(err) && !std::isnan(r.max_error))) {
    r.max_error = err;
    r.detail = where;
  }
  if (!(err <= r.tolerance)) r.passed = false;
}

inline void compare_tables(CheckResult& r, const MarginalTable& a, const MarginalTable& b, const std::string& where) {
  for (std::size_t k = 0; k < a.size(); ++k) note(r, std::abs(a.values[k] - b.values[k]), where);
}

}  // namespace detail

inline CheckResult check_likelihood(const Network& net, const ParameterSet& params, const Sample& sample,
                                    const CheckOptions& opts) {
  CheckResult r{"likelihood_vs_enumeration", true, 0.0, opts.oracle_tol, ""};
  const auto tables = local_tables(net, params);
  for (std::size_t l = 0; l < sample.size(); ++l)
    detail::note(r, std::abs(likelihood(net, tables, sample[l]) - oracle::likelihood(net, tables, sample[l])),
                 "row " + std::to_string(l));
  return r;
}

inline CheckResult check_marginals(const Network& net, const ParameterSet& params, const Sample& sample,
                                   const CheckOptions& opts) {
  CheckResult r{"marginals_vs_enumeration", true, 0.0, opts.oracle_tol, ""};
  const auto tables = local_tables(net, params);
  for (std::size_t l = 0; l < sample.size(); ++l) {
    RowPosterior row(net, tables, sample[l]);
    const std::string at = "row " + std::to_string(l);
    for (std::size_t v = 0; v < net.size(); ++v) {
      detail::compare_tables(r, row.marginal({v}), oracle::posterior_marginal(net, tables, sample[l], {v}),
                             at + ", " + net.variable(v).name);
      detail::compare_tables(r, row.family(v), oracle::posterior_marginal(net, tables, sample[l], net.family(v)),
                             at + ", family of " + net.variable(v).name);
      if (!opts.pair_families) continue;
      for (std::size_t u = 0; u < v; ++u) {
        auto subset = net.family(u);
        subset.insert(subset.end(), net.family(v).begin(), net.family(v).end());
        detail::compare_tables(r, row.pair_family(u, v), oracle::posterior_marginal(net, tables, sample[l], subset),
                               at + ", families of " + net.variable(u).name + " and " + net.variable(v).name);
      }
    }
  }
  return r;
}

inline CheckResult check_score(const Network& net, const ParameterSet& params, const Sample& sample,
                               const CheckOptions& opts, const SampleScoreFn& score_fn) {
  CheckResult r{"score_vs_finite_difference", true, 0.0, opts.grad_tol, ""};
  const BlockLayout layout(net);
  const Eigen::VectorXd analytic = score_fn(net, params, sample).values;
  const Eigen::VectorXd numeric = fd_gradient(net, params, sample, opts.fd_step);
  for (BlockIndex b : layout.blocks())
    for (std::size_t k = 0; k < layout.dim(b); ++k) {
      const auto i = static_cast<Eigen::Index>(layout.offset(b) + k);
      detail::note(r, relative_error(analytic(i), numeric(i)), block_key(net, b) + "[" + std::to_string(k) + "]");
    }
  return r;
}

inline std::vector<CheckResult> check_information(const Network& net, const ParameterSet& params,
                                                  const Sample& sample, const CheckOptions& opts) {
  const BlockLayout layout(net);
  const InfoMatrix info = sample_information(net, params, sample);
  const Eigen::MatrixXd numeric = fd_information(net, params, sample, opts.hess_step);

  CheckResult hess{"information_vs_finite_difference", true, 0.0, opts.hess_tol, ""};
  CheckResult sym{"information_symmetry", true, 0.0, opts.symmetry_tol, ""};
  const auto& blocks = layout.blocks();
  for (BlockIndex a : blocks)
    for (BlockIndex b : blocks) {
      const Eigen::MatrixXd m = info.block(a, b);
      const Eigen::MatrixXd n = numeric.block(static_cast<Eigen::Index>(layout.offset(a)),
                                              static_cast<Eigen::Index>(layout.offset(b)), m.rows(), m.cols());
      const std::string where = block_key(net, a) + ";" + block_key(net, b);
      detail::note(hess, (m - n).cwiseAbs().maxCoeff(), where);
      detail::note(sym, (m - info.block(b, a).transpose()).cwiseAbs().maxCoeff(), where);
    }
  std::vector<CheckResult> out{hess, sym};

  const bool complete = std::all_of(sample.begin(), sample.end(), [](const Observation& o) { return o.is_complete(); });
  if (complete) {
    CheckResult diag{"complete_data_block_diagonal", true, 0.0, 0.0, ""};
    for (std::size_t i = 0; i < blocks.size(); ++i)
      for (std::size_t j = 0; j < blocks.size(); ++j) {
        if (i == j) continue;
        detail::note(diag, info.block(blocks[i], blocks[j]).cwiseAbs().maxCoeff(),
                     block_key(net, blocks[i]) + ";" + block_key(net, blocks[j]));
      }
    out.push_back(diag);
  }
  return out;
}

// Runs every check. `score_fn` defaults to the library's sample score and
// can be replaced to confirm that a broken implementation is caught.
inline CheckReport run_checks(const Network& net, const ParameterSet& params, const Sample& sample,
                              const CheckOptions& opts = {}, SampleScoreFn score_fn = {}) {
  oracle::check_cap(net, opts.enum_cap);
  params.check_against(net);
  if (!score_fn)
    score_fn = [](const Network& n, const ParameterSet& p, const Sample& s) { return sample_score(n, p, s); };
  CheckReport report;
  report.results.push_back(check_likelihood(net, params, sample, opts));
  report.results.push_back(check_marginals(net, params, sample, opts));
  report.results.push_back(check_score(net, params, sample, opts, score_fn));
  for (auto& r : check_information(net, params, sample, opts)) report.results.push_back(std::move(r));
  return report;
}

}  // namespace rem::check
