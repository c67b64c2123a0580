#pragma once

// Priors on local parameter blocks built from expert "best guess"
// distributions with intervals of variation: an approximately conjugate
// normal prior N(theta*, (beta nu(theta*))^-1) for arbitrary local models and
// a Dirichlet prior for multinomial blocks.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rem/error.hpp"
#include "rem/local_model.hpp"
#include "rem/network.hpp"
#include "rem/parameters.hpp"
#include "rem/score_info.hpp"

namespace rem {

struct LevelInterval {
  double lo = 0.0;
  double hi = 0.0;

  // Half the interval is taken as one standard deviation.
  double sd() const { return (hi - lo) / 2.0; }
};

struct ElicitedBlock {
  Eigen::VectorXd best_guess;
  std::vector<std::optional<LevelInterval>> intervals;  // nullopt: no statement for that level

  std::vector<std::optional<double>> sds() const {
    std::vector<std::optional<double>> out;
    for (const auto& iv : intervals) out.push_back(iv ? std::optional<double>(iv->sd()) : std::nullopt);
    return out;
  }
};

struct Elicitation {
  std::map<BlockIndex, ElicitedBlock> blocks;
};

struct NormalPriorBlock {
  Eigen::VectorXd theta_star;
  double beta = 1.0;
  Eigen::MatrixXd nu_star;
};

struct DirichletPriorBlock {
  Eigen::VectorXd alpha;

  double total() const { return alpha.sum(); }
};

enum class PriorType { Normal, Dirichlet };

struct Prior {
  PriorType type = PriorType::Normal;
  std::map<BlockIndex, NormalPriorBlock> normal;
  std::map<BlockIndex, DirichletPriorBlock> dirichlet;
};

// Warning threshold on KL(best guess, fitted) in nats.
inline constexpr double kLargeDiscrepancy = 0.05;

namespace detail {

inline void check_best_guess(const LocalModel& model, const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != model.levels())
    throw Error(ErrorKind::DimensionMismatch, "best guess has " + std::to_string(p.size()) + " entries, model has " +
                                                  std::to_string(model.levels()) + " levels");
  for (double x : p)
    if (!std::isfinite(x) || x < 0.0) throw Error(ErrorKind::InvalidBestGuess, "best guess entries must be >= 0");
  if (std::abs(p.sum() - 1.0) > 1e-6) throw Error(ErrorKind::InvalidBestGuess, "best guess must sum to 1");
}

inline Eigen::LDLT<Eigen::MatrixXd> factor_spd(const Eigen::MatrixXd& m, ErrorKind kind, const char* what) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  const auto d = ldlt.vectorD();
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || d.size() == 0 || d.minCoeff() <= 1e-14 * scale)
    throw Error(kind, std::string(what) + " is not positive definite");
  return ldlt;
}

}  // namespace detail

struct KlEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd probs;
};

// KL(best_guess, p(. | theta)) with 0 log(0/a) = 0, its gradient
// tau(theta) - sum_i best_guess(i) t(i) and its Hessian nu(theta).
inline KlEvaluation kl_discrepancy(const Eigen::VectorXd& best_guess, const LocalModel& model,
                                   const Eigen::VectorXd& theta) {
  detail::check_best_guess(model, best_guess);
  KlEvaluation out;
  out.probs = local_distribution(model, theta);
  // log-space so far-off trial points keep a finite discrepancy
  const Eigen::VectorXd w = detail::log_weights(model, model.saturated_parameters(theta));
  const double phi = detail::log_sum_exp(w);
  const Eigen::VectorXd tau = stat_mean_from_probs(model, out.probs);
  out.gradient = tau;
  for (std::size_t i = 0; i < model.levels(); ++i) {
    const double q = best_guess(static_cast<Eigen::Index>(i));
    if (q == 0.0) continue;
    const double log_p = w(static_cast<Eigen::Index>(i)) - phi;
    if (!std::isfinite(log_p))
      throw Error(ErrorKind::SupportViolation, "best guess puts mass on level " + std::to_string(i) +
                                                   " where the model has none");
    out.value += q * (std::log(q) - log_p);
    out.gradient -= q * model.statistic(i);
  }
  out.hessian = stat_cov_from_probs(model, out.probs);
  return out;
}

struct NewtonStep {
  Eigen::VectorXd theta;
  double kl = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  Eigen::VectorXd probs;
};

struct FitOptions {
  std::optional<Eigen::VectorXd> init;
  double tol = 1e-8;
  std::size_t max_iter = 50;
};

struct ThetaFit {
  Eigen::VectorXd theta_star;
  double kl = 0.0;
  std::size_t iterations = 0;
  std::vector<NewtonStep> trace;  // one entry per visited iterate, the last one is theta_star
};

// Least-squares solve of T theta ~ log-odds(best guess); zero if the best
// guess has empty levels.
inline Eigen::VectorXd default_init(const Eigen::VectorXd& best_guess, const LocalModel& model) {
  if ((best_guess.array() <= 0.0).any()) return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dim()));
  Eigen::VectorXd logodds(best_guess.size() - 1);
  for (Eigen::Index r = 1; r < best_guess.size(); ++r) logodds(r - 1) = std::log(best_guess(r) / best_guess(0));
  return model.design().colPivHouseholderQr().solve(logodds);
}

// Minimizes KL(best_guess, p(. | theta)) by Newton-Raphson. A step that
// increases KL is halved, up to 30 times.
inline constexpr double kMaxNewtonStep = 5.0;

inline ThetaFit fit_theta_star(const Eigen::VectorXd& best_guess, const LocalModel& model,
                               const FitOptions& opts = {}) {
  detail::check_best_guess(model, best_guess);
  if (!(opts.tol > 0.0)) throw Error(ErrorKind::InvalidModel, "tolerance must be positive");
  auto record = [&](const Eigen::VectorXd& theta) {
    KlEvaluation kl = kl_discrepancy(best_guess, model, theta);
    return NewtonStep{theta, kl.value, std::move(kl.gradient), std::move(kl.hessian), std::move(kl.probs)};
  };

  ThetaFit fit;
  if (model.kind() == LocalKind::Saturated) {
    fit.theta_star = theta_from_probs(best_guess);
    fit.trace.push_back(record(fit.theta_star));
    fit.kl = fit.trace.back().kl;
    return fit;
  }

  // Metric for steps where nu(theta) is unusable; the design has full column
  // rank, so nu(0) is positive definite.
  const auto fallback = detail::factor_spd(stat_cov(model, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dim()))),
                                           ErrorKind::SingularHessian, "KL Hessian at 0");
  Eigen::VectorXd theta = opts.init ? *opts.init : default_init(best_guess, model);
  model.check_dim(theta);
  if (!theta.allFinite()) throw Error(ErrorKind::NonFinite, "initial value is not finite");
  fit.trace.push_back(record(theta));
  double radius = kMaxNewtonStep;
  for (;;) {
    const NewtonStep& cur = fit.trace.back();
    if (cur.gradient.norm() <= opts.tol) break;
    if (fit.iterations == opts.max_iter) {
      std::string trace;
      for (const auto& s : fit.trace) {
        trace += trace.empty() ? "" : ", ";
        trace += std::to_string(s.theta(0));
      }
      throw Error(ErrorKind::NonConvergence, "no convergence after " + std::to_string(opts.max_iter) +
                                                 " iterations; first-coordinate trace: " + trace);
    }
    // Far from the optimum nu(theta) is nearly singular and the raw Newton
    // step can jump into a flat region, so its length is capped.
    Eigen::VectorXd step;
    try {
      step = detail::factor_spd(cur.hessian, ErrorKind::SingularHessian, "KL Hessian").solve(cur.gradient);
    } catch (const Error&) {
      step = fallback.solve(cur.gradient);
    }
    if (!step.allFinite()) step = fallback.solve(cur.gradient);
    const double len = step.norm();
    const bool capped = len > radius;
    if (capped) step *= radius / len;
    NewtonStep next = record(cur.theta - step);
    double scale = 1.0;
    for (int halving = 0; halving < 30 && next.kl > cur.kl; ++halving) {
      scale *= 0.5;
      next = record(cur.theta - scale * step);
    }
    // On a nearly linear stretch the cap is what limits progress.
    if (capped && scale == 1.0) radius *= 2.0;
    else if (scale < 1.0) radius = std::max(kMaxNewtonStep, 2.0 * scale * std::min(len, radius));
    fit.trace.push_back(std::move(next));
    ++fit.iterations;
  }
  fit.theta_star = fit.trace.back().theta;
  fit.kl = fit.trace.back().kl;
  return fit;
}

// d p(i | theta) / d theta = p(i | theta) (t(i) - tau(theta)).
inline Eigen::VectorXd prob_gradient(const LocalModel& model, const Eigen::VectorXd& theta, std::size_t level) {
  if (level >= model.levels()) throw Error(ErrorKind::UnknownLevel, "level index out of range");
  const Eigen::VectorXd p = local_distribution(model, theta);
  return p(static_cast<Eigen::Index>(level)) * (model.statistic(level) - stat_mean_from_probs(model, p));
}

struct BetaSelection {
  double beta = 0.0;
  std::vector<std::optional<double>> per_level;  // beta(i); nullopt where no interval was given
  Eigen::MatrixXd nu_star;
  Eigen::MatrixXd nu_star_inverse;

  // Prior covariance (1/beta) nu(theta*)^-1.
  Eigen::MatrixXd covariance() const { return nu_star_inverse / beta; }
};

// beta(i) = g_i' nu(theta*)^-1 g_i / SD(i)^2 from the delta-method variance
// of p(i); the smallest beta(i) (lowest precision) is selected.
inline BetaSelection beta_from_intervals(const LocalModel& model, const Eigen::VectorXd& theta_star,
                                         std::span<const std::optional<double>> sds) {
  if (sds.size() != model.levels())
    throw Error(ErrorKind::DimensionMismatch, "need one interval entry per level");
  BetaSelection out;
  out.nu_star = stat_cov(model, theta_star);
  const auto ldlt = detail::factor_spd(out.nu_star, ErrorKind::SingularCovariance, "nu(theta*)");
  out.nu_star_inverse =
      ldlt.solve(Eigen::MatrixXd::Identity(out.nu_star.rows(), out.nu_star.cols()));
  out.nu_star_inverse = 0.5 * (out.nu_star_inverse + out.nu_star_inverse.transpose()).eval();
  std::optional<double> best;
  for (std::size_t i = 0; i < model.levels(); ++i) {
    if (!sds[i]) {
      out.per_level.push_back(std::nullopt);
      continue;
    }
    const double sd = *sds[i];
    if (!(sd > 0.0) || !std::isfinite(sd))
      throw Error(ErrorKind::NonPositiveInterval, "interval for level " + std::to_string(i) + " has no width");
    const Eigen::VectorXd g = prob_gradient(model, theta_star, i);
    const double b = g.dot(out.nu_star_inverse * g) / (sd * sd);
    out.per_level.push_back(b);
    if (!best || b < *best) best = b;
  }
  if (!best) throw Error(ErrorKind::NonPositiveInterval, "no informative interval given");
  if (!(*best > 0.0)) throw Error(ErrorKind::SingularCovariance, "selected precision is not positive");
  out.beta = *best;
  return out;
}

inline void check_normal_block(const NormalPriorBlock& b, std::size_t dim) {
  if (static_cast<std::size_t>(b.theta_star.size()) != dim || static_cast<std::size_t>(b.nu_star.rows()) != dim ||
      static_cast<std::size_t>(b.nu_star.cols()) != dim)
    throw Error(ErrorKind::DimensionMismatch, "normal prior block has wrong dimension");
  if (!(b.beta > 0.0) || !std::isfinite(b.beta)) throw Error(ErrorKind::InvalidModel, "beta must be positive");
  if (!b.theta_star.allFinite() || !b.nu_star.allFinite())
    throw Error(ErrorKind::NonFinite, "normal prior block has non-finite entries");
  if (!b.nu_star.isApprox(b.nu_star.transpose(), 1e-10))
    throw Error(ErrorKind::InvalidModel, "nu_star must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.nu_star, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, b.nu_star.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::InvalidModel, "nu_star must be positive semidefinite");
}

// -beta nu(theta*) (theta - theta*).
inline Eigen::VectorXd normal_prior_score(const NormalPriorBlock& prior, const Eigen::VectorXd& theta) {
  if (theta.size() != prior.theta_star.size())
    throw Error(ErrorKind::DimensionMismatch, "parameter block does not match the prior");
  return -prior.beta * (prior.nu_star * (theta - prior.theta_star));
}

inline Eigen::MatrixXd normal_prior_information(const NormalPriorBlock& prior) { return prior.beta * prior.nu_star; }

struct DirichletElicitation {
  DirichletPriorBlock block;
  std::vector<std::optional<double>> sample_sizes;  // alpha^i before clamping
  bool clamped = false;                             // min alpha^i was negative, set to 0
};

// alpha^i = (1 - p(i)) p(i) / SD(i)^2 - 1; alpha = max(0, min_i alpha^i);
// counts alpha(i) = p(i) alpha.
inline DirichletElicitation dirichlet_from_elicitation(const Eigen::VectorXd& best_guess,
                                                       std::span<const std::optional<double>> sds) {
  if (static_cast<std::size_t>(best_guess.size()) != sds.size())
    throw Error(ErrorKind::DimensionMismatch, "need one interval entry per level");
  if (std::abs(best_guess.sum() - 1.0) > 1e-6) throw Error(ErrorKind::InvalidBestGuess, "best guess must sum to 1");
  DirichletElicitation out;
  std::optional<double> smallest;
  for (std::size_t i = 0; i < sds.size(); ++i) {
    const double p = best_guess(static_cast<Eigen::Index>(i));
    if (!std::isfinite(p) || p < 0.0) throw Error(ErrorKind::InvalidBestGuess, "best guess entries must be >= 0");
    if (!sds[i]) {
      out.sample_sizes.push_back(std::nullopt);
      continue;
    }
    if (!(p > 0.0 && p < 1.0))
      throw Error(ErrorKind::InvalidBestGuess, "best guess for level " + std::to_string(i) +
                                                   " must lie strictly between 0 and 1");
    const double sd = *sds[i];
    if (!(sd > 0.0) || !std::isfinite(sd))
      throw Error(ErrorKind::NonPositiveInterval, "interval for level " + std::to_string(i) + " has no width");
    const double a = (1.0 - p) * p / (sd * sd) - 1.0;
    out.sample_sizes.push_back(a);
    if (!smallest || a < *smallest) smallest = a;
  }
  // No interval at all reads as fully non-informative.
  double total = smallest.value_or(-1.0);
  if (total < 0.0) {
    total = 0.0;
    out.clamped = true;
  }
  out.block.alpha = best_guess * total;
  return out;
}

inline void check_dirichlet_block(const DirichletPriorBlock& b, const LocalModel& model) {
  if (static_cast<std::size_t>(b.alpha.size()) != model.levels())
    throw Error(ErrorKind::DimensionMismatch, "Dirichlet block needs one count per level");
  for (double a : b.alpha)
    if (!std::isfinite(a) || a < 0.0) throw Error(ErrorKind::InvalidModel, "Dirichlet counts must be >= 0");
}

// sum_i alpha(i) (t(i) - tau(theta)).
inline Eigen::VectorXd dirichlet_prior_score(const DirichletPriorBlock& prior, const LocalModel& model,
                                             const Eigen::VectorXd& theta) {
  check_dirichlet_block(prior, model);
  const Eigen::VectorXd tau = stat_mean(model, theta);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dim()));
  for (std::size_t i = 0; i < model.levels(); ++i) {
    const double a = prior.alpha(static_cast<Eigen::Index>(i));
    if (a == 0.0) continue;
    s += a * (model.statistic(i) - tau);
  }
  return s;
}

// alpha(pi) nu(theta).
inline Eigen::MatrixXd dirichlet_prior_information(const DirichletPriorBlock& prior, const LocalModel& model,
                                                   const Eigen::VectorXd& theta) {
  check_dirichlet_block(prior, model);
  const double total = prior.total();
  if (total == 0.0)
    return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(model.dim()), static_cast<Eigen::Index>(model.dim()));
  return total * stat_cov(model, theta);
}

// Prior score over all blocks; block-diagonal factorization across classes
// and parent configurations.
inline ScoreVector prior_score(const Network& net, const ParameterSet& params, const Prior& prior) {
  params.check_against(net);
  ScoreVector out(net);
  for (BlockIndex b : out.layout.blocks()) {
    const auto& model = net.tying_class(b.cls).model;
    if (prior.type == PriorType::Normal) {
      auto it = prior.normal.find(b);
      if (it == prior.normal.end())
        throw Error(ErrorKind::MissingPriorBlock, "no prior for block '" + block_key(net, b) + "'");
      check_normal_block(it->second, model.dim());
      out.block_ref(b) = normal_prior_score(it->second, params.block(b));
    } else {
      auto it = prior.dirichlet.find(b);
      if (it == prior.dirichlet.end())
        throw Error(ErrorKind::MissingPriorBlock, "no prior for block '" + block_key(net, b) + "'");
      out.block_ref(b) = dirichlet_prior_score(it->second, model, params.block(b));
    }
  }
  return out;
}

inline InfoMatrix prior_information(const Network& net, const ParameterSet& params, const Prior& prior) {
  params.check_against(net);
  InfoMatrix out(net);
  for (BlockIndex b : out.layout.blocks()) {
    const auto& model = net.tying_class(b.cls).model;
    if (prior.type == PriorType::Normal) {
      auto it = prior.normal.find(b);
      if (it == prior.normal.end())
        throw Error(ErrorKind::MissingPriorBlock, "no prior for block '" + block_key(net, b) + "'");
      check_normal_block(it->second, model.dim());
      out.block_ref(b, b) = normal_prior_information(it->second);
    } else {
      auto it = prior.dirichlet.find(b);
      if (it == prior.dirichlet.end())
        throw Error(ErrorKind::MissingPriorBlock, "no prior for block '" + block_key(net, b) + "'");
      out.block_ref(b, b) = dirichlet_prior_information(it->second, model, params.block(b));
    }
  }
  return out;
}

// S(theta | y) = S(y | theta) + S(theta).
inline ScoreVector posterior_score(const Network& net, const ParameterSet& params, const Sample& sample,
                                   const Prior& prior, const ComputeOptions& opts = {}) {
  ScoreVector out = prior_score(net, params, prior);
  out.values = sample_score(net, params, sample, opts).values + out.values;
  return out;
}

// I(theta | y) = I(y | theta) + I(theta).
inline InfoMatrix posterior_information(const Network& net, const ParameterSet& params, const Sample& sample,
                                        const Prior& prior, const ComputeOptions& opts = {}) {
  InfoMatrix out = prior_information(net, params, prior);
  out.values = sample_information(net, params, sample, opts).values + out.values;
  return out;
}

// Elicitation pipelines over a whole network.

struct BlockDiagnostics {
  BlockIndex block;
  std::optional<ThetaFit> fit;                 // normal only
  std::optional<BetaSelection> beta;           // normal only
  std::optional<DirichletElicitation> counts;  // dirichlet only
  std::vector<std::string> warnings;
};

struct ElicitedPrior {
  Prior prior;
  std::vector<BlockDiagnostics> diagnostics;
};

namespace detail {

inline const ElicitedBlock& elicited(const Network& net, const Elicitation& e, BlockIndex b) {
  auto it = e.blocks.find(b);
  if (it == e.blocks.end())
    throw Error(ErrorKind::MissingPriorBlock, "no elicitation for block '" + block_key(net, b) + "'");
  return it->second;
}

inline void check_elicited(const Network& net, BlockIndex b, const ElicitedBlock& e) {
  const std::size_t k = net.tying_class(b.cls).model.levels();
  if (static_cast<std::size_t>(e.best_guess.size()) != k || e.intervals.size() != k)
    throw Error(ErrorKind::DimensionMismatch, "elicitation for '" + block_key(net, b) + "' needs " +
                                                  std::to_string(k) + " entries");
  for (std::size_t i = 0; i < k; ++i) {
    if (!e.intervals[i]) continue;
    const auto& iv = *e.intervals[i];
    const double p = e.best_guess(static_cast<Eigen::Index>(i));
    if (!(iv.hi - iv.lo > 0.0))
      throw Error(ErrorKind::NonPositiveInterval, "empty interval in '" + block_key(net, b) + "'");
    if (p < iv.lo || p > iv.hi)
      throw Error(ErrorKind::InvalidBestGuess, "best guess outside its interval in '" + block_key(net, b) + "'");
  }
}

}  // namespace detail

inline ElicitedPrior elicit_normal(const Network& net, const Elicitation& elicitation, const FitOptions& opts = {}) {
  ElicitedPrior out;
  out.prior.type = PriorType::Normal;
  for (BlockIndex b : BlockLayout(net).blocks()) {
    const auto& e = detail::elicited(net, elicitation, b);
    detail::check_elicited(net, b, e);
    const auto& model = net.tying_class(b.cls).model;
    BlockDiagnostics diag{b, {}, {}, {}, {}};
    try {
      diag.fit = fit_theta_star(e.best_guess, model, opts);
      const auto sds = e.sds();
      diag.beta = beta_from_intervals(model, diag.fit->theta_star, sds);
    } catch (const Error& err) {
      throw err.with_context("block '" + block_key(net, b) + "'");
    }
    if (diag.fit->kl > kLargeDiscrepancy)
      diag.warnings.push_back("KL discrepancy " + std::to_string(diag.fit->kl) +
                              " exceeds 0.05: best guess disagrees with the local model");
    out.prior.normal[b] = NormalPriorBlock{diag.fit->theta_star, diag.beta->beta, diag.beta->nu_star};
    out.diagnostics.push_back(std::move(diag));
  }
  return out;
}

inline ElicitedPrior elicit_dirichlet(const Network& net, const Elicitation& elicitation) {
  ElicitedPrior out;
  out.prior.type = PriorType::Dirichlet;
  for (BlockIndex b : BlockLayout(net).blocks()) {
    const auto& e = detail::elicited(net, elicitation, b);
    detail::check_elicited(net, b, e);
    BlockDiagnostics diag{b, {}, {}, {}, {}};
    try {
      const auto sds = e.sds();
      diag.counts = dirichlet_from_elicitation(e.best_guess, sds);
    } catch (const Error& err) {
      throw err.with_context("block '" + block_key(net, b) + "'");
    }
    if (diag.counts->clamped)
      diag.warnings.push_back("equivalent sample size clamped to 0 (non-informative)");
    out.prior.dirichlet[b] = diag.counts->block;
    out.diagnostics.push_back(std::move(diag));
  }
  return out;
}

}  // namespace rem
