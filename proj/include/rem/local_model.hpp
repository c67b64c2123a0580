#pragma once

// Local exponential-family models for one generic conditional table row.
//
// Every local model is expressed relative to the saturated reference-cell
// parametrization: level 0 is the reference, the saturated canonical
// parameters are eta^r = log(p^r / p^0) for r = 1..K-1 and the statistics
// are the indicator vectors of levels 1..K-1. An affine sub-model restricts
// eta = T * theta for a fixed (K-1) x d design T of full column rank, so its
// statistic for level i is row i-1 of T (zero for the reference level).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rem/error.hpp"

namespace rem {

enum class LocalKind { Saturated, Affine };

class LocalModel {
 public:
  static LocalModel saturated(std::size_t levels, Eigen::VectorXd carrier = {}) {
    if (levels < 2) throw Error(ErrorKind::InvalidModel, "a local model needs at least 2 levels");
    LocalModel m;
    m.kind_ = LocalKind::Saturated;
    m.levels_ = levels;
    m.dim_ = levels - 1;
    m.set_carrier(std::move(carrier));
    return m;
  }

  // `design` has one row per non-reference level and one column per parameter.
  static LocalModel affine(Eigen::MatrixXd design, Eigen::VectorXd carrier = {}) {
    const auto rows = static_cast<std::size_t>(design.rows());
    const auto cols = static_cast<std::size_t>(design.cols());
    if (rows < 1) throw Error(ErrorKind::InvalidModel, "affine design needs at least one row");
    if (cols < 1 || cols > rows)
      throw Error(ErrorKind::InvalidModel,
                  "affine design must have between 1 and " + std::to_string(rows) + " columns");
    if (!design.allFinite()) throw Error(ErrorKind::NonFinite, "affine design has non-finite entries");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (static_cast<std::size_t>(qr.rank()) != cols)
      throw Error(ErrorKind::InvalidModel, "affine design is not of full column rank");
    LocalModel m;
    m.kind_ = LocalKind::Affine;
    m.levels_ = rows + 1;
    m.dim_ = cols;
    m.design_ = std::move(design);
    m.set_carrier(std::move(carrier));
    return m;
  }

  // One-parameter log-linear model log p(i) = xi + value(i) * gamma, i.e. the
  // design column value(i) - value(0).
  static LocalModel affine_from_values(std::span<const double> values, Eigen::VectorXd carrier = {}) {
    if (values.size() < 2) throw Error(ErrorKind::InvalidModel, "need at least 2 level values");
    Eigen::MatrixXd design(values.size() - 1, 1);
    for (std::size_t i = 1; i < values.size(); ++i) design(i - 1, 0) = values[i] - values[0];
    return affine(std::move(design), std::move(carrier));
  }

  LocalKind kind() const noexcept { return kind_; }
  std::size_t levels() const noexcept { return levels_; }
  std::size_t dim() const noexcept { return dim_; }
  const Eigen::VectorXd& carrier() const noexcept { return carrier_; }

  // Design relative to the saturated parametrization (identity when saturated).
  Eigen::MatrixXd design() const {
    if (kind_ == LocalKind::Affine) return design_;
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  }

  // Canonical statistic t(i).
  Eigen::VectorXd statistic(std::size_t level) const {
    Eigen::VectorXd t = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim_));
    if (level == 0) return t;
    const auto r = static_cast<Eigen::Index>(level - 1);
    if (kind_ == LocalKind::Saturated) {
      t(r) = 1.0;
    } else {
      t = design_.row(r).transpose();
    }
    return t;
  }

  // Saturated canonical parameters eta for a parameter block theta.
  Eigen::VectorXd saturated_parameters(const Eigen::VectorXd& theta) const {
    check_dim(theta);
    if (kind_ == LocalKind::Saturated) return theta;
    return design_ * theta;
  }

  void check_dim(const Eigen::VectorXd& theta) const {
    if (static_cast<std::size_t>(theta.size()) != dim_)
      throw Error(ErrorKind::DimensionMismatch, "parameter block has dimension " +
                                                    std::to_string(theta.size()) + ", expected " +
                                                    std::to_string(dim_));
  }

  friend bool operator==(const LocalModel& a, const LocalModel& b) {
    return a.kind_ == b.kind_ && a.levels_ == b.levels_ && a.dim_ == b.dim_ &&
           a.carrier_ == b.carrier_ &&
           (a.kind_ == LocalKind::Saturated || a.design_ == b.design_);
  }

 private:
  LocalModel() = default;

  void set_carrier(Eigen::VectorXd carrier) {
    if (carrier.size() == 0) carrier = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(levels_));
    if (static_cast<std::size_t>(carrier.size()) != levels_)
      throw Error(ErrorKind::DimensionMismatch, "carrier must have one weight per level");
    for (double b : carrier)
      if (!(b > 0.0) || !std::isfinite(b))
        throw Error(ErrorKind::InvalidModel, "carrier weights must be finite and strictly positive");
    carrier_ = std::move(carrier);
  }

  LocalKind kind_ = LocalKind::Saturated;
  std::size_t levels_ = 0;
  std::size_t dim_ = 0;
  Eigen::MatrixXd design_;
  Eigen::VectorXd carrier_;
};

namespace detail {

// log b(i) + eta^i with eta^0 = 0.
inline Eigen::VectorXd log_weights(const LocalModel& model, const Eigen::VectorXd& eta) {
  const auto k = static_cast<Eigen::Index>(model.levels());
  Eigen::VectorXd w(k);
  w(0) = std::log(model.carrier()(0));
  for (Eigen::Index i = 1; i < k; ++i) w(i) = std::log(model.carrier()(i)) + eta(i - 1);
  if (!w.allFinite()) throw Error(ErrorKind::NonFinite, "non-finite canonical parameters");
  return w;
}

inline double log_sum_exp(const Eigen::VectorXd& w) {
  const double shift = w.maxCoeff();
  return shift + std::log((w.array() - shift).exp().sum());
}

inline void check_probs(const LocalModel& model, const Eigen::VectorXd& probs) {
  if (static_cast<std::size_t>(probs.size()) != model.levels())
    throw Error(ErrorKind::DimensionMismatch, "probability vector has wrong length");
}

}  // namespace detail

// phi(theta) = log sum_i b(i) exp(theta' t(i)).
inline double log_normalizer(const LocalModel& model, const Eigen::VectorXd& theta) {
  return detail::log_sum_exp(detail::log_weights(model, model.saturated_parameters(theta)));
}

inline Eigen::VectorXd local_distribution(const LocalModel& model, const Eigen::VectorXd& theta) {
  const Eigen::VectorXd w = detail::log_weights(model, model.saturated_parameters(theta));
  const double shift = w.maxCoeff();
  Eigen::VectorXd p = (w.array() - shift).exp().matrix();
  p /= p.sum();
  if (!p.allFinite()) throw Error(ErrorKind::NonFinite, "local distribution overflowed");
  return p;
}

// tau from an explicit probability vector over the levels.
inline Eigen::VectorXd stat_mean_from_probs(const LocalModel& model, const Eigen::VectorXd& probs) {
  detail::check_probs(model, probs);
  const Eigen::VectorXd sat = probs.tail(probs.size() - 1);
  if (model.kind() == LocalKind::Saturated) return sat;
  return model.design().transpose() * sat;
}

// nu from an explicit probability vector: [p^r delta_rs - p^r p^s] mapped
// through the design for affine models.
inline Eigen::MatrixXd stat_cov_from_probs(const LocalModel& model, const Eigen::VectorXd& probs) {
  detail::check_probs(model, probs);
  const Eigen::VectorXd sat = probs.tail(probs.size() - 1);
  Eigen::MatrixXd cov = -sat * sat.transpose();
  cov.diagonal() += sat;
  if (model.kind() == LocalKind::Saturated) return cov;
  const Eigen::MatrixXd design = model.design();
  Eigen::MatrixXd out = design.transpose() * cov * design;
  return 0.5 * (out + out.transpose());
}

inline Eigen::VectorXd stat_mean(const LocalModel& model, const Eigen::VectorXd& theta) {
  return stat_mean_from_probs(model, local_distribution(model, theta));
}

inline Eigen::MatrixXd stat_cov(const LocalModel& model, const Eigen::VectorXd& theta) {
  return stat_cov_from_probs(model, local_distribution(model, theta));
}

// Probabilities, tau and nu at one parameter block, computed together.
struct LocalMoments {
  Eigen::VectorXd probs;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

inline LocalMoments local_moments(const LocalModel& model, const Eigen::VectorXd& theta) {
  LocalMoments m;
  m.probs = local_distribution(model, theta);
  m.mean = stat_mean_from_probs(model, m.probs);
  m.cov = stat_cov_from_probs(model, m.probs);
  return m;
}

// Reference-cell logits theta^r = log(p^r / p^0) of a strictly positive
// distribution.
inline Eigen::VectorXd theta_from_probs(const Eigen::VectorXd& probs) {
  if (probs.size() < 2) throw Error(ErrorKind::DimensionMismatch, "need at least 2 probabilities");
  for (double p : probs) {
    if (!std::isfinite(p)) throw Error(ErrorKind::NonFinite, "non-finite probability");
    if (!(p > 0.0)) throw Error(ErrorKind::ZeroProbability, "saturated logit undefined for zero probability");
  }
  if (std::abs(probs.sum() - 1.0) > 1e-9)
    throw Error(ErrorKind::InvalidBestGuess, "probabilities must sum to 1");
  const double log_ref = std::log(probs(0));
  Eigen::VectorXd theta(probs.size() - 1);
  for (Eigen::Index r = 1; r < probs.size(); ++r) theta(r - 1) = std::log(probs(r)) - log_ref;
  return theta;
}

inline Eigen::VectorXd probs_from_theta(const Eigen::VectorXd& theta) {
  return local_distribution(LocalModel::saturated(static_cast<std::size_t>(theta.size()) + 1), theta);
}

}  // namespace rem
