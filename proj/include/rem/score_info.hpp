#pragma once

// Score and observed information of the log likelihood, for single
// incomplete observations and for samples.
//
// For a block (c, pi) the score sums, over every member v of class c, the
// posterior family marginal times (t(i_v) - tau(theta_{c|pi})) restricted to
// parent configurations equal to pi. The information of a block pair is
//
//   sum_{u,v} [ s_u s_v' - E_{u,v} ] + delta * sum_v p(pa(v) = pi) nu(theta_{c|pi})
//
// where s_u is member u's share of the score and E_{u,v} is the posterior
// expectation of the product of centred statistics of u and v, taken over
// the union of their families. Each (u, v) term is formed before it is
// accumulated, which makes the complete-data cancellation exact.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "rem/error.hpp"
#include "rem/inference.hpp"
#include "rem/marginal.hpp"
#include "rem/network.hpp"
#include "rem/observation.hpp"
#include "rem/parameters.hpp"

namespace rem {

struct ScoreVector {
  BlockLayout layout;
  Eigen::VectorXd values;

  explicit ScoreVector(const Network& net)
      : layout(net), values(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.total()))) {}

  Eigen::VectorXd block(BlockIndex b) const {
    return values.segment(static_cast<Eigen::Index>(layout.offset(b)), static_cast<Eigen::Index>(layout.dim(b)));
  }

  auto block_ref(BlockIndex b) {
    return values.segment(static_cast<Eigen::Index>(layout.offset(b)), static_cast<Eigen::Index>(layout.dim(b)));
  }
};

struct InfoMatrix {
  BlockLayout layout;
  Eigen::MatrixXd values;

  explicit InfoMatrix(const Network& net) : layout(net) {
    const auto n = static_cast<Eigen::Index>(layout.total());
    values = Eigen::MatrixXd::Zero(n, n);
  }

  Eigen::MatrixXd block(BlockIndex u, BlockIndex v) const {
    return values.block(static_cast<Eigen::Index>(layout.offset(u)), static_cast<Eigen::Index>(layout.offset(v)),
                        static_cast<Eigen::Index>(layout.dim(u)), static_cast<Eigen::Index>(layout.dim(v)));
  }

  auto block_ref(BlockIndex u, BlockIndex v) {
    return values.block(static_cast<Eigen::Index>(layout.offset(u)), static_cast<Eigen::Index>(layout.offset(v)),
                        static_cast<Eigen::Index>(layout.dim(u)), static_cast<Eigen::Index>(layout.dim(v)));
  }
};

enum class InfoAssembly {
  // Per member pair: s_u s_v' - E_{u,v}, then the delta * nu term.
  PairwiseCentered,
  // Whole-score outer product S S' minus the summed pair expectations; pass
  // cached per-row scores to skip recomputing S.
  CachedScoreOuterProduct,
};

struct ComputeOptions {
  unsigned threads = 1;
  InfoAssembly assembly = InfoAssembly::PairwiseCentered;
};

namespace detail {

// Canonical statistics t(i) for every class, indexed [class][level].
inline std::vector<std::vector<Eigen::VectorXd>> class_statistics(const Network& net) {
  std::vector<std::vector<Eigen::VectorXd>> stats(net.classes().size());
  for (std::size_t c = 0; c < net.classes().size(); ++c) {
    const auto& model = net.tying_class(c).model;
    for (std::size_t i = 0; i < model.levels(); ++i) stats[c].push_back(model.statistic(i));
  }
  return stats;
}

// Precomputed state shared by every row of one evaluation.
struct Evaluation {
  const Network& net;
  LocalTables tables;
  std::vector<std::vector<Eigen::VectorXd>> stats;
  BlockLayout layout;

  Evaluation(const Network& n, const ParameterSet& params)
      : net(n), tables(local_tables(n, params)), stats(class_statistics(n)), layout(n) {}

  // t(i_v) - tau(theta_{c|pi}).
  Eigen::VectorXd centred(std::size_t c, std::size_t pi, std::size_t level) const {
    return stats[c][level] - tables[c][pi].mean;
  }

  // Parent configuration and child level of v at entry `idx` of a table
  // whose variables include fa(v).
  std::pair<std::size_t, std::size_t> locate(std::size_t v, const MarginalTable& table, std::size_t idx) const {
    const auto levels = table.levels_at(idx);
    auto level_of = [&](std::size_t u) {
      return levels[static_cast<std::size_t>(std::lower_bound(table.vars.begin(), table.vars.end(), u) -
                                             table.vars.begin())];
    };
    return {net.parent_config_with(v, level_of), level_of(v)};
  }
};

inline void check_observation(const Network& net, const Observation& obs) {
  if (obs.size() != net.size())
    throw Error(ErrorKind::DimensionMismatch, "observation does not match the network");
}

// Member v's share of the score: one vector per parent configuration of
// its class.
inline std::vector<Eigen::VectorXd> member_score(const Evaluation& ev, RowPosterior& row, std::size_t v) {
  const std::size_t c = ev.net.class_of(v);
  const auto& cls = ev.net.tying_class(c);
  std::vector<Eigen::VectorXd> s(cls.config_count, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cls.model.dim())));
  const auto& fam = row.family(v);
  for (std::size_t idx = 0; idx < fam.size(); ++idx) {
    const double p = fam.values[idx];
    if (p == 0.0) continue;
    const auto [pi, level] = ev.locate(v, fam, idx);
    s[pi] += p * ev.centred(c, pi, level);
  }
  return s;
}

inline ScoreVector row_score(const Evaluation& ev, RowPosterior& row) {
  ScoreVector out(ev.net);
  for (std::size_t v = 0; v < ev.net.size(); ++v) {
    const std::size_t c = ev.net.class_of(v);
    const auto s = member_score(ev, row, v);
    for (std::size_t pi = 0; pi < s.size(); ++pi) out.block_ref({c, pi}) += s[pi];
  }
  return out;
}

// E_{u,v}: per (pi_u, pi_v) the posterior expectation of the product of
// centred statistics, indexed [pi_u][pi_v].
inline std::vector<std::vector<Eigen::MatrixXd>> pair_expectation(const Evaluation& ev, RowPosterior& row,
                                                                  std::size_t u, std::size_t v) {
  const std::size_t cu = ev.net.class_of(u), cv = ev.net.class_of(v);
  const auto& clu = ev.net.tying_class(cu);
  const auto& clv = ev.net.tying_class(cv);
  std::vector<std::vector<Eigen::MatrixXd>> e(
      clu.config_count, std::vector<Eigen::MatrixXd>(clv.config_count,
                                                     Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(clu.model.dim()),
                                                                           static_cast<Eigen::Index>(clv.model.dim()))));
  const auto& joint = row.pair_family(u, v);
  for (std::size_t idx = 0; idx < joint.size(); ++idx) {
    const double p = joint.values[idx];
    if (p == 0.0) continue;
    const auto [pu, iu] = ev.locate(u, joint, idx);
    const auto [pv, iv] = ev.locate(v, joint, idx);
    const Eigen::MatrixXd outer = ev.centred(cu, pu, iu) * ev.centred(cv, pv, iv).transpose();
    e[pu][pv] += outer * p;
  }
  return e;
}

// delta * sum_v p(pa(v) = pi | y) nu(theta_{c|pi}), added to the diagonal.
inline void add_variance_term(const Evaluation& ev, RowPosterior& row, InfoMatrix& info) {
  for (std::size_t v = 0; v < ev.net.size(); ++v) {
    const std::size_t c = ev.net.class_of(v);
    const auto& fam = row.family(v);
    std::vector<double> parent_prob(ev.net.tying_class(c).config_count, 0.0);
    for (std::size_t idx = 0; idx < fam.size(); ++idx) {
      if (fam.values[idx] == 0.0) continue;
      parent_prob[ev.locate(v, fam, idx).first] += fam.values[idx];
    }
    for (std::size_t pi = 0; pi < parent_prob.size(); ++pi)
      if (parent_prob[pi] != 0.0) info.block_ref({c, pi}, {c, pi}) += parent_prob[pi] * ev.tables[c][pi].cov;
  }
}

inline InfoMatrix row_information(const Evaluation& ev, RowPosterior& row, InfoAssembly assembly,
                                  const Eigen::VectorXd* cached_score) {
  InfoMatrix info(ev.net);
  add_variance_term(ev, row, info);
  if (row.observation().is_complete()) return info;

  const std::size_t n = ev.net.size();
  if (assembly == InfoAssembly::PairwiseCentered) {
    std::vector<std::vector<Eigen::VectorXd>> shares(n);
    for (std::size_t v = 0; v < n; ++v) shares[v] = member_score(ev, row, v);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u; v < n; ++v) {
        const std::size_t cu = ev.net.class_of(u), cv = ev.net.class_of(v);
        const auto e = pair_expectation(ev, row, u, v);
        for (std::size_t pu = 0; pu < e.size(); ++pu) {
          for (std::size_t pv = 0; pv < e[pu].size(); ++pv) {
            const Eigen::MatrixXd term = shares[u][pu] * shares[v][pv].transpose() - e[pu][pv];
            info.block_ref({cu, pu}, {cv, pv}) += term;
            if (u != v) info.block_ref({cv, pv}, {cu, pu}) += term.transpose();
          }
        }
      }
    }
    return info;
  }

  Eigen::VectorXd score = cached_score ? *cached_score : row_score(ev, row).values;
  if (static_cast<std::size_t>(score.size()) != ev.layout.total())
    throw Error(ErrorKind::DimensionMismatch, "cached score has wrong dimension");
  info.values += score * score.transpose();
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u; v < n; ++v) {
      const std::size_t cu = ev.net.class_of(u), cv = ev.net.class_of(v);
      const auto e = pair_expectation(ev, row, u, v);
      for (std::size_t pu = 0; pu < e.size(); ++pu) {
        for (std::size_t pv = 0; pv < e[pu].size(); ++pv) {
          info.block_ref({cu, pu}, {cv, pv}) -= e[pu][pv];
          if (u != v) info.block_ref({cv, pv}, {cu, pu}) -= e[pu][pv].transpose();
        }
      }
    }
  }
  return info;
}

// Runs fn(l) for every row, on up to `threads` workers. Results come back in
// row order; the failure of the lowest-index row is rethrown.
template <typename Result, typename Fn>
std::vector<Result> map_rows(std::size_t rows, unsigned threads, Fn&& fn) {
  std::vector<std::optional<Result>> out(rows);
  std::vector<std::exception_ptr> errors(rows);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t l = begin; l < rows; l += stride) {
      try {
        out[l].emplace(fn(l));
      } catch (...) {
        errors[l] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, rows));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  for (std::size_t l = 0; l < rows; ++l) {
    if (!errors[l]) continue;
    try {
      std::rethrow_exception(errors[l]);
    } catch (const Error& e) {
      throw e.with_row(l);
    }
  }
  std::vector<Result> result;
  result.reserve(rows);
  for (auto& r : out) result.push_back(std::move(*r));
  return result;
}

}  // namespace detail

inline double log_likelihood(const Network& net, const ParameterSet& params, const Observation& obs) {
  detail::check_observation(net, obs);
  const double p = likelihood(net, local_tables(net, params), obs);
  if (!(p > 0.0)) throw Error(ErrorKind::ZeroEvidenceProbability, "observation has zero probability");
  return std::log(p);
}

inline double sample_log_likelihood(const Network& net, const ParameterSet& params, const Sample& sample,
                                    const ComputeOptions& opts = {}) {
  const auto tables = local_tables(net, params);
  const auto logs = detail::map_rows<double>(sample.size(), opts.threads, [&](std::size_t l) {
    detail::check_observation(net, sample[l]);
    const double p = likelihood(net, tables, sample[l]);
    if (!(p > 0.0)) throw Error(ErrorKind::ZeroEvidenceProbability, "observation has zero probability");
    return std::log(p);
  });
  double total = 0.0;
  for (double x : logs) total += x;
  return total;
}

inline ScoreVector score(const Network& net, const ParameterSet& params, const Observation& obs) {
  detail::check_observation(net, obs);
  const detail::Evaluation ev(net, params);
  RowPosterior row(net, ev.tables, obs);
  return detail::row_score(ev, row);
}

inline Eigen::VectorXd local_score(const Network& net, const ParameterSet& params, const Observation& obs,
                                   BlockIndex block) {
  return score(net, params, obs).block(block);
}

// Sample score from expected family counts n*(i_fa(v)), one table per
// variable (fa(v) order), each possibly augmented with extra counts.
inline ScoreVector score_from_counts(const Network& net, const ParameterSet& params,
                                     std::span<const MarginalTable> family_counts) {
  if (family_counts.size() != net.size())
    throw Error(ErrorKind::DimensionMismatch, "need one family count table per variable");
  const detail::Evaluation ev(net, params);
  ScoreVector out(net);
  for (std::size_t v = 0; v < net.size(); ++v) {
    const auto& counts = family_counts[v];
    if (counts.vars != net.family(v))
      throw Error(ErrorKind::DimensionMismatch, "count table " + std::to_string(v) + " is not over the family");
    const std::size_t c = net.class_of(v);
    for (std::size_t idx = 0; idx < counts.size(); ++idx) {
      const double n = counts.values[idx];
      if (n == 0.0) continue;
      const auto [pi, level] = ev.locate(v, counts, idx);
      out.block_ref({c, pi}) += n * ev.centred(c, pi, level);
    }
  }
  return out;
}

// Expected family counts for every variable.
inline std::vector<MarginalTable> family_expected_counts(const Network& net, const ParameterSet& params,
                                                         const Sample& sample, const ComputeOptions& opts = {}) {
  const auto tables = local_tables(net, params);
  const auto per_row = detail::map_rows<std::vector<MarginalTable>>(sample.size(), opts.threads, [&](std::size_t l) {
    detail::check_observation(net, sample[l]);
    RowPosterior row(net, tables, sample[l]);
    std::vector<MarginalTable> fams;
    for (std::size_t v = 0; v < net.size(); ++v) fams.push_back(row.family(v));
    return fams;
  });
  std::vector<MarginalTable> counts;
  for (std::size_t v = 0; v < net.size(); ++v) counts.emplace_back(net, net.family(v));
  for (const auto& fams : per_row)
    for (std::size_t v = 0; v < net.size(); ++v)
      for (std::size_t k = 0; k < counts[v].size(); ++k) counts[v].values[k] += fams[v].values[k];
  return counts;
}

// Sample score through expected counts.
inline ScoreVector sample_score(const Network& net, const ParameterSet& params, const Sample& sample,
                                const ComputeOptions& opts = {}) {
  const auto counts = family_expected_counts(net, params, sample, opts);
  return score_from_counts(net, params, counts);
}

inline InfoMatrix information(const Network& net, const ParameterSet& params, const Observation& obs,
                              InfoAssembly assembly = InfoAssembly::PairwiseCentered) {
  detail::check_observation(net, obs);
  const detail::Evaluation ev(net, params);
  RowPosterior row(net, ev.tables, obs);
  if (!(row.likelihood() > 0.0))
    throw Error(ErrorKind::ZeroEvidenceProbability, "observation has zero probability");
  return detail::row_information(ev, row, assembly, nullptr);
}

inline Eigen::MatrixXd local_information(const Network& net, const ParameterSet& params, const Observation& obs,
                                         BlockIndex u, BlockIndex v) {
  return information(net, params, obs).block(u, v);
}

// Sum of per-row information in row order. With CachedScoreOuterProduct,
// `cached_row_scores` (one per row, when non-empty) replaces the
// recomputation of each row's score.
inline InfoMatrix sample_information(const Network& net, const ParameterSet& params, const Sample& sample,
                                     const ComputeOptions& opts = {},
                                     std::span<const ScoreVector> cached_row_scores = {}) {
  if (!cached_row_scores.empty() && cached_row_scores.size() != sample.size())
    throw Error(ErrorKind::DimensionMismatch, "need one cached score per row");
  const detail::Evaluation ev(net, params);
  const auto rows = detail::map_rows<InfoMatrix>(sample.size(), opts.threads, [&](std::size_t l) {
    detail::check_observation(net, sample[l]);
    RowPosterior row(net, ev.tables, sample[l]);
    if (!(row.likelihood() > 0.0))
      throw Error(ErrorKind::ZeroEvidenceProbability, "observation has zero probability");
    const Eigen::VectorXd* cached = cached_row_scores.empty() ? nullptr : &cached_row_scores[l].values;
    return detail::row_information(ev, row, opts.assembly, cached);
  });
  InfoMatrix total(net);
  for (const auto& r : rows) total.values += r.values;
  return total;
}

// Per-row scores, e.g. to feed the cached-score information path.
inline std::vector<ScoreVector> row_scores(const Network& net, const ParameterSet& params, const Sample& sample,
                                           const ComputeOptions& opts = {}) {
  const detail::Evaluation ev(net, params);
  return detail::map_rows<ScoreVector>(sample.size(), opts.threads, [&](std::size_t l) {
    detail::check_observation(net, sample[l]);
    RowPosterior row(net, ev.tables, sample[l]);
    return detail::row_score(ev, row);
  });
}

}  // namespace rem
