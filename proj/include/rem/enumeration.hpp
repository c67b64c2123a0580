#pragma once

// Brute-force enumeration over completion sets. Exponential in the number
// of variables; used as the independent oracle for the inference engine and
// by the verification harness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <vector>

#include "rem/error.hpp"
#include "rem/marginal.hpp"
#include "rem/network.hpp"
#include "rem/observation.hpp"
#include "rem/parameters.hpp"

namespace rem {

// Cartesian product of the candidate sets, row-major over declared variable
// order (the last variable varies fastest).
class Completions {
 public:
  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Config;
    using difference_type = std::ptrdiff_t;
    using pointer = const Config*;
    using reference = const Config&;

    iterator() = default;
    iterator(const Observation* obs, bool end) : obs_(obs), pos_(obs->size(), 0), done_(end) {
      if (!done_) fill();
    }

    reference operator*() const { return config_; }
    pointer operator->() const { return &config_; }

    iterator& operator++() {
      std::size_t v = pos_.size();
      while (v-- > 0) {
        if (++pos_[v] < obs_->candidates(v).size()) {
          config_[v] = obs_->candidates(v)[pos_[v]];
          return *this;
        }
        pos_[v] = 0;
        config_[v] = obs_->candidates(v)[0];
      }
      done_ = true;
      return *this;
    }

    void operator++(int) { ++*this; }

    friend bool operator==(const iterator& a, const iterator& b) { return a.done_ == b.done_; }

   private:
    void fill() {
      config_.resize(pos_.size());
      for (std::size_t v = 0; v < pos_.size(); ++v) config_[v] = obs_->candidates(v)[0];
    }

    const Observation* obs_ = nullptr;
    std::vector<std::size_t> pos_;
    Config config_;
    bool done_ = true;
  };

  // Holds its own copy so that ranges over temporaries stay valid.
  explicit Completions(Observation obs) : obs_(std::move(obs)) {}

  iterator begin() const { return iterator(&obs_, false); }
  iterator end() const { return iterator(&obs_, true); }

  std::size_t count() const {
    std::size_t n = 1;
    for (std::size_t v = 0; v < obs_.size(); ++v) n *= obs_.candidates(v).size();
    return n;
  }

 private:
  Observation obs_;
};

inline Completions completions(const Observation& obs) { return Completions(obs); }

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

namespace oracle {

inline void check_cap(const Network& net, std::size_t cap) {
  if (net.configuration_count() > cap)
    throw Error(ErrorKind::CapExceeded, "network has more than " + std::to_string(cap) + " complete configurations");
}

inline double likelihood(const Network& net, const LocalTables& tables, const Observation& obs) {
  CompensatedSum s;
  for (const Config& x : completions(obs)) s.add(joint_prob(net, tables, x));
  return s.value();
}

inline double likelihood(const Network& net, const ParameterSet& params, const Observation& obs) {
  return likelihood(net, local_tables(net, params), obs);
}

inline double log_likelihood(const Network& net, const ParameterSet& params, const Sample& sample) {
  const auto tables = local_tables(net, params);
  double total = 0.0;
  for (const auto& obs : sample) total += std::log(likelihood(net, tables, obs));
  return total;
}

// p(i_A | y, theta) by summing p(x | theta) over completions.
inline MarginalTable posterior_marginal(const Network& net, const LocalTables& tables, const Observation& obs,
                                        std::vector<std::size_t> subset) {
  std::sort(subset.begin(), subset.end());
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  MarginalTable table(net, subset);
  std::vector<CompensatedSum> acc(table.size());
  CompensatedSum total;
  for (const Config& x : completions(obs)) {
    const double p = joint_prob(net, tables, x);
    acc[table.index_of(x)].add(p);
    total.add(p);
  }
  const double z = total.value();
  if (!(z > 0.0)) throw Error(ErrorKind::ZeroEvidenceProbability, "observation has zero probability");
  for (std::size_t k = 0; k < table.size(); ++k) table.values[k] = acc[k].value() / z;
  return table;
}

inline MarginalTable posterior_marginal(const Network& net, const ParameterSet& params, const Observation& obs,
                                        std::vector<std::size_t> subset) {
  return posterior_marginal(net, local_tables(net, params), obs, std::move(subset));
}

}  // namespace oracle
}  // namespace rem
