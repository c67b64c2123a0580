#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "rem/error.hpp"
#include "rem/network.hpp"

namespace rem {

// Per-variable candidate level sets. A singleton is an observed value, the
// full level set a missing value, anything in between an imprecise value.
class Observation {
 public:
  Observation(const Network& net, std::vector<std::vector<std::size_t>> candidates)
      : candidates_(std::move(candidates)) {
    if (candidates_.size() != net.size())
      throw Error(ErrorKind::DimensionMismatch, "observation covers " + std::to_string(candidates_.size()) +
                                                    " variables, network has " + std::to_string(net.size()));
    for (std::size_t v = 0; v < candidates_.size(); ++v) {
      auto& set = candidates_[v];
      std::sort(set.begin(), set.end());
      set.erase(std::unique(set.begin(), set.end()), set.end());
      if (set.empty())
        throw Error(ErrorKind::UnknownLevel, "empty candidate set for '" + net.variable(v).name + "'");
      if (set.back() >= net.variable(v).level_count())
        throw Error(ErrorKind::UnknownLevel, "candidate level out of range for '" + net.variable(v).name + "'");
    }
    cards_.reserve(net.size());
    for (const auto& var : net.variables()) cards_.push_back(var.level_count());
  }

  static Observation complete(const Network& net, const Config& x) {
    std::vector<std::vector<std::size_t>> c(x.size());
    for (std::size_t v = 0; v < x.size(); ++v) c[v] = {x[v]};
    return Observation(net, std::move(c));
  }

  static Observation missing(const Network& net) {
    std::vector<std::vector<std::size_t>> c(net.size());
    for (std::size_t v = 0; v < net.size(); ++v) c[v] = all_levels(net.variable(v).level_count());
    return Observation(net, std::move(c));
  }

  std::size_t size() const noexcept { return candidates_.size(); }
  const std::vector<std::size_t>& candidates(std::size_t v) const { return candidates_.at(v); }

  bool allows(std::size_t v, std::size_t level) const {
    const auto& set = candidates_[v];
    return std::binary_search(set.begin(), set.end(), level);
  }

  bool is_observed(std::size_t v) const { return candidates_.at(v).size() == 1; }
  bool is_missing(std::size_t v) const { return candidates_.at(v).size() == cards_.at(v); }
  bool is_complete() const {
    return std::all_of(candidates_.begin(), candidates_.end(), [](const auto& s) { return s.size() == 1; });
  }

  // Copy with the candidate set of v replaced.
  Observation with_candidates(const Network& net, std::size_t v, std::vector<std::size_t> set) const {
    auto c = candidates_;
    c.at(v) = std::move(set);
    return Observation(net, std::move(c));
  }

  friend bool operator==(const Observation& a, const Observation& b) { return a.candidates_ == b.candidates_; }

 private:
  static std::vector<std::size_t> all_levels(std::size_t n) {
    std::vector<std::size_t> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = i;
    return s;
  }

  std::vector<std::vector<std::size_t>> candidates_;
  std::vector<std::size_t> cards_;
};

using Sample = std::vector<Observation>;

}  // namespace rem
