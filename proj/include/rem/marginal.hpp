#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rem/error.hpp"
#include "rem/network.hpp"

namespace rem {

// Table over a variable subset. `vars` is sorted by declaration index and
// entries are laid out row-major (the last variable varies fastest).
struct MarginalTable {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> cards;
  std::vector<double> values;

  MarginalTable() : values(1, 0.0) {}

  MarginalTable(const Network& net, std::vector<std::size_t> subset) : vars(std::move(subset)) {
    std::size_t n = 1;
    for (std::size_t v : vars) {
      cards.push_back(net.variable(v).level_count());
      n *= cards.back();
    }
    values.assign(n, 0.0);
  }

  std::size_t size() const noexcept { return values.size(); }

  // Entry index of the sub-configuration of a full configuration.
  std::size_t index_of(const Config& full) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vars.size(); ++k) idx = idx * cards[k] + full[vars[k]];
    return idx;
  }

  // Level of the k-th table variable at entry `idx`.
  std::size_t level_at(std::size_t idx, std::size_t k) const {
    for (std::size_t j = vars.size(); j-- > k + 1;) idx /= cards[j];
    return idx % cards[k];
  }

  // Levels of all table variables at entry `idx`.
  std::vector<std::size_t> levels_at(std::size_t idx) const {
    std::vector<std::size_t> out(vars.size());
    for (std::size_t k = vars.size(); k-- > 0;) {
      out[k] = idx % cards[k];
      idx /= cards[k];
    }
    return out;
  }

  double at(const std::vector<std::size_t>& levels) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < vars.size(); ++k) idx = idx * cards[k] + levels.at(k);
    return values.at(idx);
  }

  double sum() const {
    double s = 0.0;
    for (double x : values) s += x;
    return s;
  }
};

}  // namespace rem
