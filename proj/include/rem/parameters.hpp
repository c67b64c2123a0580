#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "rem/error.hpp"
#include "rem/local_model.hpp"
#include "rem/network.hpp"

namespace rem {

// Identifies the parameter block of one tying class at one parent
// configuration.
struct BlockIndex {
  std::size_t cls = 0;
  std::size_t config = 0;
  auto operator<=>(const BlockIndex&) const = default;
};

// "class|parent-key", e.g. "X6|i1" or "X1|_".
inline std::string block_key(const Network& net, BlockIndex b) {
  return net.tying_class(b.cls).id + "|" + net.config_key(b.cls, b.config);
}

// Flat layout of all parameter blocks: classes in order, then parent
// configurations in row-major order.
class BlockLayout {
 public:
  explicit BlockLayout(const Network& net) {
    offsets_.resize(net.classes().size());
    for (std::size_t c = 0; c < net.classes().size(); ++c) {
      const auto& cls = net.tying_class(c);
      for (std::size_t k = 0; k < cls.config_count; ++k) {
        offsets_[c].push_back(total_);
        blocks_.push_back({c, k});
        dims_.push_back(cls.model.dim());
        total_ += cls.model.dim();
      }
    }
  }

  std::size_t offset(BlockIndex b) const { return offsets_.at(b.cls).at(b.config); }
  std::size_t dim(BlockIndex b) const { return dims_[position(b)]; }
  std::size_t total() const noexcept { return total_; }
  const std::vector<BlockIndex>& blocks() const& noexcept { return blocks_; }
  // by value on temporaries, so `for (b : BlockLayout(net).blocks())` is safe
  std::vector<BlockIndex> blocks() && { return std::move(blocks_); }

  std::size_t position(BlockIndex b) const {
    std::size_t pos = 0;
    for (std::size_t c = 0; c < b.cls; ++c) pos += offsets_[c].size();
    return pos + b.config;
  }

 private:
  std::vector<std::vector<std::size_t>> offsets_;
  std::vector<BlockIndex> blocks_;
  std::vector<std::size_t> dims_;
  std::size_t total_ = 0;
};

class ParameterSet {
 public:
  ParameterSet() = default;

  // All-zero parameters (uniform local distributions when b = 1).
  static ParameterSet zeros(const Network& net) {
    ParameterSet ps;
    ps.blocks_.resize(net.classes().size());
    for (std::size_t c = 0; c < net.classes().size(); ++c) {
      const auto& cls = net.tying_class(c);
      ps.blocks_[c].assign(cls.config_count, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cls.model.dim())));
    }
    return ps;
  }

  static ParameterSet from_flat(const Network& net, const Eigen::VectorXd& flat) {
    const BlockLayout layout(net);
    if (static_cast<std::size_t>(flat.size()) != layout.total())
      throw Error(ErrorKind::DimensionMismatch, "flat parameter vector has length " + std::to_string(flat.size()) +
                                                    ", expected " + std::to_string(layout.total()));
    ParameterSet ps = zeros(net);
    for (BlockIndex b : layout.blocks())
      ps.set(b, flat.segment(static_cast<Eigen::Index>(layout.offset(b)), static_cast<Eigen::Index>(layout.dim(b))));
    return ps;
  }

  Eigen::VectorXd flat() const {
    std::size_t total = 0;
    for (const auto& cls : blocks_)
      for (const auto& b : cls) total += static_cast<std::size_t>(b.size());
    Eigen::VectorXd out(static_cast<Eigen::Index>(total));
    Eigen::Index pos = 0;
    for (const auto& cls : blocks_)
      for (const auto& b : cls) {
        out.segment(pos, b.size()) = b;
        pos += b.size();
      }
    return out;
  }

  const Eigen::VectorXd& block(BlockIndex b) const { return blocks_.at(b.cls).at(b.config); }

  void set(BlockIndex b, Eigen::VectorXd theta) {
    auto& slot = blocks_.at(b.cls).at(b.config);
    if (theta.size() != slot.size())
      throw Error(ErrorKind::DimensionMismatch, "parameter block has dimension " + std::to_string(theta.size()) +
                                                    ", expected " + std::to_string(slot.size()));
    if (!theta.allFinite()) throw Error(ErrorKind::NonFinite, "parameter block has non-finite entries");
    slot = std::move(theta);
  }

  std::size_t class_count() const noexcept { return blocks_.size(); }
  std::size_t config_count(std::size_t cls) const { return blocks_.at(cls).size(); }

  // Throws unless the block structure matches `net`.
  void check_against(const Network& net) const {
    if (blocks_.size() != net.classes().size())
      throw Error(ErrorKind::DimensionMismatch, "parameter set does not match the network's tying classes");
    for (std::size_t c = 0; c < blocks_.size(); ++c) {
      const auto& cls = net.tying_class(c);
      if (blocks_[c].size() != cls.config_count)
        throw Error(ErrorKind::DimensionMismatch, "class '" + cls.id + "' has wrong number of parent configurations");
      for (const auto& b : blocks_[c])
        if (static_cast<std::size_t>(b.size()) != cls.model.dim())
          throw Error(ErrorKind::DimensionMismatch, "class '" + cls.id + "' has a block of wrong dimension");
    }
  }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.blocks_.size() != b.blocks_.size()) return false;
    for (std::size_t c = 0; c < a.blocks_.size(); ++c) {
      if (a.blocks_[c].size() != b.blocks_[c].size()) return false;
      for (std::size_t k = 0; k < a.blocks_[c].size(); ++k)
        if (a.blocks_[c][k].size() != b.blocks_[c][k].size() || a.blocks_[c][k] != b.blocks_[c][k]) return false;
    }
    return true;
  }

 private:
  std::vector<std::vector<Eigen::VectorXd>> blocks_;
};

// Local moments for every block, indexed [class][config].
using LocalTables = std::vector<std::vector<LocalMoments>>;

inline LocalTables local_tables(const Network& net, const ParameterSet& params) {
  params.check_against(net);
  LocalTables tables(net.classes().size());
  for (std::size_t c = 0; c < net.classes().size(); ++c) {
    const auto& cls = net.tying_class(c);
    tables[c].reserve(cls.config_count);
    for (std::size_t k = 0; k < cls.config_count; ++k) tables[c].push_back(local_moments(cls.model, params.block({c, k})));
  }
  return tables;
}

inline void check_config(const Network& net, const Config& x) {
  if (x.size() != net.size())
    throw Error(ErrorKind::DimensionMismatch, "configuration assigns " + std::to_string(x.size()) +
                                                  " variables, network has " + std::to_string(net.size()));
  for (std::size_t v = 0; v < x.size(); ++v)
    if (x[v] >= net.variable(v).level_count())
      throw Error(ErrorKind::UnknownLevel, "level index " + std::to_string(x[v]) + " out of range for '" +
                                               net.variable(v).name + "'");
}

// p(x | theta) as the product of tied local probabilities.
inline double joint_prob(const Network& net, const LocalTables& tables, const Config& x) {
  check_config(net, x);
  double p = 1.0;
  for (std::size_t v = 0; v < net.size(); ++v)
    p *= tables[net.class_of(v)][net.parent_config(v, x)].probs(static_cast<Eigen::Index>(x[v]));
  return p;
}

inline double joint_prob(const Network& net, const ParameterSet& params, const Config& x) {
  return joint_prob(net, local_tables(net, params), x);
}

}  // namespace rem
