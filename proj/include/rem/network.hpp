#pragma once

// DAG over finite discrete variables with tying classes that share one
// generic conditional table per class.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rem/error.hpp"
#include "rem/local_model.hpp"

namespace rem {

struct Variable {
  std::string name;
  std::vector<std::string> levels;
  std::vector<double> values;  // optional numeric level values, empty if unused

  std::size_t level_count() const noexcept { return levels.size(); }

  std::optional<std::size_t> level_index(const std::string& label) const {
    auto it = std::find(levels.begin(), levels.end(), label);
    if (it == levels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - levels.begin());
  }
};

// A class of variables sharing one generic table. The id is the name of the
// first member in declaration order; parent-configuration labels for keys
// are taken from that member as well.
struct TyingClass {
  std::string id;
  std::vector<std::size_t> members;
  LocalModel model;
  std::size_t config_count = 1;

  std::size_t representative() const { return members.front(); }
};

// Complete configuration: one level index per variable, declaration order.
using Config = std::vector<std::size_t>;

class Network {
 public:
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const Variable& variable(std::size_t v) const { return variables_.at(v); }
  std::size_t size() const noexcept { return variables_.size(); }

  const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
  const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }

  // v together with its parents, sorted by declaration index.
  const std::vector<std::size_t>& family(std::size_t v) const { return families_.at(v); }

  const std::vector<TyingClass>& classes() const noexcept { return classes_; }
  const TyingClass& tying_class(std::size_t c) const { return classes_.at(c); }
  std::size_t class_of(std::size_t v) const { return class_of_.at(v); }
  const LocalModel& local_model_of(std::size_t v) const { return classes_[class_of_.at(v)].model; }

  const std::vector<std::size_t>& topological_order() const noexcept { return topo_; }

  std::optional<std::size_t> find_variable(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t variable_index(const std::string& name) const {
    auto v = find_variable(name);
    if (!v) throw Error(ErrorKind::UnknownVariable, "unknown variable '" + name + "'");
    return *v;
  }

  std::optional<std::size_t> find_class(const std::string& id) const {
    for (std::size_t c = 0; c < classes_.size(); ++c)
      if (classes_[c].id == id) return c;
    return std::nullopt;
  }

  // Row-major index of the parent configuration of v under `config` (the
  // last declared parent varies fastest).
  std::size_t parent_config(std::size_t v, const Config& config) const {
    std::size_t idx = 0;
    for (std::size_t p : parents_[v]) idx = idx * variables_[p].level_count() + config[p];
    return idx;
  }

  // Same, for an assignment given through a lookup function.
  template <typename Lookup>
  std::size_t parent_config_with(std::size_t v, Lookup&& level_of) const {
    std::size_t idx = 0;
    for (std::size_t p : parents_[v]) idx = idx * variables_[p].level_count() + level_of(p);
    return idx;
  }

  // Parent level indices of a configuration index of class c.
  std::vector<std::size_t> decode_parent_config(std::size_t c, std::size_t config) const {
    const auto& ps = parents_[classes_.at(c).representative()];
    std::vector<std::size_t> levels(ps.size());
    for (std::size_t k = ps.size(); k-- > 0;) {
      const std::size_t card = variables_[ps[k]].level_count();
      levels[k] = config % card;
      config /= card;
    }
    return levels;
  }

  // "a|b" in declared parent order of the class representative, "_" when
  // the class has no parents.
  std::string config_key(std::size_t c, std::size_t config) const {
    const auto& ps = parents_[classes_.at(c).representative()];
    if (ps.empty()) return "_";
    const auto levels = decode_parent_config(c, config);
    std::string key;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (k) key += '|';
      key += variables_[ps[k]].levels[levels[k]];
    }
    return key;
  }

  std::size_t parse_config_key(std::size_t c, const std::string& key) const {
    const auto& ps = parents_[classes_.at(c).representative()];
    if (ps.empty()) {
      if (key != "_") throw Error(ErrorKind::UnknownLevel, "class '" + classes_[c].id + "' has no parents; expected key '_'");
      return 0;
    }
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (;;) {
      auto bar = key.find('|', start);
      parts.push_back(key.substr(start, bar == std::string::npos ? std::string::npos : bar - start));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    if (parts.size() != ps.size())
      throw Error(ErrorKind::UnknownLevel, "parent configuration key '" + key + "' for class '" +
                                               classes_[c].id + "' needs " + std::to_string(ps.size()) + " labels");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const auto& var = variables_[ps[k]];
      auto level = var.level_index(parts[k]);
      if (!level) throw Error(ErrorKind::UnknownLevel, "level '" + parts[k] + "' of variable '" + var.name + "'");
      idx = idx * var.level_count() + *level;
    }
    return idx;
  }

  // |I| = product of level counts, saturating at SIZE_MAX.
  std::size_t configuration_count() const {
    std::size_t total = 1;
    for (const auto& var : variables_) {
      if (total > std::numeric_limits<std::size_t>::max() / var.level_count())
        return std::numeric_limits<std::size_t>::max();
      total *= var.level_count();
    }
    return total;
  }

  // |Theta|.
  std::size_t dimension() const {
    std::size_t d = 0;
    for (const auto& cls : classes_) d += cls.config_count * cls.model.dim();
    return d;
  }

 private:
  friend Network build_network(std::vector<Variable>, const std::map<std::string, std::vector<std::string>>&,
                               const std::vector<std::vector<std::string>>&,
                               const std::map<std::string, LocalModel>&);

  std::vector<Variable> variables_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<std::size_t>> families_;
  std::vector<TyingClass> classes_;
  std::vector<std::size_t> class_of_;
  std::vector<std::size_t> topo_;
};

namespace detail {

inline std::vector<std::size_t> find_cycle(const std::vector<std::vector<std::size_t>>& children) {
  const std::size_t n = children.size();
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::size_t> stack;
  std::vector<std::size_t> cycle;
  std::function<bool(std::size_t)> visit = [&](std::size_t v) {
    state[v] = 1;
    stack.push_back(v);
    for (std::size_t w : children[v]) {
      if (state[w] == 1) {
        auto it = std::find(stack.begin(), stack.end(), w);
        cycle.assign(it, stack.end());
        cycle.push_back(w);
        return true;
      }
      if (state[w] == 0 && visit(w)) return true;
    }
    stack.pop_back();
    state[v] = 2;
    return false;
  };
  for (std::size_t v = 0; v < n; ++v)
    if (state[v] == 0 && visit(v)) return cycle;
  return {};
}

}  // namespace detail

// `parent_map` gives each child's ordered parent list; variables absent from
// it have no parents. Variables not named in `tying` form singleton classes.
// `local_models` is keyed by class id; classes without an entry are
// saturated.
inline Network build_network(std::vector<Variable> variables,
                             const std::map<std::string, std::vector<std::string>>& parent_map,
                             const std::vector<std::vector<std::string>>& tying,
                             const std::map<std::string, LocalModel>& local_models = {}) {
  Network net;
  const std::size_t n = variables.size();
  if (n == 0) throw Error(ErrorKind::InvalidModel, "network has no variables");
  for (std::size_t v = 0; v < n; ++v) {
    const auto& var = variables[v];
    if (var.name.empty()) throw Error(ErrorKind::InvalidModel, "variable with empty name");
    if (var.levels.size() < 2)
      throw Error(ErrorKind::InvalidModel, "variable '" + var.name + "' needs at least 2 levels");
    for (std::size_t i = 0; i < var.levels.size(); ++i)
      for (std::size_t j = i + 1; j < var.levels.size(); ++j)
        if (var.levels[i] == var.levels[j])
          throw Error(ErrorKind::InvalidModel, "duplicate level '" + var.levels[i] + "' in variable '" + var.name + "'");
    if (!var.values.empty() && var.values.size() != var.levels.size())
      throw Error(ErrorKind::InvalidModel, "variable '" + var.name + "' has " + std::to_string(var.values.size()) +
                                               " values for " + std::to_string(var.levels.size()) + " levels");
    if (!net.index_.emplace(var.name, v).second)
      throw Error(ErrorKind::InvalidModel, "duplicate variable '" + var.name + "'");
  }
  net.variables_ = std::move(variables);

  net.parents_.assign(n, {});
  net.children_.assign(n, {});
  for (const auto& [child, parents] : parent_map) {
    const std::size_t c = net.variable_index(child);
    for (const auto& pname : parents) {
      const std::size_t p = net.variable_index(pname);
      if (p == c) throw Error(ErrorKind::CycleDetected, "self loop on '" + child + "'");
      if (std::find(net.parents_[c].begin(), net.parents_[c].end(), p) != net.parents_[c].end())
        throw Error(ErrorKind::InvalidModel, "duplicate edge " + pname + " -> " + child);
      net.parents_[c].push_back(p);
      net.children_[p].push_back(c);
    }
  }
  for (auto& ch : net.children_) std::sort(ch.begin(), ch.end());

  if (auto cycle = detail::find_cycle(net.children_); !cycle.empty()) {
    std::string path;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      if (k) path += " -> ";
      path += net.variables_[cycle[k]].name;
    }
    throw Error(ErrorKind::CycleDetected, path);
  }

  // Kahn's algorithm with smallest-index tie break.
  {
    std::vector<std::size_t> indeg(n);
    for (std::size_t v = 0; v < n; ++v) indeg[v] = net.parents_[v].size();
    std::vector<bool> done(n, false);
    for (std::size_t step = 0; step < n; ++step) {
      std::size_t pick = n;
      for (std::size_t v = 0; v < n; ++v)
        if (!done[v] && indeg[v] == 0) { pick = v; break; }
      done[pick] = true;
      net.topo_.push_back(pick);
      for (std::size_t w : net.children_[pick]) --indeg[w];
    }
  }

  net.families_.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    auto fam = net.parents_[v];
    fam.push_back(v);
    std::sort(fam.begin(), fam.end());
    net.families_[v] = std::move(fam);
  }

  // Tying classes.
  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> group_of(n, kUnassigned);
  std::vector<std::vector<std::size_t>> groups;
  for (const auto& members : tying) {
    if (members.empty()) throw Error(ErrorKind::InvalidModel, "empty tying class");
    std::vector<std::size_t> idx;
    for (const auto& name : members) {
      const std::size_t v = net.variable_index(name);
      if (group_of[v] != kUnassigned)
        throw Error(ErrorKind::InvalidModel, "variable '" + name + "' appears in more than one tying class");
      group_of[v] = groups.size();
      idx.push_back(v);
    }
    std::sort(idx.begin(), idx.end());
    groups.push_back(std::move(idx));
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (group_of[v] == kUnassigned) {
      group_of[v] = groups.size();
      groups.push_back({v});
    }
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  net.class_of_.assign(n, 0);
  for (const auto& members : groups) {
    const std::size_t rep = members.front();
    const auto& rep_var = net.variables_[rep];
    const auto& rep_parents = net.parents_[rep];
    for (std::size_t m : members) {
      const auto& var = net.variables_[m];
      const auto& ps = net.parents_[m];
      bool same = var.level_count() == rep_var.level_count() && ps.size() == rep_parents.size();
      for (std::size_t k = 0; same && k < ps.size(); ++k)
        same = net.variables_[ps[k]].level_count() == net.variables_[rep_parents[k]].level_count();
      if (!same)
        throw Error(ErrorKind::TyingShapeMismatch,
                    "'" + var.name + "' and '" + rep_var.name + "' do not share a table shape");
    }
    std::size_t configs = 1;
    for (std::size_t p : rep_parents) configs *= net.variables_[p].level_count();

    auto it = local_models.find(rep_var.name);
    LocalModel model = it != local_models.end() ? it->second : LocalModel::saturated(rep_var.level_count());
    if (model.levels() != rep_var.level_count())
      throw Error(ErrorKind::DimensionMismatch, "local model for class '" + rep_var.name + "' has " +
                                                    std::to_string(model.levels()) + " levels, variable has " +
                                                    std::to_string(rep_var.level_count()));
    const std::size_t c = net.classes_.size();
    for (std::size_t m : members) net.class_of_[m] = c;
    net.classes_.push_back(TyingClass{rep_var.name, members, std::move(model), configs});
  }
  for (const auto& [key, model] : local_models) {
    (void)model;
    if (!net.find_class(key)) {
      if (auto v = net.find_variable(key))
        throw Error(ErrorKind::InvalidModel, "local model key '" + key + "' names a tied member; use class id '" +
                                                 net.classes_[net.class_of_[*v]].id + "'");
      throw Error(ErrorKind::UnknownVariable, "local model for unknown class '" + key + "'");
    }
  }
  return net;
}

}  // namespace rem
