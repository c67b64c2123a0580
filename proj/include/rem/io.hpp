#pragma once

// File formats: model and parameter JSON, CSV / JSON-lines data, elicitation
// and prior JSON, and the score/information result object. Numbers are
// written with 17 significant digits so that outputs re-parse bit-exactly.

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rem/error.hpp"
#include "rem/network.hpp"
#include "rem/observation.hpp"
#include "rem/parameters.hpp"
#include "rem/priors.hpp"
#include "rem/score_info.hpp"

namespace rem::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, what + ": " + e.what());
  }
}

inline std::string format_double(double x) {
  if (std::isnan(x)) return "null";
  if (std::isinf(x)) return x > 0 ? "1e999" : "-1e999";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace detail {

template <typename Json>
void dump(const Json& j, std::string& out, int indent, int depth) {
  auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump(it.value(), out, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump(e, out, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case nlohmann::json::value_t::number_float:
      out += format_double(j.template get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

template <typename Json>
std::string dump(const Json& j, int indent = 2) {
  std::string out;
  detail::dump(j, out, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

namespace detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& what) {
  throw Error(ErrorKind::ParseError, where + ": " + what);
}

inline const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(where, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

inline double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

inline Eigen::VectorXd as_vector(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = as_number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Eigen::MatrixXd as_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string w = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != cols) fail(w, "rows must all have " + std::to_string(cols) + " entries");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_number(j[r][c], w);
  }
  return m;
}

template <typename Json>
Json vector_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

template <typename Json>
Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vector_json<Json>(m.row(r).transpose()));
  return rows;
}

inline std::size_t class_for_key(const Network& net, const std::string& key, const std::string& where) {
  if (auto c = net.find_class(key)) return *c;
  if (auto v = net.find_variable(key))
    throw Error(ErrorKind::PerMemberElicitation, where + ": '" + key + "' is a tied member; use the class id '" +
                                                     net.tying_class(net.class_of(*v)).id + "'");
  throw Error(ErrorKind::UnknownVariable, where + ": unknown class '" + key + "'");
}

// Visits {class_id: {config_key: value}} and checks that every block is
// covered exactly once.
template <typename Fn>
void for_each_block(const Network& net, const json& j, const std::string& where, ErrorKind missing, Fn&& fn) {
  if (!j.is_object()) fail(where, "expected an object keyed by class id");
  std::vector<std::vector<bool>> seen(net.classes().size());
  for (std::size_t c = 0; c < net.classes().size(); ++c) seen[c].assign(net.tying_class(c).config_count, false);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string w = where + "." + it.key();
    const std::size_t c = class_for_key(net, it.key(), w);
    if (!it.value().is_object()) fail(w, "expected an object keyed by parent configuration");
    for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) {
      const std::size_t k = net.parse_config_key(c, jt.key());
      seen[c][k] = true;
      fn(BlockIndex{c, k}, jt.value(), w + "[\"" + jt.key() + "\"]");
    }
  }
  for (std::size_t c = 0; c < seen.size(); ++c)
    for (std::size_t k = 0; k < seen[c].size(); ++k)
      if (!seen[c][k]) throw Error(missing, where + ": no entry for block '" + block_key(net, {c, k}) + "'");
}

}  // namespace detail

// ---------------------------------------------------------------- model

inline Network read_model(const json& j) {
  using namespace detail;
  std::vector<Variable> vars;
  const auto& jv = field(j, "variables", "model");
  if (!jv.is_array()) fail("model.variables", "expected an array");
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const std::string w = "model.variables[" + std::to_string(i) + "]";
    Variable var;
    var.name = as_string(field(jv[i], "name", w), w + ".name");
    const auto& lv = field(jv[i], "levels", w);
    if (!lv.is_array()) fail(w + ".levels", "expected an array of strings");
    for (std::size_t k = 0; k < lv.size(); ++k) var.levels.push_back(as_string(lv[k], w + ".levels"));
    if (jv[i].contains("values")) {
      const auto vals = as_vector(jv[i]["values"], w + ".values");
      var.values.assign(vals.begin(), vals.end());
    }
    vars.push_back(std::move(var));
  }

  std::map<std::string, std::vector<std::string>> parents;
  if (j.contains("edges")) {
    const auto& je = j["edges"];
    if (!je.is_array()) fail("model.edges", "expected an array of [parent, child] pairs");
    for (std::size_t i = 0; i < je.size(); ++i) {
      const std::string w = "model.edges[" + std::to_string(i) + "]";
      if (!je[i].is_array() || je[i].size() != 2) fail(w, "expected [parent, child]");
      parents[as_string(je[i][1], w)].push_back(as_string(je[i][0], w));
    }
  }

  std::vector<std::vector<std::string>> tying;
  if (j.contains("tying")) {
    const auto& jt = j["tying"];
    if (!jt.is_array()) fail("model.tying", "expected an array of member lists");
    for (std::size_t i = 0; i < jt.size(); ++i) {
      const std::string w = "model.tying[" + std::to_string(i) + "]";
      if (!jt[i].is_array()) fail(w, "expected an array of variable names");
      std::vector<std::string> members;
      for (const auto& m : jt[i]) members.push_back(as_string(m, w));
      tying.push_back(std::move(members));
    }
  }

  // Class ids depend on the tying partition: the first declared member.
  std::map<std::string, LocalModel> models;
  if (j.contains("local_models")) {
    const auto& jm = j["local_models"];
    if (!jm.is_object()) fail("model.local_models", "expected an object keyed by class id");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < vars.size(); ++i) index[vars[i].name] = i;
    for (auto it = jm.begin(); it != jm.end(); ++it) {
      const std::string w = "model.local_models." + it.key();
      auto vi = index.find(it.key());
      if (vi == index.end()) throw Error(ErrorKind::UnknownVariable, w + ": unknown class '" + it.key() + "'");
      const Variable& var = vars[vi->second];
      const auto& spec = it.value();
      const std::string kind = spec.contains("kind") ? as_string(spec["kind"], w + ".kind") : "saturated";
      Eigen::VectorXd carrier;
      if (spec.contains("carrier")) carrier = as_vector(spec["carrier"], w + ".carrier");
      try {
        if (kind == "saturated") {
          models.emplace(it.key(), LocalModel::saturated(var.level_count(), carrier));
        } else if (kind == "affine") {
          if (spec.contains("design")) {
            models.emplace(it.key(), LocalModel::affine(as_matrix(spec["design"], w + ".design"), carrier));
          } else if (!var.values.empty()) {
            models.emplace(it.key(), LocalModel::affine_from_values(var.values, carrier));
          } else {
            fail(w, "affine model needs a 'design' or numeric level 'values'");
          }
        } else {
          fail(w + ".kind", "expected \"saturated\" or \"affine\"");
        }
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseError) throw;
        throw e.with_context(w);
      }
    }
  }
  return build_network(std::move(vars), parents, tying, models);
}

inline Network read_model_file(const std::string& path) { return read_model(parse_json(read_text(path), path)); }

inline ordered_json write_model(const Network& net) {
  ordered_json j;
  j["variables"] = ordered_json::array();
  for (const auto& var : net.variables()) {
    ordered_json v;
    v["name"] = var.name;
    v["levels"] = var.levels;
    if (!var.values.empty()) v["values"] = var.values;
    j["variables"].push_back(v);
  }
  j["edges"] = ordered_json::array();
  for (std::size_t c = 0; c < net.size(); ++c)
    for (std::size_t p : net.parents(c)) j["edges"].push_back({net.variable(p).name, net.variable(c).name});
  j["tying"] = ordered_json::array();
  j["local_models"] = ordered_json::object();
  for (const auto& cls : net.classes()) {
    if (cls.members.size() > 1) {
      ordered_json m = ordered_json::array();
      for (std::size_t v : cls.members) m.push_back(net.variable(v).name);
      j["tying"].push_back(m);
    }
    ordered_json lm;
    lm["kind"] = cls.model.kind() == LocalKind::Saturated ? "saturated" : "affine";
    if (cls.model.kind() == LocalKind::Affine) lm["design"] = detail::matrix_json<ordered_json>(cls.model.design());
    lm["carrier"] = detail::vector_json<ordered_json>(cls.model.carrier());
    j["local_models"][cls.id] = lm;
  }
  return j;
}

// ---------------------------------------------------------------- parameters

inline ParameterSet read_parameters(const Network& net, const json& j) {
  ParameterSet params = ParameterSet::zeros(net);
  detail::for_each_block(net, j, "params", ErrorKind::DimensionMismatch,
                         [&](BlockIndex b, const json& value, const std::string& where) {
                           try {
                             params.set(b, detail::as_vector(value, where));
                           } catch (const Error& e) {
                             if (e.kind() == ErrorKind::ParseError) throw;
                             throw e.with_context(where);
                           }
                         });
  return params;
}

inline ParameterSet read_parameters_file(const Network& net, const std::string& path) {
  return read_parameters(net, parse_json(read_text(path), path));
}

inline ordered_json write_parameters(const Network& net, const ParameterSet& params) {
  ordered_json j = ordered_json::object();
  for (BlockIndex b : BlockLayout(net).blocks())
    j[net.tying_class(b.cls).id][net.config_key(b.cls, b.config)] = detail::vector_json<ordered_json>(params.block(b));
  return j;
}

// ---------------------------------------------------------------- data

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

inline std::size_t level_or_throw(const Variable& var, const std::string& label, const std::string& where) {
  auto level = var.level_index(label);
  if (!level) throw Error(ErrorKind::UnknownLevel, where + ": '" + label + "' is not a level of '" + var.name + "'");
  return *level;
}

inline std::vector<std::size_t> all_levels(const Variable& var) {
  std::vector<std::size_t> s(var.level_count());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = i;
  return s;
}

// "?" or empty: missing; "{a;b}": imprecise; otherwise one label.
inline std::vector<std::size_t> parse_cell(const Variable& var, const std::string& raw, const std::string& where) {
  const std::string cell = trim(raw);
  if (cell.empty() || cell == "?") return all_levels(var);
  if (cell.front() == '{') {
    if (cell.back() != '}') fail(where, "unterminated candidate set '" + cell + "'");
    std::vector<std::size_t> set;
    for (const auto& part : split(cell.substr(1, cell.size() - 2), ';'))
      set.push_back(level_or_throw(var, trim(part), where));
    return set;
  }
  return {level_or_throw(var, cell, where)};
}

}  // namespace detail

// CSV with a header row of variable names. Variables without a column are
// missing in every row.
inline Sample read_csv(const Network& net, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::size_t> columns;
  bool have_header = false;
  Sample sample;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (!have_header) {
      for (const auto& c : cells) {
        const std::string name = detail::trim(c);
        auto v = net.find_variable(name);
        if (!v) throw Error(ErrorKind::UnknownVariable, "data line 1: unknown column '" + name + "'");
        columns.push_back(*v);
      }
      have_header = true;
      continue;
    }
    const std::string where = "data line " + std::to_string(lineno);
    if (cells.size() != columns.size())
      detail::fail(where, "expected " + std::to_string(columns.size()) + " cells, found " + std::to_string(cells.size()));
    std::vector<std::vector<std::size_t>> cand(net.size());
    for (std::size_t v = 0; v < net.size(); ++v) cand[v] = detail::all_levels(net.variable(v));
    for (std::size_t k = 0; k < cells.size(); ++k)
      cand[columns[k]] = detail::parse_cell(net.variable(columns[k]), cells[k], where);
    sample.emplace_back(net, std::move(cand));
  }
  if (!have_header) detail::fail("data", "missing header row");
  return sample;
}

// One JSON object per line; values are a label, "?", or an array of labels.
inline Sample read_jsonl(const Network& net, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Sample sample;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const std::string where = "data line " + std::to_string(lineno);
    const json row = parse_json(line, where);
    if (!row.is_object()) detail::fail(where, "expected an object");
    std::vector<std::vector<std::size_t>> cand(net.size());
    for (std::size_t v = 0; v < net.size(); ++v) cand[v] = detail::all_levels(net.variable(v));
    for (auto it = row.begin(); it != row.end(); ++it) {
      auto v = net.find_variable(it.key());
      if (!v) throw Error(ErrorKind::UnknownVariable, where + ": unknown variable '" + it.key() + "'");
      const auto& var = net.variable(*v);
      if (it.value().is_string()) {
        cand[*v] = detail::parse_cell(var, it.value().get<std::string>(), where);
      } else if (it.value().is_array()) {
        std::vector<std::size_t> set;
        for (const auto& label : it.value()) set.push_back(detail::level_or_throw(var, detail::as_string(label, where), where));
        cand[*v] = std::move(set);
      } else if (!it.value().is_null()) {
        detail::fail(where + "." + it.key(), "expected a string or an array of strings");
      }
    }
    sample.emplace_back(net, std::move(cand));
  }
  return sample;
}

inline Sample read_data_file(const Network& net, const std::string& path) {
  const std::string text = read_text(path);
  const bool jsonl = path.ends_with(".jsonl") || path.ends_with(".ndjson");
  return jsonl ? read_jsonl(net, text) : read_csv(net, text);
}

// ---------------------------------------------------------------- elicitation

inline Elicitation read_elicitation(const Network& net, const json& j) {
  Elicitation e;
  detail::for_each_block(net, j, "elicitation", ErrorKind::MissingPriorBlock,
                         [&](BlockIndex b, const json& value, const std::string& where) {
                           ElicitedBlock block;
                           block.best_guess = detail::as_vector(detail::field(value, "best_guess", where), where + ".best_guess");
                           const auto& iv = detail::field(value, "intervals", where);
                           if (!iv.is_array()) detail::fail(where + ".intervals", "expected an array");
                           for (std::size_t i = 0; i < iv.size(); ++i) {
                             const std::string w = where + ".intervals[" + std::to_string(i) + "]";
                             if (iv[i].is_null()) {
                               block.intervals.push_back(std::nullopt);
                               continue;
                             }
                             const auto pair = detail::as_vector(iv[i], w);
                             if (pair.size() != 2) detail::fail(w, "expected [lo, hi]");
                             block.intervals.push_back(LevelInterval{pair(0), pair(1)});
                           }
                           e.blocks[b] = std::move(block);
                         });
  return e;
}

inline Elicitation read_elicitation_file(const Network& net, const std::string& path) {
  return read_elicitation(net, parse_json(read_text(path), path));
}

// ---------------------------------------------------------------- prior

inline Prior read_prior(const Network& net, const json& j) {
  Prior prior;
  const std::string type = detail::as_string(detail::field(j, "type", "prior"), "prior.type");
  if (type == "normal")
    prior.type = PriorType::Normal;
  else if (type == "dirichlet")
    prior.type = PriorType::Dirichlet;
  else
    detail::fail("prior.type", "expected \"normal\" or \"dirichlet\"");
  detail::for_each_block(
      net, detail::field(j, "blocks", "prior"), "prior.blocks", ErrorKind::MissingPriorBlock,
      [&](BlockIndex b, const json& value, const std::string& where) {
        const auto& model = net.tying_class(b.cls).model;
        try {
          if (prior.type == PriorType::Normal) {
            NormalPriorBlock nb;
            nb.theta_star = detail::as_vector(detail::field(value, "theta_star", where), where + ".theta_star");
            nb.beta = detail::as_number(detail::field(value, "beta", where), where + ".beta");
            nb.nu_star = detail::as_matrix(detail::field(value, "nu_star", where), where + ".nu_star");
            check_normal_block(nb, model.dim());
            prior.normal[b] = std::move(nb);
          } else {
            DirichletPriorBlock db{detail::as_vector(detail::field(value, "alpha", where), where + ".alpha")};
            check_dirichlet_block(db, model);
            prior.dirichlet[b] = std::move(db);
          }
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::ParseError) throw;
          throw e.with_context(where);
        }
      });
  return prior;
}

inline Prior read_prior_file(const Network& net, const std::string& path) {
  return read_prior(net, parse_json(read_text(path), path));
}

inline ordered_json write_prior(const Network& net, const Prior& prior) {
  ordered_json j;
  j["type"] = prior.type == PriorType::Normal ? "normal" : "dirichlet";
  j["blocks"] = ordered_json::object();
  for (BlockIndex b : BlockLayout(net).blocks()) {
    ordered_json entry;
    if (prior.type == PriorType::Normal) {
      auto it = prior.normal.find(b);
      if (it == prior.normal.end()) continue;
      entry["theta_star"] = detail::vector_json<ordered_json>(it->second.theta_star);
      entry["beta"] = it->second.beta;
      entry["nu_star"] = detail::matrix_json<ordered_json>(it->second.nu_star);
    } else {
      auto it = prior.dirichlet.find(b);
      if (it == prior.dirichlet.end()) continue;
      entry["alpha"] = detail::vector_json<ordered_json>(it->second.alpha);
    }
    j["blocks"][net.tying_class(b.cls).id][net.config_key(b.cls, b.config)] = entry;
  }
  return j;
}

// Prior file plus a "diagnostics" section mirroring the block keys.
inline ordered_json write_elicited_prior(const Network& net, const ElicitedPrior& elicited) {
  ordered_json j = write_prior(net, elicited.prior);
  ordered_json diag = ordered_json::object();
  for (const auto& d : elicited.diagnostics) {
    ordered_json entry;
    if (d.fit) {
      entry["iterations"] = d.fit->iterations;
      entry["kl"] = d.fit->kl;
      ordered_json trace = ordered_json::array();
      for (const auto& step : d.fit->trace) {
        ordered_json s;
        s["theta"] = detail::vector_json<ordered_json>(step.theta);
        s["gradient"] = detail::vector_json<ordered_json>(step.gradient);
        s["hessian"] = detail::matrix_json<ordered_json>(step.hessian);
        s["probs"] = detail::vector_json<ordered_json>(step.probs);
        trace.push_back(s);
      }
      entry["trace"] = trace;
    }
    if (d.beta) {
      ordered_json per = ordered_json::array();
      for (const auto& b : d.beta->per_level) per.push_back(b ? ordered_json(*b) : ordered_json(nullptr));
      entry["beta_per_level"] = per;
      entry["variance"] = detail::matrix_json<ordered_json>(d.beta->covariance());
    }
    if (d.counts) {
      ordered_json per = ordered_json::array();
      for (const auto& a : d.counts->sample_sizes) per.push_back(a ? ordered_json(*a) : ordered_json(nullptr));
      entry["sample_sizes"] = per;
      entry["equivalent_sample_size"] = d.counts->block.total();
    }
    entry["warnings"] = d.warnings;
    diag[net.tying_class(d.block.cls).id][net.config_key(d.block.cls, d.block.config)] = entry;
  }
  j["diagnostics"] = diag;
  return j;
}

// ---------------------------------------------------------------- results

inline ordered_json score_json(const Network& net, const ScoreVector& s) {
  ordered_json j = ordered_json::object();
  for (BlockIndex b : s.layout.blocks()) j[block_key(net, b)] = detail::vector_json<ordered_json>(s.block(b));
  return j;
}

// Block pairs keyed "u-key;v-key". Diagonal blocks are always written,
// off-diagonal blocks (upper triangle in layout order) only when non-zero.
inline ordered_json information_json(const Network& net, const InfoMatrix& info) {
  ordered_json blocks = ordered_json::object();
  const auto& all = info.layout.blocks();
  for (std::size_t a = 0; a < all.size(); ++a) {
    for (std::size_t b = a; b < all.size(); ++b) {
      const Eigen::MatrixXd m = info.block(all[a], all[b]);
      if (a != b && (m.array() == 0.0).all()) continue;
      blocks[block_key(net, all[a]) + ";" + block_key(net, all[b])] = detail::matrix_json<ordered_json>(m);
    }
  }
  ordered_json j;
  j["blocks"] = blocks;
  return j;
}

}  // namespace rem::io
