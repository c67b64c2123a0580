// rem: command-line front end.
//
// Exit codes: 0 success, 1 validation or computation error, 2 usage error.

#include <CLI11.hpp>

#include <rem/rem.hpp>

#include <fstream>
#include <iostream>
#include <set>

namespace {

using rem::io::json;
using rem::io::ordered_json;

struct RunConfig {
  std::string model, params, data, prior, elicitation, out;
  std::string type = "normal";
  unsigned threads = 1;
  bool deterministic = false;
  rem::check::CheckOptions check;
};

void emit(const RunConfig& cfg, const ordered_json& j) {
  const std::string text = rem::io::dump(j);
  if (cfg.out.empty()) {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw rem::Error(rem::ErrorKind::ParseError, "cannot write '" + cfg.out + "'");
  f << text;
}

rem::ComputeOptions compute_options(const RunConfig& cfg) {
  rem::ComputeOptions opts;
  // Row reductions are ordered either way; --deterministic also pins one thread.
  opts.threads = cfg.deterministic ? 1 : cfg.threads;
  return opts;
}

ordered_json error_json(const rem::Error& e) {
  return {{"kind", std::string(rem::kind_name(e.kind()))}, {"message", e.message()}};
}

// ---------------------------------------------------------------- validate

// Re-checks parts of the model separately so that independent problems are
// all reported, not just the first one hit.
std::vector<rem::Error> model_problems(const json& j) {
  std::vector<rem::Error> out;
  std::set<std::string> seen;
  auto probe = [&](const json& variant) {
    try {
      rem::io::read_model(variant);
      return true;
    } catch (const rem::Error& e) {
      if (seen.insert(e.what()).second) out.push_back(e);
      return false;
    }
  };
  if (probe(j)) return out;

  json base = j;
  base.erase("tying");
  base.erase("local_models");
  if (!probe(base) || !j.is_object()) return out;

  if (j.contains("tying") && j["tying"].is_array())
    for (const auto& group : j["tying"]) {
      json v = base;
      v["tying"] = json::array({group});
      probe(v);
    }
  if (j.contains("local_models") && j["local_models"].is_object())
    for (auto it = j["local_models"].begin(); it != j["local_models"].end(); ++it) {
      json v = base;
      v["local_models"] = json::object({{it.key(), it.value()}});
      probe(v);
    }
  return out;
}

int cmd_validate(const RunConfig& cfg) {
  const json j = rem::io::parse_json(rem::io::read_text(cfg.model), cfg.model);
  const auto problems = model_problems(j);
  if (!problems.empty()) {
    ordered_json report;
    report["valid"] = false;
    report["errors"] = ordered_json::array();
    for (const auto& e : problems) {
      report["errors"].push_back(error_json(e));
      std::cerr << "error: " << e.what() << "\n";
    }
    emit(cfg, report);
    return 1;
  }
  const rem::Network net = rem::io::read_model(j);
  ordered_json report;
  report["valid"] = true;
  report["variables"] = net.size();
  report["tying_classes"] = net.classes().size();
  report["parameters"] = rem::BlockLayout(net).total();
  report["blocks"] = rem::BlockLayout(net).blocks().size();
  report["complete_configurations"] = net.configuration_count();
  report["classes"] = ordered_json::array();
  for (const auto& cls : net.classes()) {
    ordered_json c;
    c["id"] = cls.id;
    c["members"] = ordered_json::array();
    for (std::size_t v : cls.members) c["members"].push_back(net.variable(v).name);
    c["kind"] = cls.model.kind() == rem::LocalKind::Saturated ? "saturated" : "affine";
    c["levels"] = cls.model.levels();
    c["parent_configurations"] = cls.config_count;
    c["dimension"] = cls.model.dim();
    report["classes"].push_back(c);
  }
  emit(cfg, report);
  return 0;
}

// ---------------------------------------------------------------- compute

struct Inputs {
  rem::Network net;
  rem::ParameterSet params;
  rem::Sample sample;
};

Inputs load(const RunConfig& cfg) {
  rem::Network net = rem::io::read_model_file(cfg.model);
  rem::ParameterSet params = rem::io::read_parameters_file(net, cfg.params);
  rem::Sample sample = rem::io::read_data_file(net, cfg.data);
  return {std::move(net), std::move(params), std::move(sample)};
}

int cmd_compute(const std::string& command, const RunConfig& cfg) {
  const Inputs in = load(cfg);
  const auto opts = compute_options(cfg);
  ordered_json out;
  out["loglik"] = rem::sample_log_likelihood(in.net, in.params, in.sample, opts);
  if (command == "score") {
    out["score"] = rem::io::score_json(in.net, rem::sample_score(in.net, in.params, in.sample, opts));
  } else if (command == "info") {
    out["information"] = rem::io::information_json(in.net, rem::sample_information(in.net, in.params, in.sample, opts));
  } else if (command == "posterior-score" || command == "posterior-info") {
    const rem::Prior prior = rem::io::read_prior_file(in.net, cfg.prior);
    out["prior"] = prior.type == rem::PriorType::Normal ? "normal" : "dirichlet";
    if (command == "posterior-score")
      out["score"] = rem::io::score_json(in.net, rem::posterior_score(in.net, in.params, in.sample, prior, opts));
    else
      out["information"] =
          rem::io::information_json(in.net, rem::posterior_information(in.net, in.params, in.sample, prior, opts));
  }
  emit(cfg, out);
  return 0;
}

// ---------------------------------------------------------------- elicit

int cmd_elicit(const RunConfig& cfg) {
  const rem::Network net = rem::io::read_model_file(cfg.model);
  const rem::Elicitation e = rem::io::read_elicitation_file(net, cfg.elicitation);
  const rem::ElicitedPrior prior = cfg.type == "normal" ? rem::elicit_normal(net, e) : rem::elicit_dirichlet(net, e);
  for (const auto& d : prior.diagnostics)
    for (const auto& w : d.warnings) std::cerr << "warning: " << rem::block_key(net, d.block) << ": " << w << "\n";
  emit(cfg, rem::io::write_elicited_prior(net, prior));
  return 0;
}

// ---------------------------------------------------------------- check

int cmd_check(const RunConfig& cfg) {
  const Inputs in = load(cfg);
  const auto report = rem::check::run_checks(in.net, in.params, in.sample, cfg.check);
  ordered_json out;
  out["passed"] = report.passed();
  out["checks"] = ordered_json::array();
  for (const auto& r : report.results) {
    ordered_json c;
    c["name"] = r.name;
    c["passed"] = r.passed;
    c["max_error"] = r.max_error;
    c["tolerance"] = r.tolerance;
    c["worst_at"] = r.detail;
    out["checks"].push_back(c);
    if (!r.passed) std::cerr << "check failed: " << r.name << " (error " << r.max_error << " at " << r.detail << ")\n";
  }
  emit(cfg, out);
  return report.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Score, information and prior elicitation for recursive exponential models"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_model = [&](CLI::App* sub) {
    sub->add_option("-m,--model", cfg.model, "model JSON")->required()->check(CLI::ExistingFile);
  };
  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", cfg.out, "write JSON here instead of stdout"); };
  auto add_inputs = [&](CLI::App* sub) {
    add_model(sub);
    sub->add_option("-p,--params", cfg.params, "parameter JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("-d,--data", cfg.data, "data file (.csv, .jsonl)")->required()->check(CLI::ExistingFile);
    sub->add_option("--threads", cfg.threads, "worker threads for per-row work")->check(CLI::Range(1u, 1024u));
    sub->add_flag("--deterministic", cfg.deterministic, "single-threaded, byte-identical output");
    add_out(sub);
  };

  auto* validate = app.add_subcommand("validate", "check a model file");
  add_model(validate);
  add_out(validate);

  std::map<std::string, CLI::App*> compute;
  for (const char* name : {"loglik", "score", "info", "posterior-score", "posterior-info"}) {
    auto* sub = app.add_subcommand(name, std::string("compute ") + name);
    add_inputs(sub);
    if (std::string(name).starts_with("posterior"))
      sub->add_option("--prior", cfg.prior, "prior JSON")->required()->check(CLI::ExistingFile);
    compute[name] = sub;
  }

  auto* elicit = app.add_subcommand("elicit", "build a prior from an elicitation file");
  add_model(elicit);
  elicit->add_option("-e,--elicitation", cfg.elicitation, "elicitation JSON")->required()->check(CLI::ExistingFile);
  elicit->add_option("--type", cfg.type, "normal or dirichlet")->check(CLI::IsMember({"normal", "dirichlet"}));
  add_out(elicit);

  auto* check = app.add_subcommand("check", "finite-difference and enumeration self-check");
  add_inputs(check);
  check->add_option("--fd-step", cfg.check.fd_step, "score finite-difference step")->check(CLI::PositiveNumber);
  check->add_option("--hess-step", cfg.check.hess_step, "Hessian finite-difference step")->check(CLI::PositiveNumber);
  check->add_option("--grad-tol", cfg.check.grad_tol, "relative score tolerance")->check(CLI::PositiveNumber);
  check->add_option("--hess-tol", cfg.check.hess_tol, "absolute information tolerance")->check(CLI::PositiveNumber);
  check->add_option("--enum-cap", cfg.check.enum_cap, "largest complete-configuration count to enumerate")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) return cmd_validate(cfg);
    if (elicit->parsed()) return cmd_elicit(cfg);
    if (check->parsed()) return cmd_check(cfg);
    for (const auto& [name, sub] : compute)
      if (sub->parsed()) return cmd_compute(name, cfg);
  } catch (const rem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
