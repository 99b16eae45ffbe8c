#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ndde/cli.hpp"
#include "ndde/error.hpp"

namespace ndde::cli {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw ValidationError("config", "config " + where + ": " + msg);
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (allowed.count(k) == 0) bad(where, "unknown key '" + k + "'");
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

std::string text(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  // Plain numbers are accepted wherever an expression is expected.
  if (j.is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << j.get<double>();
    return os.str();
  }
  bad(where, "expected an expression string");
}

std::vector<RawTerm> terms(const json& j, const std::string& where, const char* coef,
                           const char* delay) {
  std::vector<RawTerm> out;
  if (!j.is_array()) bad(where, "expected a list");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string at = where + "[" + std::to_string(i) + "]";
    only_keys(j[i], at, {coef, delay});
    if (!j[i].contains(coef) || !j[i].contains(delay)) {
      bad(at, std::string("needs '") + coef + "' and '" + delay + "'");
    }
    out.push_back({text(j[i][coef], at + "." + coef), text(j[i][delay], at + "." + delay)});
  }
  return out;
}

void read_problem(const json& j, RunConfig& cfg) {
  only_keys(j, "problem", {"t0", "D", "neutral", "positive", "negative", "validation"});
  if (j.contains("t0")) cfg.problem.t0 = number(j["t0"], "problem.t0");
  if (j.contains("D")) cfg.problem.D = number(j["D"], "problem.D");
  if (j.contains("neutral")) cfg.problem.neutral = terms(j["neutral"], "problem.neutral", "R", "r");
  if (!j.contains("positive")) bad("problem", "needs a 'positive' list");
  cfg.problem.positive = terms(j["positive"], "problem.positive", "P", "tau");
  if (j.contains("negative")) {
    cfg.problem.negative = terms(j["negative"], "problem.negative", "Q", "delta");
  }
  if (j.contains("validation")) {
    const json& v = j["validation"];
    only_keys(v, "problem.validation", {"t_end", "step"});
    ValidationGrid g;
    g.t_end = number(v.at("t_end"), "problem.validation.t_end");
    g.step = number(v.at("step"), "problem.validation.step");
    cfg.validation = g;
  }
}

void read_analysis(const json& j, RunConfig& cfg) {
  only_keys(j, "analysis",
            {"tail_start", "horizon", "grid_step", "quad_tol", "root_tol", "margin",
             "omega_slack", "m_max", "slow_shifts", "pbar_star", "Delta", "tau_hat",
             "assert_slow"});
  AnalysisConfig& a = cfg.analysis;
  if (!j.contains("tail_start") || !j.contains("horizon")) {
    bad("analysis", "needs 'tail_start' and 'horizon'");
  }
  a.tail_start = number(j["tail_start"], "analysis.tail_start");
  a.horizon = number(j["horizon"], "analysis.horizon");
  if (j.contains("grid_step")) a.grid_step = number(j["grid_step"], "analysis.grid_step");
  if (j.contains("quad_tol")) a.quad_tol = number(j["quad_tol"], "analysis.quad_tol");
  if (j.contains("root_tol")) a.root_tol = number(j["root_tol"], "analysis.root_tol");
  if (j.contains("margin")) a.margin = number(j["margin"], "analysis.margin");
  if (j.contains("omega_slack")) a.omega_slack = number(j["omega_slack"], "analysis.omega_slack");
  if (j.contains("m_max")) {
    if (!j["m_max"].is_number_integer()) bad("analysis.m_max", "expected an integer");
    a.m_max = j["m_max"].get<int>();
  }
  if (j.contains("slow_shifts")) {
    a.slow_shifts.clear();
    if (!j["slow_shifts"].is_array()) bad("analysis.slow_shifts", "expected a list");
    for (const auto& h : j["slow_shifts"]) a.slow_shifts.push_back(number(h, "analysis.slow_shifts"));
  }
  if (j.contains("pbar_star")) {
    cfg.pbar_star = text(j["pbar_star"], "analysis.pbar_star");
    if (cfg.pbar_star != "auto" && cfg.pbar_star != "direct" && cfg.pbar_star != "sup_bound") {
      bad("analysis.pbar_star", "expected auto, direct or sup_bound");
    }
  }
  if (j.contains("Delta")) {
    if (!j["Delta"].is_array()) bad("analysis.Delta", "expected a list");
    for (const auto& d : j["Delta"]) cfg.Delta.push_back(number(d, "analysis.Delta"));
  }
  if (j.contains("tau_hat")) cfg.tau_hat = text(j["tau_hat"], "analysis.tau_hat");
  if (j.contains("assert_slow")) {
    if (!j["assert_slow"].is_array()) bad("analysis.assert_slow", "expected a list");
    for (const auto& s : j["assert_slow"]) {
      if (!s.is_string()) bad("analysis.assert_slow", "expected criterion ids");
      cfg.assert_slow.push_back(s.get<std::string>());
    }
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("config is not valid JSON: ") + e.what());
  }
  only_keys(j, "root", {"problem", "analysis", "simulate", "output"});
  RunConfig cfg;
  if (!j.contains("problem")) bad("root", "needs a 'problem' section");
  read_problem(j["problem"], cfg);
  if (!j.contains("analysis")) bad("root", "needs an 'analysis' section");
  read_analysis(j["analysis"], cfg);
  if (j.contains("simulate")) {
    const json& s = j["simulate"];
    only_keys(s, "simulate", {"history", "t_end", "dt", "window"});
    SimulateSpec spec;
    spec.history = text(s.at("history"), "simulate.history");
    spec.t_end = number(s.at("t_end"), "simulate.t_end");
    spec.dt = number(s.at("dt"), "simulate.dt");
    if (s.contains("window")) spec.window = number(s["window"], "simulate.window");
    cfg.simulate = spec;
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    only_keys(o, "output", {"report", "trajectory", "format"});
    if (o.contains("report")) cfg.output.report = text(o["report"], "output.report");
    if (o.contains("trajectory")) cfg.output.trajectory = text(o["trajectory"], "output.trajectory");
    if (o.contains("format")) {
      cfg.output.format = text(o["format"], "output.format");
      if (cfg.output.format != "json") bad("output.format", "only json is supported");
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config", "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

ValidationGrid effective_grid(const RunConfig& cfg) {
  if (cfg.validation) return *cfg.validation;
  ValidationGrid g;
  g.t_end = cfg.analysis.horizon;
  if (cfg.simulate) g.t_end = std::max(g.t_end, cfg.simulate->t_end);
  g.step = cfg.analysis.grid_step;
  return g;
}

AnalysisOptions analysis_options(const RunConfig& cfg) {
  AnalysisOptions opt;
  if (cfg.pbar_star == "direct") opt.transform.choice = PbarStarChoice::Direct;
  if (cfg.pbar_star == "sup_bound") opt.transform.choice = PbarStarChoice::SupBound;
  opt.transform.Delta = cfg.Delta;
  if (!cfg.tau_hat.empty()) opt.tau_hat = parse(cfg.tau_hat);
  opt.asserted_slow.insert(cfg.assert_slow.begin(), cfg.assert_slow.end());
  return opt;
}

}  // namespace ndde::cli
