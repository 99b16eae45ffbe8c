#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "json.hpp"
#include "ndde/cli.hpp"

namespace ndde::cli {

namespace {

using nlohmann::ordered_json;

ordered_json real(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

ordered_json tail_json(const TailEstimate& est) {
  ordered_json j;
  j["value"] = real(est.value);
  j["converged"] = est.converged;
  ordered_json trend = ordered_json::array();
  for (const auto& p : est.trend) {
    trend.push_back({{"window_start", real(p.window_start)}, {"extremum", real(p.extremum)}});
  }
  j["trend"] = trend;
  return j;
}

ordered_json criterion_json(const CriterionReport& r) {
  ordered_json j;
  j["id"] = r.id;
  j["family"] = r.family;
  j["m"] = r.m >= 0 ? ordered_json(r.m) : ordered_json(nullptr);
  j["statistic"] = real(r.statistic);
  j["threshold"] = real(r.threshold);
  j["margin"] = real(r.margin_used);
  j["verdict"] = verdict_name(r.verdict);
  ordered_json pre = ordered_json::array();
  for (const auto& p : r.preconditions) {
    pre.push_back({{"name", p.name}, {"passed", p.passed}, {"detail", p.detail}});
  }
  j["preconditions"] = pre;
  ordered_json diag = ordered_json::object();
  diag["tail"] = r.tail ? tail_json(*r.tail) : ordered_json(nullptr);
  for (const auto& [k, v] : r.diagnostics) diag[k] = real(v);
  j["diagnostics"] = diag;
  return j;
}

ordered_json analysis_json(const AnalysisReport& a) {
  ordered_json j;
  j["pbar_star"] = {{"choice", choice_name(a.choice)},
                    {"usable", a.pbar_star_usable},
                    {"reason", a.pbar_star_reason}};
  if (a.h) {
    j["h1_h2"] = {{"h1", a.h->h1},
                  {"h1_sup_last_window", real(a.h->h1_sup)},
                  {"h2", a.h->h2},
                  {"h2_max", real(a.h->h2_max)},
                  {"h2_argmax", real(a.h->h2_argmax)},
                  {"h2_fixed_width", a.h->h2_fixed_width},
                  {"h2_fixed_width_max", real(a.h->h2_fixed_width_max)}};
  } else {
    j["h1_h2"] = nullptr;
  }
  if (a.w) {
    ordered_json w;
    w["value"] = a.w->omega ? real(*a.w->omega) : ordered_json(nullptr);
    w["min_tail_inf"] = real(a.w->min_inf);
    w["reason"] = a.w->reason;
    ordered_json pairs = ordered_json::array();
    for (const auto& p : a.w->pairs) {
      pairs.push_back({{"i", p.i + 1},
                       {"j", p.j + 1},
                       {"tail_inf", real(p.inf.value)},
                       {"converged", p.inf.converged}});
    }
    w["pairs"] = pairs;
    j["omega"] = w;
  } else {
    j["omega"] = nullptr;
  }
  ordered_json crit = ordered_json::array();
  for (const auto& r : a.reports) crit.push_back(criterion_json(r));
  j["criteria"] = crit;
  j["overall_verdict"] = verdict_name(a.overall);
  return j;
}

}  // namespace

std::string render_report(const RunConfig& cfg, const NddeProblem* problem,
                          const AnalysisReport* analysis, const SimulationSummary* sim,
                          const std::vector<AnalysisError>& extra_errors) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  if (problem != nullptr) {
    const DelayConstancy dc = is_constant_delay(*problem);
    j["problem"] = {{"t0", real(problem->t0())},
                    {"D", real(problem->D())},
                    {"n_r", problem->n_r()},
                    {"n_p", problem->n_p()},
                    {"n_q", problem->n_q()},
                    {"all_delays_constant", dc.all_delays_constant},
                    {"delta_constant", dc.delta_constant}};
  } else {
    j["problem"] = nullptr;
  }
  const AnalysisConfig& a = cfg.analysis;
  ordered_json shifts = ordered_json::array();
  for (double h : a.slow_shifts) shifts.push_back(real(h));
  j["config"] = {{"tail_start", real(a.tail_start)}, {"horizon", real(a.horizon)},
                 {"grid_step", real(a.grid_step)},   {"quad_tol", real(a.quad_tol)},
                 {"root_tol", real(a.root_tol)},     {"margin", real(a.margin)},
                 {"omega_slack", real(a.omega_slack)}, {"m_max", a.m_max},
                 {"slow_shifts", shifts},            {"pbar_star", cfg.pbar_star},
                 {"assert_slow", cfg.assert_slow}};

  std::vector<AnalysisError> errors;
  if (analysis != nullptr) {
    j["analysis"] = analysis_json(*analysis);
    errors = analysis->errors;
  } else {
    j["analysis"] = nullptr;
  }
  errors.insert(errors.end(), extra_errors.begin(), extra_errors.end());

  if (sim != nullptr) {
    ordered_json s;
    s["t_end"] = real(sim->t_end);
    s["dt"] = real(sim->dt);
    s["samples"] = sim->samples;
    s["zero_count"] = sim->zeros.size();
    ordered_json last = ordered_json::array();
    const std::size_t from = sim->zeros.size() > 10 ? sim->zeros.size() - 10 : 0;
    for (std::size_t k = from; k < sim->zeros.size(); ++k) last.push_back(real(sim->zeros[k]));
    s["last_zeros"] = last;
    s["evidence"] = evidence_name(sim->evidence.label);
    s["window_start"] = real(sim->evidence.window_start);
    s["sign_changes_in_window"] = sim->evidence.sign_changes;
    s["note"] =
        "simulation follows one initial function; it is evidence, not a verdict on all solutions";
    j["simulation"] = s;
  } else {
    j["simulation"] = nullptr;
  }

  ordered_json errs = ordered_json::array();
  for (const auto& e : errors) {
    errs.push_back({{"stage", e.stage}, {"kind", e.kind}, {"message", e.message}});
  }
  j["errors"] = errs;
  return j.dump(2) + "\n";
}

}  // namespace ndde::cli
