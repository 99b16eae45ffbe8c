#include <fstream>
#include <ostream>

#include "ndde/cli.hpp"
#include "ndde/error.hpp"

namespace ndde::cli {

namespace {

bool write_file(const std::string& path, const std::string& body, std::ostream& err) {
  std::ofstream f(path);
  if (!f) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  f << body;
  return static_cast<bool>(f);
}

}  // namespace

int run(const std::string& config_path, Subcommand sub, const Overrides& ov, std::ostream& out,
        std::ostream& err) {
  RunConfig cfg;
  NddeProblem problem;
  AnalysisOptions opt;
  std::optional<History> history;
  try {
    cfg = load_run_config(config_path);
    if (ov.margin) cfg.analysis.margin = *ov.margin;
    if (ov.m_max) cfg.analysis.m_max = *ov.m_max;
    if (ov.omega_slack) cfg.analysis.omega_slack = *ov.omega_slack;
    cfg.assert_slow.insert(cfg.assert_slow.end(), ov.assert_slow.begin(), ov.assert_slow.end());
    if (ov.report) cfg.output.report = *ov.report;
    if (ov.trajectory) cfg.output.trajectory = *ov.trajectory;

    problem = build_problem(cfg.problem, effective_grid(cfg));
    if (sub != Subcommand::Simulate) validate_config(cfg.analysis, problem);
    opt = analysis_options(cfg);
    if (sub != Subcommand::Analyze) {
      if (!cfg.simulate) {
        throw ValidationError("config", "this subcommand needs a 'simulate' section");
      }
      history = History{parse(cfg.simulate->history)};
    }
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "validation error [" << e.invariant() << "]: " << e.what() << "\n";
    return 1;
  }

  std::optional<AnalysisReport> analysis;
  if (sub != Subcommand::Simulate) analysis = analyze_all(problem, cfg.analysis, opt);

  std::optional<SimulationSummary> sim;
  std::vector<AnalysisError> sim_errors;
  if (history) {
    try {
      const Trajectory traj = integrate_ndde(problem, *history, cfg.simulate->t_end,
                                             cfg.simulate->dt);
      SimulationSummary s;
      s.t_end = traj.t.back();
      s.dt = traj.dt();
      s.samples = traj.t.size();
      s.zeros = traj.zeros;
      const double span = traj.t.back() - traj.t.front();
      s.evidence = classify(traj, cfg.simulate->window.value_or(span / 4.0));
      sim = s;
      if (!cfg.output.trajectory.empty()) {
        std::ofstream f(cfg.output.trajectory);
        if (!f) {
          err << "error: cannot write " << cfg.output.trajectory << "\n";
          return 1;
        }
        write_trajectory(f, traj);
      } else if (sub == Subcommand::Simulate) {
        write_trajectory(out, traj);
      }
    } catch (const NumericalError& e) {
      sim_errors.push_back({"simulation", NumericalError::kind_name(e.kind()), e.what()});
    } catch (const DomainError& e) {
      sim_errors.push_back({"simulation", "DOMAIN", e.what()});
    } catch (const ValidationError& e) {
      err << "validation error [" << e.invariant() << "]: " << e.what() << "\n";
      return 1;
    }
  }

  const std::string body = render_report(cfg, &problem, analysis ? &*analysis : nullptr,
                                         sim ? &*sim : nullptr, sim_errors);
  if (!cfg.output.report.empty()) {
    if (!write_file(cfg.output.report, body, err)) return 1;
  } else if (sub != Subcommand::Simulate) {
    out << body;
  }

  std::size_t failures = sim_errors.size();
  if (analysis) failures += analysis->errors.size();
  if (analysis) {
    for (const auto& e : analysis->errors) {
      err << "numerical error (" << e.stage << ") " << e.message << "\n";
    }
  }
  for (const auto& e : sim_errors) err << "numerical error (" << e.stage << ") " << e.message << "\n";
  return failures > 0 ? 2 : 0;
}

}  // namespace ndde::cli
