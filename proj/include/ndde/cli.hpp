#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ndde/criteria.hpp"
#include "ndde/model.hpp"
#include "ndde/simulate.hpp"

namespace ndde::cli {

inline constexpr const char* kSchemaVersion = "1.0";

struct SimulateSpec {
  std::string history;
  double t_end = 0.0;
  double dt = 0.0;
  std::optional<double> window;  // classification window, default a quarter of the run
};

struct OutputSpec {
  std::string report;
  std::string trajectory;
  std::string format = "json";
};

/// One config document. Expressions stay as text until build_problem.
struct RunConfig {
  RawProblem problem;
  std::optional<ValidationGrid> validation;
  AnalysisConfig analysis;
  std::string pbar_star = "auto";
  std::vector<double> Delta;
  std::string tau_hat;
  std::vector<std::string> assert_slow;
  std::optional<SimulateSpec> simulate;
  OutputSpec output;
};

/// Throws ValidationError on malformed or unknown keys.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// The grid hypotheses are checked on: the explicit one when present,
/// otherwise [t0, max(horizon, simulation end)] with the analysis step.
ValidationGrid effective_grid(const RunConfig& cfg);

AnalysisOptions analysis_options(const RunConfig& cfg);

struct SimulationSummary {
  double t_end = 0.0;
  double dt = 0.0;
  std::size_t samples = 0;
  std::vector<double> zeros;
  EvidenceSummary evidence;
};

/// Deterministic JSON text: fixed key order, floats at 12 significant
/// digits, non-finite values as null.
std::string render_report(const RunConfig& cfg, const NddeProblem* problem,
                          const AnalysisReport* analysis, const SimulationSummary* sim,
                          const std::vector<AnalysisError>& extra_errors);

enum class Subcommand { Analyze, Simulate, All };

struct Overrides {
  std::optional<std::string> report;
  std::optional<std::string> trajectory;
  std::optional<double> margin;
  std::optional<int> m_max;
  std::optional<double> omega_slack;
  std::vector<std::string> assert_slow;
};

/// 0: completed with any verdict. 1: parse, validation or I/O error.
/// 2: a numerical failure was recorded.
int run(const std::string& config_path, Subcommand sub, const Overrides& ov, std::ostream& out,
        std::ostream& err);

}  // namespace ndde::cli
