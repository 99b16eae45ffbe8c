#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ndde/delay_kernel.hpp"
#include "ndde/model.hpp"

namespace ndde {

enum class Verdict { Oscillatory, Inconclusive, Inapplicable };

const char* verdict_name(Verdict v);

struct Precondition {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CriterionReport {
  std::string id;      // "A1", "B3(2)", "Bm(1)", ...
  std::string family;  // "I", "slow", "const", "const_slow"
  int m = -1;          // sweep index; -1 outside the constant-delay families
  double statistic = std::nan("");
  double threshold = 0.0;
  double margin_used = 0.0;
  Verdict verdict = Verdict::Inapplicable;
  std::vector<Precondition> preconditions;
  std::optional<TailEstimate> tail;
  std::vector<std::pair<std::string, double>> diagnostics;
};

/// Inapplicable if a precondition failed; oscillatory if the statistic
/// clears threshold + margin on a converged tail; inconclusive otherwise.
Verdict decide_verdict(const std::vector<Precondition>& pre, double statistic, double threshold,
                       double margin, bool converged);

enum class PbarStarChoice {
  Auto,      // Direct, falling back to the sup-bound when c cannot be computed
  Direct,    // max(pbar, 0)
  SupBound,  // P - (1 - tau') / (1 - Delta) * sup over [t - D, t] of Q
};

const char* choice_name(PbarStarChoice c);

struct TransformedCoefficients {
  std::vector<CompositeDelay> cd;
  std::vector<ScalarFn> c;
  std::vector<ScalarFn> c_star;
  std::vector<ScalarFn> pbar;
  std::vector<ScalarFn> pbar_star;
  PbarStarChoice choice = PbarStarChoice::Direct;
  /// False when no admissible pbar_star exists on the tail grid; the
  /// families built on H1/H2 are then inapplicable for `reason`.
  bool usable = true;
  std::string reason;
};

struct TransformOptions {
  PbarStarChoice choice = PbarStarChoice::Auto;
  /// Per-term bound Delta_i >= delta_i'; defaults to the max over the
  /// validation grid.
  std::vector<double> Delta;
};

/// P_i(t) - Q_i(t - c_i(t)) (1 - c_i'(t)); P_i(t) for padded terms.
double pbar(const NddeProblem& problem, const std::vector<CompositeDelay>& cd, std::size_t i,
            double t);

/// Lower bound of pbar from a bound Delta on delta_i'. Throws
/// NumericalError(Precondition) unless Delta < 1 and tau_i'(t) < 1.
double pbar_star_sup_bound(const NddeProblem& problem, std::size_t i, double t, double Delta,
                       double step);

TransformedCoefficients transform(const NddeProblem& problem, const AnalysisConfig& cfg,
                                  const TransformOptions& opt = {});

struct H1H2Result {
  bool h1 = false;
  double h1_sup = 0.0;  // sup of sum pbar_star over the last tail window
  bool h2 = false;
  double h2_max = 0.0;  // max over the tail of sum R + sum int_{t - c*} Q
  double h2_argmax = 0.0;
  bool h2_fixed_width = false;  // same with every window of width D
  double h2_fixed_width_max = 0.0;
};

H1H2Result check_h1_h2(const NddeProblem& problem, const TransformedCoefficients& tc,
                       const AnalysisConfig& cfg);

struct PairInfimum {
  std::size_t i = 0;
  std::size_t j = 0;
  TailEstimate inf;
};

struct OmegaResult {
  std::optional<double> omega;  // empty when the constant-delay family cannot use it
  double min_inf = std::nan("");
  std::vector<PairInfimum> pairs;
  std::string reason;
};

/// Omega_{i,j}(t) = R_j(t - tau_i) pbar_i(t) / pbar_i(t - r_j); omega is the
/// smallest tail infimum less cfg.omega_slack. Throws NumericalError(DivZero)
/// when pbar_i(t - r_j) vanishes.
OmegaResult omega(const NddeProblem& problem, const TransformedCoefficients& tc,
                  const AnalysisConfig& cfg);

/// Tail series shared between families; analyze_all fills it once.
struct SeriesCache {
  std::optional<H1H2Result> h;
  std::optional<OmegaResult> w;
  std::map<std::string, SampledSeries> series;
};

/// Criteria ids count as asserted slowly varying when listed exactly
/// ("Bm(1)") or by base name ("Bm").
using SlowAssertions = std::set<std::string>;

std::vector<CriterionReport> eval_family_I(const NddeProblem& problem,
                                           const TransformedCoefficients& tc,
                                           const AnalysisConfig& cfg,
                                           SeriesCache* cache = nullptr);

/// `tau_hat` defaults to the pointwise minimum of the tau_i.
std::vector<CriterionReport> eval_family_slow(const NddeProblem& problem,
                                              const TransformedCoefficients& tc,
                                              const AnalysisConfig& cfg,
                                              const SlowAssertions& asserted,
                                              const std::optional<Expr>& tau_hat = std::nullopt,
                                              SeriesCache* cache = nullptr);

std::vector<CriterionReport> eval_family_const(const NddeProblem& problem,
                                               const TransformedCoefficients& tc,
                                               const OmegaResult& w, const AnalysisConfig& cfg,
                                               SeriesCache* cache = nullptr);

std::vector<CriterionReport> eval_family_const_slow(const NddeProblem& problem,
                                                    const TransformedCoefficients& tc,
                                                    const OmegaResult& w,
                                                    const AnalysisConfig& cfg,
                                                    const SlowAssertions& asserted,
                                                    SeriesCache* cache = nullptr);

struct AnalysisOptions {
  TransformOptions transform;
  std::optional<Expr> tau_hat;
  SlowAssertions asserted_slow;
};

struct AnalysisError {
  std::string stage;
  std::string kind;
  std::string message;
};

struct AnalysisReport {
  DelayConstancy constancy;
  PbarStarChoice choice = PbarStarChoice::Direct;
  bool pbar_star_usable = false;
  std::string pbar_star_reason;
  std::optional<H1H2Result> h;
  std::optional<OmegaResult> w;
  std::vector<CriterionReport> reports;
  std::vector<AnalysisError> errors;
  Verdict overall = Verdict::Inapplicable;
};

AnalysisReport analyze_all(const NddeProblem& problem, const AnalysisConfig& cfg,
                           const AnalysisOptions& opt = {});

/// Ids of every criterion analyze_all reports, in report order.
std::vector<std::string> criterion_ids(int m_max);

}  // namespace ndde
