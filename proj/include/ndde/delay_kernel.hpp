#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ndde/expr.hpp"
#include "ndde/model.hpp"

namespace ndde {

using ScalarFn = std::function<double(double)>;

/// Data for the implicit delay c(t) solving c = tau(t) - delta(t - c).
struct CompositeDelay {
  Expr tau;
  Expr delta;
  Expr delta_prime;
  Expr tau_prime;
  double D = 0.0;
  double root_tol = 1e-12;
  /// Set when delta does not depend on t; solve_c then returns tau(t) - delta.
  std::optional<double> delta_constant;

  static CompositeDelay make(const PositiveTerm& pos, const NegativeTerm& neg, double D,
                             double root_tol);
};

/// Root of F(c) = c - tau(t) + delta(t - c) on [0, D]. Throws
/// NumericalError(Bracket) when F(0) > root_tol or F(D) < -root_tol.
double solve_c(const CompositeDelay& cd, double t);

/// 1 - (1 - tau'(t)) / (1 - delta'(t - c)). Throws NumericalError(Degenerate)
/// when delta'(t - c) is numerically 1 or larger.
double c_prime(const CompositeDelay& cd, double t, double c);

/// Adaptive Gauss-Kronrod (7, 15) with global bisection of the worst
/// interval until the summed error estimate is at most `tol`.
/// Throws NumericalError(NonFinite) or NumericalError(MaxDepth).
double integrate(const ScalarFn& f, double a, double b, double tol);

/// max f(s) over an equispaced grid on [t - width, t] with spacing <= step.
double moving_sup(const ScalarFn& f, double t, double width, double step);

/// f sampled at a, a + step, ..., and finally b.
struct SampledSeries {
  std::vector<double> t;
  std::vector<double> v;
};

SampledSeries sample(const ScalarFn& f, double a, double b, double step);

struct TrendPoint {
  double window_start = 0.0;
  double extremum = 0.0;
};

/// Finite-grid stand-in for liminf / limsup. `value` is the extremum over
/// the whole tail grid; `trend` holds the extrema over the windows
/// [horizon - L / 2^k, horizon], k = 0..3, with L the tail length.
struct TailEstimate {
  double value = 0.0;
  std::vector<TrendPoint> trend;
  bool converged = false;
};

TailEstimate tail_inf(const SampledSeries& s, double margin);
TailEstimate tail_sup(const SampledSeries& s, double margin);
TailEstimate tail_inf(const ScalarFn& f, const AnalysisConfig& cfg);
TailEstimate tail_sup(const ScalarFn& f, const AnalysisConfig& cfg);

/// max |f(t + h) - f(t)| over h in cfg.slow_shifts and grid t with
/// t + h in the last eighth of the tail.
double slow_variation_score(const ScalarFn& f, const AnalysisConfig& cfg);

/// Same score from samples; f(t + h) is linearly interpolated.
double slow_variation_score(const SampledSeries& s, const std::vector<double>& shifts);

}  // namespace ndde
