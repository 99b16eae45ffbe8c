#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "ndde/expr.hpp"

namespace ndde {

// Term lists of
//   [x(t) - sum R_i(t) x(t - r_i(t))]' + sum P_j(t) x(t - tau_j(t))
//                                      - sum Q_k(t) x(t - delta_k(t)) = 0.

struct NeutralTerm {
  Expr R;
  Expr r;
};

struct PositiveTerm {
  Expr P;
  Expr tau;
  Expr tau_prime;
};

/// `padded` marks the Q = 0, delta = 0 entries appended so the negative list
/// has one entry per positive term.
struct NegativeTerm {
  Expr Q;
  Expr delta;
  Expr delta_prime;
  bool padded = false;
};

/// Unparsed description of a problem, as read from a config file.
struct RawTerm {
  std::string coefficient;
  std::string delay;
};

struct RawProblem {
  double t0 = 0.0;
  std::optional<double> D;  // computed from the delays when absent
  std::vector<RawTerm> neutral;
  std::vector<RawTerm> positive;
  std::vector<RawTerm> negative;
};

/// Hypotheses are checked at t0, t0 + step, ... up to t_end.
struct ValidationGrid {
  double t_end = 0.0;
  double step = 0.0;
};

class NddeProblem {
 public:
  double t0() const { return t0_; }
  double D() const { return D_; }
  const std::vector<NeutralTerm>& neutral() const { return neutral_; }
  const std::vector<PositiveTerm>& positive() const { return positive_; }
  /// Always has n_p() entries; the last n_p() - n_q() are padding.
  const std::vector<NegativeTerm>& negative() const { return negative_; }

  std::size_t n_r() const { return neutral_.size(); }
  std::size_t n_p() const { return positive_.size(); }
  std::size_t n_q() const { return n_q_; }

  const ValidationGrid& validation_grid() const { return grid_; }

 private:
  friend NddeProblem build_problem(const RawProblem&, const ValidationGrid&);

  double t0_ = 0.0;
  double D_ = 0.0;
  std::vector<NeutralTerm> neutral_;
  std::vector<PositiveTerm> positive_;
  std::vector<NegativeTerm> negative_;
  std::size_t n_q_ = 0;
  ValidationGrid grid_;
};

/// Parses every expression, verifies the standing hypotheses on the grid,
/// fixes D and pads the negative list. Throws ParseError or ValidationError.
NddeProblem build_problem(const RawProblem& raw, const ValidationGrid& grid);

struct DelayConstancy {
  bool all_delays_constant = false;  // every r_i, tau_j, delta_k
  bool delta_constant = false;       // every delta_k, k <= n_q
};

DelayConstancy is_constant_delay(const NddeProblem& problem);

/// Numerical policy for the asymptotic statistics.
struct AnalysisConfig {
  double tail_start = 0.0;  // first time at which tail statistics are sampled
  double horizon = 0.0;     // last sampled time
  double grid_step = 0.01;
  double quad_tol = 1e-10;
  double root_tol = 1e-12;
  double margin = 1e-3;        // strictness buffer above thresholds
  double omega_slack = 1e-4;   // omega is taken this far below the infimum of Omega
  int m_max = 8;
  std::vector<double> slow_shifts{1.0, 10.0};
};

/// Throws ValidationError when tail_start < t0 + D, horizon <= tail_start,
/// a tolerance is not positive or m_max < 0.
void validate_config(const AnalysisConfig& cfg, const NddeProblem& problem);

}  // namespace ndde
