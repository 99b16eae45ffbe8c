#include "ndde/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "ndde/error.hpp"

namespace ndde {

namespace {

constexpr double kBoundSlack = 1e-12;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

Expr parse_field(const std::string& text, const std::string& label) {
  try {
    return parse(text);
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.offset(), label + ": " + e.detail());
  }
}

Expr derivative_of(const Expr& e, const std::string& label) {
  try {
    return differentiate(e);
  } catch (const DifferentiationError& err) {
    throw ValidationError("C1 delay", label + " must be continuously differentiable: " +
                                          err.what());
  }
}

std::string term_label(const char* list, std::size_t i, const char* field) {
  return std::string(list) + "[" + std::to_string(i) + "]." + field;
}

class GridChecker {
 public:
  explicit GridChecker(std::vector<double> ts) : ts_(std::move(ts)) {}

  /// Calls `ok(value)` for every grid point; throws on the first failure.
  void require(const Expr& e, const std::string& label, const std::string& invariant,
               const std::function<bool(double, double)>& ok) const {
    for (double t : ts_) {
      const double v = value(e, label, t);
      if (!ok(t, v)) {
        throw ValidationError(invariant, invariant + " violated: " + label + " = " + fmt(v) +
                                             " at t = " + fmt(t),
                              t);
      }
    }
  }

  double sup(const Expr& e, const std::string& label) const {
    double s = -INFINITY;
    for (double t : ts_) s = std::max(s, value(e, label, t));
    return s;
  }

  static double value(const Expr& e, const std::string& label, double t) {
    try {
      return e(t);
    } catch (const DomainError& err) {
      throw ValidationError("evaluable", label + " is not evaluable: " + err.what(), t);
    }
  }

  const std::vector<double>& points() const { return ts_; }

 private:
  std::vector<double> ts_;
};

std::vector<double> grid_points(double t0, const ValidationGrid& grid) {
  if (!(grid.step > 0.0) || !(grid.t_end >= t0) || !std::isfinite(grid.t_end)) {
    throw ValidationError("validation grid", "validation grid needs step > 0 and t_end >= t0");
  }
  const auto n = static_cast<std::size_t>(std::floor((grid.t_end - t0) / grid.step + 1e-9));
  std::vector<double> ts;
  ts.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) ts.push_back(t0 + static_cast<double>(k) * grid.step);
  return ts;
}

}  // namespace

NddeProblem build_problem(const RawProblem& raw, const ValidationGrid& grid) {
  if (!std::isfinite(raw.t0)) throw ValidationError("t0", "t0 must be finite");
  if (raw.negative.size() > raw.positive.size()) {
    throw ValidationError("n_q <= n_p", "more negative terms (" +
                                            std::to_string(raw.negative.size()) +
                                            ") than positive terms (" +
                                            std::to_string(raw.positive.size()) + ")");
  }

  NddeProblem p;
  p.t0_ = raw.t0;
  p.grid_ = grid;
  p.n_q_ = raw.negative.size();

  for (std::size_t i = 0; i < raw.neutral.size(); ++i) {
    p.neutral_.push_back({parse_field(raw.neutral[i].coefficient, term_label("neutral", i, "R")),
                          parse_field(raw.neutral[i].delay, term_label("neutral", i, "r"))});
  }
  for (std::size_t i = 0; i < raw.positive.size(); ++i) {
    Expr P = parse_field(raw.positive[i].coefficient, term_label("positive", i, "P"));
    Expr tau = parse_field(raw.positive[i].delay, term_label("positive", i, "tau"));
    Expr tau_prime = derivative_of(tau, term_label("positive", i, "tau"));
    p.positive_.push_back({std::move(P), std::move(tau), std::move(tau_prime)});
  }
  for (std::size_t i = 0; i < raw.negative.size(); ++i) {
    Expr Q = parse_field(raw.negative[i].coefficient, term_label("negative", i, "Q"));
    Expr delta = parse_field(raw.negative[i].delay, term_label("negative", i, "delta"));
    Expr delta_prime = derivative_of(delta, term_label("negative", i, "delta"));
    p.negative_.push_back({std::move(Q), std::move(delta), std::move(delta_prime), false});
  }

  const GridChecker check(grid_points(raw.t0, grid));
  auto nonneg = [](double, double v) { return v >= 0.0; };

  for (std::size_t i = 0; i < p.neutral_.size(); ++i) {
    check.require(p.neutral_[i].R, term_label("neutral", i, "R"), "coefficient >= 0", nonneg);
  }
  for (std::size_t i = 0; i < p.positive_.size(); ++i) {
    check.require(p.positive_[i].P, term_label("positive", i, "P"), "coefficient >= 0", nonneg);
  }
  for (std::size_t i = 0; i < p.negative_.size(); ++i) {
    check.require(p.negative_[i].Q, term_label("negative", i, "Q"), "coefficient >= 0", nonneg);
  }

  for (std::size_t i = 0; i < p.neutral_.size(); ++i) {
    check.require(p.neutral_[i].r, term_label("neutral", i, "r"), "delay >= 0", nonneg);
  }
  for (std::size_t i = 0; i < p.positive_.size(); ++i) {
    check.require(p.positive_[i].tau, term_label("positive", i, "tau"), "delay >= 0", nonneg);
  }
  for (std::size_t i = 0; i < p.negative_.size(); ++i) {
    check.require(p.negative_[i].delta, term_label("negative", i, "delta"), "delay >= 0",
                  nonneg);
  }

  for (std::size_t i = 0; i < p.negative_.size(); ++i) {
    check.require(p.negative_[i].delta_prime, term_label("negative", i, "delta'"),
                  "delta' < 1", [](double, double v) { return v < 1.0; });
  }

  for (std::size_t i = 0; i < p.negative_.size(); ++i) {
    const Expr& tau = p.positive_[i].tau;
    const std::string tau_label = term_label("positive", i, "tau");
    check.require(p.negative_[i].delta, term_label("negative", i, "delta"), "delta <= tau",
                  [&](double t, double d) {
                    return d <= GridChecker::value(tau, tau_label, t) + kBoundSlack;
                  });
  }

  // Delay bound.
  std::vector<std::pair<const Expr*, std::string>> delays;
  for (std::size_t i = 0; i < p.neutral_.size(); ++i) {
    delays.emplace_back(&p.neutral_[i].r, term_label("neutral", i, "r"));
  }
  for (std::size_t i = 0; i < p.positive_.size(); ++i) {
    delays.emplace_back(&p.positive_[i].tau, term_label("positive", i, "tau"));
  }
  for (std::size_t i = 0; i < p.negative_.size(); ++i) {
    delays.emplace_back(&p.negative_[i].delta, term_label("negative", i, "delta"));
  }

  if (raw.D) {
    const double D = *raw.D;
    if (!(D > 0.0) || !std::isfinite(D)) {
      throw ValidationError("D > 0", "delay bound D must be positive and finite");
    }
    for (const auto& [e, label] : delays) {
      check.require(*e, label, "delay <= D",
                    [D](double, double v) { return v <= D + kBoundSlack; });
    }
    p.D_ = D;
  } else {
    double constant_max = 0.0;
    double variable_sup = -INFINITY;
    for (const auto& [e, label] : delays) {
      if (auto c = e->as_constant()) {
        constant_max = std::max(constant_max, *c);
      } else {
        variable_sup = std::max(variable_sup, check.sup(*e, label));
      }
    }
    double D = constant_max;
    if (std::isfinite(variable_sup)) {
      D = std::max(D, std::ceil(variable_sup / grid.step) * grid.step);
    }
    p.D_ = D > 0.0 ? D : grid.step;
  }

  for (std::size_t i = p.negative_.size(); i < p.positive_.size(); ++i) {
    p.negative_.push_back({Expr::constant(0.0), Expr::constant(0.0), Expr::constant(0.0), true});
  }
  return p;
}

DelayConstancy is_constant_delay(const NddeProblem& problem) {
  DelayConstancy out;
  bool delta_const = true;
  for (std::size_t k = 0; k < problem.n_q(); ++k) {
    delta_const = delta_const && problem.negative()[k].delta.as_constant().has_value();
  }
  bool all = delta_const;
  for (const auto& term : problem.neutral()) all = all && term.r.as_constant().has_value();
  for (const auto& term : problem.positive()) all = all && term.tau.as_constant().has_value();
  out.all_delays_constant = all;
  out.delta_constant = delta_const;
  return out;
}

void validate_config(const AnalysisConfig& cfg, const NddeProblem& problem) {
  auto fail = [](const std::string& inv, const std::string& msg) {
    throw ValidationError(inv, msg);
  };
  if (!(cfg.grid_step > 0.0)) fail("grid_step > 0", "grid_step must be positive");
  if (!(cfg.quad_tol > 0.0)) fail("quad_tol > 0", "quad_tol must be positive");
  if (!(cfg.root_tol > 0.0)) fail("root_tol > 0", "root_tol must be positive");
  if (!(cfg.margin >= 0.0)) fail("margin >= 0", "margin must be non-negative");
  if (!(cfg.omega_slack >= 0.0)) fail("omega_slack >= 0", "omega_slack must be non-negative");
  if (cfg.m_max < 0) fail("m_max >= 0", "m_max must be non-negative");
  if (cfg.tail_start < problem.t0() + problem.D() - 1e-12) {
    fail("tail_start >= t0 + D", "tail_start " + fmt(cfg.tail_start) + " is before t0 + D = " +
                                     fmt(problem.t0() + problem.D()));
  }
  if (!(cfg.horizon > cfg.tail_start)) {
    fail("horizon > tail_start", "horizon must exceed tail_start");
  }
  if (cfg.horizon > problem.validation_grid().t_end + 1e-9) {
    fail("horizon validated", "horizon " + fmt(cfg.horizon) +
                                  " lies beyond the validated range ending at " +
                                  fmt(problem.validation_grid().t_end));
  }
}

}  // namespace ndde
