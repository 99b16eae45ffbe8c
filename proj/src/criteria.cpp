#include "ndde/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>

#include "ndde/error.hpp"

namespace ndde {

namespace {

constexpr double kInvE = 0.36787944117144233;
constexpr double kSignTol = 1e-9;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string idx(const char* name, std::size_t i) {
  return std::string(name) + "_" + std::to_string(i + 1);
}

Precondition pre(std::string name, bool passed, std::string detail) {
  return {std::move(name), passed, std::move(detail)};
}

/// First tail time at which every coefficient needed `lookback` into the
/// past is evaluated at arguments of at least t0 + D.
double tail_begin(const NddeProblem& p, const AnalysisConfig& cfg, double lookback) {
  return std::max(cfg.tail_start, p.t0() + p.D() + lookback);
}

SampledSeries tail_series(const NddeProblem& p, const AnalysisConfig& cfg, double lookback,
                          const ScalarFn& f) {
  const double a = tail_begin(p, cfg, lookback);
  if (!(a < cfg.horizon)) {
    throw NumericalError(NumericalError::Kind::Precondition,
                         "tail window is empty after a look-back of " + num(lookback));
  }
  return sample(f, a, cfg.horizon, cfg.grid_step);
}

const SampledSeries& cached(SeriesCache& cache, const std::string& key,
                            const std::function<SampledSeries()>& make) {
  auto it = cache.series.find(key);
  if (it == cache.series.end()) it = cache.series.emplace(key, make()).first;
  return it->second;
}

SampledSeries scaled(const SampledSeries& s, double k) {
  SampledSeries out = s;
  for (double& v : out.v) v *= k;
  return out;
}

double series_min(const SampledSeries& s) { return *std::min_element(s.v.begin(), s.v.end()); }

double series_max(const SampledSeries& s) { return *std::max_element(s.v.begin(), s.v.end()); }

bool all_passed(const std::vector<Precondition>& pre) {
  return std::all_of(pre.begin(), pre.end(), [](const Precondition& p) { return p.passed; });
}

std::string base_id(const std::string& id) { return id.substr(0, id.find('(')); }

bool is_asserted(const SlowAssertions& asserted, const std::string& id) {
  return asserted.count(id) > 0 || asserted.count(base_id(id)) > 0;
}

std::string with_m(const char* base, int m) {
  return std::string(base) + "(" + std::to_string(m) + ")";
}

CriterionReport blank(std::string id, const char* family, int m, double threshold,
                      const AnalysisConfig& cfg) {
  CriterionReport r;
  r.id = std::move(id);
  r.family = family;
  r.m = m;
  r.threshold = threshold;
  r.margin_used = cfg.margin;
  return r;
}

/// Sets the statistic from the tail of `s` (when given) and the verdict.
void finish(CriterionReport& r, const SampledSeries* s, bool upper, double margin) {
  bool converged = false;
  if (s != nullptr) {
    TailEstimate est = upper ? tail_sup(*s, margin) : tail_inf(*s, margin);
    r.statistic = est.value;
    converged = est.converged;
    r.tail = std::move(est);
  }
  r.verdict = decide_verdict(r.preconditions, r.statistic, r.threshold, margin, converged);
}

Precondition slow_precondition(const SlowAssertions& asserted, const std::string& id,
                               double score, double margin) {
  if (is_asserted(asserted, id)) return pre("slowly varying", true, "asserted by the user");
  return pre("slowly varying", score <= margin,
             "variation score " + num(score) + (score <= margin ? " <= " : " > ") + "margin " +
                 num(margin));
}

double sup_bound(const Expr& P, const Expr& tau_prime, const Expr& Q, double D, double t,
                   double Delta, double step) {
  if (!(Delta < 1.0)) {
    throw NumericalError(NumericalError::Kind::Precondition, "Delta must be below 1");
  }
  const double tp = tau_prime(t);
  if (!(tp < 1.0)) {
    throw NumericalError(NumericalError::Kind::Precondition,
                         "tau' is not below 1 at t = " + num(t));
  }
  const double q = moving_sup([&Q](double s) { return Q(s); }, t, D, step);
  return P(t) - (1.0 - tp) / (1.0 - Delta) * q;
}

std::vector<double> grid_between(double a, double b, double step) {
  std::vector<double> ts;
  if (b < a) return ts;
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
  for (long k = 0; k <= n; ++k) ts.push_back(a + static_cast<double>(k) * step);
  return ts;
}

struct Check {
  bool ok = true;
  bool numerical = false;  // failure came from an exception, not a sign
  std::string reason;
};

Check check_direct(const TransformedCoefficients& tc, const std::vector<double>& ts) {
  for (std::size_t i = 0; i < tc.pbar.size(); ++i) {
    for (double t : ts) {
      double v = 0.0;
      try {
        v = tc.pbar[i](t);
      } catch (const NumericalError& e) {
        return {false, true, idx("pbar", i) + " could not be computed: " + e.what()};
      }
      if (v < -kSignTol) {
        return {false, false,
                idx("pbar", i) + " = " + num(v) + " < 0 at t = " + num(t) +
                    "; no minorant with 0 <= pbar* <= pbar exists"};
      }
    }
  }
  return {};
}

Check setup_sup_bound(const NddeProblem& p, const AnalysisConfig& cfg, const TransformOptions& opt,
                  TransformedCoefficients& tc, const std::vector<double>& ts) {
  const auto vgrid = grid_between(p.t0(), p.validation_grid().t_end, p.validation_grid().step);
  std::vector<double> Delta(p.n_p(), 0.0);
  for (std::size_t i = 0; i < p.n_p(); ++i) {
    const auto& neg = p.negative()[i];
    double max_dp = -std::numeric_limits<double>::infinity();
    for (double t : vgrid) max_dp = std::max(max_dp, neg.delta_prime(t));
    if (i < opt.Delta.size()) {
      Delta[i] = opt.Delta[i];
      if (max_dp > Delta[i] + kSignTol) {
        return {false, true,
                "PRECONDITION: " + idx("delta'", i) + " reaches " + num(max_dp) +
                    " above Delta = " + num(Delta[i])};
      }
    } else {
      Delta[i] = std::max(max_dp, 0.0);
    }
    if (!(Delta[i] < 1.0)) {
      return {false, true, "PRECONDITION: " + idx("Delta", i) + " = " + num(Delta[i]) +
                               " is not below 1"};
    }
    for (double t : vgrid) {
      if (!(p.positive()[i].tau_prime(t) < 1.0)) {
        return {false, true,
                "PRECONDITION: " + idx("tau'", i) + " is not below 1 at t = " + num(t)};
      }
    }
  }

  tc.pbar_star.clear();
  tc.c_star.clear();
  for (std::size_t i = 0; i < p.n_p(); ++i) {
    const auto& pos = p.positive()[i];
    const auto& neg = p.negative()[i];
    tc.pbar_star.push_back([P = pos.P, tp = pos.tau_prime, Q = neg.Q, D = p.D(), d = Delta[i],
                            step = cfg.grid_step](double t) {
      return std::max(0.0, sup_bound(P, tp, Q, D, t, d, step));
    });
    tc.c_star.push_back([D = p.D()](double) { return D; });
  }

  // Clipping at 0 keeps pbar* <= pbar only where pbar >= 0.
  for (std::size_t i = 0; i < p.n_p(); ++i) {
    const auto& pos = p.positive()[i];
    const auto& neg = p.negative()[i];
    for (double t : ts) {
      const double b = sup_bound(pos.P, pos.tau_prime, neg.Q, p.D(), t, Delta[i], cfg.grid_step);
      if (b >= 0.0) continue;
      double v = 0.0;
      try {
        v = tc.pbar[i](t);
      } catch (const NumericalError&) {
        return {false, false,
                idx("pbar*", i) + " bound is negative at t = " + num(t) +
                    " and pbar cannot be evaluated there"};
      }
      if (v < -kSignTol) {
        return {false, false, idx("pbar", i) + " = " + num(v) + " < 0 at t = " + num(t)};
      }
    }
  }
  return {};
}

}  // namespace

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Oscillatory: return "OSCILLATORY";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
    case Verdict::Inapplicable: return "INAPPLICABLE";
  }
  return "INAPPLICABLE";
}

const char* choice_name(PbarStarChoice c) {
  switch (c) {
    case PbarStarChoice::Auto: return "auto";
    case PbarStarChoice::Direct: return "direct";
    case PbarStarChoice::SupBound: return "sup_bound";
  }
  return "auto";
}

Verdict decide_verdict(const std::vector<Precondition>& pre, double statistic, double threshold,
                       double margin, bool converged) {
  if (!all_passed(pre)) return Verdict::Inapplicable;
  if (std::isfinite(statistic) && statistic > threshold + margin && converged) {
    return Verdict::Oscillatory;
  }
  return Verdict::Inconclusive;
}

double pbar(const NddeProblem& problem, const std::vector<CompositeDelay>& cd, std::size_t i,
            double t) {
  const auto& pos = problem.positive()[i];
  const auto& neg = problem.negative()[i];
  if (neg.padded) return pos.P(t);
  const double c = solve_c(cd[i], t);
  return pos.P(t) - neg.Q(t - c) * (1.0 - c_prime(cd[i], t, c));
}

double pbar_star_sup_bound(const NddeProblem& problem, std::size_t i, double t, double Delta,
                       double step) {
  const auto& pos = problem.positive()[i];
  return sup_bound(pos.P, pos.tau_prime, problem.negative()[i].Q, problem.D(), t, Delta, step);
}

TransformedCoefficients transform(const NddeProblem& p, const AnalysisConfig& cfg,
                                  const TransformOptions& opt) {
  TransformedCoefficients tc;
  for (std::size_t i = 0; i < p.n_p(); ++i) {
    const auto& pos = p.positive()[i];
    const auto& neg = p.negative()[i];
    tc.cd.push_back(CompositeDelay::make(pos, neg, p.D(), cfg.root_tol));
    const auto tau_c = pos.tau.as_constant();
    const auto delta_c = neg.delta.as_constant();
    if (tau_c && delta_c) {
      const double c = std::max(0.0, *tau_c - *delta_c);
      tc.c.push_back([c](double) { return c; });
      if (neg.padded) {
        tc.pbar.push_back([P = pos.P](double t) { return P(t); });
      } else {
        tc.pbar.push_back([P = pos.P, Q = neg.Q, c](double t) { return P(t) - Q(t - c); });
      }
    } else {
      const CompositeDelay cd = tc.cd.back();
      tc.c.push_back([cd](double t) { return solve_c(cd, t); });
      if (neg.padded) {
        tc.pbar.push_back([P = pos.P](double t) { return P(t); });
      } else {
        tc.pbar.push_back([cd, P = pos.P, Q = neg.Q](double t) {
          const double c = solve_c(cd, t);
          return P(t) - Q(t - c) * (1.0 - c_prime(cd, t, c));
        });
      }
    }
  }

  // pbar* enters integrals reaching back D from the first tail time.
  const double lo = std::max(cfg.tail_start - p.D(), p.t0() + p.D());
  const auto ts = grid_between(lo, cfg.horizon, cfg.grid_step);

  auto use_direct = [&] {
    tc.choice = PbarStarChoice::Direct;
    tc.pbar_star.clear();
    for (const auto& f : tc.pbar) {
      tc.pbar_star.push_back([f](double t) { return std::max(0.0, f(t)); });
    }
    tc.c_star = tc.c;
  };

  Check check;
  if (opt.choice == PbarStarChoice::SupBound) {
    tc.choice = PbarStarChoice::SupBound;
    check = setup_sup_bound(p, cfg, opt, tc, ts);
  } else {
    use_direct();
    check = check_direct(tc, ts);
    if (!check.ok && check.numerical && opt.choice == PbarStarChoice::Auto) {
      const std::string direct_reason = check.reason;
      tc.choice = PbarStarChoice::SupBound;
      check = setup_sup_bound(p, cfg, opt, tc, ts);
      if (!check.ok) check.reason = direct_reason + "; sup-bound fallback: " + check.reason;
    }
  }
  tc.usable = check.ok;
  tc.reason = check.reason;
  return tc;
}

H1H2Result check_h1_h2(const NddeProblem& p, const TransformedCoefficients& tc,
                       const AnalysisConfig& cfg) {
  H1H2Result h;
  if (tc.usable) {
    const auto s = tail_series(p, cfg, 0.0, [&](double t) {
      double sum = 0.0;
      for (const auto& f : tc.pbar_star) sum += f(t);
      return sum;
    });
    const TailEstimate est = tail_sup(s, cfg.margin);
    h.h1_sup = est.trend.back().extremum;
    h.h1 = h.h1_sup > 0.0;
  } else {
    h.h1_sup = std::nan("");
  }

  const double tol = cfg.quad_tol / static_cast<double>(std::max<std::size_t>(1, p.n_q()));
  auto h2_at = [&](double t, bool fixed) {
    double sum = 0.0;
    for (const auto& term : p.neutral()) sum += term.R(t);
    for (std::size_t i = 0; i < p.n_q(); ++i) {
      const Expr& Q = p.negative()[i].Q;
      const double width = fixed ? p.D() : tc.c_star[i](t);
      sum += integrate([&Q](double s) { return Q(s); }, t - width, t, tol);
    }
    return sum;
  };
  const auto s2 = tail_series(p, cfg, 0.0, [&](double t) { return h2_at(t, false); });
  const auto top = std::max_element(s2.v.begin(), s2.v.end());
  h.h2_max = *top;
  h.h2_argmax = s2.t[static_cast<std::size_t>(top - s2.v.begin())];
  h.h2 = h.h2_max <= 1.0 + cfg.quad_tol;
  const auto s3 = tail_series(p, cfg, 0.0, [&](double t) { return h2_at(t, true); });
  h.h2_fixed_width_max = series_max(s3);
  h.h2_fixed_width = h.h2_fixed_width_max <= 1.0 + cfg.quad_tol;
  return h;
}

OmegaResult omega(const NddeProblem& p, const TransformedCoefficients& tc,
                  const AnalysisConfig& cfg) {
  OmegaResult w;
  if (!is_constant_delay(p).all_delays_constant) {
    w.reason = "delays are not all constant";
    return w;
  }
  if (p.n_r() == 0) {
    w.reason = "no neutral terms";
    return w;
  }
  double r_max = 0.0;
  for (const auto& term : p.neutral()) r_max = std::max(r_max, *term.r.as_constant());

  for (std::size_t i = 0; i < p.n_p(); ++i) {
    const auto s = tail_series(p, cfg, r_max, tc.pbar[i]);
    const double lo = series_min(s);
    if (!(lo > 0.0)) {
      w.reason = idx("pbar", i) + " is not positive on the tail grid (min " + num(lo) + ")";
      return w;
    }
  }

  w.min_inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.n_p(); ++i) {
    const double tau = *p.positive()[i].tau.as_constant();
    for (std::size_t j = 0; j < p.n_r(); ++j) {
      const Expr& R = p.neutral()[j].R;
      const double r = *p.neutral()[j].r.as_constant();
      const ScalarFn& P = tc.pbar[i];
      const auto s = tail_series(p, cfg, r_max, [&](double t) {
        const double den = P(t - r);
        if (den == 0.0) {
          throw NumericalError(NumericalError::Kind::DivZero,
                               idx("pbar", i) + " vanishes at t = " + num(t - r));
        }
        return R(t - tau) * P(t) / den;
      });
      PairInfimum pair{i, j, tail_inf(s, cfg.margin)};
      w.min_inf = std::min(w.min_inf, pair.inf.value);
      w.pairs.push_back(std::move(pair));
    }
  }

  const double om = w.min_inf - cfg.omega_slack;
  const double cap = 1.0 / static_cast<double>(p.n_r());
  if (!(om > 0.0)) {
    w.reason = "tail infimum of Omega is " + num(w.min_inf) + ", leaving no omega > 0";
  } else if (!(om < cap)) {
    w.reason = "omega = " + num(om) + " is not below 1/N_r = " + num(cap);
  } else {
    w.omega = om;
  }
  return w;
}

std::vector<CriterionReport> eval_family_I(const NddeProblem& p,
                                           const TransformedCoefficients& tc,
                                           const AnalysisConfig& cfg, SeriesCache* cache) {
  SeriesCache local;
  SeriesCache& C = cache != nullptr ? *cache : local;
  if (!C.h) C.h = check_h1_h2(p, tc, cfg);
  const H1H2Result& h = *C.h;

  std::vector<Precondition> common{
      pre("pbar* admissible", tc.usable, tc.usable ? choice_name(tc.choice) : tc.reason),
      pre("H1", h.h1, "sup of sum pbar* on the last tail window = " + num(h.h1_sup)),
      pre("H2", h.h2, "max = " + num(h.h2_max) + " at t = " + num(h.h2_argmax)),
  };

  bool tau_const = true;
  std::vector<double> tau_c;
  for (const auto& pos : p.positive()) {
    const auto c = pos.tau.as_constant();
    tau_const = tau_const && c && *c > 0.0;
    tau_c.push_back(c ? *c : 0.0);
  }

  const double tol = cfg.quad_tol / static_cast<double>(std::max<std::size_t>(1, p.n_p()));
  const SampledSeries* sA = nullptr;
  const SampledSeries* sB = nullptr;
  const SampledSeries* sC = nullptr;
  if (tc.usable) {
    if (tau_const) {
      sA = &cached(C, "I.A", [&] {
        return tail_series(p, cfg, p.D(), [&](double t) {
          double sum = 0.0;
          for (std::size_t i = 0; i < p.n_p(); ++i) {
            sum += integrate(tc.pbar_star[i], t - tau_c[i], t, tol);
          }
          return sum;
        });
      });
    }
    sB = &cached(C, "I.B", [&] {
      return tail_series(p, cfg, 0.0, [&](double t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < p.n_p(); ++i) sum += tc.pbar_star[i](t) * p.positive()[i].tau(t);
        return sum;
      });
    });
    sC = &cached(C, "I.C", [&] {
      auto total = [&](double s) {
        double sum = 0.0;
        for (const auto& f : tc.pbar_star) sum += f(s);
        return sum;
      };
      return tail_series(p, cfg, p.D(), [&](double t) {
        double tau_min = std::numeric_limits<double>::infinity();
        for (const auto& pos : p.positive()) tau_min = std::min(tau_min, pos.tau(t));
        return integrate(total, t - tau_min, t, cfg.quad_tol);
      });
    });
  }

  std::vector<CriterionReport> out;
  CriterionReport a1 = blank("A1", "I", -1, kInvE, cfg);
  a1.preconditions = common;
  a1.preconditions.push_back(
      pre("tau constant", tau_const, tau_const ? "all tau_i are positive constants"
                                               : "some tau_i is not a positive constant"));
  finish(a1, sA, false, cfg.margin);
  out.push_back(std::move(a1));

  CriterionReport b1 = blank("B1", "I", -1, kInvE, cfg);
  b1.preconditions = common;
  finish(b1, sB, false, cfg.margin);
  out.push_back(std::move(b1));

  CriterionReport c1 = blank("C1", "I", -1, kInvE, cfg);
  c1.preconditions = common;
  finish(c1, sC, false, cfg.margin);
  out.push_back(std::move(c1));

  CriterionReport d1 = blank("D1", "I", -1, 1.0, cfg);
  d1.preconditions = common;
  finish(d1, sC, true, cfg.margin);
  out.push_back(std::move(d1));
  return out;
}

std::vector<CriterionReport> eval_family_slow(const NddeProblem& p,
                                              const TransformedCoefficients& tc,
                                              const AnalysisConfig& cfg,
                                              const SlowAssertions& asserted,
                                              const std::optional<Expr>& tau_hat,
                                              SeriesCache* cache) {
  SeriesCache local;
  SeriesCache& C = cache != nullptr ? *cache : local;
  // Families I and slow share their series.
  const auto base = eval_family_I(p, tc, cfg, &C);

  std::vector<Precondition> common{base[1].preconditions.begin(),
                                   base[1].preconditions.end()};
  const double tol_i = cfg.quad_tol;
  if (tc.usable) {
    bool positive = true;
    std::string detail;
    for (std::size_t i = 0; i < p.n_p(); ++i) {
      const auto& s = cached(C, "slow.int:" + std::to_string(i), [&] {
        return tail_series(p, cfg, p.D(), [&](double t) {
          return integrate(tc.pbar_star[i], t - p.positive()[i].tau(t), t, tol_i);
        });
      });
      const double lo = tail_inf(s, cfg.margin).value;
      detail += (i ? ", " : "") + idx("liminf", i) + " = " + num(lo);
      positive = positive && lo > 0.0;
    }
    common.push_back(pre("liminf int pbar* > 0", positive, detail));
  } else {
    common.push_back(pre("liminf int pbar* > 0", false, "pbar* unavailable"));
  }

  const bool tau_const = base[0].preconditions.back().passed;

  const SampledSeries* sA = tc.usable && tau_const ? &C.series.at("I.A") : nullptr;
  const SampledSeries* sB = tc.usable ? &C.series.at("I.B") : nullptr;
  const SampledSeries* sC = nullptr;
  std::vector<Precondition> c2_extra;
  if (tc.usable) {
    if (!tau_hat) {
      sC = &C.series.at("I.C");
      c2_extra.push_back(pre("tau_hat admissible", true, "pointwise minimum of tau_i"));
    } else {
      const Expr th = *tau_hat;
      const auto gap = tail_series(p, cfg, 0.0, [&](double t) {
        double tau_min = std::numeric_limits<double>::infinity();
        for (const auto& pos : p.positive()) tau_min = std::min(tau_min, pos.tau(t));
        const double v = th(t);
        return std::max(v - tau_min, -v);
      });
      const double worst = series_max(gap);
      c2_extra.push_back(pre("tau_hat admissible", worst <= kSignTol,
                             "max violation of 0 <= tau_hat <= tau_i: " + num(worst)));
      if (worst <= kSignTol) {
        sC = &cached(C, "slow.C:" + print(th), [&] {
          auto total = [&](double s) {
            double sum = 0.0;
            for (const auto& f : tc.pbar_star) sum += f(s);
            return sum;
          };
          return tail_series(p, cfg, p.D(), [&](double t) {
            return integrate(total, t - th(t), t, cfg.quad_tol);
          });
        });
      }
    }
  }

  std::vector<CriterionReport> out;
  auto build = [&](const char* id, const SampledSeries* s, std::vector<Precondition> extra) {
    CriterionReport r = blank(id, "slow", -1, kInvE, cfg);
    r.preconditions = common;
    r.preconditions.insert(r.preconditions.end(), extra.begin(), extra.end());
    if (s != nullptr) {
      const double score = slow_variation_score(*s, cfg.slow_shifts);
      r.diagnostics.emplace_back("slow_variation_score", score);
      r.preconditions.push_back(slow_precondition(asserted, id, score, cfg.margin));
    } else {
      r.preconditions.push_back(pre("slowly varying", false, "statistic unavailable"));
    }
    finish(r, s, true, cfg.margin);
    out.push_back(std::move(r));
  };
  build("A2", sA, {base[0].preconditions.back()});
  build("B2", sB, {});
  build("C2", sC, c2_extra);
  return out;
}

namespace {

struct ConstContext {
  std::vector<Precondition> pre;
  bool computable = false;
  double omega = 0.0;
  double nr_omega = 0.0;
  double r0 = 0.0;
  double tau0 = 0.0;
  double tau_max = 0.0;
  std::vector<double> tau;
  std::vector<std::pair<std::string, double>> diag;

  double prefactor(int m) const { return std::pow(nr_omega, m) / (1.0 - nr_omega); }
};

const SampledSeries& const_A(const NddeProblem& p, const TransformedCoefficients& tc,
                             const AnalysisConfig& cfg, const ConstContext& k, SeriesCache& C,
                             int m) {
  return cached(C, "const.A:" + std::to_string(m), [&] {
    const double shift = m * k.r0;
    const double tol = cfg.quad_tol / static_cast<double>(p.n_p());
    return tail_series(p, cfg, shift + k.tau_max, [&](double t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < p.n_p(); ++i) {
        sum += integrate(tc.pbar[i], t - shift - k.tau[i], t, tol);
      }
      return sum;
    });
  });
}

ConstContext const_context(const NddeProblem& p, const TransformedCoefficients& tc,
                           const OmegaResult& w, const AnalysisConfig& cfg, SeriesCache& C) {
  ConstContext k;
  const bool constant = is_constant_delay(p).all_delays_constant;
  k.pre.push_back(pre("constant delays", constant,
                      constant ? "all delays are constant" : "some delay depends on t"));
  if (!constant) return k;

  const bool has_r = p.n_r() > 0;
  k.pre.push_back(pre("N_r >= 1", has_r, "N_r = " + std::to_string(p.n_r())));

  bool tau_pos = true;
  k.tau0 = std::numeric_limits<double>::infinity();
  for (const auto& pos : p.positive()) {
    const double t = *pos.tau.as_constant();
    k.tau.push_back(t);
    k.tau0 = std::min(k.tau0, t);
    k.tau_max = std::max(k.tau_max, t);
    tau_pos = tau_pos && t > 0.0;
  }
  k.pre.push_back(pre("tau_i > 0", tau_pos, "min tau_i = " + num(k.tau0)));

  bool pbar_pos = true;
  std::string detail;
  for (std::size_t i = 0; i < p.n_p(); ++i) {
    const auto& s = cached(C, "const.pbar:" + std::to_string(i),
                           [&] { return tail_series(p, cfg, 0.0, tc.pbar[i]); });
    const double lo = series_min(s);
    detail += (i ? ", " : "") + idx("min pbar", i) + " = " + num(lo);
    pbar_pos = pbar_pos && lo > 0.0;
  }
  k.pre.push_back(pre("pbar_i > 0", pbar_pos, detail));

  k.pre.push_back(pre("omega", w.omega.has_value(),
                      w.omega ? "omega = " + num(*w.omega) : w.reason));

  const auto& rq = cached(C, "const.RQ", [&] {
    const double tol = cfg.quad_tol / static_cast<double>(std::max<std::size_t>(1, p.n_q()));
    return tail_series(p, cfg, 0.0, [&](double t) {
      double sum = 0.0;
      for (const auto& term : p.neutral()) sum += term.R(t);
      for (std::size_t i = 0; i < p.n_q(); ++i) {
        const Expr& Q = p.negative()[i].Q;
        const double width = k.tau[i] - *p.negative()[i].delta.as_constant();
        sum += integrate([&Q](double s) { return Q(s); }, t - width, t, tol);
      }
      return sum;
    });
  });
  const double rq_max = series_max(rq);
  k.pre.push_back(pre("R+Q <= 1", rq_max <= 1.0 + cfg.quad_tol, "max = " + num(rq_max)));

  if (!has_r || !w.omega) return k;
  k.computable = true;
  k.omega = *w.omega;
  k.nr_omega = static_cast<double>(p.n_r()) * k.omega;
  k.r0 = std::numeric_limits<double>::infinity();
  for (const auto& term : p.neutral()) k.r0 = std::min(k.r0, *term.r.as_constant());

  // Comparison hypotheses, reported but not required.
  const auto& rp = cached(C, "const.RP", [&] {
    return tail_series(p, cfg, 0.0, [&](double t) {
      double sum = 0.0;
      for (const auto& term : p.neutral()) sum += term.R(t);
      for (const auto& f : tc.pbar) sum += f(t);
      return sum;
    });
  });
  k.diag.emplace_back("omega", k.omega);
  k.diag.emplace_back("r0", k.r0);
  k.diag.emplace_back("tau0", k.tau0);
  k.diag.emplace_back("min_R_plus_pbar", series_min(rp));
  k.diag.emplace_back("min_int_pbar_over_tau", series_min(const_A(p, tc, cfg, k, C, 0)));
  return k;
}

}  // namespace

std::vector<CriterionReport> eval_family_const(const NddeProblem& p,
                                               const TransformedCoefficients& tc,
                                               const OmegaResult& w, const AnalysisConfig& cfg,
                                               SeriesCache* cache) {
  SeriesCache local;
  SeriesCache& C = cache != nullptr ? *cache : local;
  const ConstContext k = const_context(p, tc, w, cfg, C);

  const SampledSeries* b_base = nullptr;  // sum tau_i pbar_i
  const SampledSeries* b_sum = nullptr;   // sum pbar_i
  if (k.computable) {
    b_base = &cached(C, "const.Btau", [&] {
      return tail_series(p, cfg, 0.0, [&](double t) {
        double sum = 0.0;
        for (std::size_t i = 0; i < p.n_p(); ++i) sum += k.tau[i] * tc.pbar[i](t);
        return sum;
      });
    });
    b_sum = &cached(C, "const.Bsum", [&] {
      return tail_series(p, cfg, 0.0, [&](double t) {
        double sum = 0.0;
        for (const auto& f : tc.pbar) sum += f(t);
        return sum;
      });
    });
  }

  std::vector<CriterionReport> out;
  for (int m = 0; m <= cfg.m_max; ++m) {
    CriterionReport a = blank(with_m("A3", m), "const", m, kInvE, cfg);
    CriterionReport b = blank(with_m("B3", m), "const", m, kInvE, cfg);
    CriterionReport d = blank(with_m("D3", m), "const", m, 1.0, cfg);
    for (CriterionReport* r : {&a, &b, &d}) {
      r->preconditions = k.pre;
      r->diagnostics = k.diag;
    }
    if (!k.computable) {
      for (CriterionReport* r : {&a, &b, &d}) finish(*r, nullptr, false, cfg.margin);
    } else {
      const double pref = k.prefactor(m);
      for (CriterionReport* r : {&a, &b, &d}) r->diagnostics.emplace_back("prefactor", pref);

      const auto sa = scaled(const_A(p, tc, cfg, k, C, m), pref);
      finish(a, &sa, false, cfg.margin);

      SampledSeries sb = *b_base;
      for (std::size_t j = 0; j < sb.v.size(); ++j) {
        sb.v[j] = pref * (m * k.r0 * b_sum->v[j] + b_base->v[j]);
      }
      finish(b, &sb, false, cfg.margin);

      const double width = m * k.r0 + k.tau0;
      const auto& sd_raw = cached(C, "const.D:" + std::to_string(m), [&] {
        auto total = [&](double s) {
          double sum = 0.0;
          for (const auto& f : tc.pbar) sum += f(s);
          return sum;
        };
        return tail_series(p, cfg, width,
                           [&](double t) { return integrate(total, t - width, t, cfg.quad_tol); });
      });
      const auto sd = scaled(sd_raw, pref);
      finish(d, &sd, true, cfg.margin);
    }
    out.push_back(std::move(a));
    out.push_back(std::move(b));
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<CriterionReport> eval_family_const_slow(const NddeProblem& p,
                                                    const TransformedCoefficients& tc,
                                                    const OmegaResult& w,
                                                    const AnalysisConfig& cfg,
                                                    const SlowAssertions& asserted,
                                                    SeriesCache* cache) {
  SeriesCache local;
  SeriesCache& C = cache != nullptr ? *cache : local;
  const ConstContext k = const_context(p, tc, w, cfg, C);

  std::vector<Precondition> common = k.pre;
  if (k.computable) {
    bool positive = true;
    std::string detail;
    for (std::size_t i = 0; i < p.n_p(); ++i) {
      const auto& s = cached(C, "const.int:" + std::to_string(i), [&] {
        return tail_series(p, cfg, k.tau[i], [&](double t) {
          return integrate(tc.pbar[i], t - k.tau[i], t, cfg.quad_tol);
        });
      });
      const double lo = tail_inf(s, cfg.margin).value;
      detail += (i ? ", " : "") + idx("liminf", i) + " = " + num(lo);
      positive = positive && lo > 0.0;
    }
    common.push_back(pre("liminf int pbar > 0", positive, detail));
  }

  std::vector<CriterionReport> out;
  for (int m = 0; m <= cfg.m_max; ++m) {
    CriterionReport a = blank(with_m("Am", m), "const_slow", m, kInvE, cfg);
    CriterionReport b = blank(with_m("Bm", m), "const_slow", m, kInvE, cfg);
    for (CriterionReport* r : {&a, &b}) {
      r->preconditions = common;
      r->diagnostics = k.diag;
    }
    if (!k.computable) {
      for (CriterionReport* r : {&a, &b}) {
        r->preconditions.push_back(pre("slowly varying", false, "statistic unavailable"));
        finish(*r, nullptr, true, cfg.margin);
      }
    } else {
      const double pref = k.prefactor(m);
      const auto sa = scaled(const_A(p, tc, cfg, k, C, m), pref);
      const auto& base = cached(C, "const.Btau", [&] {
        return tail_series(p, cfg, 0.0, [&](double t) {
          double sum = 0.0;
          for (std::size_t i = 0; i < p.n_p(); ++i) sum += k.tau[i] * tc.pbar[i](t);
          return sum;
        });
      });
      const auto& total = cached(C, "const.Bsum", [&] {
        return tail_series(p, cfg, 0.0, [&](double t) {
          double sum = 0.0;
          for (const auto& f : tc.pbar) sum += f(t);
          return sum;
        });
      });
      SampledSeries sb = base;
      for (std::size_t j = 0; j < sb.v.size(); ++j) {
        sb.v[j] = pref * (m * k.r0 * total.v[j] + base.v[j]);
      }
      const std::pair<CriterionReport*, const SampledSeries*> items[] = {{&a, &sa}, {&b, &sb}};
      for (const auto& [r, s] : items) {
        const double score = slow_variation_score(*s, cfg.slow_shifts);
        r->diagnostics.emplace_back("prefactor", pref);
        r->diagnostics.emplace_back("slow_variation_score", score);
        r->preconditions.push_back(slow_precondition(asserted, r->id, score, cfg.margin));
        finish(*r, s, true, cfg.margin);
      }
    }
    out.push_back(std::move(a));
    out.push_back(std::move(b));
  }
  return out;
}

namespace {

struct FamilySpec {
  const char* family;
  std::vector<std::pair<std::string, int>> ids;
  std::vector<double> thresholds;
};

std::vector<FamilySpec> family_specs(int m_max) {
  FamilySpec fi{"I", {{"A1", -1}, {"B1", -1}, {"C1", -1}, {"D1", -1}}, {kInvE, kInvE, kInvE, 1.0}};
  FamilySpec fs{"slow", {{"A2", -1}, {"B2", -1}, {"C2", -1}}, {kInvE, kInvE, kInvE}};
  FamilySpec fc{"const", {}, {}};
  FamilySpec fm{"const_slow", {}, {}};
  for (int m = 0; m <= m_max; ++m) {
    fc.ids.insert(fc.ids.end(), {{with_m("A3", m), m}, {with_m("B3", m), m}, {with_m("D3", m), m}});
    fc.thresholds.insert(fc.thresholds.end(), {kInvE, kInvE, 1.0});
    fm.ids.insert(fm.ids.end(), {{with_m("Am", m), m}, {with_m("Bm", m), m}});
    fm.thresholds.insert(fm.thresholds.end(), {kInvE, kInvE});
  }
  return {fi, fs, fc, fm};
}

AnalysisError to_error(const std::string& stage, const std::exception& e) {
  if (const auto* ne = dynamic_cast<const NumericalError*>(&e)) {
    return {stage, NumericalError::kind_name(ne->kind()), e.what()};
  }
  if (dynamic_cast<const DomainError*>(&e) != nullptr) return {stage, "DOMAIN", e.what()};
  return {stage, "ERROR", e.what()};
}

std::vector<CriterionReport> placeholders(const FamilySpec& spec, const AnalysisConfig& cfg,
                                          const std::string& why) {
  std::vector<CriterionReport> out;
  for (std::size_t k = 0; k < spec.ids.size(); ++k) {
    CriterionReport r = blank(spec.ids[k].first, spec.family, spec.ids[k].second,
                              spec.thresholds[k], cfg);
    r.preconditions.push_back(pre("numerical evaluation", false, why));
    finish(r, nullptr, false, cfg.margin);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<std::string> criterion_ids(int m_max) {
  std::vector<std::string> ids;
  for (const auto& spec : family_specs(m_max)) {
    for (const auto& id : spec.ids) ids.push_back(id.first);
  }
  return ids;
}

AnalysisReport analyze_all(const NddeProblem& p, const AnalysisConfig& cfg,
                           const AnalysisOptions& opt) {
  AnalysisReport rep;
  rep.constancy = is_constant_delay(p);
  const auto specs = family_specs(cfg.m_max);
  SeriesCache cache;

  std::optional<TransformedCoefficients> tc;
  try {
    tc = transform(p, cfg, opt.transform);
    rep.choice = tc->choice;
    rep.pbar_star_usable = tc->usable;
    rep.pbar_star_reason = tc->reason;
  } catch (const std::exception& e) {
    rep.errors.push_back(to_error("transform", e));
  }

  auto run = [&](const FamilySpec& spec, const std::function<std::vector<CriterionReport>()>& f) {
    std::vector<CriterionReport> got;
    if (!tc) {
      got = placeholders(spec, cfg, "transformed coefficients unavailable");
    } else {
      try {
        got = f();
      } catch (const std::exception& e) {
        rep.errors.push_back(to_error(std::string("family ") + spec.family, e));
        got = placeholders(spec, cfg, e.what());
      }
    }
    rep.reports.insert(rep.reports.end(), got.begin(), got.end());
  };

  if (tc) {
    try {
      cache.h = check_h1_h2(p, *tc, cfg);
      rep.h = cache.h;
    } catch (const std::exception& e) {
      rep.errors.push_back(to_error("H1/H2", e));
    }
    try {
      cache.w = omega(p, *tc, cfg);
    } catch (const std::exception& e) {
      rep.errors.push_back(to_error("omega", e));
      OmegaResult w;
      w.reason = e.what();
      cache.w = w;
    }
    rep.w = cache.w;
  }

  auto need_h = [&] {
    if (!cache.h) throw NumericalError(NumericalError::Kind::Precondition, "H1/H2 unavailable");
  };
  run(specs[0], [&] {
    need_h();
    return eval_family_I(p, *tc, cfg, &cache);
  });
  run(specs[1], [&] {
    need_h();
    return eval_family_slow(p, *tc, cfg, opt.asserted_slow, opt.tau_hat, &cache);
  });
  run(specs[2], [&] { return eval_family_const(p, *tc, *cache.w, cfg, &cache); });
  run(specs[3],
      [&] { return eval_family_const_slow(p, *tc, *cache.w, cfg, opt.asserted_slow, &cache); });

  bool any_osc = false;
  bool any_inc = false;
  for (const auto& r : rep.reports) {
    any_osc = any_osc || r.verdict == Verdict::Oscillatory;
    any_inc = any_inc || r.verdict == Verdict::Inconclusive;
  }
  rep.overall = any_osc ? Verdict::Oscillatory
                        : (any_inc ? Verdict::Inconclusive : Verdict::Inapplicable);
  return rep;
}

}  // namespace ndde
