// Randomised property checks. Runs standalone:
//   ndde_properties [--seed N] [--count N]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "ndde/criteria.hpp"
#include "ndde/delay_kernel.hpp"
#include "ndde/expr.hpp"
#include "ndde/simulate.hpp"
#include "problems.hpp"

using namespace ndde;
using testing_support::make_problem;
using testing_support::Terms;

namespace {

using Rng = std::mt19937_64;
using Failure = std::optional<std::string>;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "(%.17g)", v);
  return buf;
}

std::string fail(const char* fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

/// tau(t) = a + b sin(w t) and delta(t) = d + e cos(v t), with e v < 1 so
/// that delta' < 1 and e <= d <= a - b - e so that 0 <= delta <= tau.
struct DelayPair {
  std::string tau, delta;
};

DelayPair random_delays(Rng& rng, bool constant_delta = false) {
  const double a = uniform(rng, 0.5, 3.0);
  const double b = uniform(rng, 0.0, 0.4) * a;
  const double w = uniform(rng, 0.1, 2.0);
  const double span = a - b;
  const double e = constant_delta ? 0.0 : uniform(rng, 0.0, 0.3) * span;
  const double v = e > 0 ? uniform(rng, 0.1, std::min(3.0, 0.95 / e)) : 1.0;
  const double d = uniform(rng, 0.0, 1.0) * (span - 2 * e) + e;
  return {num(a) + "+" + num(b) + "*sin(" + num(w) + "*t)",
          num(d) + "+" + num(e) + "*cos(" + num(v) + "*t)"};
}

Failure prop_solve_c(Rng& rng) {
  const DelayPair dp = random_delays(rng);
  const NddeProblem p = make_problem(0.0, {{}, {{"1", dp.tau}}, {{"1", dp.delta}}}, 40.0, 0.1);
  const CompositeDelay cd = CompositeDelay::make(p.positive()[0], p.negative()[0], p.D(), 1e-12);
  for (int k = 0; k < 20; ++k) {
    const double t = uniform(rng, p.D(), 40.0);
    const double c = solve_c(cd, t);
    const double resid = c - cd.tau(t) + cd.delta(t - c);
    if (c < 0.0 || c > p.D()) return fail("c = %g outside [0, %g] at t = %g", c, p.D(), t);
    if (std::abs(resid) > 1e-10) return fail("residual %g at t = %g", resid, t);
  }
  return std::nullopt;
}

Failure prop_c_prime(Rng& rng) {
  const DelayPair dp = random_delays(rng);
  const NddeProblem p = make_problem(0.0, {{}, {{"1", dp.tau}}, {{"1", dp.delta}}}, 40.0, 0.1);
  const CompositeDelay cd = CompositeDelay::make(p.positive()[0], p.negative()[0], p.D(), 1e-13);
  auto central = [&](double t, double h) { return (solve_c(cd, t + h) - solve_c(cd, t - h)) / (2 * h); };
  for (int k = 0; k < 10; ++k) {
    const double t = uniform(rng, p.D() + 1.0, 39.0);
    // Richardson-extrapolated central difference, error O(h^4).
    const double fd = (4 * central(t, 5e-5) - central(t, 1e-4)) / 3;
    const double cp = c_prime(cd, t, solve_c(cd, t));
    if (std::abs(cp - fd) > 1e-6 * std::max(1.0, std::abs(fd))) {
      return fail("c' = %.10g, central difference %.10g at t = %g", cp, fd, t) + " for tau = " +
             dp.tau + ", delta = " + dp.delta;
    }
  }
  return std::nullopt;
}

Failure prop_quadrature(Rng& rng) {
  const double a = uniform(rng, -3, 3), k = uniform(rng, 0.1, 8);
  const double b = uniform(rng, -2, 2), m = uniform(rng, -2, 1);
  const double c0 = uniform(rng, -1, 1), c1 = uniform(rng, -1, 1), c2 = uniform(rng, -1, 1);
  auto f = [=](double s) { return a * std::sin(k * s) + b * std::exp(m * s) + c0 + c1 * s + c2 * s * s; };
  auto F = [=](double s) {
    return -a * std::cos(k * s) / k + b * std::exp(m * s) / m + c0 * s + c1 * s * s / 2 +
           c2 * s * s * s / 3;
  };
  const double lo = uniform(rng, -5, 5);
  const double hi = lo + uniform(rng, -4, 6);
  const double tol = 1e-10;
  const double got = integrate(f, lo, hi, tol);
  const double want = F(hi) - F(lo);
  if (std::abs(got - want) > tol + 1e-13 * std::max(1.0, std::abs(want))) {
    return fail("integral %.15g, closed form %.15g (width %g)", got, want, hi - lo);
  }
  return std::nullopt;
}

Failure prop_tail_duality(Rng& rng) {
  SampledSeries s;
  const int n = std::uniform_int_distribution<int>(2, 400)(rng);
  double t = uniform(rng, 0, 100);
  for (int k = 0; k < n; ++k) {
    s.t.push_back(t);
    s.v.push_back(uniform(rng, -10, 10) * std::exp(-t / 50));
    t += uniform(rng, 0.01, 1.0);
  }
  SampledSeries neg = s;
  for (double& v : neg.v) v = -v;
  const double margin = uniform(rng, 1e-4, 1.0);
  const TailEstimate lo = tail_inf(neg, margin);
  const TailEstimate hi = tail_sup(s, margin);
  if (lo.value != -hi.value) return fail("inf(-f) = %g, sup(f) = %g", lo.value, hi.value);
  if (lo.converged != hi.converged) return fail("convergence flags differ", 0);
  for (std::size_t k = 0; k < lo.trend.size(); ++k) {
    if (lo.trend[k].extremum != -hi.trend[k].extremum ||
        lo.trend[k].window_start != hi.trend[k].window_start) {
      return fail("trend %g differs", static_cast<double>(k));
    }
  }
  const double whole = *std::max_element(s.v.begin(), s.v.end());
  if (hi.value != whole) return fail("sup %g is not the sample maximum %g", hi.value, whole);
  return std::nullopt;
}

/// Random constant-delay problem with positive pbar; `scale` multiplies P and Q.
Terms random_constant_problem(Rng& rng, double scale) {
  const double r = uniform(rng, 0.3, 2.0);
  const double R = uniform(rng, 0.05, 0.9);
  const double tau = uniform(rng, 0.1, 1.5);
  const double delta = uniform(rng, 0.0, tau);
  const double q0 = uniform(rng, 0.0, 0.5);
  const double q1 = uniform(rng, 0.0, 1.0) * q0;
  const double p0 = q0 + q1 + uniform(rng, 0.1, 2.0);
  const double p1 = uniform(rng, 0.0, 0.9) * (p0 - q0 - q1);
  const double w = uniform(rng, 0.2, 3.0);
  const std::string k = num(scale);
  return {{{num(R), num(r)}},
          {{k + "*(" + num(p0) + "+" + num(p1) + "*sin(" + num(w) + "*t))", num(tau)}},
          {{k + "*(" + num(q0) + "+" + num(q1) + "*cos(" + num(w) + "*t))", num(delta)}}};
}

AnalysisConfig short_tail(double start, double length, double step) {
  AnalysisConfig cfg;
  cfg.tail_start = start;
  cfg.horizon = start + length;
  cfg.grid_step = step;
  return cfg;
}

Failure prop_omega_scale(Rng& rng) {
  const auto seed = rng();
  Rng a(seed), b(seed);
  const double k = std::exp(uniform(rng, -3, 3));
  const NddeProblem p1 = make_problem(0.0, random_constant_problem(a, 1.0), 30.0, 0.1);
  const NddeProblem pk = make_problem(0.0, random_constant_problem(b, k), 30.0, 0.1);
  const AnalysisConfig cfg = short_tail(p1.D() + 1.0, 20.0, 0.05);
  const OmegaResult w1 = omega(p1, transform(p1, cfg), cfg);
  const OmegaResult wk = omega(pk, transform(pk, cfg), cfg);
  if (std::abs(w1.min_inf - wk.min_inf) > 1e-9 * std::max(1.0, std::abs(w1.min_inf))) {
    return fail("Omega infimum %.12g vs %.12g after scaling by %g", w1.min_inf, wk.min_inf, k);
  }
  if (w1.omega.has_value() != wk.omega.has_value()) return fail("availability changed", k);
  return std::nullopt;
}

/// Reference statement of the verdict rule.
Verdict expected_verdict(const std::vector<Precondition>& pre, double stat, double thr,
                         double margin, bool converged) {
  for (const auto& p : pre) {
    if (!p.passed) return Verdict::Inapplicable;
  }
  if (std::isfinite(stat) && stat > thr + margin && converged) return Verdict::Oscillatory;
  return Verdict::Inconclusive;
}

Failure prop_verdict_rule(Rng& rng) {
  std::vector<Precondition> pre;
  const int n = std::uniform_int_distribution<int>(0, 4)(rng);
  for (int k = 0; k < n; ++k) pre.push_back({"p", uniform(rng, 0, 1) < 0.8, ""});
  const double thr = uniform(rng, 0, 1);
  const double margin = uniform(rng, 0, 0.01);
  double stat = thr + uniform(rng, -0.02, 0.02);
  if (uniform(rng, 0, 1) < 0.05) stat = std::nan("");
  const bool conv = uniform(rng, 0, 1) < 0.7;
  if (decide_verdict(pre, stat, thr, margin, conv) != expected_verdict(pre, stat, thr, margin, conv)) {
    return fail("statistic %g threshold %g margin %g", stat, thr, margin);
  }
  return std::nullopt;
}

Failure prop_report_semantics(Rng& rng) {
  const NddeProblem p = make_problem(0.0, random_constant_problem(rng, 1.0), 30.0, 0.1);
  AnalysisConfig cfg = short_tail(p.D() + 1.0, 15.0, 0.05);
  cfg.m_max = 3;
  const AnalysisReport rep = analyze_all(p, cfg);
  bool any_osc = false, any_inc = false;
  for (const auto& r : rep.reports) {
    const bool conv = r.tail && r.tail->converged;
    const Verdict want = expected_verdict(r.preconditions, r.statistic, r.threshold, r.margin_used, conv);
    if (r.verdict != want) return fail("verdict mismatch on a criterion with statistic %g", r.statistic);
    if (r.margin_used != cfg.margin) return fail("margin %g not the configured one", r.margin_used);
    any_osc |= r.verdict == Verdict::Oscillatory;
    any_inc |= r.verdict == Verdict::Inconclusive;
  }
  const Verdict overall =
      any_osc ? Verdict::Oscillatory : (any_inc ? Verdict::Inconclusive : Verdict::Inapplicable);
  if (rep.overall != overall) return fail("overall verdict mismatch", 0);
  if (rep.reports.size() != criterion_ids(cfg.m_max).size()) return fail("missing criteria", 0);
  return std::nullopt;
}

std::string random_expr(Rng& rng, int depth) {
  const int pick = std::uniform_int_distribution<int>(0, depth <= 0 ? 1 : 9)(rng);
  switch (pick) {
    case 0: return "t";
    case 1: return num(uniform(rng, -5, 5));
    case 2: return "sin(" + random_expr(rng, depth - 1) + ")";
    case 3: return "cos(" + random_expr(rng, depth - 1) + ")";
    case 4: return "exp(-abs(" + random_expr(rng, depth - 1) + "))";
    case 5: return "(" + random_expr(rng, depth - 1) + ")^2";
    case 6: return random_expr(rng, depth - 1) + "+" + random_expr(rng, depth - 1);
    case 7: return random_expr(rng, depth - 1) + "-" + random_expr(rng, depth - 1);
    case 8: return random_expr(rng, depth - 1) + "*" + random_expr(rng, depth - 1);
    default: return "-" + random_expr(rng, depth - 1);
  }
}

Failure prop_print_round_trip(Rng& rng) {
  const Expr e = parse(random_expr(rng, 4));
  const Expr back = parse(print(e));
  if (print(back) != print(e)) return fail("printed form is not stable", 0);
  for (int k = 0; k < 5; ++k) {
    const double t = uniform(rng, -3, 3);
    if (back(t) != e(t)) return fail("value changed at t = %g", t);
  }
  return std::nullopt;
}

Failure prop_padding(Rng& rng) {
  const DelayPair dp = random_delays(rng, true);
  const std::string P2 = num(uniform(rng, 0.1, 2.0));
  const std::string tau2 = num(uniform(rng, 0.1, 2.0));
  const Terms explicit_pad{{}, {{"2", dp.tau}, {P2, tau2}}, {{"0.5", dp.delta}, {"0", "0"}}};
  const Terms implicit_pad{{}, {{"2", dp.tau}, {P2, tau2}}, {{"0.5", dp.delta}}};
  const NddeProblem a = make_problem(0.0, explicit_pad, 30.0, 0.1);
  const NddeProblem b = make_problem(0.0, implicit_pad, 30.0, 0.1);
  const AnalysisConfig cfg = short_tail(a.D() + 1.0, 10.0, 0.05);
  const auto ta = transform(a, cfg);
  const auto tb = transform(b, cfg);
  for (int k = 0; k < 10; ++k) {
    const double t = uniform(rng, cfg.tail_start, cfg.horizon);
    for (std::size_t i = 0; i < 2; ++i) {
      if (std::abs(ta.pbar[i](t) - tb.pbar[i](t)) > 1e-14) return fail("pbar differs at t = %g", t);
    }
  }
  return std::nullopt;
}

Failure prop_zero_symmetry(Rng& rng) {
  std::vector<double> t, x, neg;
  const int n = std::uniform_int_distribution<int>(2, 300)(rng);
  for (int k = 0; k < n; ++k) {
    t.push_back(0.1 * k);
    const double v = uniform(rng, 0, 1) < 0.05 ? 0.0 : uniform(rng, -1, 1);
    x.push_back(v);
    neg.push_back(-v);
  }
  const auto a = detect_zeros(t, x);
  const auto b = detect_zeros(t, neg);
  if (a != b) return fail("zero sets differ (%g vs %g entries)", static_cast<double>(a.size()),
                          static_cast<double>(b.size()));
  return std::nullopt;
}

struct Property {
  const char* name;
  std::function<Failure(Rng&)> check;
};

}  // namespace

int main(int argc, char** argv) {
  std::uint64_t seed = 20240531;
  int count = 200;
  for (int k = 1; k + 1 < argc; k += 2) {
    const std::string flag = argv[k];
    if (flag == "--seed") seed = std::strtoull(argv[k + 1], nullptr, 10);
    if (flag == "--count") count = std::atoi(argv[k + 1]);
  }

  const std::vector<Property> props = {
      {"solve_c residual and range", prop_solve_c},
      {"c_prime against finite differences", prop_c_prime},
      {"quadrature against closed forms", prop_quadrature},
      {"tail_inf / tail_sup duality", prop_tail_duality},
      {"omega invariant under scaling P and Q", prop_omega_scale},
      {"verdict rule", prop_verdict_rule},
      {"report verdict semantics", prop_report_semantics},
      {"print / parse round trip", prop_print_round_trip},
      {"padding invariance", prop_padding},
      {"zeros of x and -x", prop_zero_symmetry},
  };

  int failed = 0;
  for (const auto& prop : props) {
    Rng rng(seed);
    int bad = 0;
    std::string first;
    for (int k = 0; k < count; ++k) {
      Failure f;
      try {
        f = prop.check(rng);
      } catch (const std::exception& e) {
        f = std::string("exception: ") + e.what();
      }
      if (f) {
        if (bad == 0) first = "instance " + std::to_string(k) + ": " + *f;
        ++bad;
      }
    }
    std::printf("%s %-40s %d/%d\n", bad == 0 ? "PASS" : "FAIL", prop.name, count - bad, count);
    if (bad > 0) std::printf("     %s\n", first.c_str());
    failed += bad > 0;
  }
  std::printf("seed %llu, %d of %zu properties failed\n", static_cast<unsigned long long>(seed), failed,
              props.size());
  return failed == 0 ? 0 : 1;
}
