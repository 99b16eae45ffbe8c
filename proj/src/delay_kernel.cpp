#include "ndde/delay_kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "ndde/error.hpp"

namespace ndde {

CompositeDelay CompositeDelay::make(const PositiveTerm& pos, const NegativeTerm& neg, double D,
                                    double root_tol) {
  CompositeDelay cd;
  cd.tau = pos.tau;
  cd.tau_prime = pos.tau_prime;
  cd.delta = neg.delta;
  cd.delta_prime = neg.delta_prime;
  cd.D = D;
  cd.root_tol = root_tol;
  cd.delta_constant = neg.delta.as_constant();
  return cd;
}

double solve_c(const CompositeDelay& cd, double t) {
  const double tau = cd.tau(t);
  if (cd.delta_constant) return std::clamp(tau - *cd.delta_constant, 0.0, cd.D);

  auto F = [&](double c) { return c - tau + cd.delta(t - c); };
  double a = 0.0;
  double b = cd.D;
  double fa = F(a);
  double fb = F(b);
  if (std::abs(fa) <= cd.root_tol) return a;
  if (std::abs(fb) <= cd.root_tol) return b;
  if (fa > 0.0 || fb < 0.0) {
    throw NumericalError(NumericalError::Kind::Bracket,
                         "c - tau + delta(t - c) has no sign change on [0, D] at t = " +
                             std::to_string(t));
  }

  // Illinois false position; a bisection step whenever the bracket stalls.
  int side = 0;
  double best = a;
  double fbest = fa;
  for (int iter = 0; iter < 200; ++iter) {
    const double width = b - a;
    double c = (a * fb - b * fa) / (fb - fa);
    if (!(c > a && c < b)) c = 0.5 * (a + b);
    const double fc = F(c);
    if (std::abs(fc) < std::abs(fbest)) {
      best = c;
      fbest = fc;
    }
    if (std::abs(fc) <= cd.root_tol) return c;
    if (fc < 0.0) {
      a = c;
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
    if (b - a > 0.5 * width) {
      const double m = 0.5 * (a + b);
      const double fm = F(m);
      if (std::abs(fm) <= cd.root_tol) return m;
      if (fm < 0.0) {
        a = m;
        fa = fm;
      } else {
        b = m;
        fb = fm;
      }
      side = 0;
    }
    if (b - a <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, b)) break;
  }
  return best;
}

double c_prime(const CompositeDelay& cd, double t, double c) {
  const double denom = 1.0 - cd.delta_prime(t - c);
  if (!(denom > 1e-12)) {
    throw NumericalError(NumericalError::Kind::Degenerate,
                         "delta'(t - c) is not below 1 at t = " + std::to_string(t));
  }
  return 1.0 - (1.0 - cd.tau_prime(t)) / denom;
}

namespace {

// Kronrod nodes on [0, 1]; odd indices are the Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

double checked(const ScalarFn& f, double x) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    throw NumericalError(NumericalError::Kind::NonFinite,
                         "integrand is not finite at s = " + std::to_string(x));
  }
  return v;
}

Piece gk15(const ScalarFn& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = checked(f, center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = checked(f, center - dx);
    const double f2 = checked(f, center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

constexpr int kMaxPieces = 4000;

}  // namespace

double integrate(const ScalarFn& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, tol);

  std::priority_queue<Piece> heap;
  Piece first = gk15(f, a, b);
  double error = first.error;
  heap.push(first);
  while (error > tol) {
    if (static_cast<int>(heap.size()) >= kMaxPieces) {
      throw NumericalError(NumericalError::Kind::MaxDepth,
                           "quadrature on [" + std::to_string(a) + ", " + std::to_string(b) +
                               "] did not reach tolerance");
    }
    const Piece worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw NumericalError(NumericalError::Kind::MaxDepth,
                           "quadrature subinterval width reached machine precision");
    }
    const Piece left = gk15(f, worst.a, mid);
    const Piece right = gk15(f, mid, worst.b);
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  double sum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().value;
    heap.pop();
  }
  return sum;
}

double moving_sup(const ScalarFn& f, double t, double width, double step) {
  if (width <= 0.0) return f(t);
  const auto n = static_cast<long>(std::ceil(width / step - 1e-9));
  const double h = width / static_cast<double>(std::max(1L, n));
  double s = f(t);
  for (long k = 0; k < std::max(1L, n); ++k) {
    s = std::max(s, f(t - width + static_cast<double>(k) * h));
  }
  return s;
}

SampledSeries sample(const ScalarFn& f, double a, double b, double step) {
  SampledSeries s;
  const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
  s.t.reserve(static_cast<std::size_t>(n) + 2);
  for (long k = 0; k <= n; ++k) s.t.push_back(a + static_cast<double>(k) * step);
  if (b - s.t.back() > 1e-9 * step) s.t.push_back(b);
  s.v.reserve(s.t.size());
  for (double t : s.t) {
    const double v = f(t);
    if (!std::isfinite(v)) {
      throw NumericalError(NumericalError::Kind::NonFinite,
                           "tail function is not finite at t = " + std::to_string(t));
    }
    s.v.push_back(v);
  }
  return s;
}

namespace {

template <class Better>
TailEstimate tail_extremum(const SampledSeries& s, double margin, Better better) {
  TailEstimate est;
  if (s.v.empty()) {
    est.value = std::nan("");
    return est;
  }
  const double end = s.t.back();
  const double length = end - s.t.front();
  for (int k = 0; k < 4; ++k) {
    const double start = end - length / static_cast<double>(1 << k);
    const auto first = std::lower_bound(s.t.begin(), s.t.end(), start - 1e-9 * length);
    auto idx = static_cast<std::size_t>(first - s.t.begin());
    double ext = s.v[idx];
    for (; idx < s.v.size(); ++idx) {
      if (better(s.v[idx], ext)) ext = s.v[idx];
    }
    est.trend.push_back({start, ext});
  }
  est.value = est.trend.front().extremum;
  est.converged = std::abs(est.trend[2].extremum - est.trend[3].extremum) < margin;
  return est;
}

}  // namespace

TailEstimate tail_inf(const SampledSeries& s, double margin) {
  return tail_extremum(s, margin, [](double a, double b) { return a < b; });
}

TailEstimate tail_sup(const SampledSeries& s, double margin) {
  return tail_extremum(s, margin, [](double a, double b) { return a > b; });
}

TailEstimate tail_inf(const ScalarFn& f, const AnalysisConfig& cfg) {
  return tail_inf(sample(f, cfg.tail_start, cfg.horizon, cfg.grid_step), cfg.margin);
}

TailEstimate tail_sup(const ScalarFn& f, const AnalysisConfig& cfg) {
  return tail_sup(sample(f, cfg.tail_start, cfg.horizon, cfg.grid_step), cfg.margin);
}

double slow_variation_score(const ScalarFn& f, const AnalysisConfig& cfg) {
  const double window = (cfg.horizon - cfg.tail_start) / 8.0;
  double score = 0.0;
  for (double h : cfg.slow_shifts) {
    const double lo = std::max(cfg.tail_start, cfg.horizon - window - h);
    const double hi = cfg.horizon - h;
    const auto n = static_cast<long>(std::floor((hi - lo) / cfg.grid_step + 1e-9));
    for (long k = 0; k <= n; ++k) {
      const double t = lo + static_cast<double>(k) * cfg.grid_step;
      score = std::max(score, std::abs(f(t + h) - f(t)));
    }
  }
  return score;
}

double slow_variation_score(const SampledSeries& s, const std::vector<double>& shifts) {
  if (s.t.size() < 2) return 0.0;
  const double end = s.t.back();
  const double window = (end - s.t.front()) / 8.0;
  auto at = [&](double x) {
    auto it = std::upper_bound(s.t.begin(), s.t.end(), x);
    if (it == s.t.end()) return s.v.back();
    if (it == s.t.begin()) return s.v.front();
    const auto j = static_cast<std::size_t>(it - s.t.begin());
    const double w = (x - s.t[j - 1]) / (s.t[j] - s.t[j - 1]);
    return (1.0 - w) * s.v[j - 1] + w * s.v[j];
  };
  double score = 0.0;
  for (double h : shifts) {
    const double lo = end - window - h;
    const double hi = end - h;
    for (std::size_t j = 0; j < s.t.size(); ++j) {
      if (s.t[j] < lo || s.t[j] > hi) continue;
      score = std::max(score, std::abs(at(s.t[j] + h) - s.v[j]));
    }
  }
  return score;
}

}  // namespace ndde
