#include "ndde/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "ndde/error.hpp"

namespace ndde {

namespace {

constexpr double kBlowup = 1e150;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

double Trajectory::node(long k) const {
  if (k < 0) return phi_(t0_ + static_cast<double>(k) * dt_);
  return x[static_cast<std::size_t>(k)];
}

double Trajectory::x_at(double s) const {
  if (s <= t0_) return phi_(s);
  const long last = static_cast<long>(x.size()) - 1;
  const double u = (s - t0_) / dt_;
  const long j = static_cast<long>(std::floor(u));
  const long base = std::min(j - 1, last - 3);
  const double v = u - static_cast<double>(base);
  const double w0 = -(v - 1.0) * (v - 2.0) * (v - 3.0) / 6.0;
  const double w1 = v * (v - 2.0) * (v - 3.0) / 2.0;
  const double w2 = -v * (v - 1.0) * (v - 3.0) / 2.0;
  const double w3 = v * (v - 1.0) * (v - 2.0) / 6.0;
  return w0 * node(base) + w1 * node(base + 1) + w2 * node(base + 2) + w3 * node(base + 3);
}

Trajectory integrate_ndde(const NddeProblem& p, const History& history, double t_end,
                          double dt) {
  if (!(dt > 0.0) || !(t_end > p.t0())) {
    throw ValidationError("simulation grid", "simulation needs dt > 0 and t_end > t0");
  }
  for (int k = 0; k <= 64; ++k) {
    const double s = p.t0() - p.D() + p.D() * k / 64.0;
    if (!std::isfinite(history.phi(s))) {
      throw ValidationError("history", "history is not finite at t = " + num(s), s);
    }
  }

  Trajectory traj(p.t0(), dt, history.phi);
  const auto steps = static_cast<long>(std::llround((t_end - p.t0()) / dt));
  traj.t.reserve(static_cast<std::size_t>(steps) + 1);
  traj.x.reserve(static_cast<std::size_t>(steps) + 1);
  traj.z.reserve(static_cast<std::size_t>(steps) + 1);

  auto neutral_part = [&](double ts) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p.n_r(); ++i) {
      const auto& term = p.neutral()[i];
      const double r = term.r(ts);
      if (r < 4.0 * dt) {
        throw NumericalError(NumericalError::Kind::RMin,
                             "r_" + std::to_string(i + 1) + "(" + num(ts) + ") = " + num(r) +
                                 " is below 4 dt = " + num(4.0 * dt));
      }
      sum += term.R(ts) * traj.x_at(ts - r);
    }
    return sum;
  };

  auto rhs = [&](double ts, double zs) {
    const double xs = zs + neutral_part(ts);
    auto delayed = [&](double s) { return s >= ts - 1e-12 * dt ? xs : traj.x_at(s); };
    double f = 0.0;
    for (std::size_t i = 0; i < p.n_p(); ++i) {
      const auto& pos = p.positive()[i];
      f -= pos.P(ts) * delayed(ts - pos.tau(ts));
    }
    for (std::size_t i = 0; i < p.n_q(); ++i) {
      const auto& neg = p.negative()[i];
      f += neg.Q(ts) * delayed(ts - neg.delta(ts));
    }
    return f;
  };

  const double t0 = p.t0();
  traj.t.push_back(t0);
  traj.x.push_back(history.phi(t0));
  traj.z.push_back(traj.x.back() - neutral_part(t0));

  for (long n = 0; n < steps; ++n) {
    const double t = t0 + static_cast<double>(n) * dt;
    const double z = traj.z.back();
    const double k1 = rhs(t, z);
    const double k2 = rhs(t + 0.5 * dt, z + 0.5 * dt * k1);
    const double k3 = rhs(t + 0.5 * dt, z + 0.5 * dt * k2);
    const double k4 = rhs(t + dt, z + dt * k3);
    const double z_next = z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t_next = t0 + static_cast<double>(n + 1) * dt;
    const double x_next = z_next + neutral_part(t_next);
    if (!(std::abs(x_next) <= kBlowup)) {
      throw NumericalError(NumericalError::Kind::Blowup,
                           "|x| exceeded " + num(kBlowup) + " at t = " + num(t_next));
    }
    traj.t.push_back(t_next);
    traj.z.push_back(z_next);
    traj.x.push_back(x_next);
  }
  traj.zeros = detect_zeros(traj.t, traj.x);
  if (!traj.zeros.empty() && traj.zeros.front() <= p.t0()) traj.zeros.erase(traj.zeros.begin());
  return traj;
}

std::vector<double> detect_zeros(const std::vector<double>& t, const std::vector<double>& x) {
  std::vector<double> zeros;
  auto add = [&](double z) {
    if (zeros.empty() || z > zeros.back()) zeros.push_back(z);
  };
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 0.0) {
      add(t[k]);
      continue;
    }
    if (k + 1 < x.size() && x[k + 1] != 0.0 && (x[k] < 0.0) != (x[k + 1] < 0.0)) {
      add(t[k] + x[k] / (x[k] - x[k + 1]) * (t[k + 1] - t[k]));
    }
  }
  return zeros;
}

std::vector<double> detect_zeros(const Trajectory& traj) { return detect_zeros(traj.t, traj.x); }

SampledSeries y_transform(const NddeProblem& p, const Trajectory& traj, double quad_tol,
                          double root_tol) {
  std::vector<CompositeDelay> cd;
  for (std::size_t i = 0; i < p.n_q(); ++i) {
    cd.push_back(CompositeDelay::make(p.positive()[i], p.negative()[i], p.D(), root_tol));
  }
  const double tol = quad_tol / static_cast<double>(std::max<std::size_t>(1, p.n_q()));
  SampledSeries y;
  const double start = p.t0() + p.D();
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const double t = traj.t[k];
    if (t < start - 1e-9 * traj.dt()) continue;
    double v = traj.z[k];
    for (std::size_t i = 0; i < p.n_q(); ++i) {
      const auto& neg = p.negative()[i];
      const double c = solve_c(cd[i], t);
      v -= integrate([&](double s) { return neg.Q(s) * traj.x_at(s - neg.delta(s)); }, t - c, t,
                     tol);
    }
    y.t.push_back(t);
    y.v.push_back(v);
  }
  return y;
}

const char* evidence_name(Evidence e) {
  switch (e) {
    case Evidence::EmpiricallyOscillating: return "EMPIRICALLY_OSCILLATING";
    case Evidence::EmpiricallyNonoscillating: return "EMPIRICALLY_NONOSCILLATING";
    case Evidence::Undecided: return "UNDECIDED";
  }
  return "UNDECIDED";
}

EvidenceSummary classify(const Trajectory& traj, double window) {
  EvidenceSummary ev;
  if (traj.t.empty()) return ev;
  ev.window_start = traj.t.back() - window;
  ev.min_abs = INFINITY;
  int last_sign = 0;
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    if (traj.t[k] < ev.window_start) continue;
    const double a = std::abs(traj.x[k]);
    ev.min_abs = std::min(ev.min_abs, a);
    ev.max_abs = std::max(ev.max_abs, a);
    const int sign = traj.x[k] > 0.0 ? 1 : (traj.x[k] < 0.0 ? -1 : 0);
    if (sign == 0) continue;
    if (last_sign != 0 && sign != last_sign) ++ev.sign_changes;
    last_sign = sign;
  }
  if (ev.sign_changes >= 2) {
    ev.label = Evidence::EmpiricallyOscillating;
  } else if (ev.sign_changes == 0 && ev.min_abs > 1e-9 * std::max(1.0, ev.max_abs)) {
    ev.label = Evidence::EmpiricallyNonoscillating;
  }
  return ev;
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  out << "t x z\n";
  char buf[96];
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g %.12g %.12g\n", traj.t[k], traj.x[k], traj.z[k]);
    out << buf;
  }
}

}  // namespace ndde
