#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "ndde/delay_kernel.hpp"
#include "ndde/expr.hpp"
#include "ndde/model.hpp"

namespace ndde {

/// Initial function on [t0 - D, t0].
struct History {
  Expr phi;
};

/// Samples on t0, t0 + dt, ..., t_end. Delayed values between nodes come from
/// 4-point Lagrange interpolation; times up to t0 use phi directly.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(double t0, double dt, Expr phi) : t0_(t0), dt_(dt), phi_(std::move(phi)) {}

  double t0() const { return t0_; }
  double dt() const { return dt_; }

  /// x at any s <= t.back(); extrapolates cubically past the last node.
  double x_at(double s) const;

  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> z;  // x(t) - sum R_i(t) x(t - r_i(t))
  std::vector<double> zeros;  // crossings after t0

 private:
  double node(long k) const;

  double t0_ = 0.0;
  double dt_ = 1.0;
  Expr phi_;
};

/// Classical RK4 on z' = -sum P x(t - tau) + sum Q x(t - delta) with
/// x = z + sum R x(t - r). Throws NumericalError(RMin) when some r_i(t) is
/// below 4 dt, NumericalError(Blowup) once |x| exceeds 1e150.
Trajectory integrate_ndde(const NddeProblem& problem, const History& history, double t_end,
                          double dt);

/// Crossing times from linear interpolation in every cell with a sign
/// change; a node where x is exactly 0 is listed once.
std::vector<double> detect_zeros(const std::vector<double>& t, const std::vector<double>& x);
std::vector<double> detect_zeros(const Trajectory& traj);

/// y(t) = z(t) - sum_i int_{t - c_i(t)}^t Q_i(s) x(s - delta_i(s)) ds on the
/// trajectory nodes with t >= t0 + D.
SampledSeries y_transform(const NddeProblem& problem, const Trajectory& traj,
                          double quad_tol = 1e-10, double root_tol = 1e-12);

enum class Evidence { EmpiricallyOscillating, EmpiricallyNonoscillating, Undecided };

const char* evidence_name(Evidence e);

struct EvidenceSummary {
  Evidence label = Evidence::Undecided;
  int sign_changes = 0;
  double window_start = 0.0;
  double min_abs = 0.0;
  double max_abs = 0.0;
};

/// Looks at the nodes in [t_end - window, t_end]: two or more sign changes
/// count as oscillating, none with |x| bounded away from 0 as
/// nonoscillating.
EvidenceSummary classify(const Trajectory& traj, double window);

/// Header `t x z`, then one space-separated sample per line.
void write_trajectory(std::ostream& out, const Trajectory& traj);

}  // namespace ndde
