#include <cmath>
#include <numbers>

#include "doctest.h"
#include "ndde/delay_kernel.hpp"
#include "ndde/error.hpp"
#include "problems.hpp"

using namespace ndde;
using testing_support::make_problem;

namespace {

CompositeDelay delay_pair(const char* tau, const char* delta, double D) {
  const NddeProblem p = make_problem(0.0, {{}, {{"1", tau}}, {{"1", delta}}}, 50.0);
  return CompositeDelay::make(p.positive()[0], p.negative()[0], D > 0 ? D : p.D(), 1e-12);
}

AnalysisConfig tail_cfg(double start, double end, double step) {
  AnalysisConfig cfg;
  cfg.tail_start = start;
  cfg.horizon = end;
  cfg.grid_step = step;
  return cfg;
}

}  // namespace

TEST_CASE("solve_c recovers the explicit composite delay") {
  const CompositeDelay cd = delay_pair("0.5*cos(t)+1+exp(-t+1+0.5*cos(t))", "exp(-t)", 0.0);
  for (double t = 1.0; t <= 60.0; t += 0.173) {
    CHECK(std::abs(solve_c(cd, t) - (0.5 * std::cos(t) + 1.0)) <= 1e-10);
  }
}

TEST_CASE("solve_c special cases") {
  const CompositeDelay zero = delay_pair("sin(t)+2", "0", 0.0);
  const CompositeDelay fixed = delay_pair("sin(t)+2", "0.75", 0.0);
  for (double t = 2.0; t <= 20.0; t += 0.5) {
    CHECK(solve_c(zero, t) == doctest::Approx(std::sin(t) + 2).epsilon(1e-12));
    CHECK(solve_c(fixed, t) == doctest::Approx(std::sin(t) + 1.25).epsilon(1e-12));
  }
}

TEST_CASE("solve_c reports an empty bracket") {
  CompositeDelay cd = delay_pair("1", "0.5", 0.0);
  cd.delta_constant.reset();
  cd.tau = Expr::constant(5.0);  // root at 4.5, outside [0, D]
  CHECK_THROWS_AS(solve_c(cd, 3.0), NumericalError);
}

TEST_CASE("c_prime") {
  const CompositeDelay consts = delay_pair("1", "0.5", 0.0);
  CHECK(c_prime(consts, 3.0, 0.5) == 0.0);

  const CompositeDelay zero = delay_pair("0.5*sin(t)+2", "0", 0.0);
  for (double t = 2.0; t <= 10.0; t += 0.7) {
    CHECK(c_prime(zero, t, solve_c(zero, t)) == doctest::Approx(0.5 * std::cos(t)));
  }

  // Central differences of solve_c as the oracle.
  const CompositeDelay ex1 = delay_pair("0.5*cos(t)+1+exp(-t+1+0.5*cos(t))", "exp(-t)", 0.0);
  const double h = 1e-4;
  for (double t = 5.0; t <= 30.0; t += 0.61) {
    const double fd = (solve_c(ex1, t + h) - solve_c(ex1, t - h)) / (2 * h);
    CHECK(std::abs(c_prime(ex1, t, solve_c(ex1, t)) - fd) <= 1e-6);
    CHECK(std::abs(c_prime(ex1, t, solve_c(ex1, t)) + 0.5 * std::sin(t)) <= 1e-6);
  }
}

TEST_CASE("c_prime is degenerate when delta' reaches 1") {
  CompositeDelay cd = delay_pair("1", "0.5", 0.0);
  cd.delta_prime = Expr::constant(1.0);
  CHECK_THROWS_AS(c_prime(cd, 2.0, 0.5), NumericalError);
}

TEST_CASE("quadrature against closed forms") {
  const double pi = std::numbers::pi;
  CHECK(std::abs(integrate([](double s) { return std::sin(s); }, 0.0, pi, 1e-12) - 2.0) <= 1e-12);
  for (double t = 0.0; t <= 8.0; t += 1.3) {
    const double got =
        integrate([](double s) { return 0.2 * std::exp(-s); }, t - std::log(2.0), t, 1e-13);
    CHECK(std::abs(got - 0.2 * std::exp(-t)) <= 1e-12);
    const double box = integrate([](double s) { return std::sin(s) + 1.5; }, t - 2, t, 1e-12);
    CHECK(std::abs(box - (3 + 2 * std::sin(1.0) * std::sin(t - 1))) <= 1e-11);
  }
  CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0, 1e-10) == 0.0);
  CHECK(integrate([](double s) { return s; }, 1.0, 0.0, 1e-12) == doctest::Approx(-0.5));
}

TEST_CASE("quadrature failures") {
  CHECK_THROWS_AS(integrate([](double) { return std::nan(""); }, 0.0, 1.0, 1e-8), NumericalError);
  CHECK_THROWS_AS(integrate([](double s) { return 1.0 / std::sqrt(std::abs(s - 0.3)); }, 0.0, 1.0,
                            1e-15),
                  NumericalError);
}

TEST_CASE("moving_sup") {
  CHECK(moving_sup([](double) { return 1.0; }, 5.0, 2.0, 0.1) == 1.0);
  const double step = 0.01;
  for (double t = 3.0; t <= 10.0; t += 1.1) {
    const double got = moving_sup([](double s) { return std::exp(-s); }, t, 2.0, step);
    CHECK(std::abs(got - std::exp(-(t - 2.0))) <= std::exp(-(t - 2.0)) * step);
    const double sine = moving_sup([](double s) { return std::sin(s); }, t, 2 * std::numbers::pi, step);
    CHECK(std::abs(sine - 1.0) <= step * step / 2);
  }
}

TEST_CASE("tail estimates") {
  const auto half = tail_inf([](double) { return 0.5; }, tail_cfg(10, 100, 0.1));
  CHECK(half.value == 0.5);
  CHECK(half.converged);
  REQUIRE(half.trend.size() == 4);
  CHECK(half.trend[3].window_start == doctest::Approx(100 - 90.0 / 8));

  const auto wave = tail_inf([](double t) { return 0.75 * std::sin(4 * t) + 1.0; },
                             tail_cfg(10, 110, 0.01));
  CHECK(std::abs(wave.value - 0.25) <= 0.75 * 8 * 1e-4);
  CHECK(wave.converged);

  auto lnwave = [](double t) { return 2 * std::cos(std::log(t)) + 2.05; };
  const double e3 = std::exp(3.0);
  const auto full = tail_sup(lnwave, tail_cfg(e3, std::exp(7.0), 0.05));
  CHECK(full.value == doctest::Approx(4.05).epsilon(1e-6));
  const auto shorter = tail_sup(lnwave, tail_cfg(e3, std::exp(5.5), 0.05));
  CHECK(shorter.value < 4.0);
  const auto crossing = tail_sup(lnwave, tail_cfg(e3, std::exp(6.5), 0.05));
  CHECK(crossing.value == doctest::Approx(4.05).epsilon(1e-6));
  CHECK_FALSE(crossing.converged);
  CHECK(crossing.trend[3].extremum < crossing.trend[2].extremum);
}

TEST_CASE("slow variation") {
  CHECK(slow_variation_score([](double) { return 3.0; }, tail_cfg(0, 100, 0.1)) == 0.0);

  AnalysisConfig slow = tail_cfg(9.2e5, 1.01e6, 5.0);
  const double score =
      slow_variation_score([](double t) { return 2 * std::cos(std::log(t)) + 2.05; }, slow);
  CHECK(score <= 2 * 10 / 9.9e5);

  AnalysisConfig fast = tail_cfg(0, 200, 0.01);
  fast.slow_shifts = {std::numbers::pi};
  const double s = slow_variation_score([](double t) { return std::sin(t); }, fast);
  CHECK(s == doctest::Approx(2.0).epsilon(1e-3));

  const SampledSeries series = sample([](double t) { return std::sin(t); }, 0, 200, 0.01);
  CHECK(slow_variation_score(series, {std::numbers::pi}) == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("sample includes the end point") {
  const SampledSeries s = sample([](double t) { return t; }, 0.0, 1.05, 0.1);
  CHECK(s.t.back() == 1.05);
  CHECK(s.t.size() == 12);
  CHECK_THROWS_AS(sample([](double t) { return 1.0 / (t - 0.5); }, 0.0, 1.0, 0.5), NumericalError);
}
