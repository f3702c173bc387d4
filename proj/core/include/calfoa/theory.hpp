#pragma once

#include <string>
#include <vector>

namespace calfoa {

/// Target c(t) of the quadratic potential U = q/2 |w - c(t)|^2.
struct Target {
  enum class Kind { Piecewise, Sinusoid };
  Kind kind = Kind::Piecewise;
  /// Piecewise: pieces[i] is the constant vector on [i*tau, (i+1)*tau);
  /// the last piece extends to the horizon.
  std::vector<std::vector<double>> pieces;
  double tau = 1.0;
  /// Sinusoid: c_d(t) = offset_d + amplitude_d sin(omega t).
  std::vector<double> offset;
  std::vector<double> amplitude;
  double omega = 1.0;

  static Target constant(std::vector<double> c);
  std::vector<double> at(double t) const;
};

struct ToyProblem {
  std::string name;
  int dimension = 1;
  double alpha = 1.0;
  double beta = 0.0;
  double k = 0.0;
  double q = 1.0;
  double eps = 0.1;
  double horizon = 1.0;
  int steps_per_unit = 2000;  // grid steps per unit time
  std::vector<double> w0;
  std::vector<double> w1;
  Target target;

  void validate() const;
  int steps() const;  // over the whole horizon
};

/// Samples on a uniform grid, row-major [time][dimension].
struct Trajectory {
  int dimension = 0;
  std::vector<double> t;
  std::vector<double> w;
  std::vector<double> dw;

  std::size_t size() const { return t.size(); }
  double value(std::size_t i, int d) const { return w[i * dimension + d]; }
  double deriv(std::size_t i, int d) const { return dw[i * dimension + d]; }
};

struct BvpDiagnostics {
  double residual = 0.0;  // max relative residual of the banded systems
  double rcond = 1.0;     // min reciprocal condition estimate
  int intervals = 0;
};

/// Solves the epsilon-regularized fourth-order boundary-value problem.
/// A piecewise target is solved interval by interval, each interval starting from
/// the value and derivative at the end of the previous one. Derivative samples use
/// second-order finite differences.
Trajectory solve_eps_bvp(const ToyProblem& problem, BvpDiagnostics* diagnostics = nullptr);

/// RK4 on the same grid for alpha w'' + beta w' + k w + q (w - c) = 0.
Trajectory solve_limit_ode(const ToyProblem& problem);

struct L2Distance {
  double values = 0.0;
  double derivs = 0.0;
};

/// Trapezoidal L2 distances of values and first derivatives on a common grid.
L2Distance h1_distance(const Trajectory& a, const Trajectory& b);

struct SweepRow {
  double eps = 0.0;
  L2Distance distance;
  double residual = 0.0;
};

struct SweepResult {
  std::string problem;
  std::vector<SweepRow> rows;

  bool monotone() const;          // both distances strictly decreasing
  double value_ratio() const;     // last / first
  double deriv_ratio() const;
  double max_residual() const;
};

SweepResult sweep(const ToyProblem& problem, const std::vector<double>& eps_values);

std::vector<double> default_eps_values();
/// Quadratic toy set: undamped 1 - cos t, damped, overdamped, pure damping,
/// and a two-dimensional piecewise-constant target.
std::vector<ToyProblem> default_toy_set();

/// `eps,l2_values,l2_derivs` rows.
std::string sweep_csv(const SweepResult& result);

}  // namespace calfoa
