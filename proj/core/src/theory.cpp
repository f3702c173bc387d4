#include "calfoa/theory.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <limits>

#include "calfoa/error.hpp"

namespace calfoa {

Target Target::constant(std::vector<double> c) {
  Target t;
  t.pieces.push_back(std::move(c));
  t.tau = std::numeric_limits<double>::infinity();
  return t;
}

std::vector<double> Target::at(double t) const {
  if (kind == Kind::Sinusoid) {
    std::vector<double> c(offset.size());
    for (std::size_t d = 0; d < c.size(); ++d) c[d] = offset[d] + amplitude[d] * std::sin(omega * t);
    return c;
  }
  const double idx = std::floor(t / tau);
  const std::size_t i = idx <= 0 ? 0 : std::min(static_cast<std::size_t>(idx), pieces.size() - 1);
  return pieces[i];
}

void ToyProblem::validate() const {
  if (dimension < 1 || dimension > 4) throw ConfigError("toy problem: dimension must be in 1..4");
  if (!(alpha > 0) || !(beta >= 0) || !(k >= 0) || !(q >= 0)) throw ConfigError("toy problem: invalid coefficients");
  if (!(eps > 0)) throw ConfigError("toy problem: eps must be > 0");
  if (!(horizon > 0)) throw ConfigError("toy problem: horizon must be > 0");
  if (steps() < 64) throw ConfigError("toy problem: grid needs at least 64 steps");
  if (static_cast<int>(w0.size()) != dimension || static_cast<int>(w1.size()) != dimension)
    throw ConfigError("toy problem: boundary data dimension mismatch");
  if (target.kind == Target::Kind::Piecewise) {
    if (target.pieces.empty() || !(target.tau > 0)) throw ConfigError("toy problem: empty piecewise target");
    for (const auto& p : target.pieces)
      if (static_cast<int>(p.size()) != dimension) throw ConfigError("toy problem: target dimension mismatch");
  } else if (static_cast<int>(target.offset.size()) != dimension ||
             static_cast<int>(target.amplitude.size()) != dimension) {
    throw ConfigError("toy problem: target dimension mismatch");
  }
}

int ToyProblem::steps() const { return static_cast<int>(std::lround(horizon * steps_per_unit)); }

namespace {

constexpr int kKl = 4;
constexpr int kKu = 2;
constexpr int kLdab = 2 * kKl + kKu + 1;

/// Column-major LAPACK band storage of an n x n matrix.
struct Band {
  int n;
  std::vector<double> ab;
  explicit Band(int n_) : n(n_), ab(static_cast<std::size_t>(kLdab) * n_, 0.0) {}
  double& at(int i, int j) { return ab[static_cast<std::size_t>(kKl + kKu + i - j) + static_cast<std::size_t>(j) * kLdab]; }
  double get(int i, int j) const {
    return ab[static_cast<std::size_t>(kKl + kKu + i - j) + static_cast<std::size_t>(j) * kLdab];
  }
  int lo(int i) const { return std::max(0, i - kKl); }
  int hi(int i) const { return std::min(n - 1, i + kKu); }
};

void second_order_gradient(const double* f, double h, int n, int stride, double* out) {
  auto F = [&](int i) { return f[static_cast<std::size_t>(i) * stride]; };
  out[0] = (-3 * F(0) + 4 * F(1) - F(2)) / (2 * h);
  for (int i = 1; i < n - 1; ++i) out[static_cast<std::size_t>(i) * stride] = (F(i + 1) - F(i - 1)) / (2 * h);
  out[static_cast<std::size_t>(n - 1) * stride] = (3 * F(n - 1) - 4 * F(n - 2) + F(n - 3)) / (2 * h);
}

struct IntervalSolution {
  std::vector<double> w;  // [(N+1)][dim]
  double residual = 0.0;
  double rcond = 1.0;
};

// One fourth-order BVP on [t0, t0 + N h].
IntervalSolution solve_interval(const ToyProblem& p, double t0, int N, double h, const std::vector<double>& w0,
                                const std::vector<double>& w1) {
  if (N < 64) throw ConfigError("toy problem: fewer than 64 grid steps in an interval");
  const int n = N + 1;
  const int dim = p.dimension;
  const double e = p.eps;
  Band A(n);
  std::vector<double> b(static_cast<std::size_t>(n) * dim, 0.0);  // column-major [dim][n]
  auto B = [&](int i, int d) -> double& { return b[static_cast<std::size_t>(d) * n + i]; };

  A.at(0, 0) = 1.0;
  const double d1[3] = {-3, 4, -1};
  for (int j = 0; j < 3; ++j) A.at(1, j) = d1[j] / (2 * h);
  for (int d = 0; d < dim; ++d) {
    B(0, d) = w0[d];
    B(1, d) = w1[d];
  }

  const double c4 = e * e * p.alpha / std::pow(h, 4);
  const double c3 = -2 * e * p.alpha / (2 * std::pow(h, 3));
  const double c2 = (p.alpha - e * p.beta) / (h * h);
  const double c1 = p.beta / (2 * h);
  const double s4[5] = {1, -4, 6, -4, 1};
  const double s3[5] = {-1, 2, 0, -2, 1};
  const double s2[5] = {0, 1, -2, 1, 0};
  const double s1[5] = {0, -1, 0, 1, 0};
  for (int i = 2; i <= N - 2; ++i) {
    for (int j = 0; j < 5; ++j) A.at(i, i - 2 + j) = c4 * s4[j] + c3 * s3[j] + c2 * s2[j] + c1 * s1[j];
    A.at(i, i) += p.k + p.q;
    const std::vector<double> c = p.target.at(t0 + i * h);
    for (int d = 0; d < dim; ++d) B(i, d) = p.q * c[d];
  }
  // w''(T) = 0
  const double e2[4] = {-1, 4, -5, 2};
  for (int j = 0; j < 4; ++j) A.at(N - 1, N - 3 + j) = e2[j] / (h * h);
  // alpha eps w'''(T) - beta w'(T) = 0
  const double e3[5] = {3, -14, 24, -18, 5};
  for (int j = 0; j < 5; ++j) A.at(N, N - 4 + j) = p.alpha * e * e3[j] / (2 * h * h * h);
  const double e1[3] = {1, -4, 3};
  for (int j = 0; j < 3; ++j) A.at(N, N - 2 + j) -= p.beta * e1[j] / (2 * h);

  // row equilibration
  for (int i = 0; i < n; ++i) {
    double m = 0.0;
    for (int j = A.lo(i); j <= A.hi(i); ++j) m = std::max(m, std::abs(A.get(i, j)));
    const double s = 1.0 / m;
    for (int j = A.lo(i); j <= A.hi(i); ++j) A.at(i, j) *= s;
    for (int d = 0; d < dim; ++d) B(i, d) *= s;
  }
  const Band A0 = A;
  const std::vector<double> b0 = b;

  double anorm1 = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = std::max(0, j - kKu); i <= std::min(n - 1, j + kKl); ++i) s += std::abs(A.get(i, j));
    anorm1 = std::max(anorm1, s);
  }
  std::vector<lapack_int> ipiv(n);
  lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n, n, kKl, kKu, A.ab.data(), kLdab, ipiv.data());
  if (info > 0) throw SolverError("BVP matrix is singular", std::numeric_limits<double>::infinity());
  if (info < 0) throw SolverError("dgbtrf: invalid argument " + std::to_string(-info), 0.0);
  double rcond = 0.0;
  info = LAPACKE_dgbcon(LAPACK_COL_MAJOR, '1', n, kKl, kKu, A.ab.data(), kLdab, ipiv.data(), anorm1, &rcond);
  if (info != 0 || !(rcond > DBL_EPSILON))
    throw SolverError("BVP matrix is ill-conditioned", rcond > 0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
  info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n, kKl, kKu, dim, A.ab.data(), kLdab, ipiv.data(), b.data(), n);
  if (info != 0) throw SolverError("dgbtrs failed", 1.0 / rcond);

  IntervalSolution sol;
  sol.rcond = rcond;
  sol.w.resize(static_cast<std::size_t>(n) * dim);
  double anorm_inf = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = A0.lo(i); j <= A0.hi(i); ++j) s += std::abs(A0.get(i, j));
    anorm_inf = std::max(anorm_inf, s);
  }
  for (int d = 0; d < dim; ++d) {
    const double* x = b.data() + static_cast<std::size_t>(d) * n;
    const double* rhs = b0.data() + static_cast<std::size_t>(d) * n;
    double rmax = 0.0, xmax = 0.0, bmax = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = -rhs[i];
      for (int j = A0.lo(i); j <= A0.hi(i); ++j) r += A0.get(i, j) * x[j];
      rmax = std::max(rmax, std::abs(r));
      xmax = std::max(xmax, std::abs(x[i]));
      bmax = std::max(bmax, std::abs(rhs[i]));
      sol.w[static_cast<std::size_t>(i) * dim + d] = x[i];
    }
    const double denom = anorm_inf * xmax + bmax;
    sol.residual = std::max(sol.residual, denom > 0 ? rmax / denom : rmax);
  }
  return sol;
}

std::vector<int> interval_breaks(const ToyProblem& p, double h) {
  const int N = p.steps();
  std::vector<int> breaks{0};
  if (p.target.kind == Target::Kind::Piecewise && std::isfinite(p.target.tau)) {
    for (std::size_t i = 1; i < p.target.pieces.size(); ++i) {
      const int b = static_cast<int>(std::lround(static_cast<double>(i) * p.target.tau / h));
      if (b > breaks.back() && b < N) breaks.push_back(b);
    }
  }
  breaks.push_back(N);
  return breaks;
}

Trajectory make_grid(const ToyProblem& p) {
  Trajectory tr;
  tr.dimension = p.dimension;
  const int N = p.steps();
  const double h = p.horizon / N;
  tr.t.resize(N + 1);
  for (int i = 0; i <= N; ++i) tr.t[i] = i * h;
  tr.w.assign(static_cast<std::size_t>(N + 1) * p.dimension, 0.0);
  tr.dw.assign(tr.w.size(), 0.0);
  return tr;
}

}  // namespace

Trajectory solve_eps_bvp(const ToyProblem& problem, BvpDiagnostics* diagnostics) {
  problem.validate();
  Trajectory tr = make_grid(problem);
  const int dim = problem.dimension;
  const double h = problem.horizon / problem.steps();
  const std::vector<int> breaks = interval_breaks(problem, h);
  BvpDiagnostics diag;
  std::vector<double> a = problem.w0, b = problem.w1;
  for (std::size_t iv = 0; iv + 1 < breaks.size(); ++iv) {
    const int i0 = breaks[iv], N = breaks[iv + 1] - i0;
    const IntervalSolution sol = solve_interval(problem, i0 * h, N, h, a, b);
    diag.residual = std::max(diag.residual, sol.residual);
    diag.rcond = std::min(diag.rcond, sol.rcond);
    ++diag.intervals;
    std::vector<double> deriv(sol.w.size());
    for (int d = 0; d < dim; ++d) second_order_gradient(sol.w.data() + d, h, N + 1, dim, deriv.data() + d);
    // the first sample of later intervals duplicates the previous interval's last one
    for (int i = (iv == 0 ? 0 : 1); i <= N; ++i)
      for (int d = 0; d < dim; ++d) {
        const std::size_t src = static_cast<std::size_t>(i) * dim + d;
        const std::size_t dst = static_cast<std::size_t>(i0 + i) * dim + d;
        tr.w[dst] = sol.w[src];
        tr.dw[dst] = deriv[src];
      }
    for (int d = 0; d < dim; ++d) {
      a[d] = sol.w[static_cast<std::size_t>(N) * dim + d];
      b[d] = deriv[static_cast<std::size_t>(N) * dim + d];
    }
  }
  if (diagnostics) *diagnostics = diag;
  return tr;
}

Trajectory solve_limit_ode(const ToyProblem& problem) {
  problem.validate();
  Trajectory tr = make_grid(problem);
  const int dim = problem.dimension;
  const int N = problem.steps();
  const double h = problem.horizon / N;
  const ToyProblem& p = problem;
  const bool piecewise = p.target.kind == Target::Kind::Piecewise;
  for (int d = 0; d < dim; ++d) {
    double w = p.w0[d], v = p.w1[d];
    tr.w[d] = w;
    tr.dw[d] = v;
    for (int i = 0; i < N; ++i) {
      const double t = i * h;
      // a jump of a piecewise target is resolved at grid points; use the value inside the step
      const double cm = piecewise ? p.target.at(t + 0.5 * h)[d] : 0.0;
      auto c = [&](double s) { return piecewise ? cm : p.target.at(s)[d]; };
      auto acc = [&](double s, double ww, double vv) { return -(p.beta * vv + p.k * ww + p.q * (ww - c(s))) / p.alpha; };
      const double k1w = v, k1v = acc(t, w, v);
      const double k2w = v + 0.5 * h * k1v, k2v = acc(t + 0.5 * h, w + 0.5 * h * k1w, v + 0.5 * h * k1v);
      const double k3w = v + 0.5 * h * k2v, k3v = acc(t + 0.5 * h, w + 0.5 * h * k2w, v + 0.5 * h * k2v);
      const double k4w = v + h * k3v, k4v = acc(t + h, w + h * k3w, v + h * k3v);
      w += h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
      v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      tr.w[static_cast<std::size_t>(i + 1) * dim + d] = w;
      tr.dw[static_cast<std::size_t>(i + 1) * dim + d] = v;
    }
  }
  return tr;
}

L2Distance h1_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size() || a.dimension != b.dimension || a.size() < 2)
    throw Error("h1_distance: trajectories are not on a common grid");
  L2Distance r;
  const int dim = a.dimension;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    const double dt = a.t[i + 1] - a.t[i];
    double v0 = 0, v1 = 0, d0 = 0, d1 = 0;
    for (int d = 0; d < dim; ++d) {
      const double x0 = a.value(i, d) - b.value(i, d), x1 = a.value(i + 1, d) - b.value(i + 1, d);
      const double y0 = a.deriv(i, d) - b.deriv(i, d), y1 = a.deriv(i + 1, d) - b.deriv(i + 1, d);
      v0 += x0 * x0;
      v1 += x1 * x1;
      d0 += y0 * y0;
      d1 += y1 * y1;
    }
    r.values += 0.5 * dt * (v0 + v1);
    r.derivs += 0.5 * dt * (d0 + d1);
  }
  r.values = std::sqrt(r.values);
  r.derivs = std::sqrt(r.derivs);
  return r;
}

bool SweepResult::monotone() const {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].distance.values < rows[i - 1].distance.values) ||
        !(rows[i].distance.derivs < rows[i - 1].distance.derivs))
      return false;
  return true;
}

double SweepResult::value_ratio() const { return rows.back().distance.values / rows.front().distance.values; }
double SweepResult::deriv_ratio() const { return rows.back().distance.derivs / rows.front().distance.derivs; }

double SweepResult::max_residual() const {
  double r = 0.0;
  for (const auto& row : rows) r = std::max(r, row.residual);
  return r;
}

SweepResult sweep(const ToyProblem& problem, const std::vector<double>& eps_values) {
  if (eps_values.empty()) throw ConfigError("sweep: no eps values");
  SweepResult out;
  out.problem = problem.name;
  const Trajectory limit = solve_limit_ode(problem);
  for (double e : eps_values) {
    ToyProblem p = problem;
    p.eps = e;
    BvpDiagnostics diag;
    const Trajectory we = solve_eps_bvp(p, &diag);
    out.rows.push_back({e, h1_distance(we, limit), diag.residual});
  }
  return out;
}

std::vector<double> default_eps_values() { return {0.2, 0.1, 0.05, 0.025}; }

std::vector<ToyProblem> default_toy_set() {
  std::vector<ToyProblem> set;
  auto scalar = [](std::string name, double alpha, double beta, double k, double q, double c, double w1) {
    ToyProblem p;
    p.name = std::move(name);
    p.alpha = alpha;
    p.beta = beta;
    p.k = k;
    p.q = q;
    p.w0 = {0.0};
    p.w1 = {w1};
    p.target = Target::constant({c});
    return p;
  };
  set.push_back(scalar("undamped-cosine", 1.0, 0.0, 0.0, 1.0, 1.0, 0.0));
  set.push_back(scalar("damped", 1.0, 0.5, 0.1, 2.0, 1.0, 0.5));
  set.push_back(scalar("overdamped", 1.0, 4.0, 0.0, 1.0, 1.0, 0.0));
  set.push_back(scalar("pure-damping", 1.0, 1.0, 0.0, 0.0, 0.0, 1.0));

  ToyProblem pw;
  pw.name = "piecewise-2d";
  pw.dimension = 2;
  pw.alpha = 1.0;
  pw.beta = 0.5;
  pw.q = 1.0;
  pw.horizon = 3.0;
  pw.w0 = {0.0, 0.0};
  pw.w1 = {0.0, 0.0};
  pw.target.pieces = {{1.0, -1.0}, {-0.5, 0.5}, {0.3, 0.2}};
  pw.target.tau = 1.0;
  set.push_back(pw);
  return set;
}

std::string sweep_csv(const SweepResult& result) {
  std::string out = "eps,l2_values,l2_derivs\n";
  char line[128];
  for (const auto& r : result.rows) {
    std::snprintf(line, sizeof line, "%.6g,%.9e,%.9e\n", r.eps, r.distance.values, r.distance.derivs);
    out += line;
  }
  return out;
}

}  // namespace calfoa
