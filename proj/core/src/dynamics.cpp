#include "calfoa/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "calfoa/error.hpp"

namespace calfoa {

void CalParams::validate() const {
  if (!(alpha > 0)) throw ConfigError("dynamics: alpha must be > 0");
  if (!(beta >= 0) || !(k >= 0)) throw ConfigError("dynamics: beta and k must be >= 0");
  if (!(dt > 0)) throw ConfigError("dynamics: dt must be > 0");
  if (beta > 0 && !(dt < 2.0 * alpha / beta))
    throw ConfigError("dynamics: dt must be below 2*alpha/beta = " + std::to_string(2.0 * alpha / beta));
}

DynamicsState::DynamicsState(ParamVector w0, const CalParams& p)
    : w(std::move(w0)), v(w.values.size(), 0.0), params(p) {
  params.validate();
}

void cal_step(DynamicsState& state, const std::vector<double>& grad_u) {
  const std::size_t n = state.w.values.size();
  if (grad_u.size() != n || state.v.size() != n) throw Error("cal_step: gradient/state size mismatch");
  const CalParams& p = state.params;
  const double a = p.dt / p.alpha;
  double* w = state.w.values.data();
  double* v = state.v.data();
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] += a * (-p.beta * v[i] - p.k * w[i] - grad_u[i]);
    w[i] += p.dt * v[i];
    finite &= std::isfinite(w[i]) && std::isfinite(v[i]);
  }
  ++state.step;
  if (!finite) throw NumericalError("cal_step: non-finite weights at step " + std::to_string(state.step));
}

double stationary_residual(const DynamicsState& state, const std::vector<double>& grad_u) {
  if (grad_u.size() != state.w.values.size()) throw Error("stationary_residual: size mismatch");
  double r = 0.0;
  for (std::size_t i = 0; i < grad_u.size(); ++i)
    r = std::max(r, std::abs(state.params.k * state.w.values[i] + grad_u[i]));
  return r;
}

}  // namespace calfoa
