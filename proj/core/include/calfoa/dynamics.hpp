#pragma once

#include <cstddef>
#include <vector>

#include "calfoa/architecture.hpp"

namespace calfoa {

struct CalParams {
  double alpha = 0.01;
  double beta = 0.1;
  double k = 1e-8;
  double dt = 0.05;

  /// Throws ConfigError unless alpha > 0, beta, k >= 0 and dt < 2 alpha / beta.
  void validate() const;
};

/// w(t), dw/dt(t) of the second-order law  alpha w'' + beta w' + k w + grad U = 0.
struct DynamicsState {
  ParamVector w;
  std::vector<double> v;
  CalParams params;
  std::size_t step = 0;

  DynamicsState() = default;
  /// v starts at zero.
  DynamicsState(ParamVector w0, const CalParams& p);
};

/// Semi-implicit Euler: v += dt (-beta v - k w - gradU) / alpha; w += dt v.
/// Throws NumericalError (with the step index) on a non-finite result.
void cal_step(DynamicsState& state, const std::vector<double>& grad_u);

/// max_i |k w_i + gradU_i|.
double stationary_residual(const DynamicsState& state, const std::vector<double>& grad_u);

}  // namespace calfoa
