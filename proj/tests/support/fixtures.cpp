#include "fixtures.hpp"

#include <algorithm>
#include <cmath>

namespace calfoa::testing {

Architecture tiny_arch() {
  Architecture a{"T", {{3, 1, 4, Activation::Tanh}, {3, 4, 3, Activation::Softmax}}};
  a.validate();
  return a;
}

Frame random_frame(int width, int height, std::uint64_t seed) {
  Frame f;
  f.width = width;
  f.height = height;
  f.pixels.resize(static_cast<std::size_t>(width) * height);
  Rng rng = Rng::derive(seed, "test.frame");
  for (double& p : f.pixels) p = rng.uniform();
  return f;
}

ParamVector random_params(const Architecture& arch, std::uint64_t seed, double scale) {
  ParamVector p{ParamLayout(arch), {}};
  p.values.resize(p.layout.size());
  Rng rng = Rng::derive(seed, "test.params");
  for (double& v : p.values) v = rng.uniform(-scale, scale);
  return p;
}

double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double den = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / den);
  }
  return worst;
}

std::vector<double> numeric_gradient(const ParamVector& params, const Frame& frame, const DensitySupport& support,
                                     const EntropyState& state, double step) {
  std::vector<double> g(params.size());
  ParamVector p = params;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = p.values[i];
    p.values[i] = w + step;
    const double up = evaluate_potential(p, frame, support, state).potential.U;
    p.values[i] = w - step;
    const double down = evaluate_potential(p, frame, support, state).potential.U;
    p.values[i] = w;
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

EntropyState random_state(Criterion c, int symbols, std::uint64_t seed) {
  ObjectiveParams op;
  op.lambda_c = 1.3;
  op.lambda_e = 2.1;
  op.lambda_s = 0.7;
  op.zeta_s = 0.6;
  op.dt_s = 0.5;
  EntropyState s = make_entropy_state(c, op, symbols);
  Rng rng = Rng::derive(seed, "test.state");
  for (auto* v : {&s.nu, &s.s, &s.s_prev}) {
    double total = 0.0;
    for (double& x : *v) total += (x = 0.2 + rng.uniform());
    for (double& x : *v) x /= total;
  }
  return s;
}

}  // namespace calfoa::testing
