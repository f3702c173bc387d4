#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "calfoa/dynamics.hpp"
#include "calfoa/error.hpp"
#include "calfoa/rng.hpp"

namespace calfoa {
namespace {

ParamVector raw(std::vector<double> values) {
  ParamVector p;
  p.values = std::move(values);
  return p;
}

// U = h/2 (w - c)^2 per coordinate.
std::vector<double> quadratic_grad(const std::vector<double>& w, const std::vector<double>& h,
                                   const std::vector<double>& c) {
  std::vector<double> g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) g[i] = h[i] * (w[i] - c[i]);
  return g;
}

TEST(CalStep, PureDampingFactor) {
  CalParams p;
  p.k = 0.0;
  DynamicsState s(raw({0.0}), p);
  s.v = {1.0};
  const double factor = 1.0 - p.dt * p.beta / p.alpha;
  for (int i = 1; i <= 5; ++i) {
    cal_step(s, {0.0});
    EXPECT_NEAR(s.v[0], std::pow(factor, i), 1e-15);
  }
}

TEST(CalStep, QuadraticSettlesOnTarget) {
  CalParams p;
  p.k = 0.0;
  DynamicsState s(raw({0.0}), p);
  const double c = 1.7;
  for (int i = 0; i < 2000; ++i) cal_step(s, {s.w.values[0] - c});
  EXPECT_LT(std::abs(s.w.values[0] - c), 1e-6);
}

TEST(CalStep, RegularizedStationaryPoint) {
  CalParams p;
  p.k = 0.5;
  DynamicsState s(raw({0.0}), p);
  const double c = 2.0;
  for (int i = 0; i < 2000; ++i) cal_step(s, {s.w.values[0] - c});
  EXPECT_LT(std::abs(s.w.values[0] - c / (1.0 + p.k)), 1e-6);
  EXPECT_LT(stationary_residual(s, {s.w.values[0] - c}), 1e-9);
}

TEST(StationaryResidual, TrivialCases) {
  CalParams p;
  DynamicsState s(raw({0.0, 0.0}), p);
  EXPECT_EQ(stationary_residual(s, {0.0, 0.0}), 0.0);
  p.k = 0.0;
  DynamicsState t(raw({3.0, -4.0}), p);
  EXPECT_EQ(stationary_residual(t, {0.0, 0.0}), 0.0);
}

// Energy 1/2 alpha |v|^2 + 1/2 k |w|^2 + U(w) never increases on a frozen quadratic
// whose curvatures stay inside the range where the discrete step is dissipative.
TEST(CalStep, LyapunovNonIncreasingOnFrozenQuadratic) {
  CalParams p;
  p.k = 1e-3;
  const std::size_t n = 16;
  Rng rng(42);
  std::vector<double> h(n), c(n), w0(n);
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = rng.uniform(0.01, 1.5);
    c[i] = rng.uniform(-2.0, 2.0);
    w0[i] = rng.uniform(-2.0, 2.0);
  }
  DynamicsState s(raw(w0), p);
  auto energy = [&] {
    double e = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = s.w.values[i];
      e += 0.5 * p.alpha * s.v[i] * s.v[i] + 0.5 * p.k * w * w + 0.5 * h[i] * (w - c[i]) * (w - c[i]);
    }
    return e;
  };
  double prev = energy();
  for (int step = 0; step < 10000; ++step) {
    cal_step(s, quadratic_grad(s.w.values, h, c));
    const double e = energy();
    ASSERT_LE(e, prev + 1e-12) << "step " << step;
    prev = e;
  }
}

TEST(CalParams, StabilityGuard) {
  CalParams p;
  p.dt = 0.2;  // 2 alpha / beta
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_THROW(DynamicsState(raw({0.0}), p), ConfigError);
  p.dt = 0.19;
  EXPECT_NO_THROW(p.validate());
  p.alpha = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(CalStep, NonFiniteGradientReportsStep) {
  DynamicsState s(raw({0.0}), CalParams{});
  cal_step(s, {0.0});
  try {
    cal_step(s, {std::numeric_limits<double>::quiet_NaN()});
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos);
  }
}

TEST(CalStep, DeterministicTrajectories) {
  auto run = [] {
    DynamicsState s(raw({0.3, -0.1, 2.0}), CalParams{});
    const std::vector<double> h{0.4, 1.1, 0.9}, c{1.0, 0.5, -1.0};
    for (int i = 0; i < 500; ++i) cal_step(s, quadratic_grad(s.w.values, h, c));
    return std::pair{s.w.values, s.v};
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace calfoa
