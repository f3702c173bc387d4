#pragma once

#include <cstdint>
#include <vector>

#include "calfoa/architecture.hpp"
#include "calfoa/attention.hpp"
#include "calfoa/frame.hpp"
#include "calfoa/objective.hpp"
#include "calfoa/rng.hpp"

namespace calfoa::testing {

/// Two-layer m=3 network used by the gradient checks.
Architecture tiny_arch();

/// Frame with uniform random pixels in [0,1).
Frame random_frame(int width, int height, std::uint64_t seed);

/// Params with weights and biases uniform in [-scale, scale].
ParamVector random_params(const Architecture& arch, std::uint64_t seed, double scale);

/// Largest |a-b| / max(|a|,|b|, floor) over the vectors.
double max_relative_error(const std::vector<double>& a, const std::vector<double>& b, double floor);

/// Central finite differences of U with the entropy history frozen.
std::vector<double> numeric_gradient(const ParamVector& params, const Frame& frame, const DensitySupport& support,
                                     const EntropyState& state, double step);

/// Entropy state with random simplex history vectors.
EntropyState random_state(Criterion c, int symbols, std::uint64_t seed);

}  // namespace calfoa::testing
