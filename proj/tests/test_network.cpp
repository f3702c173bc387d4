#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "calfoa/error.hpp"
#include "calfoa/network.hpp"
#include "fixtures.hpp"

namespace calfoa {
namespace {

using testing::max_relative_error;
using testing::random_frame;
using testing::random_params;
using testing::tiny_arch;

TEST(Architecture, SmallParameterCount) {
  const ParamLayout layout(Architecture::small());
  // 5*5*1*20+20 + 5*5*20*20+20 + 7*7*20*10+10
  EXPECT_EQ(layout.size(), 20350u);
}

TEST(Architecture, ReceptiveFields) {
  EXPECT_EQ(receptive_field(Architecture::small()), 15);
  EXPECT_EQ(receptive_field(Architecture::deeper()), 31);
  EXPECT_EQ(receptive_field(Architecture{"one", {{1, 1, 2, Activation::Softmax}}}), 1);
}

TEST(Architecture, DescriptorRoundTrip) {
  for (const auto& a : {Architecture::small(), Architecture::deeper(), Architecture::deeper_large()}) {
    EXPECT_EQ(Architecture::from_descriptor(a.descriptor()), a);
  }
  EXPECT_THROW(Architecture::from_descriptor("S|5,1,20"), Error);
  EXPECT_THROW(Architecture::by_name("XL"), ConfigError);
}

TEST(Architecture, RejectsChannelMismatch) {
  Architecture a{"bad", {{3, 1, 4, Activation::Tanh}, {3, 5, 3, Activation::Softmax}}};
  EXPECT_THROW(a.validate(), ConfigError);
}

TEST(InitParams, DeterministicAndBounded) {
  const auto a = init_params(Architecture::small(), 7);
  const auto b = init_params(Architecture::small(), 7);
  const auto c = init_params(Architecture::small(), 8);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  for (std::size_t l = 0; l < a.layout.layer_count(); ++l) {
    const auto& spec = a.layout.arch().layers[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.kernel * spec.kernel * spec.in_channels));
    for (double w : a.weights(l)) EXPECT_LE(std::abs(w), bound);
    for (double b0 : a.biases(l)) EXPECT_EQ(b0, 0.0);
  }
}

TEST(Forward, OutputsOnSimplex) {
  const auto params = init_params(Architecture::small(), 3);
  const auto frame = random_frame(20, 17, 11);
  const auto out = forward(params, full_frame(frame));
  ASSERT_EQ(out.symbols, 10);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      double s = 0.0;
      for (int j = 0; j < out.symbols; ++j) {
        EXPECT_GE(out.p(j, x, y), 0.0);
        s += out.p(j, x, y);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Forward, ZeroParamsUniform) {
  const auto out = forward(zero_params(Architecture::small()), full_frame(random_frame(9, 9, 1)));
  for (double p : out.probs) EXPECT_NEAR(p, 0.1, 1e-15);
}

// A receptive-field crop around a pixel reproduces the full-frame output there,
// including near the border where the crop leaves the retina.
TEST(Forward, CropMatchesFullFrame) {
  const auto arch = Architecture::small();
  const auto params = random_params(arch, 5, 0.3);
  const auto frame = random_frame(40, 30, 2);
  const auto full = forward(params, full_frame(frame));
  const int rf = receptive_field(arch);
  for (auto [cx, cy] : {std::pair{20, 15}, std::pair{0, 0}, std::pair{39, 29}, std::pair{3, 27}}) {
    const auto local = forward(params, crop(frame, cx, cy, rf));
    const int c = rf / 2;
    for (int j = 0; j < full.symbols; ++j) {
      EXPECT_NEAR(local.p(j, c, c), full.p(j, cx, cy), 1e-13) << cx << "," << cy;
    }
  }
}

// A sub-window reproduces the full-frame output once a pixel is at least rf/2 away
// from every window edge that is not also a retina edge.
TEST(Forward, RegionCropMatchesFullFrameInside) {
  const auto params = random_params(tiny_arch(), 9, 0.8);
  const auto frame = random_frame(16, 16, 4);
  const auto full = forward(params, full_frame(frame));
  const auto patch = crop_region(frame, PixelRect{-2, 5, 9, 13});
  ASSERT_EQ(patch.origin_x, 0);
  ASSERT_EQ(patch.width, 9);
  const auto local = forward(params, patch);
  const int margin = receptive_field(tiny_arch()) / 2;
  for (int y = margin; y < patch.height - margin; ++y) {
    for (int x = 0; x < patch.width - margin; ++x) {
      for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(local.p(j, x, y), full.p(j, x + patch.origin_x, y + patch.origin_y), 1e-14);
      }
    }
  }
}

TEST(Crop, ZeroOutsideRetina) {
  const auto frame = random_frame(8, 8, 1);
  const auto p = crop(frame, 0, 0, 5);
  EXPECT_EQ(p.width, 5);
  EXPECT_EQ(p.at(0, 0), 0.0);
  EXPECT_EQ(p.at(2, 2), frame.at(0, 0));
  EXPECT_EQ(p.at(4, 4), frame.at(2, 2));
  EXPECT_FALSE(p.fully_valid());
  EXPECT_TRUE(crop(frame, 4, 4, 5).fully_valid());
}

std::vector<double> fd_gradient_of_linear(const ParamVector& params, const Patch& patch,
                                          const std::vector<double>& g, const std::vector<std::size_t>& idx,
                                          double h) {
  std::vector<double> out;
  for (std::size_t i : idx) {
    ParamVector p = params;
    p.values[i] += h;
    const auto up = forward(p, patch);
    p.values[i] -= 2 * h;
    const auto dn = forward(p, patch);
    double d = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) d += g[k] * (up.probs[k] - dn.probs[k]);
    out.push_back(d / (2 * h));
  }
  return out;
}

void check_backward(const Architecture& arch, int size, std::size_t samples) {
  const auto params = random_params(arch, 21, 0.3);
  const auto patch = full_frame(random_frame(size, size, 22));
  ForwardCache cache;
  const auto out = forward(params, patch, &cache);
  Rng rng(23);
  std::vector<double> g(out.probs.size());
  for (double& x : g) x = rng.uniform(-1.0, 1.0);
  const auto grad = backward(params, cache, g);
  std::vector<std::size_t> idx;
  const std::size_t stride = std::max<std::size_t>(1, params.size() / samples);
  for (std::size_t i = 0; i < params.size(); i += stride) idx.push_back(i);
  for (std::size_t l = 0; l < params.layout.layer_count(); ++l) idx.push_back(params.layout.layer(l).bias);
  std::vector<double> analytic;
  for (std::size_t i : idx) analytic.push_back(grad[i]);
  const auto numeric = fd_gradient_of_linear(params, patch, g, idx, 1e-5);
  EXPECT_LT(max_relative_error(analytic, numeric, 1e-6), 1e-5) << arch.name;
}

TEST(Backward, MatchesFiniteDifferencesTiny) { check_backward(tiny_arch(), 16, 1000); }
TEST(Backward, MatchesFiniteDifferencesSmall) { check_backward(Architecture::small(), 12, 150); }
TEST(Backward, MatchesFiniteDifferencesDeeper) { check_backward(Architecture::deeper(), 8, 60); }

// On a 1x1 output the softmax Jacobian dp_i/dz_j = p_i (delta_ij - p_j) is visible
// through the last-layer biases.
TEST(Backward, SoftmaxJacobianOnSinglePixel) {
  Architecture arch{"one", {{1, 1, 3, Activation::Softmax}}};
  ParamVector params = zero_params(arch);
  params.values = {0.5, -0.2, 0.1, 0.3, 0.0, -0.4};
  Frame frame(1, 1);
  frame.at(0, 0) = 0.7;
  ForwardCache cache;
  const auto out = forward(params, full_frame(frame), &cache);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> g(3, 0.0);
    g[i] = 1.0;
    const auto grad = backward(params, cache, g);
    for (int j = 0; j < 3; ++j) {
      const double expected = out.probs[i] * ((i == j ? 1.0 : 0.0) - out.probs[j]);
      EXPECT_NEAR(grad[params.layout.layer(0).bias + j], expected, 1e-15);
    }
  }
}

TEST(Backward, RejectsStaleCache) {
  const auto params = random_params(tiny_arch(), 1, 0.5);
  ForwardCache cache;
  const auto out = forward(params, full_frame(random_frame(6, 6, 1)), &cache);
  auto changed = params;
  changed.values[0] += 1e-3;
  EXPECT_THROW(backward(changed, cache, std::vector<double>(out.probs.size(), 1.0)), Error);
}

}  // namespace
}  // namespace calfoa
