#include <gtest/gtest.h>

#include <cmath>

#include "calfoa/error.hpp"
#include "calfoa/evaluation.hpp"
#include "calfoa/network.hpp"
#include "calfoa/objective.hpp"
#include "calfoa/stream.hpp"
#include "fixtures.hpp"

namespace calfoa {
namespace {

std::unique_ptr<FrameStream> blob_stream(std::size_t frames) {
  StreamSpec spec;
  spec.kind = StreamKind::MovingBlobs;
  spec.width = 48;
  spec.height = 40;
  spec.total_frames = frames;
  spec.seed = 5;
  spec.blobs = 2;
  return open_stream(spec);
}

GazeParams test_gaze() {
  GazeParams g;
  g.gravity = 2000.0;
  return g;
}

TEST(MIAccumulator, HandTwoPixelCase) {
  SupportOutputs o;
  o.symbols = 2;
  o.probs = {1.0, 0.0, 0.5, 0.5};
  o.weights = {0.5, 0.5};
  MIAccumulator acc(2);
  acc.add(o);
  const auto r = acc.report(0, 1, DensityKind::UNI);
  EXPECT_NEAR(r.h_cond, 0.5, 1e-15);
  EXPECT_NEAR(r.h_out, 0.811278124459133, 1e-12);
  EXPECT_NEAR(r.mi, 0.311278124459133, 1e-12);
}

TEST(MIAccumulator, OneHotAcrossFramesIsMaximal) {
  MIAccumulator acc(2);
  acc.add(0.0, {1.0, 0.0});
  acc.add(0.0, {0.0, 1.0});
  const auto r = acc.report(0, 2, DensityKind::FOA);
  EXPECT_NEAR(r.mi, 1.0, 1e-12);
  EXPECT_EQ(r.frames_evaluated, 2u);
}

TEST(MIAccumulator, EmptyReportThrows) {
  MIAccumulator acc(3);
  EXPECT_THROW(acc.report(0, 0, DensityKind::UNI), Error);
}

TEST(EvaluateMI, ZeroParamsGiveZero) {
  const auto stream = blob_stream(4);
  const auto params = zero_params(Architecture::small());
  const auto r = evaluate_mi(params, *stream, 0, 4, DensitySpec{DensityKind::UNI}, nullptr);
  EXPECT_NEAR(r.mi, 0.0, 1e-9);
  EXPECT_NEAR(r.h_cond, 1.0, 1e-12);
}

// The FOA row equals the full-frame output read at the gaze pixel of each frame.
TEST(EvaluateMI, FoaMatchesFullFrameRestriction) {
  const auto stream = blob_stream(6);
  const auto params = testing::random_params(Architecture::small(), 3, 0.2);
  const auto gaze = test_gaze();
  const auto path = replay_gaze(*stream, 0, 6, gaze);
  ASSERT_EQ(path.size(), 6u);
  const auto r = evaluate_mi(params, *stream, 0, 6, DensitySpec{DensityKind::FOA}, &path);

  MIAccumulator acc(10);
  for (std::size_t t = 0; t < 6; ++t) {
    const Frame f = stream->frame(t);
    const auto full = forward(params, full_frame(f));
    GazeState g = initial_gaze(gaze, f.width, f.height);
    g.position = path[t].position;
    const auto support = density_support(DensitySpec{DensityKind::FOA}, &g, f.width, f.height, t);
    acc.add(gather_support(full, support, 0, 0));
  }
  const auto expected = acc.report(0, 6, DensityKind::FOA);
  EXPECT_NEAR(r.h_cond, expected.h_cond, 1e-12);
  EXPECT_NEAR(r.h_out, expected.h_out, 1e-12);
  EXPECT_NEAR(r.mi, expected.mi, 1e-12);
}

TEST(EvaluateMI, CrossTableMatchesSingleRows) {
  const auto stream = blob_stream(5);
  const auto params = testing::random_params(Architecture::small(), 8, 0.2);
  const auto gaze = test_gaze();
  const auto table = cross_density_table(params, *stream, 1, 5, gaze, 0.15);
  ASSERT_EQ(table.size(), 3u);
  const auto path = replay_gaze(*stream, 1, 5, gaze);
  for (const auto& row : table) {
    DensitySpec spec{row.density, 0.15};
    const auto single = evaluate_mi(params, *stream, 1, 5, spec, &path);
    EXPECT_NEAR(row.mi, single.mi, 1e-12) << to_string(row.density);
    EXPECT_GE(row.h_out + 1e-9, row.h_cond);
  }
}

TEST(EvaluateMI, SideEffectFree) {
  const auto stream = blob_stream(4);
  const auto params = testing::random_params(Architecture::small(), 4, 0.2);
  const auto before = params.values;
  const auto a = cross_density_table(params, *stream, 0, 4, test_gaze(), 0.15);
  const auto b = cross_density_table(params, *stream, 0, 4, test_gaze(), 0.15);
  EXPECT_EQ(params.values, before);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].mi, b[i].mi);
}

TEST(EvaluateMI, GazeDensityNeedsPath) {
  const auto stream = blob_stream(2);
  const auto params = zero_params(Architecture::small());
  EXPECT_THROW(evaluate_mi(params, *stream, 0, 2, DensitySpec{DensityKind::FOA}, nullptr), Error);
}

// Over many random instances the segment MI stays in [0,1] and h_out >= h_cond.
TEST(MIAccumulator, IdentitiesOnRandomInstances) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + static_cast<int>(rng.below(6));
    MIAccumulator acc(m);
    const int frames = 1 + static_cast<int>(rng.below(4));
    for (int f = 0; f < frames; ++f) {
      SupportOutputs o;
      o.symbols = m;
      const int n = 1 + static_cast<int>(rng.below(5));
      double wsum = 0.0;
      for (int e = 0; e < n; ++e) {
        std::vector<double> p(m);
        double s = 0.0;
        for (double& x : p) s += (x = std::pow(rng.uniform(), 4.0));
        for (double& x : p) o.probs.push_back(x / s);
        o.weights.push_back(rng.uniform(0.1, 1.0));
        wsum += o.weights.back();
      }
      for (double& w : o.weights) w /= wsum;
      acc.add(o);
    }
    const auto r = acc.report(0, frames, DensityKind::UNI);
    ASSERT_GE(r.mi, -1e-9);
    ASSERT_LE(r.mi, 1.0 + 1e-9);
    ASSERT_GE(r.h_out, r.h_cond - 1e-9);
  }
}

}  // namespace
}  // namespace calfoa
