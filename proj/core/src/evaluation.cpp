#include "calfoa/evaluation.hpp"

#include <algorithm>

#include "calfoa/error.hpp"
#include "calfoa/network.hpp"

namespace calfoa {

MIAccumulator::MIAccumulator(int symbols) : symbols_(symbols), p_sum_(static_cast<std::size_t>(symbols), 0.0) {
  if (symbols < 2) throw Error("MI accumulator: need at least two symbols");
}

void MIAccumulator::add(double h_cond, const std::vector<double>& avg) {
  if (static_cast<int>(avg.size()) != symbols_) throw Error("MI accumulator: symbol count mismatch");
  h_cond_sum_ += h_cond;
  for (int j = 0; j < symbols_; ++j) p_sum_[j] += avg[j];
  ++frames_;
}

void MIAccumulator::add(const SupportOutputs& outputs) { add(conditional_entropy(outputs), avg_activation(outputs)); }

void MIAccumulator::restore(double h_cond_sum, std::vector<double> p_sum, std::size_t frames) {
  if (static_cast<int>(p_sum.size()) != symbols_) throw Error("MI accumulator: symbol count mismatch");
  h_cond_sum_ = h_cond_sum;
  p_sum_ = std::move(p_sum);
  frames_ = frames;
}

MIReport MIAccumulator::report(std::size_t t1, std::size_t t2, DensityKind density) const {
  if (frames_ == 0) throw Error("MI report over an empty segment");
  MIReport r;
  r.t1 = t1;
  r.t2 = t2;
  r.density = density;
  r.frames_evaluated = frames_;
  const double inv = 1.0 / static_cast<double>(frames_);
  r.h_cond = h_cond_sum_ * inv;
  std::vector<double> P(p_sum_);
  for (double& v : P) v *= inv;
  r.h_out = output_entropy(P);
  r.mi = r.h_out - r.h_cond;
  return r;
}

std::vector<ScanpathSample> replay_gaze(const FrameStream& stream, std::size_t t1, std::size_t t2,
                                        const GazeParams& gaze) {
  GazeTracker tracker(gaze, stream.width(), stream.height());
  std::vector<ScanpathSample> path;
  path.reserve(t2 - t1);
  Frame prev;
  for (std::size_t t = t1; t < t2; ++t) {
    Frame f = stream.frame(t);
    const GazeState& s = tracker.advance(f, t > t1 ? &prev : nullptr);
    path.push_back({t, s.position, s.velocity});
    prev = std::move(f);
  }
  return path;
}

namespace {

void check_segment(const ParamVector& params, const FrameStream& stream, std::size_t t1, std::size_t t2) {
  if (t2 <= t1) throw Error("evaluation: empty test segment");
  if (t2 > stream.total_frames()) throw Error("evaluation: test segment exceeds the stream");
  if (params.layout.arch().layers.front().in_channels != 1) throw Error("evaluation: network must take one channel");
}

GazeState gaze_at(const ScanpathSample& s, int width, int height) {
  GazeState g;
  g.position = s.position;
  g.velocity = s.velocity;
  g.width = width;
  g.height = height;
  return g;
}

// Full-frame outputs, recomputed only when the frame content changes.
class OutputCache {
 public:
  explicit OutputCache(const ParamVector& params) : params_(params) {}
  const OutputDistribution& get(const Frame& f) {
    if (!valid_ || !f.same_pixels(frame_)) {
      out_ = forward(params_, full_frame(f));
      frame_ = f;
      valid_ = true;
    }
    return out_;
  }

 private:
  const ParamVector& params_;
  Frame frame_;
  OutputDistribution out_;
  bool valid_ = false;
};

}  // namespace

MIReport evaluate_mi(const ParamVector& params, const FrameStream& stream, std::size_t t1, std::size_t t2,
                     const DensitySpec& density, const std::vector<ScanpathSample>* path) {
  check_segment(params, stream, t1, t2);
  density.validate();
  if (density.needs_gaze() && (!path || path->size() != t2 - t1))
    throw Error("evaluation: FOA densities need a gaze sample per test frame");
  const int W = stream.width(), H = stream.height();
  const int rf = receptive_field(params.layout.arch());
  MIAccumulator acc(params.layout.arch().symbols());
  OutputCache cache(params);
  for (std::size_t t = t1; t < t2; ++t) {
    const Frame f = stream.frame(t);
    GazeState g;
    if (density.needs_gaze()) g = gaze_at((*path)[t - t1], W, H);
    const DensitySupport sup = density_support(density, density.needs_gaze() ? &g : nullptr, W, H, t);
    if (density.kind == DensityKind::UNI) {
      acc.add(gather_support(cache.get(f), sup, 0, 0));
    } else {
      const Patch patch = support_patch(f, sup, rf);
      acc.add(gather_support(forward(params, patch), sup, patch.origin_x, patch.origin_y));
    }
  }
  return acc.report(t1, t2, density.kind);
}

std::vector<MIReport> cross_density_table(const ParamVector& params, const FrameStream& stream, std::size_t t1,
                                          std::size_t t2, const GazeParams& gaze, double window_fraction) {
  check_segment(params, stream, t1, t2);
  const std::vector<ScanpathSample> path = replay_gaze(stream, t1, t2, gaze);
  const int W = stream.width(), H = stream.height();
  const DensityKind kinds[3] = {DensityKind::UNI, DensityKind::FOA, DensityKind::FOAW};
  std::vector<MIAccumulator> acc(3, MIAccumulator(params.layout.arch().symbols()));
  OutputCache cache(params);
  for (std::size_t t = t1; t < t2; ++t) {
    const Frame f = stream.frame(t);
    const OutputDistribution& out = cache.get(f);
    const GazeState g = gaze_at(path[t - t1], W, H);
    for (int k = 0; k < 3; ++k) {
      DensitySpec spec;
      spec.kind = kinds[k];
      spec.window_fraction = window_fraction;
      acc[k].add(gather_support(out, density_support(spec, &g, W, H, t), 0, 0));
    }
  }
  std::vector<MIReport> rows;
  for (int k = 0; k < 3; ++k) rows.push_back(acc[k].report(t1, t2, kinds[k]));
  return rows;
}

}  // namespace calfoa
