#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "calfoa/architecture.hpp"
#include "calfoa/attention.hpp"
#include "calfoa/objective.hpp"
#include "calfoa/scanpath_io.hpp"
#include "calfoa/stream.hpp"

namespace calfoa {

struct MIReport {
  std::size_t t1 = 0;
  std::size_t t2 = 0;
  DensityKind density = DensityKind::UNI;
  double h_cond = 0.0;
  double h_out = 0.0;
  double mi = 0.0;
  std::size_t frames_evaluated = 0;
};

/// Segment-level entropies with uniform per-frame weight: h_cond averages the
/// per-frame conditional entropies, h_out is the entropy of the averaged P̄.
class MIAccumulator {
 public:
  explicit MIAccumulator(int symbols);

  void add(const SupportOutputs& outputs);
  void add(double h_cond, const std::vector<double>& avg);
  std::size_t frames() const { return frames_; }
  /// Throws if no frame was added.
  MIReport report(std::size_t t1, std::size_t t2, DensityKind density) const;

  int symbols() const { return symbols_; }
  double h_cond_sum() const { return h_cond_sum_; }
  const std::vector<double>& p_sum() const { return p_sum_; }
  void restore(double h_cond_sum, std::vector<double> p_sum, std::size_t frames);

 private:
  int symbols_;
  double h_cond_sum_ = 0.0;
  std::vector<double> p_sum_;
  std::size_t frames_ = 0;
};

/// Test-time gaze trajectory integrated fresh over frames [t1, t2).
std::vector<ScanpathSample> replay_gaze(const FrameStream& stream, std::size_t t1, std::size_t t2,
                                        const GazeParams& gaze);

/// MI over frames [t1, t2) with frozen params. UNI evaluates the full frame,
/// other densities evaluate the support crop. `path` is required for FOA/FOAW.
MIReport evaluate_mi(const ParamVector& params, const FrameStream& stream, std::size_t t1, std::size_t t2,
                     const DensitySpec& density, const std::vector<ScanpathSample>* path);

/// UNI, FOA and FOAW rows sharing one gaze replay and one full-frame pass per frame.
std::vector<MIReport> cross_density_table(const ParamVector& params, const FrameStream& stream, std::size_t t1,
                                          std::size_t t2, const GazeParams& gaze, double window_fraction);

}  // namespace calfoa
