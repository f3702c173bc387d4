#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "calfoa/architecture.hpp"
#include "calfoa/frame.hpp"

namespace calfoa {

/// Input window cut from a frame. Patch pixel (px,py) corresponds to frame
/// pixel (origin_x + px, origin_y + py); `valid` marks the patch pixels that
/// lie inside the retina. Hidden activations outside `valid` are held at zero
/// so that patch outputs match full-frame outputs.
struct Patch {
  int width = 0;
  int height = 0;
  int origin_x = 0;
  int origin_y = 0;
  PixelRect valid;
  std::vector<double> pixels;

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool fully_valid() const { return valid == PixelRect{0, 0, width, height}; }
};

/// rf x rf patch centered at (cx, cy), zero where it leaves the retina.
Patch crop(const Frame& frame, int cx, int cy, int rf);
/// Frame sub-window `region` (frame coordinates), clipped to the retina.
Patch crop_region(const Frame& frame, const PixelRect& region);
Patch full_frame(const Frame& frame);

/// Per-pixel output probabilities, planar layout [symbol][y][x].
struct OutputDistribution {
  int symbols = 0;
  int width = 0;
  int height = 0;
  std::vector<double> probs;

  double p(int j, int x, int y) const {
    return probs[(static_cast<std::size_t>(j) * height + y) * width + x];
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(width) * height; }
};

/// Zero-haloed activations, channel-last. Pixel (x, y) owns `channel_stride`
/// consecutive values; the first `channels` are live and the rest stay zero.
/// Coordinates may reach `pad` pixels outside the interior.
struct PaddedActivations {
  int channels = 0;
  int channel_stride = 0;
  int height = 0;
  int width = 0;
  int pad = 0;
  std::vector<double> data;

  PaddedActivations() = default;
  PaddedActivations(int c, int h, int w, int p, int c_stride);
  PaddedActivations(const PaddedActivations&) = default;
  PaddedActivations(PaddedActivations&&) noexcept = default;
  PaddedActivations& operator=(const PaddedActivations&) = default;
  PaddedActivations& operator=(PaddedActivations&&) noexcept = default;
  ~PaddedActivations();  // hands large buffers back to a per-thread pool

  std::size_t row_stride() const { return static_cast<std::size_t>(width + 2 * pad) * channel_stride; }
  double* at(int x, int y) {
    return data.data() + static_cast<std::size_t>(y + pad) * row_stride() + static_cast<std::size_t>(x + pad) * channel_stride;
  }
  const double* at(int x, int y) const {
    return data.data() + static_cast<std::size_t>(y + pad) * row_stride() + static_cast<std::size_t>(x + pad) * channel_stride;
  }
};

/// Activations retained by forward() for backward().
struct ForwardCache {
  std::string descriptor;
  std::uint64_t param_fingerprint = 0;
  int width = 0;
  int height = 0;
  PixelRect valid;
  std::vector<PaddedActivations> inputs;  // input of layer l, padded by its kernel radius
  OutputDistribution output;
};

OutputDistribution forward(const ParamVector& params, const Patch& patch, ForwardCache* cache = nullptr);

/// Reverse-mode gradient of sum_{j,x} grad_probs[j,x] * p_j(x) with respect to
/// the parameters. grad_probs uses the OutputDistribution layout.
std::vector<double> backward(const ParamVector& params, const ForwardCache& cache,
                             const std::vector<double>& grad_probs);

}  // namespace calfoa
