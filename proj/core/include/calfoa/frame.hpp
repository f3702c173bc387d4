#pragma once

#include <cstddef>
#include <vector>

namespace calfoa {

/// Half-open pixel rectangle [x0,x1) x [y0,y1).
struct PixelRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
  PixelRect intersect(const PixelRect& o) const;
  bool operator==(const PixelRect&) const = default;
};

/// One grayscale retina image, row-major, luminance in [0, 1].
struct Frame {
  int width = 0;
  int height = 0;
  std::size_t index = 0;
  std::vector<double> pixels;

  Frame() = default;
  Frame(int w, int h, std::size_t idx = 0);
  Frame(int w, int h, std::size_t idx, std::vector<double> px);

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  /// Throws calfoa::Error when dimensions or the [0,1] range are violated.
  void validate() const;
  bool same_pixels(const Frame& other) const;
};

/// Round every pixel to the nearest multiple of 1/255.
void quantize_8bit(Frame& frame);

}  // namespace calfoa
