#include "calfoa/frame.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "calfoa/error.hpp"

namespace calfoa {

PixelRect PixelRect::intersect(const PixelRect& o) const {
  PixelRect r{std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
  if (r.empty()) return {};
  return r;
}

Frame::Frame(int w, int h, std::size_t idx)
    : width(w), height(h), index(idx),
      pixels(static_cast<std::size_t>(w > 0 ? w : 0) * static_cast<std::size_t>(h > 0 ? h : 0), 0.0) {
  validate();
}

Frame::Frame(int w, int h, std::size_t idx, std::vector<double> px)
    : width(w), height(h), index(idx), pixels(std::move(px)) {
  validate();
}

void Frame::validate() const {
  if (width < 1 || height < 1) {
    throw Error("frame " + std::to_string(index) + ": dimensions must be positive");
  }
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error("frame " + std::to_string(index) + ": pixel count does not match width*height");
  }
  for (double p : pixels) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error("frame " + std::to_string(index) + ": pixel value outside [0,1]");
    }
  }
}

bool Frame::same_pixels(const Frame& other) const {
  return width == other.width && height == other.height && pixels == other.pixels;
}

void quantize_8bit(Frame& frame) {
  for (double& p : frame.pixels) p = std::round(p * 255.0) / 255.0;
}

}  // namespace calfoa
