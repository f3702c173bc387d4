#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "calfoa/rng.hpp"

namespace calfoa {

/// Square grayscale glyph bitmap, values in [0,1].
struct Glyph {
  int size = 0;
  std::vector<double> pixels;
};

/// Procedural digit-like glyph (digit in 0..9) with seeded stroke jitter.
Glyph render_digit(int digit, int size, Rng& rng);

/// Loads every image of an MNIST idx3-ubyte file.
std::vector<Glyph> load_idx_images(const std::string& path);

}  // namespace calfoa
