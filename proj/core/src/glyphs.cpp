#include "calfoa/glyphs.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "calfoa/error.hpp"
#include "calfoa/pgm.hpp"

namespace calfoa {
namespace {

struct Pt {
  double x, y;
};
using Polyline = std::vector<Pt>;

Polyline ellipse(double cx, double cy, double rx, double ry, int n = 16) {
  Polyline p;
  for (int i = 0; i <= n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    p.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return p;
}

// Strokes live in the unit square, x to the right, y downwards.
std::vector<Polyline> digit_strokes(int digit) {
  constexpr double L = 0.3, R = 0.7, T = 0.15, M = 0.5, B = 0.85;
  switch (digit) {
    case 0: return {ellipse(0.5, 0.5, 0.2, 0.33)};
    case 1: return {{{0.5, T}, {0.5, B}}, {{0.38, 0.27}, {0.5, T}}};
    case 2: return {{{L, 0.28}, {0.4, T}, {0.6, T}, {R, 0.28}, {R, 0.4}, {L, B}, {R, B}}};
    case 3: return {{{L, T}, {R, T}, {0.5, M}, {R, 0.62}, {R, 0.75}, {0.6, B}, {L, B}}};
    case 4: return {{{0.6, B}, {0.6, T}, {L, 0.65}, {R + 0.05, 0.65}}};
    case 5: return {{{R, T}, {L, T}, {L, M}, {0.6, M}, {R, 0.62}, {R, 0.75}, {0.6, B}, {L, B}}};
    case 6:
      return {{{0.65, T}, {0.4, 0.35}, {L, 0.6}, {L, 0.75}, {0.45, B}, {0.6, B}, {R, 0.72}, {0.6, 0.55},
               {0.4, 0.55}, {L, 0.65}}};
    case 7: return {{{L, T}, {R, T}, {0.45, B}}};
    case 8: return {ellipse(0.5, 0.32, 0.17, 0.17), ellipse(0.5, 0.67, 0.2, 0.18)};
    case 9: return {ellipse(0.5, 0.33, 0.17, 0.17), {{0.67, 0.33}, {0.6, B}}};
    default: throw Error("digit out of range");
  }
}

double segment_distance(Pt p, Pt a, Pt b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - p.x, ey = a.y + t * dy - p.y;
  return std::sqrt(ex * ex + ey * ey);
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) | (std::uint32_t(b[off + 2]) << 8) |
         std::uint32_t(b[off + 3]);
}

}  // namespace

Glyph render_digit(int digit, int size, Rng& rng) {
  auto strokes = digit_strokes(digit);
  for (auto& line : strokes) {
    for (auto& p : line) {
      p.x += rng.uniform(-0.04, 0.04);
      p.y += rng.uniform(-0.04, 0.04);
    }
  }
  const double half_width = 0.045 * size;  // pen core, pixels
  const double falloff = 0.03 * size;
  Glyph g{size, std::vector<double>(static_cast<std::size_t>(size) * size, 0.0)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Pt p{(x + 0.5) / size, (y + 0.5) / size};
      double d = 1e9;
      for (const auto& line : strokes) {
        for (std::size_t i = 1; i < line.size(); ++i) d = std::min(d, segment_distance(p, line[i - 1], line[i]));
      }
      d *= size;
      double v = d <= half_width ? 1.0 : std::exp(-(d - half_width) * (d - half_width) / (2 * falloff * falloff));
      if (v < 0.02) v = 0.0;
      g.pixels[static_cast<std::size_t>(y) * size + x] = v;
    }
  }
  return g;
}

std::vector<Glyph> load_idx_images(const std::string& path) {
  const auto b = read_file_bytes(path);
  if (b.size() < 16) throw ParseError("IDX: header truncated", b.size());
  if (be32(b, 0) != 0x00000803) throw ParseError("IDX: bad magic, expected 0x00000803", 0);
  const std::uint32_t count = be32(b, 4), rows = be32(b, 8), cols = be32(b, 12);
  if (rows != cols || rows == 0) throw ParseError("IDX: only square images are supported", 8);
  const std::size_t per = static_cast<std::size_t>(rows) * cols;
  if (b.size() < 16 + per * count) throw ParseError("IDX: truncated payload", b.size());
  std::vector<Glyph> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Glyph g{static_cast<int>(rows), std::vector<double>(per)};
    for (std::size_t k = 0; k < per; ++k) g.pixels[k] = b[16 + i * per + k] / 255.0;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace calfoa
