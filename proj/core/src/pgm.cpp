#include "calfoa/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "calfoa/error.hpp"

namespace calfoa {
namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long read_uint(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    long v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000'000L) throw ParseError(std::string("PGM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PGM: expected ") + what, start);
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Frame read_pgm(std::span<const std::uint8_t> bytes, std::size_t index) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw ParseError("PGM: bad magic, expected P5", 0);
  }
  HeaderReader r(bytes.subspan(2));
  const long w = r.read_uint("width");
  const long h = r.read_uint("height");
  const long maxval = r.read_uint("maxval");
  if (w < 1 || h < 1) throw ParseError("PGM: dimensions must be positive", 2 + r.pos());
  if (maxval != 255) throw ParseError("PGM: only maxval 255 is supported", 2 + r.pos());
  // exactly one whitespace byte separates the header from the raster
  if (2 + r.pos() >= bytes.size() || !is_space(bytes[2 + r.pos()])) {
    throw ParseError("PGM: missing whitespace after header", 2 + r.pos());
  }
  const std::size_t data = 2 + r.pos() + 1;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - data < need) {
    throw ParseError("PGM: truncated payload, expected " + std::to_string(need) + " bytes", bytes.size());
  }
  std::vector<double> px(need);
  for (std::size_t i = 0; i < need; ++i) px[i] = bytes[data + i] / 255.0;
  return Frame(static_cast<int>(w), static_cast<int>(h), index, std::move(px));
}

std::vector<std::uint8_t> write_pgm(const Frame& frame) {
  const std::string header =
      "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + frame.pixels.size());
  for (double p : frame.pixels) {
    const double c = std::clamp(p, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Frame read_pgm_file(const std::filesystem::path& path, std::size_t index) {
  const auto bytes = read_file_bytes(path);
  try {
    return read_pgm(bytes, index);
  } catch (const ParseError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_pgm_file(const std::filesystem::path& path, const Frame& frame) {
  write_file_bytes(path, write_pgm(frame));
}

}  // namespace calfoa
