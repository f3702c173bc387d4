#include <gtest/gtest.h>

#include <filesystem>

#include "calfoa/error.hpp"
#include "calfoa/frame.hpp"
#include "calfoa/pgm.hpp"
#include "calfoa/rng.hpp"

namespace calfoa {
namespace {

std::vector<std::uint8_t> bytes(const std::string& header, std::vector<std::uint8_t> raster) {
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

TEST(Pgm, ScalesBytesToUnitRange) {
  const Frame f = read_pgm(bytes("P5\n2 1\n255\n", {0, 255}));
  ASSERT_EQ(f.width, 2);
  ASSERT_EQ(f.height, 1);
  EXPECT_EQ(f.pixels[0], 0.0);
  EXPECT_EQ(f.pixels[1], 1.0);
}

TEST(Pgm, SkipsComments) {
  const Frame f = read_pgm(bytes("P5\n# made by hand\n1 1 # size\n255\n", {51}));
  EXPECT_DOUBLE_EQ(f.pixels[0], 0.2);
}

TEST(Pgm, TruncatedPayloadReportsOffset) {
  try {
    read_pgm(bytes("P5\n2 2\n255\n", {1, 2, 3}));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 14u);
  }
}

TEST(Pgm, BadMagicAtOffsetZero) {
  try {
    read_pgm(bytes("P2\n1 1\n255\n", {0}));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Pgm, RejectsOtherMaxval) { EXPECT_THROW(read_pgm(bytes("P5\n1 1\n15\n", {3})), ParseError); }
TEST(Pgm, RejectsZeroDimensions) { EXPECT_THROW(read_pgm(bytes("P5\n0 1\n255\n", {})), ParseError); }

TEST(Pgm, RoundTripIsCanonical) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint8_t> raster(25);
    for (auto& b : raster) b = static_cast<std::uint8_t>(rng.below(256));
    const auto canonical = bytes("P5\n5 5\n255\n", raster);
    const auto commented = bytes("P5 # x\n5\t5\n255\n", raster);
    EXPECT_EQ(write_pgm(read_pgm(commented)), canonical);
    EXPECT_EQ(write_pgm(read_pgm(canonical)), canonical);
  }
}

TEST(Pgm, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "calfoa_pgm_roundtrip.pgm";
  Frame f(3, 2, 0, {0, 1, 0.2, 0.4, 0.6, 0.8});
  write_pgm_file(path, f);
  const Frame g = read_pgm_file(path);
  EXPECT_TRUE(f.same_pixels(g));
  std::filesystem::remove(path);
}

TEST(Frame, ValidateRange) {
  Frame f(2, 2, 0, {0, 0.5, 1, 0.25});
  EXPECT_NO_THROW(f.validate());
  f.pixels[1] = 1.5;
  EXPECT_THROW(f.validate(), Error);
  EXPECT_THROW((Frame{2, 2, 0, {0, 0, 0}}), Error);
}

TEST(Frame, QuantizeToEightBit) {
  Frame f(1, 2, 0, {0.5, 0.1});
  quantize_8bit(f);
  EXPECT_EQ(f.pixels[0], 128 / 255.0);
  EXPECT_EQ(f.pixels[1], 26 / 255.0);
}

TEST(PixelRect, Intersect) {
  const PixelRect a{0, 0, 10, 10}, b{5, -3, 20, 4};
  EXPECT_EQ(a.intersect(b), (PixelRect{5, 0, 10, 4}));
  EXPECT_TRUE(a.intersect({20, 20, 30, 30}).empty());
}

}  // namespace
}  // namespace calfoa
