#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "calfoa/error.hpp"
#include "calfoa/pgm.hpp"
#include "calfoa/stream.hpp"

namespace calfoa {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("calfoa_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

StreamSpec glyph_spec(std::uint64_t seed, std::size_t frames = 1000) {
  StreamSpec s;
  s.kind = StreamKind::SparseGlyphs;
  s.total_frames = frames;
  s.seed = seed;
  return s;
}

TEST(SparseGlyphs, StaticScene) {
  const auto st = open_stream(glyph_spec(7));
  EXPECT_EQ(st->source_length(), 1u);
  const Frame a = st->frame(0), b = st->frame(999);
  EXPECT_TRUE(a.same_pixels(b));
  EXPECT_EQ(b.index, 999u);
  EXPECT_THROW(st->frame(1000), Error);
}

TEST(SparseGlyphs, SeededDeterminism) {
  EXPECT_TRUE(sparse_glyph_scene(glyph_spec(7)).same_pixels(sparse_glyph_scene(glyph_spec(7))));
  EXPECT_FALSE(sparse_glyph_scene(glyph_spec(7)).same_pixels(sparse_glyph_scene(glyph_spec(8))));
}

TEST(SparseGlyphs, ZeroGlyphsIsBlack) {
  StreamSpec s = glyph_spec(1);
  s.glyphs = 0;
  for (double p : sparse_glyph_scene(s).pixels) ASSERT_EQ(p, 0.0);
}

TEST(SparseGlyphs, GlyphsDoNotOverlapAndStayInRange) {
  const Frame f = sparse_glyph_scene(glyph_spec(3));
  EXPECT_NO_THROW(f.validate());
  std::size_t lit = 0;
  for (double p : f.pixels) lit += p > 0;
  // ten glyphs of stroke width > 1 cover a few percent of the retina
  EXPECT_GT(lit, 10u * 40u);
  EXPECT_LT(lit, f.pixels.size() / 5);
}

TEST(SparseGlyphs, CrowdedFrameFailsPlacement) {
  StreamSpec s = glyph_spec(1);
  s.width = s.height = 60;
  s.glyphs = 10;
  EXPECT_THROW(sparse_glyph_scene(s), PlacementError);
}

TEST(MovingBlobs, ReflectingKinematics) {
  StreamSpec s;
  s.kind = StreamKind::MovingBlobs;
  s.width = 40;
  s.height = 30;
  s.total_frames = 100;
  s.explicit_blobs = {BlobSpec{10, 10, 1, 0, 3.0, 0.8}};
  double x, y;
  blob_center(s.explicit_blobs[0], s.width, s.height, 2, x, y);
  EXPECT_DOUBLE_EQ(x, 12.0);
  EXPECT_DOUBLE_EQ(y, 10.0);
  blob_center(s.explicit_blobs[0], s.width, s.height, 35, x, y);
  EXPECT_DOUBLE_EQ(x, 39.0 - 6.0);  // bounced off x = width - 1
}

TEST(MovingBlobs, ZeroBlobsIsConstant) {
  StreamSpec s;
  s.kind = StreamKind::MovingBlobs;
  s.width = 32;
  s.height = 24;
  s.total_frames = 5;
  s.blobs = 0;
  const auto st = open_stream(s);
  EXPECT_TRUE(st->frame(0).same_pixels(st->frame(4)));
}

TEST(MovingBlobs, Deterministic) {
  StreamSpec s;
  s.kind = StreamKind::MovingBlobs;
  s.width = 48;
  s.height = 36;
  s.total_frames = 10;
  s.seed = 9;
  const auto a = open_stream(s), b = open_stream(s);
  for (std::size_t i = 0; i < 10; ++i) ASSERT_TRUE(a->frame(i).same_pixels(b->frame(i)));
  EXPECT_FALSE(a->frame(0).same_pixels(a->frame(9)));
}

TEST(FrameDirectory, RepeatsInByteOrder) {
  const fs::path dir = scratch("dir3");
  for (int i = 0; i < 3; ++i) write_pgm_file(dir / ("f" + std::to_string(i) + ".pgm"), Frame(2, 1, 0, {i / 255.0, 0}));
  StreamSpec s;
  s.kind = StreamKind::FrameDirectory;
  s.path = dir.string();
  s.total_frames = 7;
  const auto st = open_stream(s);
  const int expected[7] = {0, 1, 2, 0, 1, 2, 0};
  for (std::size_t i = 0; i < 7; ++i) {
    const Frame f = st->frame(i);
    EXPECT_EQ(f.index, i);
    EXPECT_DOUBLE_EQ(f.pixels[0], expected[i] / 255.0);
  }
}

TEST(FrameDirectory, EmptyDirectoryIsIoError) {
  StreamSpec s;
  s.kind = StreamKind::FrameDirectory;
  s.path = scratch("empty").string();
  EXPECT_THROW(open_stream(s), IoError);
}

TEST(FrameDirectory, CorruptFrameNamesTheFrame) {
  const fs::path dir = scratch("corrupt");
  write_pgm_file(dir / "a.pgm", Frame(2, 1, 0, {0, 0}));
  std::ofstream(dir / "b.pgm") << "P5\n2 1\n255\n";
  StreamSpec s;
  s.kind = StreamKind::FrameDirectory;
  s.path = dir.string();
  s.total_frames = 2;
  const auto st = open_stream(s);
  try {
    st->frame(1);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("b.pgm"), std::string::npos);
  }
}

TEST(RawFile, PlanarFrames) {
  const fs::path dir = scratch("raw");
  std::vector<std::uint8_t> data(240 * 180 * 2);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<std::uint8_t>(i / (240 * 180) * 255);
  write_file_bytes(dir / "clip.raw", data);
  StreamSpec s;
  s.kind = StreamKind::RawFile;
  s.width = 240;
  s.height = 180;
  s.path = (dir / "clip.raw").string();
  s.total_frames = 3;
  const auto st = open_stream(s);
  EXPECT_EQ(st->source_length(), 2u);
  EXPECT_EQ(st->frame(0).size(), 43200u);
  EXPECT_EQ(st->frame(1).pixels[0], 1.0);
  EXPECT_EQ(st->frame(2).pixels[0], 0.0);
}

TEST(FrameDirectory, GeneratedDirectoryReproducesStream) {
  StreamSpec s;
  s.kind = StreamKind::MovingBlobs;
  s.width = 40;
  s.height = 30;
  s.total_frames = 4;
  s.seed = 2;
  const auto gen = open_stream(s);
  const fs::path dir = scratch("gen");
  write_frame_directory(*gen, dir);
  StreamSpec d;
  d.kind = StreamKind::FrameDirectory;
  d.path = dir.string();
  d.total_frames = 4;
  const auto back = open_stream(d);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(gen->frame(i).same_pixels(back->frame(i)));
}

}  // namespace
}  // namespace calfoa
