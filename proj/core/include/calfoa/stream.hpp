#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "calfoa/frame.hpp"

namespace calfoa {

enum class StreamKind { SparseGlyphs, MovingBlobs, FrameDirectory, RawFile };

StreamKind parse_stream_kind(const std::string& s);
std::string to_string(StreamKind k);

/// One Gaussian blob of the moving-blobs generator. Position in pixels,
/// velocity in pixels per frame.
struct BlobSpec {
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  double sigma = 6.0;
  double amplitude = 0.7;
};

struct StreamSpec {
  StreamKind kind = StreamKind::SparseGlyphs;
  int width = 280;
  int height = 280;
  std::size_t total_frames = 1;
  std::uint64_t seed = 0;

  // sparse-glyphs
  int glyphs = 10;
  int glyph_size = 28;
  std::string mnist_path;  // optional idx3-ubyte file

  // moving-blobs; explicit_blobs overrides the seeded draw when non-empty
  int blobs = 3;
  double blob_speed = 1.5;
  double blob_sigma = 6.0;
  double background_amplitude = 0.25;
  std::vector<BlobSpec> explicit_blobs;

  // frame-directory / raw-file
  std::string path;

  void validate() const;
};

/// Random-access, deterministic frame source. frame(i) for i >= total_frames()
/// is an error; shorter recorded sources repeat from the start.
class FrameStream {
 public:
  virtual ~FrameStream() = default;

  virtual Frame frame(std::size_t index) const = 0;
  /// Number of distinct frames before the source repeats (1 for static scenes).
  virtual std::size_t source_length() const = 0;

  std::size_t total_frames() const { return total_; }
  int width() const { return width_; }
  int height() const { return height_; }

  class Iterator {
   public:
    Iterator(const FrameStream* s, std::size_t i) : stream_(s), index_(i) {}
    Frame operator*() const { return stream_->frame(index_); }
    Iterator& operator++() {
      ++index_;
      return *this;
    }
    bool operator==(const Iterator& o) const { return index_ == o.index_; }

   private:
    const FrameStream* stream_;
    std::size_t index_;
  };
  Iterator begin() const { return {this, 0}; }
  Iterator end() const { return {this, total_}; }

 protected:
  FrameStream(int w, int h, std::size_t total) : width_(w), height_(h), total_(total) {}
  void check_index(std::size_t index) const;

 private:
  int width_;
  int height_;
  std::size_t total_;
};

std::unique_ptr<FrameStream> open_stream(const StreamSpec& spec);

/// The single static scene of the sparse-glyphs stream.
Frame sparse_glyph_scene(const StreamSpec& spec);

/// Blob parameters actually used by a moving-blobs spec (explicit or seeded).
std::vector<BlobSpec> resolve_blobs(const StreamSpec& spec);
/// Blob center at frame t, reflecting at the borders.
void blob_center(const BlobSpec& blob, int width, int height, std::size_t t, double& x, double& y);

/// Writes frames 0..total-1 as frame_NNNNNN.pgm into dir.
void write_frame_directory(const FrameStream& stream, const std::filesystem::path& dir);

}  // namespace calfoa
