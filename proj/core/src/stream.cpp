#include "calfoa/stream.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <optional>

#include "calfoa/error.hpp"
#include "calfoa/glyphs.hpp"
#include "calfoa/pgm.hpp"
#include "calfoa/rng.hpp"

namespace calfoa {

StreamKind parse_stream_kind(const std::string& s) {
  if (s == "sparse-glyphs") return StreamKind::SparseGlyphs;
  if (s == "moving-blobs") return StreamKind::MovingBlobs;
  if (s == "frame-directory") return StreamKind::FrameDirectory;
  if (s == "raw-file") return StreamKind::RawFile;
  throw ConfigError("unknown stream kind '" + s + "'");
}

std::string to_string(StreamKind k) {
  switch (k) {
    case StreamKind::SparseGlyphs: return "sparse-glyphs";
    case StreamKind::MovingBlobs: return "moving-blobs";
    case StreamKind::FrameDirectory: return "frame-directory";
    case StreamKind::RawFile: return "raw-file";
  }
  return "?";
}

void StreamSpec::validate() const {
  if (total_frames < 1) throw ConfigError("stream: total_frames must be >= 1");
  const bool needs_dims = kind != StreamKind::FrameDirectory;
  if (needs_dims && (width < 1 || height < 1)) throw ConfigError("stream: width and height must be >= 1");
  if (kind == StreamKind::SparseGlyphs) {
    if (glyphs < 0) throw ConfigError("stream: glyphs must be >= 0");
    if (glyph_size < 1) throw ConfigError("stream: glyph_size must be >= 1");
  }
  if (kind == StreamKind::MovingBlobs) {
    if (blobs < 0) throw ConfigError("stream: blobs must be >= 0");
    if (!(blob_sigma > 0)) throw ConfigError("stream: blob_sigma must be > 0");
    if (!(background_amplitude >= 0 && background_amplitude <= 1)) {
      throw ConfigError("stream: background_amplitude must be in [0,1]");
    }
  }
  if ((kind == StreamKind::FrameDirectory || kind == StreamKind::RawFile) && path.empty()) {
    throw ConfigError("stream: path is required for " + to_string(kind));
  }
}

void FrameStream::check_index(std::size_t index) const {
  if (index >= total_) {
    throw Error("frame index " + std::to_string(index) + " beyond stream length " + std::to_string(total_));
  }
}

Frame sparse_glyph_scene(const StreamSpec& spec) {
  Frame scene(spec.width, spec.height, 0);
  if (spec.glyphs == 0) return scene;

  Rng rng = Rng::derive(spec.seed, "stream.glyphs");
  std::vector<Glyph> pool;
  if (!spec.mnist_path.empty()) pool = load_idx_images(spec.mnist_path);

  struct Box {
    int x, y, s;
  };
  std::vector<Box> placed;
  constexpr int kGap = 2;
  constexpr int kMaxTries = 2000;
  for (int g = 0; g < spec.glyphs; ++g) {
    Glyph glyph = pool.empty() ? render_digit(g % 10, spec.glyph_size, rng) : pool[rng.below(pool.size())];
    const int s = glyph.size;
    if (s > spec.width || s > spec.height) throw PlacementError("glyph larger than frame");
    bool ok = false;
    for (int attempt = 0; attempt < kMaxTries && !ok; ++attempt) {
      const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.width - s + 1)));
      const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.height - s + 1)));
      ok = std::none_of(placed.begin(), placed.end(), [&](const Box& b) {
        return x < b.x + b.s + kGap && b.x < x + s + kGap && y < b.y + b.s + kGap && b.y < y + s + kGap;
      });
      if (ok) {
        placed.push_back({x, y, s});
        for (int gy = 0; gy < s; ++gy)
          for (int gx = 0; gx < s; ++gx) scene.at(x + gx, y + gy) = glyph.pixels[static_cast<std::size_t>(gy) * s + gx];
      }
    }
    if (!ok) {
      throw PlacementError("could not place glyph " + std::to_string(g) + " without overlap after " +
                           std::to_string(kMaxTries) + " attempts (frame too small?)");
    }
  }
  quantize_8bit(scene);
  return scene;
}

std::vector<BlobSpec> resolve_blobs(const StreamSpec& spec) {
  if (!spec.explicit_blobs.empty()) return spec.explicit_blobs;
  Rng rng = Rng::derive(spec.seed, "stream.blobs");
  std::vector<BlobSpec> out;
  for (int i = 0; i < spec.blobs; ++i) {
    BlobSpec b;
    b.x = rng.uniform(0.0, spec.width - 1.0);
    b.y = rng.uniform(0.0, spec.height - 1.0);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    b.vx = spec.blob_speed * std::cos(angle);
    b.vy = spec.blob_speed * std::sin(angle);
    b.sigma = spec.blob_sigma;
    b.amplitude = 0.7;
    out.push_back(b);
  }
  return out;
}

namespace {

double reflect(double p0, double v, double t, double extent) {
  if (extent <= 0) return 0.0;
  const double period = 2.0 * extent;
  double x = std::fmod(p0 + v * t, period);
  if (x < 0) x += period;
  return x > extent ? period - x : x;
}

class StaticStream final : public FrameStream {
 public:
  StaticStream(Frame scene, std::size_t total)
      : FrameStream(scene.width, scene.height, total), scene_(std::move(scene)) {}
  Frame frame(std::size_t index) const override {
    check_index(index);
    Frame f = scene_;
    f.index = index;
    return f;
  }
  std::size_t source_length() const override { return 1; }

 private:
  Frame scene_;
};

class BlobStream final : public FrameStream {
 public:
  explicit BlobStream(const StreamSpec& spec)
      : FrameStream(spec.width, spec.height, spec.total_frames), blobs_(resolve_blobs(spec)) {
    background_.assign(static_cast<std::size_t>(spec.width) * spec.height, 0.0);
    if (spec.background_amplitude > 0) {
      // bilinear value noise on a 16 px lattice
      constexpr int cell = 16;
      const int gw = spec.width / cell + 2, gh = spec.height / cell + 2;
      Rng rng = Rng::derive(spec.seed, "stream.background");
      std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
      for (double& v : lattice) v = rng.uniform();
      for (int y = 0; y < spec.height; ++y) {
        for (int x = 0; x < spec.width; ++x) {
          const double fx = static_cast<double>(x) / cell, fy = static_cast<double>(y) / cell;
          const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
          const double tx = fx - ix, ty = fy - iy;
          auto L = [&](int i, int j) { return lattice[static_cast<std::size_t>(j) * gw + i]; };
          const double v = (1 - ty) * ((1 - tx) * L(ix, iy) + tx * L(ix + 1, iy)) +
                           ty * ((1 - tx) * L(ix, iy + 1) + tx * L(ix + 1, iy + 1));
          background_[static_cast<std::size_t>(y) * spec.width + x] = spec.background_amplitude * v;
        }
      }
    }
  }

  Frame frame(std::size_t index) const override {
    check_index(index);
    Frame f(width(), height(), index, background_);
    for (const auto& b : blobs_) {
      double cx, cy;
      blob_center(b, width(), height(), index, cx, cy);
      const int r = static_cast<int>(std::ceil(4.0 * b.sigma));
      const int x0 = std::max(0, static_cast<int>(cx) - r), x1 = std::min(width() - 1, static_cast<int>(cx) + r + 1);
      const int y0 = std::max(0, static_cast<int>(cy) - r), y1 = std::min(height() - 1, static_cast<int>(cy) + r + 1);
      const double inv = 1.0 / (2.0 * b.sigma * b.sigma);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dx = x - cx, dy = y - cy;
          double& p = f.at(x, y);
          p = std::min(1.0, p + b.amplitude * std::exp(-(dx * dx + dy * dy) * inv));
        }
      }
    }
    quantize_8bit(f);
    return f;
  }
  std::size_t source_length() const override { return blobs_.empty() ? 1 : total_frames(); }

 private:
  std::vector<BlobSpec> blobs_;
  std::vector<double> background_;
};

std::string frame_label(const std::filesystem::path& p, std::size_t index) {
  return "frame " + std::to_string(index) + " (" + p.string() + ")";
}

class DirectoryStream final : public FrameStream {
 public:
  DirectoryStream(std::vector<std::filesystem::path> files, Frame first, std::size_t total)
      : FrameStream(first.width, first.height, total), files_(std::move(files)) {
    cache_.emplace(0, std::move(first));
  }

  Frame frame(std::size_t index) const override {
    check_index(index);
    const std::size_t src = index % files_.size();
    std::lock_guard lock(mu_);
    if (!cache_ || cache_->first != src) {
      Frame f;
      try {
        f = read_pgm_file(files_[src], index);
      } catch (const Error& e) {
        throw IoError(frame_label(files_[src], index) + ": " + e.what());
      }
      if (f.width != width() || f.height != height()) {
        throw IoError(frame_label(files_[src], index) + ": dimensions differ from the first frame");
      }
      cache_.emplace(src, std::move(f));
    }
    Frame out = cache_->second;
    out.index = index;
    return out;
  }
  std::size_t source_length() const override { return files_.size(); }

 private:
  std::vector<std::filesystem::path> files_;
  mutable std::mutex mu_;
  mutable std::optional<std::pair<std::size_t, Frame>> cache_;
};

class RawStream final : public FrameStream {
 public:
  RawStream(std::string path, int w, int h, std::size_t count, std::size_t total)
      : FrameStream(w, h, total), path_(std::move(path)), count_(count) {}

  Frame frame(std::size_t index) const override {
    check_index(index);
    const std::size_t src = index % count_;
    const std::size_t n = static_cast<std::size_t>(width()) * height();
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw IoError(frame_label(path_, index) + ": cannot open");
    in.seekg(static_cast<std::streamoff>(src * n));
    std::vector<std::uint8_t> raw(n);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw IoError(frame_label(path_, index) + ": short read");
    std::vector<double> px(n);
    for (std::size_t i = 0; i < n; ++i) px[i] = raw[i] / 255.0;
    return Frame(width(), height(), index, std::move(px));
  }
  std::size_t source_length() const override { return count_; }

 private:
  std::string path_;
  std::size_t count_;
};

}  // namespace

void blob_center(const BlobSpec& blob, int width, int height, std::size_t t, double& x, double& y) {
  x = reflect(blob.x, blob.vx, static_cast<double>(t), width - 1.0);
  y = reflect(blob.y, blob.vy, static_cast<double>(t), height - 1.0);
}

std::unique_ptr<FrameStream> open_stream(const StreamSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case StreamKind::SparseGlyphs: return std::make_unique<StaticStream>(sparse_glyph_scene(spec), spec.total_frames);
    case StreamKind::MovingBlobs: return std::make_unique<BlobStream>(spec);
    case StreamKind::FrameDirectory: {
      namespace fs = std::filesystem;
      if (!fs::is_directory(spec.path)) throw IoError("frame directory not found: " + spec.path);
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(spec.path)) {
        if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
      }
      if (files.empty()) throw IoError("frame directory contains no .pgm files: " + spec.path);
      std::sort(files.begin(), files.end(),
                [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
      Frame first;
      try {
        first = read_pgm_file(files.front(), 0);
      } catch (const Error& e) {
        throw IoError(frame_label(files.front(), 0) + ": " + e.what());
      }
      return std::make_unique<DirectoryStream>(std::move(files), std::move(first), spec.total_frames);
    }
    case StreamKind::RawFile: {
      namespace fs = std::filesystem;
      std::error_code ec;
      const auto size = fs::file_size(spec.path, ec);
      if (ec) throw IoError("raw file not readable: " + spec.path);
      const std::size_t n = static_cast<std::size_t>(spec.width) * spec.height;
      if (size == 0 || size % n != 0) {
        throw IoError("raw file " + spec.path + ": size " + std::to_string(size) +
                      " is not a positive multiple of width*height");
      }
      return std::make_unique<RawStream>(spec.path, spec.width, spec.height, size / n, spec.total_frames);
    }
  }
  throw ConfigError("unhandled stream kind");
}

void write_frame_directory(const FrameStream& stream, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < stream.total_frames(); ++i) {
    std::snprintf(name, sizeof name, "frame_%06zu.pgm", i);
    write_pgm_file(dir / name, stream.frame(i));
  }
}

}  // namespace calfoa
