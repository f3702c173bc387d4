#include "calfoa/scanpath_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "calfoa/error.hpp"
#include "calfoa/pgm.hpp"

namespace calfoa {

std::string scanpath_csv(const std::vector<ScanpathSample>& path) {
  std::string out = "frame,x,y,vx,vy\n";
  char line[160];
  for (const auto& s : path) {
    std::snprintf(line, sizeof line, "%zu,%.6f,%.6f,%.6f,%.6f\n", s.frame, s.position.x, s.position.y,
                  s.velocity.x, s.velocity.y);
    out += line;
  }
  return out;
}

Heatmap fixation_heatmap(const std::vector<ScanpathSample>& path, int retina_width, int retina_height, int grid_width,
                         int grid_height) {
  if (path.empty()) throw Error("heatmap: empty scanpath");
  if (grid_width < 1 || grid_height < 1) throw Error("heatmap: grid must be non-empty");
  Heatmap h{grid_width, grid_height, std::vector<std::size_t>(static_cast<std::size_t>(grid_width) * grid_height, 0)};
  for (const auto& s : path) {
    const int cx = std::clamp(static_cast<int>(s.position.x / retina_width * grid_width), 0, grid_width - 1);
    const int cy = std::clamp(static_cast<int>(s.position.y / retina_height * grid_height), 0, grid_height - 1);
    ++h.counts[static_cast<std::size_t>(cy) * grid_width + cx];
  }
  return h;
}

Frame Heatmap::normalized() const {
  const std::size_t peak = *std::max_element(counts.begin(), counts.end());
  Frame f(grid_width, grid_height, 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    f.pixels[i] = peak ? static_cast<double>(counts[i]) / static_cast<double>(peak) : 0.0;
  }
  return f;
}

std::string Heatmap::csv() const {
  std::string out = "cx,cy,count\n";
  for (int cy = 0; cy < grid_height; ++cy)
    for (int cx = 0; cx < grid_width; ++cx)
      out += std::to_string(cx) + "," + std::to_string(cy) + "," + std::to_string(at(cx, cy)) + "\n";
  return out;
}

std::string scatter_csv(const std::vector<ScanpathSample>& path) {
  std::string out = "x,y,speed\n";
  char line[128];
  for (const auto& s : path) {
    std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f\n", s.position.x, s.position.y,
                  std::hypot(s.velocity.x, s.velocity.y));
    out += line;
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void write_foa_artifacts(const std::filesystem::path& dir, const std::vector<ScanpathSample>& path, int retina_width,
                         int retina_height, int grid_width, int grid_height) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "scanpath.csv", scanpath_csv(path));
  const Heatmap h = fixation_heatmap(path, retina_width, retina_height, grid_width, grid_height);
  write_pgm_file(dir / "heatmap.pgm", h.normalized());
  write_text_file(dir / "heatmap.csv", h.csv());
  write_text_file(dir / "scatter.csv", scatter_csv(path));
}

}  // namespace calfoa
