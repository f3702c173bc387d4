#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "calfoa/attention.hpp"
#include "calfoa/frame.hpp"

namespace calfoa {

struct ScanpathSample {
  std::size_t frame = 0;
  Vec2 position;
  Vec2 velocity;
};

/// CSV with header frame,x,y,vx,vy and six decimals.
std::string scanpath_csv(const std::vector<ScanpathSample>& path);

/// Visit counts over a grid_w x grid_h grid covering the retina.
struct Heatmap {
  int grid_width = 0;
  int grid_height = 0;
  std::vector<std::size_t> counts;

  std::size_t at(int cx, int cy) const { return counts[static_cast<std::size_t>(cy) * grid_width + cx]; }
  /// Counts scaled so the maximum maps to 1.
  Frame normalized() const;
  std::string csv() const;  // cx,cy,count
};

Heatmap fixation_heatmap(const std::vector<ScanpathSample>& path, int retina_width, int retina_height, int grid_width,
                         int grid_height);

/// CSV with header x,y,speed.
std::string scatter_csv(const std::vector<ScanpathSample>& path);

/// Writes scanpath.csv, heatmap.pgm, heatmap.csv and scatter.csv into dir.
void write_foa_artifacts(const std::filesystem::path& dir, const std::vector<ScanpathSample>& path, int retina_width,
                         int retina_height, int grid_width, int grid_height);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace calfoa
