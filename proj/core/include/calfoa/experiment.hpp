#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "calfoa/architecture.hpp"
#include "calfoa/checkpoint.hpp"
#include "calfoa/config.hpp"
#include "calfoa/evaluation.hpp"

namespace calfoa {

/// Files written into the output directory.
namespace artifact {
inline constexpr const char* kMetrics = "metrics.csv";    // frame,U,h_cond,h_out,penalty
inline constexpr const char* kTrainMI = "train_mi.csv";   // frame,h_cond,h_out,mi over [0, frame]
inline constexpr const char* kScanpath = "scanpath.csv";  // training gaze, FOA densities only
inline constexpr const char* kCheckpoint = "checkpoint.bin";
inline constexpr const char* kConfig = "config.txt";
inline constexpr const char* kReport = "report.json";
}  // namespace artifact

struct TrainOptions {
  /// Stop (and checkpoint) after this many frames instead of train_frames.
  std::optional<std::size_t> stop_at;
  /// Continue from <output>/checkpoint.bin.
  bool resume = false;
  /// Called after every frame with the number of frames consumed.
  std::function<void(std::size_t)> progress;
};

struct TrainResult {
  std::size_t first_frame = 0;
  std::size_t frames_consumed = 0;
  double seconds = 0.0;
  ParamVector params;
  std::optional<MIReport> train_mi;
  std::filesystem::path output_dir;

  double frames_per_second() const;
};

/// Online training over frames [0, train_frames). Errors are rethrown as
/// calfoa::Error prefixed with the frame index and phase.
TrainResult train(const ExperimentConfig& config, const TrainOptions& options = {});

/// Rebuilds the parameter vector stored in a checkpoint; the architecture must match `arch`.
ParamVector checkpoint_params(const Checkpoint& ck, const std::string& arch);

/// Cross-density MI table over the test segment following the training segment.
std::vector<MIReport> evaluate(const ExperimentConfig& config, const ParamVector& params);

/// {stream, arch, train_density, criterion, seed, rows:[{test_density,h_cond,h_out,mi}]}
std::string report_json(const ExperimentConfig& config, const std::vector<MIReport>& rows);

/// Grid specification: `key=v1,v2,...` lines over the config key set.
struct GridSpec {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;

  static GridSpec parse(const std::string& text);
  /// Cartesian product in axis order, last axis fastest.
  std::vector<ConfigOverrides> cells() const;
};

struct GridCellResult {
  ConfigOverrides overrides;
  std::string train_density;
  std::string criterion;
  std::vector<MIReport> rows;
};

/// One row per cell and test density: the overrides, then test_density,h_cond,h_out,mi.
std::string grid_table_csv(const std::vector<GridCellResult>& cells);
/// For every (train density, criterion, test density) the cell with the largest mi.
std::string grid_best_csv(const std::vector<GridCellResult>& cells);

/// Parses a report written by report_json.
GridCellResult read_report(const std::filesystem::path& path, const ConfigOverrides& overrides);

}  // namespace calfoa
