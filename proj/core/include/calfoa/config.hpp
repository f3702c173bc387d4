#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "calfoa/attention.hpp"
#include "calfoa/dynamics.hpp"
#include "calfoa/objective.hpp"
#include "calfoa/stream.hpp"

namespace calfoa {

/// Environment variable that, when set, replaces the configured output root.
inline constexpr const char* kOutputRootEnv = "CALFOA_OUTPUT_ROOT";

struct ExperimentConfig {
  StreamSpec stream;
  std::string arch = "S";
  DensityKind train_density = DensityKind::FOA;
  Criterion criterion = Criterion::AVG;
  std::size_t train_frames = 2000;
  std::size_t test_frames = 500;
  CalParams cal;
  ObjectiveParams objective;
  GazeParams gaze;
  double window_fraction = 0.15;
  std::uint64_t seed = 1;
  std::string output_dir = "runs/default";
  std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
  std::size_t log_interval = 1;         // metrics rows every n frames

  void validate() const;
  /// Sorted key=value lines; parse(to_text()) reproduces the config.
  std::string to_text() const;
  /// FNV-1a over to_text() without the output directory.
  std::uint64_t hash() const;
  /// output_dir, re-rooted under $CALFOA_OUTPUT_ROOT when that is set.
  std::filesystem::path resolved_output_dir() const;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses key=value lines; '#' starts a comment. Unknown keys, malformed
/// values and duplicates raise ConfigError naming the line. `overrides` are
/// applied after the file. stream.seed defaults to seed.
ExperimentConfig parse_config(const std::string& text, const ConfigOverrides& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

}  // namespace calfoa
