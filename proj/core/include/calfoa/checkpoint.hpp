#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "calfoa/attention.hpp"
#include "calfoa/objective.hpp"

namespace calfoa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to continue training bit-for-bit.
struct Checkpoint {
  std::string arch_descriptor;
  std::uint64_t config_hash = 0;
  std::uint64_t frame = 0;  // frames consumed
  std::uint64_t step = 0;   // integrator steps taken
  std::vector<double> w;
  std::vector<double> v;
  Criterion criterion = Criterion::PLA;
  std::vector<double> nu, s, s_prev;
  Vec2 gaze_position, gaze_velocity;
  double mi_h_cond_sum = 0.0;
  std::vector<double> mi_p_sum;
  std::uint64_t mi_frames = 0;

  bool operator==(const Checkpoint&) const = default;
};

/// "CAL2", u32 version, descriptor, u64 n, w[n], v[n], entropy block
/// (u32 criterion, nu, s, s_prev), gaze block, MI accumulators, then
/// config hash, frame and step. Little-endian; strings and the entropy/MI
/// vectors are u64-length-prefixed.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
/// Throws ParseError on bad magic, unknown version, truncation or trailing bytes.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Writes `path` and a JSON sidecar `path` + ".json" with the config hash and frame.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace calfoa
