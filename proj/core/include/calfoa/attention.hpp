#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "calfoa/frame.hpp"

namespace calfoa {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Non-negative per-pixel gravitational masses, normalized to unit total
/// (an all-zero map stays all-zero).
struct MassMap {
  int width = 0;
  int height = 0;
  std::vector<double> mass;

  double at(int x, int y) const { return mass[static_cast<std::size_t>(y) * width + x]; }
  double total() const;
};

/// mass = w_detail*|grad u| + w_motion*|u(t) - u(t-1)|, central differences
/// for the gradient (one-sided at the border), no motion term without prev.
MassMap compute_mass_map(const Frame& frame, const Frame* prev, double w_detail, double w_motion);

/// Planar 1/r gravity: E = sum_x m(x) (x - a) / (|x - a|^2 + softening^2).
Vec2 gravitational_field(const MassMap& masses, Vec2 a, double softening);

struct GazeParams {
  double rho = 0.1;        // dissipation
  double w_detail = 0.1;   // brightness-gradient mass weight
  double w_motion = 1.0;   // motion mass weight
  double dt = 0.1;         // integration step, frame-time units
  double softening = 1.0;  // pixels
  double gravity = 1000.0; // field gain applied by GazeTracker; masses are unit-normalized
  int steps_per_frame = 1;

  void validate() const;
};

struct GazeState {
  Vec2 position;  // a(t), pixels
  Vec2 velocity;  // da/dt
  GazeParams params;
  int width = 1;  // retina used for clamping
  int height = 1;

  void validate() const;
};

/// Gaze at the retina center with zero velocity.
GazeState initial_gaze(const GazeParams& params, int width, int height);

/// One semi-implicit Euler step of a'' + rho a' - E = 0, clamped to the retina.
/// The velocity component normal to a violated border is zeroed.
GazeState step_gaze(const GazeState& state, Vec2 field);

/// Drives the gaze from frame to frame.
class GazeTracker {
 public:
  GazeTracker(const GazeParams& params, int width, int height);

  const GazeState& state() const { return state_; }
  void set_state(const GazeState& s) { state_ = s; }
  const GazeState& advance(const Frame& frame, const Frame* prev);

 private:
  GazeState state_;
};

enum class DensityKind { UNI, FOA, FOAW, RND };

DensityKind parse_density_kind(const std::string& s);
std::string to_string(DensityKind k);

struct DensitySpec {
  DensityKind kind = DensityKind::UNI;
  double window_fraction = 0.15;
  std::uint64_t seed = 0;

  bool needs_gaze() const { return kind == DensityKind::FOA || kind == DensityKind::FOAW; }
  void validate() const;
};

struct SupportEntry {
  int x = 0;
  int y = 0;
  double weight = 0.0;
};

/// Discrete realization of the spatial density on one frame.
struct DensitySupport {
  std::vector<SupportEntry> entries;

  PixelRect bounds() const;
  double total_weight() const;
};

/// FOAW window edge in pixels.
int window_edge(double window_fraction, int width, int height);

/// gaze may be null for UNI and RND. frame_index seeds the RND draw.
DensitySupport density_support(const DensitySpec& spec, const GazeState* gaze, int width, int height,
                               std::size_t frame_index = 0);

}  // namespace calfoa
