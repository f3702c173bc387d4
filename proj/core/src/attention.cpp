#include "calfoa/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "calfoa/error.hpp"
#include "calfoa/rng.hpp"

namespace calfoa {

double MassMap::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

MassMap compute_mass_map(const Frame& frame, const Frame* prev, double w_detail, double w_motion) {
  if (prev && (prev->width != frame.width || prev->height != frame.height)) {
    throw Error("mass map: previous frame has different dimensions");
  }
  const int W = frame.width, H = frame.height;
  MassMap m{W, H, std::vector<double>(frame.pixels.size(), 0.0)};
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      double gx = 0.0, gy = 0.0;
      if (W > 1) {
        const int xl = std::max(x - 1, 0), xr = std::min(x + 1, W - 1);
        gx = (frame.at(xr, y) - frame.at(xl, y)) / (xr - xl);
      }
      if (H > 1) {
        const int yu = std::max(y - 1, 0), yd = std::min(y + 1, H - 1);
        gy = (frame.at(x, yd) - frame.at(x, yu)) / (yd - yu);
      }
      double v = w_detail * std::sqrt(gx * gx + gy * gy);
      if (prev) v += w_motion * std::abs(frame.at(x, y) - prev->at(x, y));
      m.mass[static_cast<std::size_t>(y) * W + x] = v;
    }
  }
  const double total = m.total();
  if (total > 0.0) {
    for (double& v : m.mass) v /= total;
  }
  return m;
}

Vec2 gravitational_field(const MassMap& masses, Vec2 a, double softening) {
  const double s2 = softening * softening;
  double ex = 0.0, ey = 0.0;
  for (int y = 0; y < masses.height; ++y) {
    const double dy = y - a.y;
    const double* row = masses.mass.data() + static_cast<std::size_t>(y) * masses.width;
    for (int x = 0; x < masses.width; ++x) {
      const double m = row[x];
      if (m == 0.0) continue;
      const double dx = x - a.x;
      const double inv = m / (dx * dx + dy * dy + s2);
      ex += dx * inv;
      ey += dy * inv;
    }
  }
  return {ex, ey};
}

void GazeParams::validate() const {
  if (!(rho > 0)) throw ConfigError("gaze: rho must be > 0");
  if (!(dt > 0)) throw ConfigError("gaze: dt must be > 0");
  if (!(softening > 0)) throw ConfigError("gaze: softening must be > 0");
  if (!(w_detail >= 0) || !(w_motion >= 0)) throw ConfigError("gaze: mass weights must be >= 0");
  if (!(gravity > 0)) throw ConfigError("gaze: gravity must be > 0");
  if (steps_per_frame < 1) throw ConfigError("gaze: steps_per_frame must be >= 1");
}

void GazeState::validate() const {
  params.validate();
  if (width < 1 || height < 1) throw Error("gaze: retina must be non-empty");
}

GazeState initial_gaze(const GazeParams& params, int width, int height) {
  GazeState s;
  s.params = params;
  s.width = width;
  s.height = height;
  s.position = {(width - 1) / 2.0, (height - 1) / 2.0};
  s.validate();
  return s;
}

GazeState step_gaze(const GazeState& state, Vec2 field) {
  GazeState next = state;
  const double dt = state.params.dt, rho = state.params.rho;
  next.velocity.x += dt * (field.x - rho * state.velocity.x);
  next.velocity.y += dt * (field.y - rho * state.velocity.y);
  next.position.x += dt * next.velocity.x;
  next.position.y += dt * next.velocity.y;
  const double xmax = state.width - 1.0, ymax = state.height - 1.0;
  if (next.position.x < 0.0 || next.position.x > xmax) {
    next.position.x = std::clamp(next.position.x, 0.0, xmax);
    next.velocity.x = 0.0;
  }
  if (next.position.y < 0.0 || next.position.y > ymax) {
    next.position.y = std::clamp(next.position.y, 0.0, ymax);
    next.velocity.y = 0.0;
  }
  if (!std::isfinite(next.position.x) || !std::isfinite(next.position.y)) {
    throw NumericalError("gaze: non-finite position");
  }
  return next;
}

GazeTracker::GazeTracker(const GazeParams& params, int width, int height)
    : state_(initial_gaze(params, width, height)) {}

const GazeState& GazeTracker::advance(const Frame& frame, const Frame* prev) {
  if (frame.width != state_.width || frame.height != state_.height) {
    throw Error("gaze: frame dimensions differ from the tracker retina");
  }
  const MassMap masses = compute_mass_map(frame, prev, state_.params.w_detail, state_.params.w_motion);
  for (int i = 0; i < state_.params.steps_per_frame; ++i) {
    Vec2 e = gravitational_field(masses, state_.position, state_.params.softening);
    e.x *= state_.params.gravity;
    e.y *= state_.params.gravity;
    state_ = step_gaze(state_, e);
  }
  return state_;
}

DensityKind parse_density_kind(const std::string& s) {
  if (s == "UNI") return DensityKind::UNI;
  if (s == "FOA") return DensityKind::FOA;
  if (s == "FOAW") return DensityKind::FOAW;
  if (s == "RND") return DensityKind::RND;
  throw ConfigError("unknown density '" + s + "'");
}

std::string to_string(DensityKind k) {
  switch (k) {
    case DensityKind::UNI: return "UNI";
    case DensityKind::FOA: return "FOA";
    case DensityKind::FOAW: return "FOAW";
    case DensityKind::RND: return "RND";
  }
  return "?";
}

void DensitySpec::validate() const {
  if (kind == DensityKind::FOAW && !(window_fraction > 0 && window_fraction <= 1)) {
    throw ConfigError("density: window_fraction must be in (0,1]");
  }
}

PixelRect DensitySupport::bounds() const {
  if (entries.empty()) return {};
  PixelRect r{entries[0].x, entries[0].y, entries[0].x + 1, entries[0].y + 1};
  for (const auto& e : entries) {
    r.x0 = std::min(r.x0, e.x);
    r.y0 = std::min(r.y0, e.y);
    r.x1 = std::max(r.x1, e.x + 1);
    r.y1 = std::max(r.y1, e.y + 1);
  }
  return r;
}

double DensitySupport::total_weight() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.weight;
  return s;
}

int window_edge(double window_fraction, int width, int height) {
  return std::max(1, static_cast<int>(std::lround(window_fraction * std::min(width, height))));
}

DensitySupport density_support(const DensitySpec& spec, const GazeState* gaze, int width, int height,
                               std::size_t frame_index) {
  spec.validate();
  if (width < 1 || height < 1) throw Error("density: retina must be non-empty");
  if (spec.needs_gaze() && !gaze) throw Error("density " + to_string(spec.kind) + " requires a gaze state");

  DensitySupport out;
  auto nearest = [&](Vec2 a) {
    const int x = std::clamp(static_cast<int>(std::lround(a.x)), 0, width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(a.y)), 0, height - 1);
    return std::pair{x, y};
  };

  switch (spec.kind) {
    case DensityKind::UNI: {
      const double w = 1.0 / (static_cast<double>(width) * height);
      out.entries.reserve(static_cast<std::size_t>(width) * height);
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.entries.push_back({x, y, w});
      break;
    }
    case DensityKind::FOA: {
      const auto [x, y] = nearest(gaze->position);
      out.entries.push_back({x, y, 1.0});
      break;
    }
    case DensityKind::FOAW: {
      const int edge = window_edge(spec.window_fraction, width, height);
      const auto [cx, cy] = nearest(gaze->position);
      const int x0 = std::max(0, cx - edge / 2), x1 = std::min(width, cx - edge / 2 + edge);
      const int y0 = std::max(0, cy - edge / 2), y1 = std::min(height, cy - edge / 2 + edge);
      const double w = 1.0 / (static_cast<double>(x1 - x0) * (y1 - y0));
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) out.entries.push_back({x, y, w});
      break;
    }
    case DensityKind::RND: {
      Rng rng = Rng::derive(spec.seed, "density.rnd", frame_index);
      const int x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width)));
      const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height)));
      out.entries.push_back({x, y, 1.0});
      break;
    }
  }
  return out;
}

}  // namespace calfoa
