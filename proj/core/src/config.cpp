#include "calfoa/config.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include "calfoa/error.hpp"
#include "calfoa/pgm.hpp"
#include "calfoa/rng.hpp"

namespace calfoa {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0') throw ConfigError(key + ": expected a number, got '" + v + "'");
  return d;
}

template <class T>
T to_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::string fmt(double d) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define CALFOA_DOUBLE(member)                                                         \
  Field {                                                                             \
    [](ExperimentConfig& c, const std::string& v) { c.member = to_double(#member, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.member); }                        \
  }
#define CALFOA_INT(member, type)                                                              \
  Field {                                                                                     \
    [](ExperimentConfig& c, const std::string& v) { c.member = to_integer<type>(#member, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }                     \
  }
#define CALFOA_STRING(member)                                            \
  Field {                                                                \
    [](ExperimentConfig& c, const std::string& v) { c.member = v; }, \
        [](const ExperimentConfig& c) { return c.member; }              \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"stream.kind", {[](ExperimentConfig& c, const std::string& v) { c.stream.kind = parse_stream_kind(v); },
                       [](const ExperimentConfig& c) { return to_string(c.stream.kind); }}},
      {"stream.width", CALFOA_INT(stream.width, int)},
      {"stream.height", CALFOA_INT(stream.height, int)},
      {"stream.seed", CALFOA_INT(stream.seed, std::uint64_t)},
      {"stream.glyphs", CALFOA_INT(stream.glyphs, int)},
      {"stream.glyph_size", CALFOA_INT(stream.glyph_size, int)},
      {"stream.mnist_path", CALFOA_STRING(stream.mnist_path)},
      {"stream.blobs", CALFOA_INT(stream.blobs, int)},
      {"stream.blob_speed", CALFOA_DOUBLE(stream.blob_speed)},
      {"stream.blob_sigma", CALFOA_DOUBLE(stream.blob_sigma)},
      {"stream.background", CALFOA_DOUBLE(stream.background_amplitude)},
      {"stream.path", CALFOA_STRING(stream.path)},
      {"arch", CALFOA_STRING(arch)},
      {"train.density", {[](ExperimentConfig& c, const std::string& v) { c.train_density = parse_density_kind(v); },
                         [](const ExperimentConfig& c) { return to_string(c.train_density); }}},
      {"train.criterion", {[](ExperimentConfig& c, const std::string& v) { c.criterion = parse_criterion(v); },
                           [](const ExperimentConfig& c) { return to_string(c.criterion); }}},
      {"train.frames", CALFOA_INT(train_frames, std::size_t)},
      {"test.frames", CALFOA_INT(test_frames, std::size_t)},
      {"cal.alpha", CALFOA_DOUBLE(cal.alpha)},
      {"cal.beta", CALFOA_DOUBLE(cal.beta)},
      {"cal.k", CALFOA_DOUBLE(cal.k)},
      {"cal.dt", CALFOA_DOUBLE(cal.dt)},
      {"objective.lambda_c", CALFOA_DOUBLE(objective.lambda_c)},
      {"objective.lambda_e", CALFOA_DOUBLE(objective.lambda_e)},
      {"objective.lambda_s", CALFOA_DOUBLE(objective.lambda_s)},
      {"objective.zeta_s", CALFOA_DOUBLE(objective.zeta_s)},
      {"objective.dt_s", CALFOA_DOUBLE(objective.dt_s)},
      {"foa.rho", CALFOA_DOUBLE(gaze.rho)},
      {"foa.w_detail", CALFOA_DOUBLE(gaze.w_detail)},
      {"foa.w_motion", CALFOA_DOUBLE(gaze.w_motion)},
      {"foa.dt", CALFOA_DOUBLE(gaze.dt)},
      {"foa.softening", CALFOA_DOUBLE(gaze.softening)},
      {"foa.gravity", CALFOA_DOUBLE(gaze.gravity)},
      {"foa.steps_per_frame", CALFOA_INT(gaze.steps_per_frame, int)},
      {"density.window_fraction", CALFOA_DOUBLE(window_fraction)},
      {"seed", CALFOA_INT(seed, std::uint64_t)},
      {"output.dir", CALFOA_STRING(output_dir)},
      {"checkpoint.interval", CALFOA_INT(checkpoint_interval, std::size_t)},
      {"log.interval", CALFOA_INT(log_interval, std::size_t)},
  };
  return table;
}

#undef CALFOA_DOUBLE
#undef CALFOA_INT
#undef CALFOA_STRING

}  // namespace

void ExperimentConfig::validate() const {
  StreamSpec s = stream;
  s.total_frames = train_frames + test_frames;
  if (s.total_frames == 0) throw ConfigError("train.frames + test.frames must be > 0");
  s.validate();
  Architecture::by_name(arch).validate();
  cal.validate();
  objective.validate();
  gaze.validate();
  DensitySpec d{train_density, window_fraction, seed};
  d.validate();
  if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
  if (log_interval == 0) throw ConfigError("log.interval must be >= 1");
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [key, f] : fields()) out += key + "=" + f.get(*this) + "\n";
  return out;
}

std::uint64_t ExperimentConfig::hash() const {
  std::string text;
  for (const auto& [key, f] : fields())
    if (key != "output.dir" && key != "checkpoint.interval" && key != "log.interval") text += key + "=" + f.get(*this) + "\n";
  return fnv1a64(text);
}

std::filesystem::path ExperimentConfig::resolved_output_dir() const {
  const char* root = std::getenv(kOutputRootEnv);
  std::filesystem::path p(output_dir);
  if (root && *root) return std::filesystem::path(root) / p.relative_path();
  return p;
}

namespace {
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(config, value);
}
}  // namespace

ExperimentConfig parse_config(const std::string& text, const ConfigOverrides& overrides) {
  ExperimentConfig c;
  std::istringstream is(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  bool stream_seed_set = false;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.erase(hash_pos);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      apply_override(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
    stream_seed_set |= key == "stream.seed";
  }
  for (const auto& [key, value] : overrides) {
    apply_override(c, key, value);
    stream_seed_set |= key == "stream.seed";
  }
  if (!stream_seed_set) c.stream.seed = c.seed;
  c.stream.total_frames = c.train_frames + c.test_frames;
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const ConfigOverrides& overrides) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  return parse_config(std::string(bytes.begin(), bytes.end()), overrides);
}

}  // namespace calfoa
