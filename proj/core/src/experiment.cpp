#include "calfoa/experiment.hpp"

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "calfoa/dynamics.hpp"
#include "calfoa/error.hpp"
#include "calfoa/network.hpp"
#include "calfoa/objective.hpp"
#include "calfoa/pgm.hpp"
#include "calfoa/scanpath_io.hpp"

namespace calfoa {

double TrainResult::frames_per_second() const {
  const double n = static_cast<double>(frames_consumed - first_frame);
  return seconds > 0 ? n / seconds : 0.0;
}

namespace {

// Append-only CSV whose rows start with a frame index. Reopening for a resumed
// run keeps only the rows of frames already covered by the checkpoint.
class CsvLog {
 public:
  CsvLog(const std::filesystem::path& path, const std::string& header, std::optional<std::size_t> keep_below) {
    std::string kept = header + "\n";
    if (keep_below) {
      std::ifstream in(path);
      if (!in) throw IoError("cannot reopen " + path.string() + " for a resumed run");
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        const std::size_t frame = std::stoull(line.substr(0, line.find(',')));
        if (frame < *keep_below) kept += line + "\n";
      }
    }
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << kept;
  }
  void row(const char* fmt, ...) __attribute__((format(printf, 2, 3))) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    out_ << buf;
  }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

Checkpoint make_checkpoint(const ExperimentConfig& config, std::size_t frame, const DynamicsState& dyn,
                           const EntropyState& entropy, const GazeState& gaze, const MIAccumulator& acc) {
  Checkpoint ck;
  ck.arch_descriptor = dyn.w.layout.arch().descriptor();
  ck.config_hash = config.hash();
  ck.frame = frame;
  ck.step = dyn.step;
  ck.w = dyn.w.values;
  ck.v = dyn.v;
  ck.criterion = entropy.criterion;
  ck.nu = entropy.nu;
  ck.s = entropy.s;
  ck.s_prev = entropy.s_prev;
  ck.gaze_position = gaze.position;
  ck.gaze_velocity = gaze.velocity;
  ck.mi_h_cond_sum = acc.h_cond_sum();
  ck.mi_p_sum = acc.p_sum();
  ck.mi_frames = acc.frames();
  return ck;
}

}  // namespace

ParamVector checkpoint_params(const Checkpoint& ck, const std::string& arch_name) {
  const Architecture arch = Architecture::by_name(arch_name);
  if (ck.arch_descriptor != arch.descriptor())
    throw Error("checkpoint architecture '" + ck.arch_descriptor + "' does not match '" + arch.descriptor() + "'");
  ParamVector p{ParamLayout(arch), ck.w};
  if (p.values.size() != p.layout.size()) throw Error("checkpoint parameter count does not match the architecture");
  return p;
}

TrainResult train(const ExperimentConfig& config, const TrainOptions& options) {
  config.validate();
  const std::filesystem::path dir = config.resolved_output_dir();
  std::filesystem::create_directories(dir);
  const std::filesystem::path ck_path = dir / artifact::kCheckpoint;

  const auto stream = open_stream(config.stream);
  const int W = stream->width(), H = stream->height();
  const Architecture arch = Architecture::by_name(config.arch);
  DynamicsState dyn(init_params(arch, config.seed), config.cal);
  EntropyState entropy = make_entropy_state(config.criterion, config.objective, arch.symbols());
  GazeTracker tracker(config.gaze, W, H);
  MIAccumulator acc(arch.symbols());
  const DensitySpec density{config.train_density, config.window_fraction, config.seed};
  const bool gaze_needed = density.needs_gaze();

  std::size_t start = 0;
  if (options.resume) {
    const Checkpoint ck = load_checkpoint(ck_path);
    if (ck.config_hash != config.hash()) throw ConfigError("checkpoint was written by a different configuration");
    dyn.w = checkpoint_params(ck, config.arch);
    dyn.v = ck.v;
    dyn.step = ck.step;
    entropy.nu = ck.nu;
    entropy.s = ck.s;
    entropy.s_prev = ck.s_prev;
    GazeState g = tracker.state();
    g.position = ck.gaze_position;
    g.velocity = ck.gaze_velocity;
    tracker.set_state(g);
    acc.restore(ck.mi_h_cond_sum, ck.mi_p_sum, ck.mi_frames);
    start = ck.frame;
  }
  write_text_file(dir / artifact::kConfig, config.to_text());

  const std::optional<std::size_t> keep = options.resume ? std::optional<std::size_t>(start) : std::nullopt;
  CsvLog metrics(dir / artifact::kMetrics, "frame,U,h_cond,h_out,penalty", keep);
  CsvLog train_mi(dir / artifact::kTrainMI, "frame,h_cond,h_out,mi", keep);
  std::optional<CsvLog> scanpath;
  if (gaze_needed) scanpath.emplace(dir / artifact::kScanpath, "frame,x,y,vx,vy", keep);

  const std::size_t end = std::min(config.train_frames, options.stop_at.value_or(config.train_frames));
  TrainResult result;
  result.first_frame = start;
  result.output_dir = dir;
  const auto t0 = std::chrono::steady_clock::now();
  Frame prev;
  if (start > 0 && start < end) prev = stream->frame(start - 1);
  const char* phase = "ingest";
  std::size_t t = start;
  try {
    for (; t < end; ++t) {
      phase = "ingest";
      Frame frame = stream->frame(t);
      const GazeState* g = nullptr;
      if (gaze_needed) {
        phase = "gaze";
        g = &tracker.advance(frame, t > 0 ? &prev : nullptr);
        scanpath->row("%zu,%.6f,%.6f,%.6f,%.6f\n", t, g->position.x, g->position.y, g->velocity.x, g->velocity.y);
      }
      phase = "support";
      const DensitySupport support = density_support(density, g, W, H, t);
      phase = "potential";
      const PotentialResult r = frame_potential_and_grad(dyn.w, frame, support, entropy);
      acc.add(r.potential.h_cond, r.avg);
      phase = "integrate";
      cal_step(dyn, r.grad);
      if (t % config.log_interval == 0 || t + 1 == config.train_frames) {
        const FramePotential& p = r.potential;
        metrics.row("%zu,%.10g,%.10g,%.10g,%.10g\n", t, p.U, p.h_cond, p.h_out, p.penalty);
        const MIReport m = acc.report(0, t + 1, config.train_density);
        train_mi.row("%zu,%.10g,%.10g,%.10g\n", t, m.h_cond, m.h_out, m.mi);
      }
      phase = "checkpoint";
      if (config.checkpoint_interval > 0 && (t + 1) % config.checkpoint_interval == 0 && t + 1 < end)
        save_checkpoint(ck_path, make_checkpoint(config, t + 1, dyn, entropy, tracker.state(), acc));
      prev = std::move(frame);
      if (options.progress) options.progress(t + 1);
    }
  } catch (const Error& e) {
    throw Error("frame " + std::to_string(t) + ", phase " + phase + ": " + e.what());
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  metrics.flush();
  train_mi.flush();
  save_checkpoint(ck_path, make_checkpoint(config, end, dyn, entropy, tracker.state(), acc));
  result.frames_consumed = end;
  if (acc.frames() > 0) result.train_mi = acc.report(0, end, config.train_density);
  result.params = dyn.w;
  return result;
}

std::vector<MIReport> evaluate(const ExperimentConfig& config, const ParamVector& params) {
  config.validate();
  if (config.test_frames == 0) throw ConfigError("evaluation needs test.frames > 0");
  const auto stream = open_stream(config.stream);
  const std::size_t t1 = config.train_frames, t2 = t1 + config.test_frames;
  return cross_density_table(params, *stream, t1, t2, config.gaze, config.window_fraction);
}

std::string report_json(const ExperimentConfig& config, const std::vector<MIReport>& rows) {
  nlohmann::ordered_json j;
  j["stream"] = to_string(config.stream.kind);
  j["arch"] = config.arch;
  j["train_density"] = to_string(config.train_density);
  j["criterion"] = to_string(config.criterion);
  j["seed"] = config.seed;
  j["rows"] = nlohmann::ordered_json::array();
  for (const MIReport& r : rows) {
    j["rows"].push_back({{"test_density", to_string(r.density)},
                         {"h_cond", r.h_cond},
                         {"h_out", r.h_out},
                         {"mi", r.mi},
                         {"t1", r.t1},
                         {"t2", r.t2}});
  }
  return j.dump(2) + "\n";
}

GridSpec GridSpec::parse(const std::string& text) {
  GridSpec g;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("grid line " + std::to_string(lineno) + ": expected key=v1,v2,...");
    auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    std::pair<std::string, std::vector<std::string>> axis{strip(line.substr(0, eq)), {}};
    std::istringstream vs(line.substr(eq + 1));
    std::string v;
    while (std::getline(vs, v, ',')) {
      v = strip(v);
      if (!v.empty()) axis.second.push_back(v);
    }
    if (axis.second.empty()) throw ConfigError("grid line " + std::to_string(lineno) + ": no values");
    for (const auto& a : g.axes)
      if (a.first == axis.first) throw ConfigError("grid: duplicate axis '" + axis.first + "'");
    g.axes.push_back(std::move(axis));
  }
  return g;
}

std::vector<ConfigOverrides> GridSpec::cells() const {
  std::vector<ConfigOverrides> out{{}};
  for (const auto& [key, values] : axes) {
    std::vector<ConfigOverrides> next;
    for (const auto& base : out)
      for (const auto& v : values) {
        ConfigOverrides o = base;
        o.emplace_back(key, v);
        next.push_back(std::move(o));
      }
    out = std::move(next);
  }
  return out;
}

namespace {

std::string overrides_label(const ConfigOverrides& o) {
  std::string s;
  for (const auto& [k, v] : o) s += (s.empty() ? "" : ";") + k + "=" + v;
  return s;
}

std::string fmt_row(const std::string& label, const GridCellResult& c, const MIReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, ",%s,%s,%s,%.10g,%.10g,%.10g\n", c.train_density.c_str(), c.criterion.c_str(),
                to_string(r.density).c_str(), r.h_cond, r.h_out, r.mi);
  return "\"" + label + "\"" + buf;
}

}  // namespace

std::string grid_table_csv(const std::vector<GridCellResult>& cells) {
  std::string out = "cell,train_density,criterion,test_density,h_cond,h_out,mi\n";
  for (const auto& c : cells)
    for (const auto& r : c.rows) out += fmt_row(overrides_label(c.overrides), c, r);
  return out;
}

std::string grid_best_csv(const std::vector<GridCellResult>& cells) {
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<const GridCellResult*, const MIReport*>> best;
  for (const auto& c : cells)
    for (const auto& r : c.rows) {
      auto& slot = best[{c.train_density, c.criterion, to_string(r.density)}];
      if (!slot.first || r.mi > slot.second->mi) slot = {&c, &r};
    }
  std::string out = "cell,train_density,criterion,test_density,h_cond,h_out,mi\n";
  for (const auto& [key, v] : best) out += fmt_row(overrides_label(v.first->overrides), *v.first, *v.second);
  return out;
}

GridCellResult read_report(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  const std::vector<std::uint8_t> bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed report " + path.string() + ": " + e.what());
  }
  GridCellResult c;
  c.overrides = overrides;
  c.train_density = j.at("train_density").get<std::string>();
  c.criterion = j.at("criterion").get<std::string>();
  for (const auto& row : j.at("rows")) {
    MIReport r;
    r.density = parse_density_kind(row.at("test_density").get<std::string>());
    r.h_cond = row.at("h_cond").get<double>();
    r.h_out = row.at("h_out").get<double>();
    r.mi = row.at("mi").get<double>();
    c.rows.push_back(r);
  }
  return c;
}

}  // namespace calfoa
