// calfoa: train, evaluate and inspect online MI learners driven by a focus of attention.

#include <sys/wait.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "calfoa/config.hpp"
#include "calfoa/error.hpp"
#include "calfoa/evaluation.hpp"
#include "calfoa/experiment.hpp"
#include "calfoa/pgm.hpp"
#include "calfoa/scanpath_io.hpp"
#include "calfoa/stream.hpp"
#include "calfoa/theory.hpp"

namespace fs = std::filesystem;
using namespace calfoa;

namespace {

ConfigOverrides parse_sets(const std::vector<std::string>& sets) {
  ConfigOverrides out;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  return out;
}

ExperimentConfig config_from(const std::string& path, const std::vector<std::string>& sets) {
  if (path.empty()) return parse_config("", parse_sets(sets));
  return load_config(path, parse_sets(sets));
}

void print_reports(const std::vector<MIReport>& rows) {
  std::printf("%-6s %10s %10s %10s\n", "test", "h_cond", "h_out", "mi");
  for (const auto& r : rows) std::printf("%-6s %10.6f %10.6f %10.6f\n", to_string(r.density).c_str(), r.h_cond, r.h_out, r.mi);
}

int run_train(const std::string& cfg, const std::vector<std::string>& sets, std::optional<std::size_t> stop_at,
              bool resume, bool then_eval) {
  const ExperimentConfig config = config_from(cfg, sets);
  TrainOptions opt;
  opt.stop_at = stop_at;
  opt.resume = resume;
  const TrainResult r = train(config, opt);
  std::printf("trained frames [%zu, %zu) in %.2f s (%.1f frames/s) -> %s\n", r.first_frame, r.frames_consumed,
              r.seconds, r.frames_per_second(), r.output_dir.c_str());
  if (r.train_mi)
    std::printf("training-segment mi %.6f (h_cond %.6f, h_out %.6f)\n", r.train_mi->mi, r.train_mi->h_cond,
                r.train_mi->h_out);
  if (then_eval && r.frames_consumed == config.train_frames) {
    const auto rows = evaluate(config, r.params);
    write_text_file(r.output_dir / artifact::kReport, report_json(config, rows));
    print_reports(rows);
  }
  return 0;
}

int run_eval(const std::string& cfg, const std::vector<std::string>& sets, const std::string& checkpoint,
             const std::string& out) {
  const ExperimentConfig config = config_from(cfg, sets);
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (ck.config_hash != config.hash())
    std::fprintf(stderr, "warning: checkpoint was trained with a different configuration\n");
  const auto rows = evaluate(config, checkpoint_params(ck, config.arch));
  const fs::path dest = out.empty() ? config.resolved_output_dir() / artifact::kReport : fs::path(out);
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  write_text_file(dest, report_json(config, rows));
  print_reports(rows);
  return 0;
}

int run_gen_stream(const std::string& cfg, const std::vector<std::string>& sets, const std::string& out) {
  const ExperimentConfig config = config_from(cfg, sets);
  const auto stream = open_stream(config.stream);
  write_frame_directory(*stream, out);
  std::printf("wrote %zu frames to %s\n", stream->total_frames(), out.c_str());
  return 0;
}

int run_scanpath(const std::string& cfg, const std::vector<std::string>& sets, std::size_t frames, int grid,
                 const std::string& out) {
  const ExperimentConfig config = config_from(cfg, sets);
  const auto stream = open_stream(config.stream);
  const std::size_t n = std::min(frames, stream->total_frames());
  const auto path = replay_gaze(*stream, 0, n, config.gaze);
  fs::create_directories(out);
  write_foa_artifacts(out, path, stream->width(), stream->height(), grid, grid);
  const auto& last = path.back();
  std::printf("%zu gaze samples, final position (%.2f, %.2f) -> %s\n", path.size(), last.position.x,
              last.position.y, out.c_str());
  return 0;
}

int run_verify(const std::string& out, int steps_per_unit, const std::string& only) {
  bool ok = true;
  if (!out.empty()) fs::create_directories(out);
  for (ToyProblem p : default_toy_set()) {
    if (!only.empty() && p.name != only) continue;
    p.steps_per_unit = steps_per_unit;
    const SweepResult r = sweep(p, default_eps_values());
    const bool mono = r.monotone();
    ok &= mono && r.max_residual() < 1e-8;
    std::printf("# %s (beta %s): monotone=%s value_ratio=%.4f deriv_ratio=%.4f max_residual=%.2e\n", p.name.c_str(),
                p.beta > 0 ? ">0" : "=0", mono ? "yes" : "no", r.value_ratio(), r.deriv_ratio(), r.max_residual());
    const std::string csv = sweep_csv(r);
    std::fputs(csv.c_str(), stdout);
    if (!out.empty()) write_text_file(fs::path(out) / (p.name + ".csv"), csv);
  }
  return ok ? 0 : 1;
}

int run_grid(const std::string& cfg, const std::vector<std::string>& sets, const std::string& grid_path, int jobs) {
  const ExperimentConfig base = config_from(cfg, sets);
  const std::vector<std::uint8_t> bytes = read_file_bytes(grid_path);
  const GridSpec grid = GridSpec::parse(std::string(bytes.begin(), bytes.end()));
  const auto cells = grid.cells();
  const fs::path root = base.resolved_output_dir();
  const std::string self = fs::read_symlink("/proc/self/exe").string();
  std::vector<fs::path> dirs;
  std::vector<pid_t> running;
  int failures = 0;
  auto reap = [&] {
    int status = 0;
    const pid_t pid = wait(&status);
    if (pid > 0 && !(WIFEXITED(status) && WEXITSTATUS(status) == 0)) ++failures;
    std::erase(running, pid);
  };
  for (std::size_t i = 0; i < cells.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "cell_%03zu", i);
    dirs.push_back(root / name);
    std::vector<std::string> args{self, "train", "--eval"};
    if (!cfg.empty()) args.insert(args.end(), {"--config", cfg});
    for (const auto& s : sets) args.insert(args.end(), {"--set", s});
    for (const auto& [k, v] : cells[i]) args.insert(args.end(), {"--set", k + "=" + v});
    // an absolute cell directory is not re-rooted again by the child
    args.insert(args.end(), {"--set", "output.dir=" + fs::absolute(dirs.back()).string()});
    while (static_cast<int>(running.size()) >= jobs) reap();
    const pid_t pid = fork();
    if (pid < 0) throw Error("fork failed");
    if (pid == 0) {
      unsetenv(kOutputRootEnv);
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      execv(self.c_str(), argv.data());
      _exit(127);
    }
    running.push_back(pid);
  }
  while (!running.empty()) reap();
  std::vector<GridCellResult> results;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const fs::path report = dirs[i] / artifact::kReport;
    if (fs::exists(report)) results.push_back(read_report(report, cells[i]));
  }
  write_text_file(root / "grid_table.csv", grid_table_csv(results));
  write_text_file(root / "grid_best.csv", grid_best_csv(results));
  std::printf("%zu/%zu cells completed; summary in %s\n", results.size(), cells.size(), root.c_str());
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online mutual-information learning along a focus-of-attention trajectory"};
  app.require_subcommand(1);

  std::string cfg, checkpoint, out, grid_path, only;
  std::vector<std::string> sets;
  std::size_t stop_at = 0, frames = 2000;
  bool resume = false, then_eval = false;
  int grid_cells = 28, steps_per_unit = 2000, jobs = 1;

  auto add_config = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--config", cfg, "key=value experiment configuration")->check(CLI::ExistingFile);
    if (required) o->required();
    c->add_option("--set", sets, "override a configuration key (key=value)");
  };

  auto* train_cmd = app.add_subcommand("train", "train online and write metrics and a checkpoint");
  add_config(train_cmd, true);
  auto* stop_opt = train_cmd->add_option("--stop-at", stop_at, "checkpoint and stop after this many frames");
  train_cmd->add_flag("--resume", resume, "continue from the checkpoint in the output directory");
  train_cmd->add_flag("--eval", then_eval, "evaluate on the test segment after training");

  auto* eval_cmd = app.add_subcommand("eval", "cross-density MI table on the test segment");
  add_config(eval_cmd, true);
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", out, "report path (default <output>/report.json)");

  auto* gen_cmd = app.add_subcommand("gen-stream", "write the configured stream as a PGM directory");
  add_config(gen_cmd, false);
  gen_cmd->add_option("--out", out, "destination directory")->required();

  auto* scan_cmd = app.add_subcommand("scanpath", "integrate the gaze and write heatmap and scatter artifacts");
  add_config(scan_cmd, false);
  scan_cmd->add_option("--frames", frames, "frames to integrate");
  scan_cmd->add_option("--grid", grid_cells, "heatmap cells per side")->check(CLI::PositiveNumber);
  scan_cmd->add_option("--out", out, "destination directory")->required();

  auto* verify_cmd = app.add_subcommand("verify-theorem", "epsilon sweep of the regularized problem");
  verify_cmd->add_option("--out", out, "directory for one CSV per toy problem");
  verify_cmd->add_option("--steps-per-unit", steps_per_unit, "grid steps per unit time")->check(CLI::Range(64, 1000000));
  verify_cmd->add_option("--problem", only, "run a single toy problem");

  auto* grid_cmd = app.add_subcommand("grid", "train and evaluate every cell of a parameter grid");
  add_config(grid_cmd, true);
  grid_cmd->add_option("--grid", grid_path, "key=v1,v2,... axes")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--jobs", jobs, "concurrent cells")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train_cmd)
      return run_train(cfg, sets, *stop_opt ? std::optional<std::size_t>(stop_at) : std::nullopt, resume, then_eval);
    if (*eval_cmd) return run_eval(cfg, sets, checkpoint, out);
    if (*gen_cmd) return run_gen_stream(cfg, sets, out);
    if (*scan_cmd) return run_scanpath(cfg, sets, frames, grid_cells, out);
    if (*verify_cmd) return run_verify(out, steps_per_unit, only);
    if (*grid_cmd) return run_grid(cfg, sets, grid_path, jobs);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "calfoa: %s\n", e.what());
    return 2;
  }
  return 0;
}
