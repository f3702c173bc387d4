#include <benchmark/benchmark.h>

#include "calfoa/attention.hpp"
#include "calfoa/dynamics.hpp"
#include "calfoa/network.hpp"
#include "calfoa/objective.hpp"
#include "calfoa/rng.hpp"
#include "calfoa/stream.hpp"
#include "calfoa/theory.hpp"

namespace {

using namespace calfoa;

Frame noise_frame(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Frame f(w, h);
  for (double& v : f.pixels) v = rng.uniform();
  return f;
}

Architecture arch_of(int index) { return index == 0 ? Architecture::small() : Architecture::deeper(); }

// args: architecture (0 = S, 1 = D), width, height
void BM_Forward(benchmark::State& state) {
  const auto params = init_params(arch_of(static_cast<int>(state.range(0))), 1);
  const auto patch = full_frame(noise_frame(static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 2));
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, patch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(patch.pixels.size()));
}
BENCHMARK(BM_Forward)->Args({0, 15, 15})->Args({0, 240, 180})->Args({1, 240, 180})->Unit(benchmark::kMillisecond);

void BM_Backward(benchmark::State& state) {
  const auto params = init_params(arch_of(static_cast<int>(state.range(0))), 1);
  const auto patch = full_frame(noise_frame(static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 2));
  ForwardCache cache;
  const auto out = forward(params, patch, &cache);
  const std::vector<double> g(out.probs.size(), 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(backward(params, cache, g));
}
BENCHMARK(BM_Backward)->Args({0, 15, 15})->Args({0, 240, 180})->Args({1, 240, 180})->Unit(benchmark::kMillisecond);

// One training frame: potential, gradient and CAL step. args: architecture, density (0 = UNI, 1 = FOA)
void BM_TrainingFrame(benchmark::State& state) {
  const auto arch = arch_of(static_cast<int>(state.range(0)));
  const Frame frame = noise_frame(240, 180, 3);
  const DensitySpec spec{state.range(1) == 0 ? DensityKind::UNI : DensityKind::FOA};
  const GazeState gaze = initial_gaze(GazeParams{}, frame.width, frame.height);
  const auto support = density_support(spec, &gaze, frame.width, frame.height);
  EntropyState entropy = make_entropy_state(Criterion::AVG, ObjectiveParams{}, arch.symbols());
  DynamicsState dyn(init_params(arch, 4), CalParams{});
  for (auto _ : state) {
    const auto r = frame_potential_and_grad(dyn.w, frame, support, entropy);
    cal_step(dyn, r.grad);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_TrainingFrame)->Args({0, 1})->Args({0, 0})->Args({1, 0})->Unit(benchmark::kMillisecond);

void BM_GravitationalField(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Frame frame = noise_frame(n, n, 5);
  const MassMap masses = compute_mass_map(frame, nullptr, 0.1, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(gravitational_field(masses, {n * 0.3, n * 0.6}, 1.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n) * n);
}
BENCHMARK(BM_GravitationalField)->Arg(64)->Arg(280);

void BM_CalStep(benchmark::State& state) {
  DynamicsState dyn(init_params(Architecture::small(), 6), CalParams{});
  const std::vector<double> grad(dyn.w.size(), 1e-3);
  for (auto _ : state) cal_step(dyn, grad);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grad.size()));
}
BENCHMARK(BM_CalStep);

void BM_EpsBvp(benchmark::State& state) {
  ToyProblem p = default_toy_set().front();
  p.eps = 0.05;
  p.steps_per_unit = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_eps_bvp(p));
}
BENCHMARK(BM_EpsBvp)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
