#include <benchmark/benchmark.h>

#include <random>

#include "oracles.hpp"
#include "spatialrl/features.hpp"
#include "spatialrl/geometry.hpp"
#include "spatialrl/homography.hpp"
#include "spatialrl/keyframes.hpp"
#include "spatialrl/matching.hpp"
#include "spatialrl/synthetic.hpp"
#include "spatialrl/toy_policy.hpp"

using namespace spatialrl;

static void BM_DetectFeatures(benchmark::State& state) {
  const Frame frame = synthetic::textured_scene(320, 240, 21);
  for (auto _ : state) benchmark::DoNotOptimize(detect_features(frame));
}
BENCHMARK(BM_DetectFeatures)->Unit(benchmark::kMillisecond);

static void BM_MatchDescriptors(benchmark::State& state) {
  const auto seq = synthetic::pan_sequence(synthetic::textured_scene(400, 240, 21), 320, 240, 2, 6.0);
  const auto a = detect_features(seq.frames[0]);
  const auto b = detect_features(seq.frames[1]);
  for (auto _ : state) benchmark::DoNotOptimize(match_descriptors(a.descriptors, b.descriptors));
}
BENCHMARK(BM_MatchDescriptors)->Unit(benchmark::kMillisecond);

static void BM_Ransac(benchmark::State& state) {
  const auto scenario = oracle::make_scenario(3, static_cast<std::size_t>(state.range(0)), 0.3, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_homography_ransac(scenario.pairs));
}
BENCHMARK(BM_Ransac)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_OverlapRatio(benchmark::State& state) {
  const auto frame = Quadrilateral::rectangle(640, 480);
  Eigen::Matrix3d m;
  m << 0.98, 0.05, 40.0, -0.04, 1.01, -25.0, 1e-5, -2e-5, 1.0;
  const auto moved = transform_corners(Homography(m), frame);
  for (auto _ : state) benchmark::DoNotOptimize(overlap_ratio(frame, moved, 640.0 * 480.0));
}
BENCHMARK(BM_OverlapRatio);

static void BM_ExtractKeyframes(benchmark::State& state) {
  const auto seq = synthetic::pan_sequence(synthetic::textured_scene(600, 200, 5), 160, 120,
                                           static_cast<int>(state.range(0)), 4.0);
  for (auto _ : state) benchmark::DoNotOptimize(extract_keyframes(seq));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExtractKeyframes)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_PolicyGradient(benchmark::State& state) {
  std::mt19937_64 rng(9);
  const auto inst = oracle::random_gradient_instance(
      rng, state.range(0) == 0 ? RatioLevel::kSequence : RatioLevel::kToken);
  for (auto _ : state) benchmark::DoNotOptimize(policy_gradient(inst.policy, inst.group, inst.config));
}
BENCHMARK(BM_PolicyGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
