#include <benchmark/benchmark.h>

#include <vector>

#include "keyopt/distances.hpp"
#include "keyopt/geometry.hpp"
#include "keyopt/keygnet.hpp"
#include "keyopt/loss.hpp"
#include "keyopt/posesim.hpp"
#include "keyopt/rng.hpp"
#include "keyopt/sampling.hpp"
#include "keyopt/votes.hpp"

using namespace keyopt;

namespace {

std::vector<double> gaussian_samples(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& v : out) v = rng.normal();
  return out;
}

ObjectModel bench_object(std::size_t n_points) {
  return normalize_object(make_synthetic_object(
      ShapeKind::Box, Vec3(2.0, 1.0, 0.5), n_points, 7));
}

}  // namespace

static void BM_Wasserstein1Exact(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> a = gaussian_samples(n, 1);
  const std::vector<double> b = gaussian_samples(n, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(wasserstein1_exact(a, b));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Wasserstein1Exact)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

static void BM_FpsSample(benchmark::State& state) {
  const ObjectModel object = bench_object(2048);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(fps_sample(object.cloud, n, 0));
}
BENCHMARK(BM_FpsSample)->Arg(8)->Arg(64);

static void BM_ComputeVotes(benchmark::State& state) {
  const ObjectModel object = bench_object(2048);
  KeypointSet kps = fps_sample(object.cloud, 8, 0);
  // keep keypoints off the surface so the direction votes stay defined
  for (Vec3& c : kps.coords) c *= 0.9;
  const VoteScheme scheme = static_cast<VoteScheme>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(compute_votes(object.cloud, kps, scheme));
}
BENCHMARK(BM_ComputeVotes)->Arg(0)->Arg(1)->Arg(2);

static void BM_CombinedLoss(benchmark::State& state) {
  const ObjectModel object = bench_object(1024);
  const KeypointSet kps = fps_sample(object.cloud, 8, 0);
  const std::vector<ObjectModel> objects = {object};
  LossConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(combined_loss(kps, objects, cfg).total);
}
BENCHMARK(BM_CombinedLoss);

static void BM_KnnGraph(benchmark::State& state) {
  const ObjectModel object = bench_object(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(build_knn_graph(object.cloud, 8));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KnnGraph)->RangeMultiplier(2)->Range(256, 2048)->Complexity();

static void BM_EncoderForward(benchmark::State& state) {
  const ObjectModel object = bench_object(256);
  EncoderConfig arch;
  const GraphEncoder enc = GraphEncoder::random_init(arch, 3);
  for (auto _ : state)
    benchmark::DoNotOptimize(enc.forward(object.cloud));
}
BENCHMARK(BM_EncoderForward);

static void BM_HornAlign(benchmark::State& state) {
  Rng rng(11);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  KeypointSet model_kps, scene_kps;
  const RigidTransform pose = random_rigid_transform(rng, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    model_kps.coords.push_back(p);
    scene_kps.coords.push_back(pose.apply(p));
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(horn_align(model_kps, scene_kps));
}
BENCHMARK(BM_HornAlign)->Arg(8)->Arg(64);

BENCHMARK_MAIN();
