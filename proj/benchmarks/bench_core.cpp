#include <benchmark/benchmark.h>

#include "waygraph/envgen.hpp"
#include "waygraph/heatmap.hpp"
#include "waygraph/navgraph.hpp"
#include "waygraph/predictor.hpp"
#include "waygraph/sim.hpp"

using namespace waygraph;

namespace {

struct Fixture {
  Environment env = generate_environment(21, Profile::Rooms);
  NavGraph graph = refine(env, seed_graph(env, 21, 1.5), {}, {}).graph;
  std::vector<Episode> episodes = generate_episodes(env, graph, 20, 3);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_GeodesicField(benchmark::State& state) {
  const auto& f = fixture();
  const Point2 src = f.graph.nodes.begin()->second;
  for (auto _ : state) {
    GeodesicField field(f.env, src);
    benchmark::DoNotOptimize(field.distance_to(f.episodes.front().goal));
  }
}
BENCHMARK(BM_GeodesicField)->Unit(benchmark::kMillisecond);

void BM_Refine(benchmark::State& state) {
  const auto& f = fixture();
  const auto seeded = seed_graph(f.env, 21, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(refine(f.env, seeded, {}, {}).iterations);
}
BENCHMARK(BM_Refine)->Unit(benchmark::kMillisecond);

void BM_MakeTargetNms(benchmark::State& state) {
  const WaypointSet w{{0.3, 1.0}, {1.9, 2.2}, {3.5, 0.75}, {5.0, 2.9}};
  for (auto _ : state) benchmark::DoNotOptimize(nms(make_target(w)).size());
}
BENCHMARK(BM_MakeTargetNms);

void BM_RegressorForward(benchmark::State& state) {
  const RegressorModel model(1, static_cast<int>(state.range(0)), 1);
  const auto scan = take_scan(fixture().env, Pose{fixture().graph.nodes.begin()->second, 0.0});
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(scan));
}
BENCHMARK(BM_RegressorForward)->Arg(32)->Arg(64)->Arg(128);

void BM_Episode(benchmark::State& state, const char* regime) {
  const auto& f = fixture();
  const EpisodeContext ctx{&f.env, &f.graph, nullptr};
  RunOptions opt;
  opt.regime = parse_regime(regime);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto t = run_episode(ctx, f.episodes[i++ % f.episodes.size()], opt, {});
    benchmark::DoNotOptimize(t.poses.size());
  }
}
BENCHMARK_CAPTURE(BM_Episode, high_teleport, "high_teleport")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Episode, low_only, "low_only")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Episode, fixed_dist_1, "fixed_dist:1")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
