#include <benchmark/benchmark.h>

#include <vector>

#include "coinfer/dnn_verify.hpp"
#include "coinfer/harness.hpp"
#include "coinfer/rd_bounds.hpp"
#include "coinfer/sca_solver.hpp"
#include "coinfer/system_model.hpp"

using namespace coinfer;

namespace {

const Scenario& default_scenario() {
  static const Scenario sc =
      load_scenario(std::string(COINFER_SOURCE_DIR) + "/configs/default_paper.json");
  return sc;
}

void BM_Evaluate(benchmark::State& state) {
  const Scenario& sc = default_scenario();
  const Decision d{0.4, 8e8, 0.3, 0.7, 3e9};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(d, sc));
}
BENCHMARK(BM_Evaluate);

void BM_DistortionBound(benchmark::State& state) {
  const ModelProfile& m = default_scenario().model;
  for (auto _ : state) benchmark::DoNotOptimize(distortion_lower_bound(0.4, 0.7, m));
}
BENCHMARK(BM_DistortionBound);

void BM_ScaOptimize(benchmark::State& state) {
  const Scenario& sc = default_scenario();
  for (auto _ : state) benchmark::DoNotOptimize(sca_optimize(sc));
}
BENCHMARK(BM_ScaOptimize)->Unit(benchmark::kMillisecond);

void BM_GridOracle(benchmark::State& state) {
  const Scenario& sc = default_scenario();
  const int pts = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grid_oracle(sc, pts));
  state.SetItemsProcessed(state.iterations() * pts * pts * pts * pts * pts);
}
BENCHMARK(BM_GridOracle)->Arg(7)->Arg(15)->UseRealTime()->Unit(benchmark::kMillisecond);

const DnnNetwork& fcdnn16() {
  static const DnnNetwork net = build_network(
      load_network_spec(std::string(COINFER_SOURCE_DIR) + "/configs/fcdnn16.json"));
  return net;
}

void BM_Forward(benchmark::State& state) {
  const DnnNetwork& net = fcdnn16();
  const Vector x = sample_unit_ball(net.input_dim(), 1, 3).front();
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
}
BENCHMARK(BM_Forward)->Unit(benchmark::kMicrosecond);

void BM_Prune(benchmark::State& state) {
  const DnnNetwork& net = fcdnn16();
  const PruneStrategy strat{state.range(0) == 0 ? PruneKind::kMagnitude : PruneKind::kRandom, 1};
  for (auto _ : state) benchmark::DoNotOptimize(prune(net, 0.5, 0.5, strat));
}
BENCHMARK(BM_Prune)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
