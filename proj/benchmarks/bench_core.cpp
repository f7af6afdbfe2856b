#include <benchmark/benchmark.h>

#include "hesskit/dataset.hpp"
#include "hesskit/lanczos.hpp"
#include "hesskit/mlp.hpp"
#include "hesskit/oracle.hpp"
#include "hesskit/rng.hpp"
#include "hesskit/sensitivity.hpp"
#include "hesskit/solver.hpp"
#include "hesskit/train.hpp"

namespace {

using namespace hesskit;

struct Fixture {
  MlpSpec spec;
  Dataset data;
  ParamVector theta;

  Fixture() {
    data = make_blob_fixture(fixture_preset("imbalanced-4", 1));
    spec.layer_widths = {data.dim, 48, data.classes};
    TrainConfig tc;
    tc.epochs = 12;
    tc.seed = 1;
    theta = train(spec, data, tc).theta;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_gradient(benchmark::State& state) {
  auto& f = fixture();
  const Batch batch =
      Batch::gather(f.data, uniform_batch_indices(f.data, Split::train,
                                                  static_cast<int>(state.range(0)), 2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(gradient(f.spec, f.theta, batch));
  }
}
BENCHMARK(BM_gradient)->Arg(64)->Arg(256);

void BM_hvp(benchmark::State& state) {
  auto& f = fixture();
  const Batch batch =
      Batch::gather(f.data, uniform_batch_indices(f.data, Split::train,
                                                  static_cast<int>(state.range(0)), 2));
  Rng rng(3);
  const ParamVector v = rng.gaussian_vector(f.theta.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(hvp(f.spec, f.theta, batch, v));
  }
}
BENCHMARK(BM_hvp)->Arg(64)->Arg(256);

void BM_lanczos(benchmark::State& state) {
  auto& f = fixture();
  const HvpOracle oracle = model_oracle(
      f.spec, f.theta,
      Batch::gather(f.data, uniform_batch_indices(f.data, Split::train, 256, 2)));
  const ParamVector q1 = lanczos_start_vector(f.theta.size(), 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lanczos(oracle, q1, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_lanczos)->Arg(10)->Arg(30);

void BM_solver(benchmark::State& state) {
  Rng rng(9);
  SensitivityMatrix s;
  s.s.assign(8, std::vector<double>(10, 0.0));
  for (auto& row : s.s) {
    for (auto& v : row) v = rng.gaussian();
  }
  std::vector<double> acc(10);
  for (auto& a : acc) a = rng.uniform(0.4, 0.99);
  WeightConfig wc;
  const ClassWeights w = class_weights(acc, wc);
  BudgetConfig budget;
  budget.alpha_max = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_coefficients(s, acc, w.w, budget, wc));
  }
}
BENCHMARK(BM_solver);

void BM_spiked_oracle_apply(benchmark::State& state) {
  SpikedOperatorSpec spec;
  spec.dim = 500;
  spec.spike_values = {828.6, 577.8, 310.7, 243.5, 153.2, 112.5, 58.9, 20.5};
  const SpikedOperator op = spiked_oracle(spec);
  Rng rng(4);
  const ParamVector v = rng.gaussian_vector(spec.dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(op.oracle.apply(v));
  }
}
BENCHMARK(BM_spiked_oracle_apply);

}  // namespace

BENCHMARK_MAIN();
