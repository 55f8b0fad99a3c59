// Serial reference vs OpenMP kernel for the iMagLS loss and gradient on the
// default N=1 rigid-sphere problem.

#include <benchmark/benchmark.h>

#include <memory>

#include "imagls/imagls_opt.h"
#include "imagls/pipeline.h"

namespace {

struct Fixture {
  Fixture()
      : ref(imagls::BuildReference(config)),
        ild(imagls::BuildIldSetup(config, ref)),
        init(imagls::MaglsEncode(ref, config.low_order, config.magls)),
        problem(imagls::BuildProblem(ref, init, config.imagls, ild)),
        x(problem.packing.Pack(init)),
        grad(x.size()) {}

  imagls::PipelineConfig config;
  imagls::HrtfSet ref;
  imagls::IldSetup ild;
  imagls::ShHrtf init;
  imagls::ImaglsProblem problem;
  Eigen::VectorXd x;
  Eigen::VectorXd grad;
};

Fixture& SharedFixture() {
  static Fixture* fixture = new Fixture();
  return *fixture;
}

void BM_LossGradient(benchmark::State& state, imagls::ExecutionPolicy policy) {
  Fixture& f = SharedFixture();
  for (auto _ : state) {
    const imagls::LossTerms t =
        imagls::EvaluateLoss(f.problem, f.x, 1e-3, &f.grad, policy);
    benchmark::DoNotOptimize(t.total);
  }
}

void BM_LossOnly(benchmark::State& state, imagls::ExecutionPolicy policy) {
  Fixture& f = SharedFixture();
  for (auto _ : state) {
    const imagls::LossTerms t = imagls::EvaluateLoss(f.problem, f.x, 1e-3, nullptr, policy);
    benchmark::DoNotOptimize(t.total);
  }
}

BENCHMARK_CAPTURE(BM_LossGradient, serial, imagls::ExecutionPolicy::kSerial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_LossGradient, openmp, imagls::ExecutionPolicy::kParallel)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_LossOnly, serial, imagls::ExecutionPolicy::kSerial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_LossOnly, openmp, imagls::ExecutionPolicy::kParallel)
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
