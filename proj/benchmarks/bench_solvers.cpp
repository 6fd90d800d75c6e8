#include <benchmark/benchmark.h>

#include "eit/forward.hpp"
#include "eit/inverse.hpp"
#include "eit/phantom.hpp"

namespace {

using namespace eit;

struct Problem {
  TriMesh mesh;
  ElectrodeLayout layout;
  DifferenceOperators ops;
  Eigen::MatrixXd s;
  Eigen::VectorXd dv;
};

const Problem& problem() {
  static const Problem p = [] {
    Problem q;
    q.mesh = generate_disk_mesh(0.1, 1024);
    q.layout = place_electrodes(q.mesh, 16);
    q.ops = build_difference_operators(q.mesh);
    q.s = sensitivity_matrix(q.mesh, q.layout,
                             ConductivityField::homogeneous(q.mesh.num_elements(), 1.0), 1.0)
              .s;
    const Eigen::VectorXd ds = assign_conductivity(q.mesh, lung_model(7)).values().array() - 1.0;
    q.dv = add_noise(q.s * ds, 50.0, 42);
    return q;
  }();
  return p;
}

// Reports wall time per ADMM iteration; the factorisation is shared.
void BM_AdmmIteration(benchmark::State& state, Regularizer method) {
  const auto& p = problem();
  static const AdmmSolver solver(p.s, p.ops, 1e-10);
  SolverConfig cfg;
  cfg.tol = 1e-300;
  std::int64_t iterations = 0;
  for (auto _ : state) {
    const ReconResult r = solver.run(method, p.dv, cfg);
    benchmark::DoNotOptimize(r.field.data());
    iterations += static_cast<std::int64_t>(r.diagnostics.size());
  }
  state.SetItemsProcessed(iterations);
}
BENCHMARK_CAPTURE(BM_AdmmIteration, nwatv, Regularizer::kNwatv)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_AdmmIteration, fotv, Regularizer::kFotv)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_AdmmIteration, tv, Regularizer::kTv)->Unit(benchmark::kMillisecond);

void BM_SigmaFactorisation(benchmark::State& state) {
  const auto& p = problem();
  for (auto _ : state) {
    SigmaUpdateSolver solver(p.s, p.ops.d, 1e-10);
    benchmark::DoNotOptimize(&solver);
  }
}
BENCHMARK(BM_SigmaFactorisation)->Unit(benchmark::kMillisecond);

void BM_ForwardFrame(benchmark::State& state) {
  const TriMesh mesh = generate_disk_mesh(0.1, static_cast<std::size_t>(state.range(0)));
  const auto layout = place_electrodes(mesh, 16);
  const auto sigma = assign_conductivity(mesh, lung_model(7));
  for (auto _ : state) {
    const VoltageFrame f = simulate_frame(mesh, sigma, layout, 1.0);
    benchmark::DoNotOptimize(f.data.data());
  }
  state.counters["elements"] = static_cast<double>(mesh.num_elements());
}
BENCHMARK(BM_ForwardFrame)->Arg(1024)->Arg(4096)->Arg(16384)->Unit(benchmark::kMillisecond);

void BM_Sensitivity(benchmark::State& state) {
  const auto& p = problem();
  const auto sigma0 = ConductivityField::homogeneous(p.mesh.num_elements(), 1.0);
  for (auto _ : state) {
    const auto sens = sensitivity_matrix(p.mesh, p.layout, sigma0, 1.0);
    benchmark::DoNotOptimize(sens.s.data());
  }
}
BENCHMARK(BM_Sensitivity)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
