#include "ahl/convpipe.hpp"
#include "ahl/hebb.hpp"
#include "ahl/metrics.hpp"
#include "ahl/qp.hpp"
#include "ahl/spkm.hpp"
#include "ahl/vmf.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace ahl;

namespace {

// A learner trained briefly on a 30-d mixture, roughly the synthetic benchmark's scale.
struct Trained {
  UnitRowMatrix data;
  hebb::LearnerState state;
  hebb::LearnerConfig config;
};

const Trained& trained() {
  static const Trained t = [] {
    Rng rng(1);
    const auto comps = vmf::random_mixture(30, 5, 400, 100.0, rng);
    Trained out{vmf::sample_mixture(comps, rng, true).x, {}, {}};
    out.config.k_w = 2;
    out.config.epochs = 2;
    out.config.rho_t = 0.8;
    out.config.eta = 0.1;
    out.state = hebb::fit(out.data, out.config);
    return out;
  }();
  return t;
}

void BM_Activate(benchmark::State& st) {
  const auto& t = trained();
  Index i = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(hebb::activate(t.state, t.data.matrix().row(i).transpose()));
    i = (i + 1) % t.data.rows();
  }
  st.counters["K"] = static_cast<double>(t.state.k());
}
BENCHMARK(BM_Activate);

void BM_TrainStep(benchmark::State& st) {
  const auto& t = trained();
  auto state = t.state;
  Index i = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(hebb::train_step(state, t.data.matrix().row(i).transpose(), t.config));
    i = (i + 1) % t.data.rows();
  }
}
BENCHMARK(BM_TrainStep);

void BM_SpkmFit(benchmark::State& st) {
  const auto& t = trained();
  for (auto _ : st) benchmark::DoNotOptimize(spkm::spkm_fit(t.data, t.state.k(), 1, 3));
}
BENCHMARK(BM_SpkmFit)->Unit(benchmark::kMillisecond);

void BM_QpSolve(benchmark::State& st) {
  const auto n = static_cast<Index>(st.range(0));
  Rng rng(2);
  std::normal_distribution<double> g;
  Matrix m(n, n), a(2 * n, n);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
  qp::QpProblem p;
  p.hessian = m.transpose() * m;
  p.linear = Vector::NullaryExpr(n, [&] { return g(rng); });
  p.ineq_lhs = a;
  p.ineq_rhs = Vector::Constant(2 * n, 0.5);
  p.ball_radius = 1.0;
  for (auto _ : st) benchmark::DoNotOptimize(qp::solve(p));
}
BENCHMARK(BM_QpSolve)->Arg(4)->Arg(30);

void BM_Reconstruct(benchmark::State& st) {
  const auto& t = trained();
  const Vector bias = metrics::calibrate_bias(t.state.w, t.data.matrix(), 0.5);
  const Matrix codes = metrics::compute_codes(t.data.matrix(), t.state.w, bias);
  Index i = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(metrics::reconstruct(codes.row(i).transpose(), t.state.w, bias));
    i = (i + 1) % codes.rows();
  }
}
BENCHMARK(BM_Reconstruct)->Unit(benchmark::kMicrosecond);

void BM_ConvForward(benchmark::State& st) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  conv::FeatureMap input(11, 11, 70);
  for (double& v : input.data) v = u(rng);
  conv::TrainedLayer layer;
  layer.filter_size = 4;
  layer.pool_size = 2;
  layer.in_channels = 70;
  layer.weights = UnitRowMatrix::normalized(Matrix::NullaryExpr(150, 4 * 4 * 70, [&] { return u(rng); })).matrix();
  layer.bias = Vector::Zero(150);
  for (auto _ : st) benchmark::DoNotOptimize(conv::conv_forward(input, layer));
}
BENCHMARK(BM_ConvForward)->Unit(benchmark::kMicrosecond);

void BM_SampleVmf(benchmark::State& st) {
  Rng rng(4);
  vmf::VmfComponent c;
  c.mu = vmf::random_unit_vector(30, rng);
  c.kappa = static_cast<double>(st.range(0));
  c.n_samples = 1000;
  for (auto _ : st) benchmark::DoNotOptimize(vmf::sample_vmf(c, rng));
  st.SetItemsProcessed(st.iterations() * c.n_samples);
}
BENCHMARK(BM_SampleVmf)->Arg(50)->Arg(150)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
