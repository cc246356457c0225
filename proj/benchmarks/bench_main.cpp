// Microbenchmarks for the per-point geometry pipeline and the solvers.

#include <benchmark/benchmark.h>

#include <cmath>
#include <map>

#include "todasurf/geometry.hpp"
#include "todasurf/transport.hpp"

namespace {

using namespace todasurf;

struct Fixture {
  SlAlgebra sl;
  FieldConfig fields;
  TodaModel model;
};

Fixture make_fixture(int n) {
  const int rank = n - 1;
  std::map<std::string, double> params{{"a", 0.8}};
  Fixture f{build_sl(n), exact_solution("liouville_cosh", rank, params),
            TodaModel{}};
  double prod = required_mu_product("liouville_cosh", rank, params);
  f.model = make_sl_toda(f.sl, prod, 1.0, 1.0, 0.2);
  return f;
}

void BM_GaugePotential(benchmark::State& state) {
  Fixture f = make_fixture(static_cast<int>(state.range(0)));
  double z = 0.3;
  for (auto _ : state) {
    GaugeData gd = gauge_at(f.model, f.fields, z, 0.45);
    benchmark::DoNotOptimize(gd.a1_l);
    z = z < 0.7 ? z + 1e-6 : 0.3;  // defeat caching of a fixed point
  }
}
BENCHMARK(BM_GaugePotential)->Arg(2)->Arg(3);

void BM_NormalFrame(benchmark::State& state) {
  Fixture f = make_fixture(static_cast<int>(state.range(0)));
  GaugeData gd = gauge_at(f.model, f.fields, 0.3, 0.45);
  for (auto _ : state) {
    NormalFrame frame = normal_frame(f.model, gd);
    benchmark::DoNotOptimize(frame.N0);
  }
}
BENCHMARK(BM_NormalFrame)->Arg(2)->Arg(3);

void BM_FundamentalForms(benchmark::State& state) {
  // Metric, christoffels, frame, second form, and curvature at one point:
  // the body of the batch runner's inner loop.
  Fixture f = make_fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    GaugeData gd = gauge_at(f.model, f.fields, 0.3, 0.45);
    Metric2 m = induced_metric(f.model, gd);
    Christoffel gamma = christoffel_direct(f.model, gd);
    NormalFrame frame = normal_frame(f.model, gd);
    auto b = second_form(f.model, gd, frame);
    double k = gauss_equation_curvature(f.model, gd, frame);
    benchmark::DoNotOptimize(m.det);
    benchmark::DoNotOptimize(gamma[0]);
    benchmark::DoNotOptimize(b[0]);
    benchmark::DoNotOptimize(k);
  }
}
BENCHMARK(BM_FundamentalForms)->Arg(2)->Arg(3);

void BM_GcrResiduals(benchmark::State& state) {
  Fixture f = make_fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    GcrResiduals r = gcr_residuals(f.model, f.fields, 0.3, 0.45, 1e-3);
    benchmark::DoNotOptimize(r.gauss);
  }
}
BENCHMARK(BM_GcrResiduals)->Arg(2)->Arg(3);

void BM_Transport(benchmark::State& state) {
  Fixture f = make_fixture(3);
  const Staircase path = Staircase::z_first({0.05, 0.1}, {0.75, 0.65});
  const double step = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    TransportState st = transport(f.model, f.fields, path, step);
    benchmark::DoNotOptimize(st.U);
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(1.3 / step));
}
BENCHMARK(BM_Transport)->Arg(100)->Arg(1000);

void BM_GoursatSolve(benchmark::State& state) {
  SlAlgebra sl = build_sl(2);
  TodaModel model = make_sl_toda(sl, 1.0, 1.0, 1.0);
  auto exact = [](double z, double w) { return std::log(std::cosh(z + w)); };
  auto on_z_min = [&](double w) { return Vec::Constant(1, exact(0.0, w)).eval(); };
  auto on_zbar_min = [&](double z) {
    return Vec::Constant(1, exact(z, 0.0)).eval();
  };
  const double h = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    GoursatResult r = goursat_solve(model, on_z_min, on_zbar_min, {0, 1, 0, 1}, h);
    benchmark::DoNotOptimize(r.max_residual);
  }
}
BENCHMARK(BM_GoursatSolve)->Arg(50)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
