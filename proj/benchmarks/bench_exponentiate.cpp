#include <benchmark/benchmark.h>

#include "volmom/generator.hpp"
#include "volmom/moments.hpp"
#include "volmom/propagator.hpp"

namespace {

const volmom::GeneratorMatrix& default_generator() {
    static const volmom::GeneratorMatrix g = [] {
        volmom::Lattice lat;
        const volmom::StockGrid grid = volmom::build_stock_grid(lat.nx, 100.0, {});
        volmom::RateCurve rates{{30.0}, {0.0}};
        return volmom::calibrate_and_assemble(lat, grid, {}, rates, 0.0, 0.25);
    }();
    return g;
}

void BM_DenseMultiply(benchmark::State& state) {
    const Eigen::MatrixXd u = volmom::elementary_step(default_generator().entries, 1.0 / 64.0);
    Eigen::MatrixXd v = u;
    for (auto _ : state) {
        v = u * u;
        benchmark::DoNotOptimize(v.data());
    }
}
BENCHMARK(BM_DenseMultiply)->Unit(benchmark::kMillisecond);

void BM_FastExponentiate(benchmark::State& state) {
    const auto& g = default_generator();
    volmom::ExpOptions opts;
    for (auto _ : state) {
        const Eigen::MatrixXd u = volmom::fast_exponentiate(g.entries, g.span(), opts);
        benchmark::DoNotOptimize(u.data());
    }
}
BENCHMARK(BM_FastExponentiate)->Unit(benchmark::kMillisecond);

void BM_Assemble(benchmark::State& state) {
    volmom::Lattice lat;
    const volmom::StockGrid grid = volmom::build_stock_grid(lat.nx, 100.0, {});
    volmom::RateCurve rates{{30.0}, {0.0}};
    for (auto _ : state) {
        const volmom::GeneratorMatrix g =
            volmom::calibrate_and_assemble(lat, grid, {}, rates, 0.0, 0.25);
        benchmark::DoNotOptimize(g.entries.data());
    }
}
BENCHMARK(BM_Assemble)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
