#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "cusplab/excursions.hpp"
#include "cusplab/sampler.hpp"
#include "cusplab/transfer.hpp"

using namespace cusplab;

namespace {

std::shared_ptr<const Coding> coding(double cutoff) {
  return std::make_shared<const Coding>(build_alphabet(load_preset("two_parabolic_real", {3, 3}), cutoff));
}

const SpectralData& spectral() {
  static const SpectralData sd = [] {
    FindDeltaOptions o;
    o.degree = 16;
    return find_delta(coding(1e-3), o);
  }();
  return sd;
}

}  // namespace

static void BM_BuildAlphabet(benchmark::State& state) {
  const double cutoff = std::pow(10.0, -state.range(0));
  GroupPreset p = load_preset("two_parabolic_real", {3, 3});
  for (auto _ : state) benchmark::DoNotOptimize(build_alphabet(p, cutoff));
}
BENCHMARK(BM_BuildAlphabet)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_Assemble(benchmark::State& state) {
  auto c = coding(1e-3);
  NodeGrid grid = make_grid(*c, (int)state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(assemble_sigma(*c, grid, 0.75, 0).matrix.data());
}
BENCHMARK(BM_Assemble)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

static void BM_FindDelta(benchmark::State& state) {
  auto c = coding(1e-3);
  FindDeltaOptions o;
  o.degree = (int)state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(find_delta(c, o).delta);
}
BENCHMARK(BM_FindDelta)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_SamplerOrbit(benchmark::State& state) {
  InvariantSampler s(spectral());
  std::mt19937_64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(s.orbit(rng, 20, (int)state.range(0)).terminal());
  state.SetItemsProcessed(state.iterations() * (20 + state.range(0)));
}
BENCHMARK(BM_SamplerOrbit)->Arg(0)->Arg(50);

static void BM_RenewalSum(benchmark::State& state) {
  const SpectralData& sd = spectral();
  Profile f = standard_bump(0.0, 1.0);
  const double t = (double)state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(renewal_sum(sd, f, sd.coding->domain.anchor, t, 64).value);
}
BENCHMARK(BM_RenewalSum)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
