// Serial reference against the OpenMP kernels. Run with
//   sdre_bench --benchmark_filter=QuadraticForm
// and set OMP_NUM_THREADS to vary the thread count.

#include "sdre/analysis.hpp"
#include "sdre/kernels.hpp"
#include "sdre/rng.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace sdre;

Eigen::MatrixXd points(Eigen::Index n, Eigen::Index dim) {
  Rng rng(42);
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

Eigen::VectorXd coefficients(Eigen::Index n) {
  Rng rng(7);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform() - 0.5;
  return v;
}

template <double (*Fn)(const Eigen::MatrixXd&, const Eigen::VectorXd&, double)>
void BM_QuadraticForm(benchmark::State& state) {
  const Eigen::MatrixXd x = points(state.range(0), 4);
  const Eigen::VectorXd v = coefficients(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, v, 1.0));
  state.SetComplexityN(state.range(0));
}

template <Eigen::VectorXd (*Fn)(const Eigen::MatrixXd&, const Eigen::VectorXd&, double)>
void BM_Matvec(benchmark::State& state) {
  const Eigen::MatrixXd x = points(state.range(0), 4);
  const Eigen::VectorXd v = coefficients(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, v, 1.0));
}

template <Eigen::MatrixXd (*Fn)(const Eigen::MatrixXd&, double)>
void BM_Gram(benchmark::State& state) {
  const Eigen::MatrixXd x = points(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x, 1.0));
}

template <std::vector<double> (*Fn)(const Eigen::MatrixXd&)>
void BM_PairwiseDistances(benchmark::State& state) {
  const Eigen::MatrixXd x = points(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(x));
}

template <CircleVarianceSample (*Fn)(double, std::size_t, std::size_t, std::uint64_t)>
void BM_CircleVariance(benchmark::State& state) {
  const auto replicates = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(0.4, 20, replicates, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_QuadraticForm<kernels::quadratic_form_serial>)->Name("QuadraticForm/serial")->Range(256, 4096);
BENCHMARK(BM_QuadraticForm<kernels::quadratic_form_parallel>)->Name("QuadraticForm/parallel")->Range(256, 4096);
BENCHMARK(BM_Matvec<kernels::matvec_serial>)->Name("Matvec/serial")->Range(256, 4096);
BENCHMARK(BM_Matvec<kernels::matvec_parallel>)->Name("Matvec/parallel")->Range(256, 4096);
BENCHMARK(BM_Gram<kernels::gram_serial>)->Name("Gram/serial")->Range(256, 2048);
BENCHMARK(BM_Gram<kernels::gram_parallel>)->Name("Gram/parallel")->Range(256, 2048);
BENCHMARK(BM_PairwiseDistances<kernels::pairwise_distances_serial>)->Name("PairwiseDistances/serial")->Range(256, 2048);
BENCHMARK(BM_PairwiseDistances<kernels::pairwise_distances_parallel>)->Name("PairwiseDistances/parallel")->Range(256, 2048);
BENCHMARK(BM_CircleVariance<circle_variance_empirical_serial>)->Name("CircleVariance/serial")->Arg(1 << 18);
BENCHMARK(BM_CircleVariance<circle_variance_empirical_parallel>)->Name("CircleVariance/parallel")->Arg(1 << 18);

}  // namespace

BENCHMARK_MAIN();
