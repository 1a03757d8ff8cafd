// Serial reference vs OpenMP kernels on transformer-sized shapes.
// Run with OMP_NUM_THREADS set to compare scaling.

#include <benchmark/benchmark.h>

#include <vector>

#include "pocketgen/kernels.hpp"
#include "pocketgen/rng.hpp"

namespace k = pocketgen::kernels;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t seed) {
  pocketgen::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

template <bool Omp>
void BM_matmul_forward(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0)), C = 128, OC = 512;
  auto inp = randn(static_cast<std::size_t>(N) * C, 1);
  auto w = randn(static_cast<std::size_t>(C) * OC, 2);
  auto b = randn(OC, 3);
  std::vector<double> out(static_cast<std::size_t>(N) * OC);
  for (auto _ : st) {
    if constexpr (Omp)
      k::matmul_forward(out, inp, w, b, N, C, OC);
    else
      k::serial::matmul_forward(out, inp, w, b, N, C, OC);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * int64_t(N) * C * OC);
}

template <bool Omp>
void BM_matmul_backward(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0)), C = 128, OC = 512;
  auto inp = randn(static_cast<std::size_t>(N) * C, 1);
  auto w = randn(static_cast<std::size_t>(C) * OC, 2);
  auto dout = randn(static_cast<std::size_t>(N) * OC, 3);
  std::vector<double> dinp(inp.size()), dw(w.size()), db(OC);
  for (auto _ : st) {
    if constexpr (Omp)
      k::matmul_backward(dinp, dw, db, dout, inp, w, N, C, OC);
    else
      k::serial::matmul_backward(dinp, dw, db, dout, inp, w, N, C, OC);
    benchmark::DoNotOptimize(dw.data());
  }
  st.SetItemsProcessed(st.iterations() * 2 * int64_t(N) * C * OC);
}

template <bool Omp>
void BM_layernorm(benchmark::State& st) {
  const int N = static_cast<int>(st.range(0)), C = 128;
  auto inp = randn(static_cast<std::size_t>(N) * C, 1);
  auto dout = randn(inp.size(), 2);
  std::vector<double> w(C, 1.0), b(C, 0.0), out(inp.size()), mean(N), rstd(N);
  std::vector<double> dinp(inp.size()), dw(C), db(C);
  for (auto _ : st) {
    if constexpr (Omp) {
      k::layernorm_forward(out, mean, rstd, inp, w, b, N, C);
      k::layernorm_backward(dinp, dw, db, dout, inp, w, mean, rstd, N, C);
    } else {
      k::serial::layernorm_forward(out, mean, rstd, inp, w, b, N, C);
      k::serial::layernorm_backward(dinp, dw, db, dout, inp, w, mean, rstd, N, C);
    }
    benchmark::DoNotOptimize(dinp.data());
  }
}

template <bool Omp>
void BM_attention(benchmark::State& st) {
  const int T = static_cast<int>(st.range(0)), C = 128, NH = 4;
  auto qkv = randn(static_cast<std::size_t>(T) * 3 * C, 1);
  auto dout = randn(static_cast<std::size_t>(T) * C, 2);
  std::vector<double> out(static_cast<std::size_t>(T) * C);
  std::vector<double> att(static_cast<std::size_t>(NH) * T * T);
  std::vector<double> dqkv(qkv.size());
  for (auto _ : st) {
    if constexpr (Omp) {
      k::attention_forward(out, att, qkv, T, C, NH);
      k::attention_backward(dqkv, dout, qkv, att, T, C, NH);
    } else {
      k::serial::attention_forward(out, att, qkv, T, C, NH);
      k::serial::attention_backward(dqkv, dout, qkv, att, T, C, NH);
    }
    benchmark::DoNotOptimize(dqkv.data());
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_matmul_forward, false)->Name("matmul_fwd/serial")->Arg(256)->Arg(1024);
BENCHMARK_TEMPLATE(BM_matmul_forward, true)->Name("matmul_fwd/omp")->Arg(256)->Arg(1024);
BENCHMARK_TEMPLATE(BM_matmul_backward, false)->Name("matmul_bwd/serial")->Arg(256)->Arg(1024);
BENCHMARK_TEMPLATE(BM_matmul_backward, true)->Name("matmul_bwd/omp")->Arg(256)->Arg(1024);
BENCHMARK_TEMPLATE(BM_layernorm, false)->Name("layernorm/serial")->Arg(1024);
BENCHMARK_TEMPLATE(BM_layernorm, true)->Name("layernorm/omp")->Arg(1024);
BENCHMARK_TEMPLATE(BM_attention, false)->Name("attention/serial")->Arg(256)->Arg(512);
BENCHMARK_TEMPLATE(BM_attention, true)->Name("attention/omp")->Arg(256)->Arg(512);

BENCHMARK_MAIN();
