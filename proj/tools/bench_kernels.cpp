// Copyright 2026 The incrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Serial reference vs OpenMP kernels over the row counts a store reaches.
//   bench_kernels --benchmark_filter=dot

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "incrag/kernels.hpp"

using namespace incrag::kernels;

namespace {

std::vector<double> random_rows(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> out(n * dim);
    for (auto& x : out) x = g(rng);
    return out;
}

template <Exec E>
void BM_dot_rows(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0)), dim = 64;
    auto rows = random_rows(n, dim, 1);
    auto q = random_rows(1, dim, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        dot_rows(E, rows, dim, q, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <Exec E>
void BM_sq_dist_rows(benchmark::State& state) {
    // KNN features concatenate query and chunk vectors.
    const std::size_t n = static_cast<std::size_t>(state.range(0)), dim = 128;
    auto rows = random_rows(n, dim, 3);
    auto p = random_rows(1, dim, 4);
    std::vector<double> out(n);
    for (auto _ : state) {
        sq_dist_rows(E, rows, dim, p, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <Exec E>
void BM_dot_rows_batch(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0)), dim = 64, queries = 100;
    auto rows = random_rows(n, dim, 5);
    auto qs = random_rows(queries, dim, 6);
    std::vector<double> out(n * queries);
    for (auto _ : state) {
        dot_rows_batch(E, rows, dim, qs, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * queries));
}

}  // namespace

BENCHMARK(BM_dot_rows<Exec::kSerial>)->RangeMultiplier(8)->Range(1 << 10, 1 << 19);
BENCHMARK(BM_dot_rows<Exec::kParallel>)->RangeMultiplier(8)->Range(1 << 10, 1 << 19)->UseRealTime();
BENCHMARK(BM_sq_dist_rows<Exec::kSerial>)->RangeMultiplier(8)->Range(1 << 10, 1 << 18);
BENCHMARK(BM_sq_dist_rows<Exec::kParallel>)->RangeMultiplier(8)->Range(1 << 10, 1 << 18)->UseRealTime();
BENCHMARK(BM_dot_rows_batch<Exec::kSerial>)->Arg(1 << 10)->Arg(1 << 14);
BENCHMARK(BM_dot_rows_batch<Exec::kParallel>)->Arg(1 << 10)->Arg(1 << 14)->UseRealTime();

BENCHMARK_MAIN();
