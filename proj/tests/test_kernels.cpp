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

#include <doctest.h>

#include <random>

#include "incrag/kernels.hpp"
#include "oracles.hpp"

using namespace incrag;

namespace {

std::vector<double> random_rows(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> m(n * dim);
    for (auto& x : m) x = u(rng);
    return m;
}

}  // namespace

TEST_CASE("serial and parallel scans agree bit for bit") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {0u, 1u, 7u, 4095u, 4097u, 20000u}) {
        const std::size_t dim = 64;
        auto rows = random_rows(rng, n, dim);
        auto q = random_rows(rng, 1, dim);
        std::vector<double> a(n), b(n), c(n), d(n);
        kernels::dot_rows_serial(rows, dim, q, a);
        kernels::dot_rows_parallel(rows, dim, q, b);
        CHECK(a == b);
        kernels::sq_dist_rows_serial(rows, dim, q, c);
        kernels::sq_dist_rows_parallel(rows, dim, q, d);
        CHECK(c == d);
        for (std::size_t r = 0; r < std::min<std::size_t>(n, 50); ++r) {
            std::vector<double> row(rows.begin() + r * dim, rows.begin() + (r + 1) * dim);
            CHECK(a[r] == oracle::dot(row, q));
            CHECK(c[r] == doctest::Approx(oracle::sq_dist(row, q)));
        }
    }
}

TEST_CASE("batched scoring equals one scan per query") {
    std::mt19937_64 rng(12);
    const std::size_t n = 300, dim = 16, nq = 9;
    auto rows = random_rows(rng, n, dim);
    auto qs = random_rows(rng, nq, dim);
    std::vector<double> batch(n * nq);
    kernels::dot_rows_batch(kernels::Exec::kParallel, rows, dim, qs, batch);
    for (std::size_t q = 0; q < nq; ++q) {
        std::vector<double> one(n);
        kernels::dot_rows_serial(rows, dim, std::span<const double>(qs).subspan(q * dim, dim), one);
        CHECK(std::equal(one.begin(), one.end(), batch.begin() + static_cast<std::ptrdiff_t>(q * n)));
    }
}

TEST_CASE("select_best orders by the comparator and honours eligibility") {
    std::vector<int> v{5, 1, 9, 9, 3, 7};
    auto idx = kernels::select_best(
        v.size(), 3, [&](std::size_t a, std::size_t b) { return v[a] != v[b] ? v[a] > v[b] : a < b; },
        [&](std::size_t i) { return i != 5; });
    CHECK(idx == std::vector<std::size_t>{2, 3, 0});
    CHECK(kernels::select_best(v.size(), 10, std::less<>(), [](std::size_t) { return false; }).empty());
}
