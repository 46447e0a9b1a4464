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

#pragma once

// Data-parallel scan kernels behind exact vector search and the KNN filter.
// Each kernel has a serial reference and an OpenMP version; both evaluate
// every row with the same inner loop, so their outputs are bit-identical and
// tests compare them with operator==.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace incrag::kernels {

enum class Exec {
    kSerial,
    kParallel,
    // Parallel once the row count passes kParallelThreshold.
    kAuto,
};

inline constexpr std::size_t kParallelThreshold = 4096;

/// out[r] = <rows[r], query>. `rows` is row-major with `dim` columns.
void dot_rows_serial(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                     std::span<double> out);
void dot_rows_parallel(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                       std::span<double> out);
void dot_rows(Exec exec, std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out);

/// out[r] = ||rows[r] - point||^2
void sq_dist_rows_serial(std::span<const double> rows, std::size_t dim, std::span<const double> point,
                         std::span<double> out);
void sq_dist_rows_parallel(std::span<const double> rows, std::size_t dim, std::span<const double> point,
                           std::span<double> out);
void sq_dist_rows(Exec exec, std::span<const double> rows, std::size_t dim, std::span<const double> point,
                  std::span<double> out);

/// Batched scoring: out[q * n_rows + r] = <rows[r], queries[q]>. Parallel
/// over queries; used by evaluation sweeps.
void dot_rows_batch(Exec exec, std::span<const double> rows, std::size_t dim, std::span<const double> queries,
                    std::span<double> out);

/// Indices of the `n` best eligible entries. `before(i, j)` is a strict weak
/// order putting better entries first; the result is sorted by it.
template <typename Before, typename Eligible>
std::vector<std::size_t> select_best(std::size_t count, std::size_t n, Before before, Eligible eligible) {
    std::vector<std::size_t> idx;
    idx.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (eligible(i)) idx.push_back(i);
    }
    std::size_t take = std::min(n, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(), before);
    idx.resize(take);
    return idx;
}

}  // namespace incrag::kernels
