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

#include "incrag/kernels.hpp"

#include <cstdint>
#include <string>

#include "incrag/error.hpp"

namespace incrag::kernels {

namespace {

void check_shape(std::size_t rows_len, std::size_t dim, std::size_t vec_len, std::size_t out_len,
                 const char* who) {
    if (dim == 0 || rows_len % dim != 0 || vec_len != dim || out_len != rows_len / dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    std::string(who) + ": shape mismatch (rows " + std::to_string(rows_len) + ", dim " +
                        std::to_string(dim) + ", vector " + std::to_string(vec_len) + ", out " +
                        std::to_string(out_len) + ")");
    }
}

inline double dot_row(const double* row, const double* q, std::size_t dim) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) s += row[c] * q[c];
    return s;
}

inline double sq_dist_row(const double* row, const double* p, std::size_t dim) {
    double s = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
        double d = row[c] - p[c];
        s += d * d;
    }
    return s;
}

bool go_parallel(Exec exec, std::size_t n_rows) {
    return exec == Exec::kParallel || (exec == Exec::kAuto && n_rows >= kParallelThreshold);
}

}  // namespace

void dot_rows_serial(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                     std::span<double> out) {
    check_shape(rows.size(), dim, query.size(), out.size(), "dot_rows");
    const std::size_t n = out.size();
    for (std::size_t r = 0; r < n; ++r) out[r] = dot_row(rows.data() + r * dim, query.data(), dim);
}

void dot_rows_parallel(std::span<const double> rows, std::size_t dim, std::span<const double> query,
                       std::span<double> out) {
    check_shape(rows.size(), dim, query.size(), out.size(), "dot_rows");
    const auto n = static_cast<std::int64_t>(out.size());
    const double* base = rows.data();
    const double* q = query.data();
    double* dst = out.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) dst[r] = dot_row(base + r * dim, q, dim);
}

void dot_rows(Exec exec, std::span<const double> rows, std::size_t dim, std::span<const double> query,
              std::span<double> out) {
    if (go_parallel(exec, out.size())) {
        dot_rows_parallel(rows, dim, query, out);
    } else {
        dot_rows_serial(rows, dim, query, out);
    }
}

void sq_dist_rows_serial(std::span<const double> rows, std::size_t dim, std::span<const double> point,
                         std::span<double> out) {
    check_shape(rows.size(), dim, point.size(), out.size(), "sq_dist_rows");
    const std::size_t n = out.size();
    for (std::size_t r = 0; r < n; ++r) out[r] = sq_dist_row(rows.data() + r * dim, point.data(), dim);
}

void sq_dist_rows_parallel(std::span<const double> rows, std::size_t dim, std::span<const double> point,
                           std::span<double> out) {
    check_shape(rows.size(), dim, point.size(), out.size(), "sq_dist_rows");
    const auto n = static_cast<std::int64_t>(out.size());
    const double* base = rows.data();
    const double* p = point.data();
    double* dst = out.data();
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) dst[r] = sq_dist_row(base + r * dim, p, dim);
}

void sq_dist_rows(Exec exec, std::span<const double> rows, std::size_t dim, std::span<const double> point,
                  std::span<double> out) {
    if (go_parallel(exec, out.size())) {
        sq_dist_rows_parallel(rows, dim, point, out);
    } else {
        sq_dist_rows_serial(rows, dim, point, out);
    }
}

void dot_rows_batch(Exec exec, std::span<const double> rows, std::size_t dim, std::span<const double> queries,
                    std::span<double> out) {
    if (dim == 0 || rows.size() % dim != 0 || queries.size() % dim != 0) {
        throw Error(ErrorCode::kDimensionMismatch, "dot_rows_batch: shape mismatch");
    }
    const std::size_t n_rows = rows.size() / dim;
    const auto n_queries = static_cast<std::int64_t>(queries.size() / dim);
    if (out.size() != n_rows * static_cast<std::size_t>(n_queries)) {
        throw Error(ErrorCode::kDimensionMismatch, "dot_rows_batch: output size mismatch");
    }
    const double* base = rows.data();
    const double* qs = queries.data();
    double* dst = out.data();
    if (go_parallel(exec, n_rows * static_cast<std::size_t>(n_queries))) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::int64_t q = 0; q < n_queries; ++q) {
            for (std::size_t r = 0; r < n_rows; ++r) {
                dst[static_cast<std::size_t>(q) * n_rows + r] = dot_row(base + r * dim, qs + q * dim, dim);
            }
        }
    } else {
        for (std::int64_t q = 0; q < n_queries; ++q) {
            for (std::size_t r = 0; r < n_rows; ++r) {
                dst[static_cast<std::size_t>(q) * n_rows + r] = dot_row(base + r * dim, qs + q * dim, dim);
            }
        }
    }
}

}  // namespace incrag::kernels
