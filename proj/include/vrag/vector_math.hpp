/*
 * Copyright 2026 The vrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vrag/error.hpp"

namespace vrag {

/// Dense real vector. Storage and accumulation are 64-bit throughout; 32-bit
/// values only exist on disk.
using Vector = std::vector<double>;

inline void require_same_dim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        fail(ErrorKind::DimMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

/// Left-to-right accumulation; a·b and b·a are bit-identical.
inline double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

inline double norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

inline Vector l2_normalize(std::span<const double> v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::ZeroVector, "cannot normalize a zero or non-finite vector");
    Vector out(v.begin(), v.end());
    for (double& x : out) x /= n;
    return out;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a, b);
    const double na = norm(a);
    const double nb = norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) fail(ErrorKind::ZeroVector, "cosine of a zero vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

inline Vector mean_pool(std::span<const Vector> rows) {
    if (rows.empty()) fail(ErrorKind::EmptyInput, "mean_pool of no rows");
    Vector sum(rows.front().size(), 0.0);
    for (const Vector& row : rows) {
        require_same_dim(sum, row);
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += row[i];
    }
    const double n = static_cast<double>(rows.size());
    for (double& x : sum) x /= n;
    return sum;
}

/// alpha * text + (1 - alpha) * visual, re-normalized. Inputs are expected to
/// be unit vectors already; alpha = 1 / alpha = 0 reproduce the normalized
/// text / visual vector exactly.
inline Vector interpolate_ensemble(std::span<const double> text, std::span<const double> visual, double alpha) {
    require_same_dim(text, visual);
    if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::AlphaOutOfRange, "alpha=" + std::to_string(alpha));
    Vector mixed(text.size());
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = alpha * text[i] + (1.0 - alpha) * visual[i];
    return l2_normalize(mixed);
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace vrag
