// Copyright 2026 The EmbedForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "embedforge/vecmath.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "embedforge/error.h"
#include "embedforge/parallel.h"
#include "embedforge/simd/kernels.h"

namespace embedforge {
namespace {

constexpr double kUnitSlack = 1e-12;

void check_finite(const std::vector<double>& values) {
  if (values.empty()) throw Error(Errc::InvalidArgument, "vector dimension must be > 0");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(Errc::NonFinite, "non-finite entry at index " + std::to_string(i));
    }
  }
}

}  // namespace

Vector::Vector(std::vector<double> values) : values_(std::move(values)) {
  check_finite(values_);
}

Vector::Vector(std::initializer_list<double> values) : values_(values) {
  check_finite(values_);
}

bool operator==(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw Error(Errc::ShapeMismatch, "matrix " + std::to_string(rows) + "x" +
                                         std::to_string(cols) + " given " +
                                         std::to_string(values_.size()) + " values");
  }
}

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return simd::active().dot_f64(a.data(), b.data(), a.size());
}

Vector l2_normalize(const Vector& v) {
  const auto& k = simd::active();
  double sumsq = k.dot_f64(v.data(), v.data(), v.size());
  std::vector<double> out = v.values();
  if (sumsq == 0.0 || !std::isfinite(sumsq) || sumsq < 1e-300) {
    // Rescale first so tiny or huge entries neither underflow nor overflow.
    double maxabs = 0.0;
    for (double x : out) maxabs = std::max(maxabs, std::abs(x));
    if (maxabs == 0.0) throw Error(Errc::ZeroVector, "cannot normalize an all-zero vector");
    // Divide rather than scale by 1/maxabs, which overflows for subnormals.
    for (double& x : out) x /= maxabs;
    sumsq = k.dot_f64(out.data(), out.data(), out.size());
  }
  const double norm = std::sqrt(sumsq);
  if (std::abs(norm - 1.0) <= kUnitSlack) return Vector(std::move(out));
  k.scale_f64(out.data(), 1.0 / norm, out.size());
  return Vector(std::move(out));
}

ScoreMatrix sim_matrix(std::span<const Vector> queries, std::span<const Vector> candidates,
                       int workers) {
  const std::size_t dim = !queries.empty() ? queries[0].size()
                          : !candidates.empty() ? candidates[0].size() : 0;
  auto check_dims = [dim](std::span<const Vector> vs, const char* what) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      if (vs[i].size() != dim) {
        throw Error(Errc::DimensionMismatch, std::string(what) + " " + std::to_string(i) +
                                                 " has dimension " + std::to_string(vs[i].size()) +
                                                 ", expected " + std::to_string(dim));
      }
    }
  };
  check_dims(queries, "query");
  check_dims(candidates, "candidate");

  std::vector<Vector> q;
  std::vector<Vector> c;
  q.reserve(queries.size());
  c.reserve(candidates.size());
  for (const auto& v : queries) q.push_back(l2_normalize(v));
  for (const auto& v : candidates) c.push_back(l2_normalize(v));

  ScoreMatrix out(q.size(), c.size());
  const auto& k = simd::active();
  parallel_for(q.size(), workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      out.at(i, j) = std::clamp(k.dot_f64(q[i].data(), c[j].data(), dim), -1.0, 1.0);
    }
  });
  return out;
}

std::vector<Hit> top_k(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw Error(Errc::InvalidArgument, "top_k requires k >= 1");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = std::min(k, idx.size());
  auto before = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(), before);
  std::vector<Hit> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back({idx[i], scores[idx[i]]});
  return out;
}

}  // namespace embedforge
