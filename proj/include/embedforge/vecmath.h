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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace embedforge {

// A finite, non-empty embedding vector. All metric arithmetic is double.
class Vector {
 public:
  // Throws Error(InvalidArgument) when empty, Error(NonFinite) on NaN/Inf.
  explicit Vector(std::vector<double> values);
  Vector(std::initializer_list<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const double* data() const noexcept { return values_.data(); }
  std::span<const double> span() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  // Elementwise bitwise equality (distinguishes -0.0 from 0.0).
  friend bool operator==(const Vector& a, const Vector& b);

 private:
  std::vector<double> values_;
};

// Row-major rows x cols matrix of doubles.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Throws Error(ShapeMismatch) when values.size() != rows * cols.
  ScoreMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Hit {
  std::size_t index;
  double score;
  friend bool operator==(const Hit&, const Hit&) = default;
};

double dot(const Vector& a, const Vector& b);

// Unit-norm copy of v. Inputs whose norm is already within 1e-12 of one are
// returned unchanged, so normalizing twice is a bitwise no-op.
// Throws Error(ZeroVector) when every entry is zero.
Vector l2_normalize(const Vector& v);

// Cosine similarity of every (query, candidate) pair, clamped to [-1, 1].
// Inputs are normalized here rather than trusted to be unit length.
// Throws Error(DimensionMismatch) and Error(ZeroVector).
ScoreMatrix sim_matrix(std::span<const Vector> queries,
                       std::span<const Vector> candidates, int workers = 1);

// Highest min(k, n) scores, descending, ties by ascending index.
// Throws Error(InvalidArgument) when k == 0.
std::vector<Hit> top_k(std::span<const double> scores, std::size_t k);

}  // namespace embedforge
