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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "embedforge/error.h"
#include "embedforge/rng.h"
#include "embedforge/vecmath.h"

namespace embedforge {
namespace {

template <typename Fn>
Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an embedforge::Error";
  return Errc::InvalidArgument;
}

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-3.0, 3.0);
  return v;
}

double norm(const Vector& v) {
  double s = 0.0;
  for (double x : v.values()) s += x * x;
  return std::sqrt(s);
}

TEST(Vector, RejectsEmptyAndNonFinite) {
  EXPECT_EQ(code_of([] { Vector(std::vector<double>{}); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([] { Vector({1.0, std::nan("")}); }), Errc::NonFinite);
  EXPECT_EQ(code_of([] { Vector({std::numeric_limits<double>::infinity()}); }), Errc::NonFinite);
}

TEST(Vector, EqualityIsBitwise) {
  EXPECT_EQ(Vector({1.0, 2.0}), Vector({1.0, 2.0}));
  EXPECT_FALSE(Vector({0.0}) == Vector({-0.0}));
}

TEST(ScoreMatrix, ShapeMustMatchValues) {
  EXPECT_EQ(code_of([] { ScoreMatrix(2, 2, std::vector<double>{1, 2, 3}); }),
            Errc::ShapeMismatch);
  const ScoreMatrix m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.at(1, 0), 4.0);
  EXPECT_EQ(m.row(1)[2], 6.0);
}

TEST(L2Normalize, Examples) {
  const Vector a = l2_normalize(Vector({3.0, 4.0}));
  EXPECT_NEAR(a[0], 0.6, 1e-15);
  EXPECT_NEAR(a[1], 0.8, 1e-15);
  EXPECT_EQ(l2_normalize(Vector({1.0, 0.0, 0.0})), Vector({1.0, 0.0, 0.0}));
  EXPECT_EQ(code_of([] { l2_normalize(Vector({0.0, 0.0})); }), Errc::ZeroVector);
}

TEST(L2Normalize, UnitNormAndIdempotentOnRandomInputs) {
  Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(40);
    const double scale = std::pow(10.0, rng.uniform(-200.0, 200.0));
    std::vector<double> values = random_values(rng, n);
    for (double& x : values) x *= scale;
    if (std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; })) continue;
    const Vector once = l2_normalize(Vector(values));
    EXPECT_NEAR(norm(once), 1.0, 1e-12);
    EXPECT_EQ(l2_normalize(once), once);
  }
}

TEST(L2Normalize, ExtremeMagnitudesKeepDirection) {
  const double big = std::numeric_limits<double>::max() / 2.0;
  const Vector a = l2_normalize(Vector({big, big}));
  EXPECT_NEAR(a[0], std::sqrt(0.5), 1e-15);
  const double tiny = std::numeric_limits<double>::denorm_min();
  const Vector b = l2_normalize(Vector({tiny, 0.0}));
  EXPECT_EQ(b[0], 1.0);
}

TEST(Dot, DimensionMismatch) {
  EXPECT_EQ(code_of([] { dot(Vector({1.0}), Vector({1.0, 2.0})); }), Errc::DimensionMismatch);
  EXPECT_DOUBLE_EQ(dot(Vector({1.0, 2.0}), Vector({3.0, 4.0})), 11.0);
}

TEST(SimMatrix, Examples) {
  const std::vector<Vector> u = {l2_normalize(Vector({0.3, -0.2, 0.9}))};
  EXPECT_NEAR(sim_matrix(u, u).at(0, 0), 1.0, 1e-15);
  const std::vector<Vector> x = {Vector({1.0, 0.0})};
  const std::vector<Vector> y = {Vector({0.0, 1.0})};
  const std::vector<Vector> z = {Vector({-1.0, 0.0})};
  EXPECT_EQ(sim_matrix(x, y).at(0, 0), 0.0);
  EXPECT_EQ(sim_matrix(x, z).at(0, 0), -1.0);
}

TEST(SimMatrix, NormalizesInputsAndStaysInRange) {
  Rng rng(7);
  std::vector<Vector> q, c;
  for (int i = 0; i < 20; ++i) q.emplace_back(random_values(rng, 9));
  for (int i = 0; i < 30; ++i) c.emplace_back(random_values(rng, 9));
  const ScoreMatrix s = sim_matrix(q, c);
  for (double v : s.values()) EXPECT_LE(std::abs(v), 1.0);
  const Vector qn = l2_normalize(q[3]);
  const Vector cn = l2_normalize(c[5]);
  EXPECT_NEAR(s.at(3, 5), dot(qn, cn), 1e-15);
}

TEST(SimMatrix, DimensionMismatch) {
  const std::vector<Vector> q = {Vector({1.0, 0.0})};
  const std::vector<Vector> c = {Vector({1.0, 0.0}), Vector({1.0, 0.0, 0.0})};
  EXPECT_EQ(code_of([&] { sim_matrix(q, c); }), Errc::DimensionMismatch);
}

TEST(SimMatrix, WorkerCountDoesNotChangeBits) {
  Rng rng(8);
  std::vector<Vector> q, c;
  for (int i = 0; i < 37; ++i) q.emplace_back(random_values(rng, 16));
  for (int i = 0; i < 11; ++i) c.emplace_back(random_values(rng, 16));
  EXPECT_EQ(sim_matrix(q, c, 1).values(), sim_matrix(q, c, 8).values());
}

TEST(TopK, Examples) {
  const std::vector<double> s1 = {0.1, 0.9, 0.5};
  EXPECT_EQ(top_k(s1, 2), (std::vector<Hit>{{1, 0.9}, {2, 0.5}}));
  const std::vector<double> s2 = {0.7, 0.7};
  EXPECT_EQ(top_k(s2, 1), (std::vector<Hit>{{0, 0.7}}));
  const std::vector<double> s3 = {0.3};
  EXPECT_EQ(top_k(s3, 10), (std::vector<Hit>{{0, 0.3}}));
  EXPECT_EQ(code_of([&] { top_k(s3, 0); }), Errc::InvalidArgument);
}

TEST(TopK, MatchesTruncatedFullSort) {
  Rng rng(9);
  for (std::size_t len = 1; len <= 64; ++len) {
    std::vector<double> s(len);
    // Coarse values force plenty of ties.
    for (double& x : s) x = static_cast<double>(rng.uniform_index(6)) / 4.0;
    std::vector<std::size_t> idx(len);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return s[a] != s[b] ? s[a] > s[b] : a < b;
    });
    for (std::size_t k = 1; k <= len + 2; ++k) {
      const auto hits = top_k(s, k);
      ASSERT_EQ(hits.size(), std::min(k, len));
      for (std::size_t i = 0; i < hits.size(); ++i) {
        EXPECT_EQ(hits[i].index, idx[i]);
        EXPECT_EQ(hits[i].score, s[idx[i]]);
      }
    }
  }
}

TEST(TopK, InvariantUnderIncreasingTransform) {
  Rng rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(1 + rng.uniform_index(50));
    for (double& x : s) x = rng.uniform(-1.0, 1.0);
    std::vector<double> t(s.size());
    std::transform(s.begin(), s.end(), t.begin(), [](double x) { return std::exp(3.0 * x) + 2.0; });
    const auto a = top_k(s, 10);
    const auto b = top_k(t, 10);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].index, b[i].index);
  }
}

}  // namespace
}  // namespace embedforge
