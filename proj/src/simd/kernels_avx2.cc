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

// Compiled with -mavx2 -mfma; only reached after a runtime CPU check. No
// FMA intrinsics are used so elementwise kernels round exactly like the
// scalar reference.
#include <immintrin.h>

#include <cmath>

#include "embedforge/simd/kernels.h"

namespace embedforge::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_f64(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double dot_f32_f64(const float* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 af = _mm256_loadu_ps(a + i);
    __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(af));
    __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(af, 1));
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(a0, _mm256_loadu_pd(b + i)));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(a1, _mm256_loadu_pd(b + i + 4)));
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

void axpy_f64(double* y, const double* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f32_to_f64(double* y, const float* x, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vx = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    __m256d vy = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, vx)));
  }
  for (; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

void scale_f64(double* y, double alpha, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(y + i), va));
  }
  for (; i < n; ++i) y[i] *= alpha;
}

void adam_step(float* param, const double* grad, float* m, float* v,
               std::size_t n, const AdamStepScalars& s) {
  const __m256 b1 = _mm256_set1_ps(s.beta1);
  const __m256 b2 = _mm256_set1_ps(s.beta2);
  const __m256 omb1 = _mm256_set1_ps(s.one_minus_beta1);
  const __m256 omb2 = _mm256_set1_ps(s.one_minus_beta2);
  const __m256 step = _mm256_set1_ps(s.step_size);
  const __m256 ibc2 = _mm256_set1_ps(s.inv_sqrt_bias2);
  const __m256 eps = _mm256_set1_ps(s.eps);
  const __m256 decay = _mm256_set1_ps(s.decay);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m128 g_lo = _mm256_cvtpd_ps(_mm256_loadu_pd(grad + i));
    __m128 g_hi = _mm256_cvtpd_ps(_mm256_loadu_pd(grad + i + 4));
    __m256 g = _mm256_insertf128_ps(_mm256_castps128_ps256(g_lo), g_hi, 1);
    __m256 p = _mm256_mul_ps(_mm256_loadu_ps(param + i), decay);
    __m256 mi = _mm256_add_ps(_mm256_mul_ps(b1, _mm256_loadu_ps(m + i)), _mm256_mul_ps(omb1, g));
    __m256 vi = _mm256_add_ps(_mm256_mul_ps(b2, _mm256_loadu_ps(v + i)),
                              _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    __m256 denom = _mm256_add_ps(_mm256_mul_ps(_mm256_sqrt_ps(vi), ibc2), eps);
    _mm256_storeu_ps(m + i, mi);
    _mm256_storeu_ps(v + i, vi);
    _mm256_storeu_ps(param + i, _mm256_sub_ps(p, _mm256_mul_ps(step, _mm256_div_ps(mi, denom))));
  }
  for (; i < n; ++i) {
    const float g = static_cast<float>(grad[i]);
    const float p = param[i] * s.decay;
    const float mi = s.beta1 * m[i] + s.one_minus_beta1 * g;
    const float vi = s.beta2 * v[i] + s.one_minus_beta2 * (g * g);
    const float denom = std::sqrt(vi) * s.inv_sqrt_bias2 + s.eps;
    m[i] = mi;
    v[i] = vi;
    param[i] = p - s.step_size * (mi / denom);
  }
}

}  // namespace

const KernelTable& avx2_kernels_table() {
  static const KernelTable table{
      "avx2", dot_f64, dot_f32_f64, axpy_f64, axpy_f32_to_f64, scale_f64, adam_step,
  };
  return table;
}

}  // namespace embedforge::simd
