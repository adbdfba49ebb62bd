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

// AArch64 variant. Like the AVX2 file, only separate multiply and add
// intrinsics are used (no vfmaq) so elementwise kernels match scalar bits.
#include <arm_neon.h>

#include <cmath>

#include "embedforge/simd/kernels.h"

namespace embedforge::simd {
namespace {

double dot_f64(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double dot_f32_f64(const float* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t af = vld1q_f32(a + i);
    acc0 = vaddq_f64(acc0, vmulq_f64(vcvt_f64_f32(vget_low_f32(af)), vld1q_f64(b + i)));
    acc1 = vaddq_f64(acc1, vmulq_f64(vcvt_high_f64_f32(af), vld1q_f64(b + i + 2)));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

void axpy_f64(double* y, const double* x, double alpha, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f32_to_f64(double* y, const float* x, double alpha, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vx = vcvt_f64_f32(vld1_f32(x + i));
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vx)));
  }
  for (; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

void scale_f64(double* y, double alpha, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vmulq_f64(vld1q_f64(y + i), va));
  for (; i < n; ++i) y[i] *= alpha;
}

void adam_step(float* param, const double* grad, float* m, float* v,
               std::size_t n, const AdamStepScalars& s) {
  const float32x4_t b1 = vdupq_n_f32(s.beta1);
  const float32x4_t b2 = vdupq_n_f32(s.beta2);
  const float32x4_t omb1 = vdupq_n_f32(s.one_minus_beta1);
  const float32x4_t omb2 = vdupq_n_f32(s.one_minus_beta2);
  const float32x4_t step = vdupq_n_f32(s.step_size);
  const float32x4_t ibc2 = vdupq_n_f32(s.inv_sqrt_bias2);
  const float32x4_t eps = vdupq_n_f32(s.eps);
  const float32x4_t decay = vdupq_n_f32(s.decay);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float32x4_t g = vcvt_high_f32_f64(vcvt_f32_f64(vld1q_f64(grad + i)), vld1q_f64(grad + i + 2));
    float32x4_t p = vmulq_f32(vld1q_f32(param + i), decay);
    float32x4_t mi = vaddq_f32(vmulq_f32(b1, vld1q_f32(m + i)), vmulq_f32(omb1, g));
    float32x4_t vi = vaddq_f32(vmulq_f32(b2, vld1q_f32(v + i)), vmulq_f32(omb2, vmulq_f32(g, g)));
    float32x4_t denom = vaddq_f32(vmulq_f32(vsqrtq_f32(vi), ibc2), eps);
    vst1q_f32(m + i, mi);
    vst1q_f32(v + i, vi);
    vst1q_f32(param + i, vsubq_f32(p, vmulq_f32(step, vdivq_f32(mi, denom))));
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

const KernelTable& neon_kernels_table() {
  static const KernelTable table{
      "neon", dot_f64, dot_f32_f64, axpy_f64, axpy_f32_to_f64, scale_f64, adam_step,
  };
  return table;
}

}  // namespace embedforge::simd
