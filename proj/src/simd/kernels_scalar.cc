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

#include <cmath>

#include "embedforge/simd/kernels.h"

namespace embedforge::simd {
namespace {

double dot_f64(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double dot_f32_f64(const float* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

void axpy_f64(double* y, const double* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f32_to_f64(double* y, const float* x, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * static_cast<double>(x[i]);
}

void scale_f64(double* y, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= alpha;
}

void adam_step(float* param, const double* grad, float* m, float* v,
               std::size_t n, const AdamStepScalars& s) {
  for (std::size_t i = 0; i < n; ++i) {
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

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      "scalar", dot_f64, dot_f32_f64, axpy_f64, axpy_f32_to_f64, scale_f64, adam_step,
  };
  return table;
}

}  // namespace embedforge::simd
