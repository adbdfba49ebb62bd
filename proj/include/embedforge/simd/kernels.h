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
#include <string_view>

namespace embedforge::simd {

// Scalars for one Adam step, precomputed in double by the caller.
struct AdamStepScalars {
  float beta1;
  float beta2;
  float one_minus_beta1;
  float one_minus_beta2;
  float step_size;        // lr / (1 - beta1^t)
  float inv_sqrt_bias2;   // 1 / sqrt(1 - beta2^t)
  float eps;
  float decay;            // 1 - lr * weight_decay
};

// Inner-loop kernels. Elementwise kernels (axpy_*, adam_step) produce
// bit-identical results across variants; reductions (dot_*) agree to
// rounding only, because lane-parallel summation reorders the adds.
struct KernelTable {
  std::string_view name;

  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  // sum_i double(a[i]) * b[i]
  double (*dot_f32_f64)(const float* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy_f64)(double* y, const double* x, double alpha, std::size_t n);
  // y[i] += alpha * double(x[i])
  void (*axpy_f32_to_f64)(double* y, const float* x, double alpha,
                          std::size_t n);
  // y[i] *= alpha
  void (*scale_f64)(double* y, double alpha, std::size_t n);
  void (*adam_step)(float* param, const double* grad, float* m, float* v,
                    std::size_t n, const AdamStepScalars& s);
};

const KernelTable& scalar_kernels();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Best available variant, chosen once per process. The EMBEDFORGE_SIMD
// environment variable ("scalar", "avx2", "neon", "auto") overrides.
const KernelTable& active();

}  // namespace embedforge::simd
