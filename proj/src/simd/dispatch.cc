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

#include <cstdlib>
#include <string_view>

#include "embedforge/simd/kernels.h"

namespace embedforge::simd {

#if defined(EMBEDFORGE_HAVE_AVX2)
const KernelTable& avx2_kernels_table();
#endif
#if defined(EMBEDFORGE_HAVE_NEON)
const KernelTable& neon_kernels_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(EMBEDFORGE_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") != 0;
  return supported ? &avx2_kernels_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(EMBEDFORGE_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  return &neon_kernels_table();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  std::string_view request = "auto";
  if (const char* env = std::getenv("EMBEDFORGE_SIMD")) request = env;
  if (request == "scalar") return scalar_kernels();
  if (request == "avx2" || request == "auto") {
    if (const KernelTable* t = avx2_kernels()) return *t;
  }
  if (request == "neon" || request == "auto") {
    if (const KernelTable* t = neon_kernels()) return *t;
  }
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace embedforge::simd
