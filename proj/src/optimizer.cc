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
#include <string>

#include "embedforge/error.h"
#include "embedforge/simd/kernels.h"
#include "embedforge/trainer.h"

namespace embedforge {
namespace {

void check_shapes(std::size_t params, std::size_t grads, const AdamState& state) {
  if (grads != params) {
    throw Error(Errc::ShapeMismatch, "gradient has " + std::to_string(grads) +
                                         " entries, parameters have " + std::to_string(params));
  }
  const bool fresh = state.m.empty() && state.v.empty();
  if (!fresh && (state.m.size() != params || state.v.size() != params)) {
    throw Error(Errc::ShapeMismatch, "optimizer moments do not match the parameter count");
  }
}

}  // namespace

void apply_update_in_place(std::span<float> params, std::span<const double> grads, double lr,
                           AdamState& state, const AdamHyper& hyper) {
  check_shapes(params.size(), grads.size(), state);
  if (!(lr > 0.0) || !std::isfinite(lr)) {
    throw Error(Errc::InvalidArgument, "learning rate must be positive and finite");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0f);
    state.v.assign(params.size(), 0.0f);
  }
  const std::uint64_t t = state.step + 1;
  const double td = static_cast<double>(t);
  const double bias1 = 1.0 - std::pow(hyper.beta1, td);
  const double bias2 = 1.0 - std::pow(hyper.beta2, td);
  simd::AdamStepScalars s{};
  s.beta1 = static_cast<float>(hyper.beta1);
  s.beta2 = static_cast<float>(hyper.beta2);
  s.one_minus_beta1 = static_cast<float>(1.0 - hyper.beta1);
  s.one_minus_beta2 = static_cast<float>(1.0 - hyper.beta2);
  s.step_size = static_cast<float>(lr / bias1);
  s.inv_sqrt_bias2 = static_cast<float>(1.0 / std::sqrt(bias2));
  s.eps = static_cast<float>(hyper.eps);
  s.decay = static_cast<float>(1.0 - lr * hyper.weight_decay);
  simd::active().adam_step(params.data(), grads.data(), state.m.data(), state.v.data(),
                           params.size(), s);
  state.step = t;
}

UpdateResult apply_update(std::span<const float> params, std::span<const double> grads,
                          double lr, const AdamState& state, const AdamHyper& hyper) {
  UpdateResult out{std::vector<float>(params.begin(), params.end()), state};
  apply_update_in_place(out.params, grads, lr, out.state, hyper);
  return out;
}

}  // namespace embedforge
