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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embedforge/datamix.h"
#include "embedforge/embedder.h"
#include "embedforge/objectives.h"

namespace embedforge {

enum class Stage { Pretrain, Finetune };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);

struct TrainConfig {
  Stage stage = Stage::Pretrain;
  SizeClass size_class = SizeClass::Small;
  std::size_t batch_size = 32768;
  std::optional<std::size_t> steps;   // pretrain only
  std::optional<std::size_t> epochs;  // finetune only
  double lr = 3e-4;
  double tau = 0.01;
  double alpha = 1.0;        // distillation weight
  double tau_teacher = 1.0;
  std::size_t hard_negatives = 0;
  std::uint64_t seed = 0;
  bool symmetric = false;      // both sides use the symmetric role
  bool bidirectional = false;  // add the candidate -> query InfoNCE direction

  // Throws Error(InvalidArgument) when a stage sets the wrong budget field,
  // lr <= 0, batch_size < 2 or alpha < 0; Error(NonPositiveTemperature).
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Published hyperparameters: lr {3,2,1}e-4 / {3,2,1}e-5 for small/base/large,
// pre-training at batch 32768 for 30000 steps, fine-tuning at batch 512 for
// 2 epochs, tau 0.01.
TrainConfig default_config(Stage stage, SizeClass size);

// Same config at desk scale: batch 64 and at most 1000 pre-training steps.
TrainConfig desk_scale(TrainConfig cfg);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Moments are empty until the first update.
struct AdamState {
  std::uint64_t step = 0;
  std::vector<float> m;
  std::vector<float> v;
};

struct UpdateResult {
  std::vector<float> params;
  AdamState state;
};

// One AdamW step. Throws Error(ShapeMismatch) when grads or moments do not
// match params.
UpdateResult apply_update(std::span<const float> params, std::span<const double> grads,
                          double lr, const AdamState& state, const AdamHyper& hyper = {});
void apply_update_in_place(std::span<float> params, std::span<const double> grads, double lr,
                           AdamState& state, const AdamHyper& hyper = {});

struct OptimizerState {
  AdamState token_table;
  AdamState projection;
};

struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  EmbeddingModel model;
  TrainConfig config;  // config of the stage that produced this checkpoint
  std::uint64_t step = 0;
  OptimizerState optimizer;
};

bool bitwise_equal(const Checkpoint& a, const Checkpoint& b);

// "EMBF" | u32 version | u64 header length | JSON header | f32 parameters |
// f32 optimizer moments, all little-endian.
std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws Error(BadMagic), Error(UnsupportedVersion), Error(TruncatedFile),
// Error(MalformedJson).
Checkpoint deserialize_checkpoint(std::string_view bytes);

// Throws Error(Io) on filesystem failures.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct StepTelemetry {
  std::uint64_t step = 0;  // 1-based within the stage
  std::size_t epoch = 0;
  double loss = 0.0;
  double contrastive = 0.0;
  double distillation = 0.0;
  bool has_distillation = false;
};

using TelemetrySink = std::function<void(const StepTelemetry&)>;

// Scores (query, passage) text pairs, standing in for a cross-encoder.
struct TeacherOracle {
  std::function<double(std::string_view query, std::string_view passage)> score;
};

// +1 for a query's labeled positive, -1 for anything else.
TeacherOracle make_pair_oracle(std::span<const TextPair> labeled);

struct RunOptions {
  int workers = 1;
  bool allow_refinetune = false;
};

// Loss of one batch under the current parameters, as the trainer computes it
// before an update.
FinetuneLossOutput batch_loss(const EmbeddingModel& model, const PairBatch& batch,
                              const TrainConfig& cfg, const TeacherOracle* teacher,
                              int workers = 1);

struct ParameterGradients {
  std::vector<double> token_table;  // vocab x hidden
  std::vector<double> projection;   // hidden x dim
};

// d(batch_loss)/d(parameters) as used by the trainer's update.
ParameterGradients batch_gradients(const EmbeddingModel& model, const PairBatch& batch,
                                   const TrainConfig& cfg, const TeacherOracle* teacher,
                                   int workers = 1);

// Stage 1: InfoNCE with in-batch negatives for cfg.steps updates, cycling
// through `batches` when there are fewer batches than steps.
Checkpoint pretrain(const EmbeddingModel& init, std::span<const PairBatch> batches,
                    const TrainConfig& cfg, const TelemetrySink& sink = {},
                    const RunOptions& options = {});

// Stage 2: hard negatives plus optional distillation for cfg.epochs passes.
// Starts a fresh optimizer. Throws Error(StageOrder) when `init` already
// completed fine-tuning and options.allow_refinetune is false.
Checkpoint finetune(const Checkpoint& init, std::span<const PairBatch> batches,
                    const TeacherOracle* teacher, const TrainConfig& cfg,
                    const TelemetrySink& sink = {}, const RunOptions& options = {});
Checkpoint finetune(const EmbeddingModel& init, std::span<const PairBatch> batches,
                    const TeacherOracle* teacher, const TrainConfig& cfg,
                    const TelemetrySink& sink = {}, const RunOptions& options = {});

}  // namespace embedforge
