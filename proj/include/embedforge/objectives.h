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
#include <functional>

#include "embedforge/vecmath.h"

namespace embedforge {

// Loss value in nats plus d(loss)/d(score) for every input score.
struct LossOutput {
  double loss = 0.0;
  ScoreMatrix grad_scores;
};

struct FinetuneLossOutput : LossOutput {
  double contrastive = 0.0;   // InfoNCE over the full candidate row
  double distillation = 0.0;  // unweighted KD term, 0 without a teacher
};

// Mean over rows of -log softmax(scores_i / tau)[i]; the diagonal holds each
// query's positive. `bidirectional` averages in the column-wise
// (candidate -> query) direction.
// Throws Error(NonPositiveTemperature), Error(NonSquareMatrix).
LossOutput info_nce(const ScoreMatrix& scores, double tau, bool bidirectional = false);

// Mean over rows of KL(softmax(teacher_i / tau_teacher) || softmax(student_i / tau_student)),
// with the gradient taken w.r.t. student scores.
// Throws Error(ShapeMismatch) on differing shapes or fewer than 2 columns,
// Error(NonPositiveTemperature).
LossOutput kd_divergence(const ScoreMatrix& teacher, const ScoreMatrix& student,
                         double tau_teacher, double tau_student);

// Student rows are laid out [positive | hard_negatives | N-1 in-batch
// negatives]. Teacher scores, when given, cover [positive | hard_negatives]
// and are distilled at weight alpha with the student at temperature tau.
FinetuneLossOutput finetune_loss(const ScoreMatrix& student, std::size_t hard_negatives,
                                 const ScoreMatrix* teacher, double tau, double alpha,
                                 double tau_teacher = 1.0);

// Central differences per entry: (f(x + eps e) - f(x - eps e)) / (2 eps).
ScoreMatrix finite_difference_grad(const std::function<double(const ScoreMatrix&)>& f,
                                   const ScoreMatrix& x, double eps);

}  // namespace embedforge
