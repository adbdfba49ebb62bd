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

#include "embedforge/objectives.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "embedforge/error.h"

namespace embedforge {
namespace {

void check_tau(double tau, const char* name) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(Errc::NonPositiveTemperature, std::string(name) + " must be > 0");
  }
}

// Writes softmax(x / tau) into p and returns log-sum-exp(x / tau).
double softmax_row(std::span<const double> x, double tau, std::span<double> p) {
  double mx = -INFINITY;
  for (double v : x) mx = std::max(mx, v / tau);
  double z = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    p[j] = std::exp(x[j] / tau - mx);
    z += p[j];
  }
  for (double& v : p) v /= z;
  return mx + std::log(z);
}

// Adds row-wise cross entropy with the positive at column pos(i); gradients
// are scaled by `weight`.
template <typename PosFn>
double cross_entropy_rows(const ScoreMatrix& s, double tau, PosFn pos, double weight,
                          ScoreMatrix& grad) {
  const std::size_t n = s.rows();
  std::vector<double> p(s.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = pos(i);
    const double lse = softmax_row(s.row(i), tau, p);
    total += lse - s.at(i, c) / tau;
    auto g = grad.row(i);
    for (std::size_t j = 0; j < s.cols(); ++j) {
      g[j] += weight * (p[j] - (j == c ? 1.0 : 0.0)) / tau;
    }
  }
  return total;
}

}  // namespace

LossOutput info_nce(const ScoreMatrix& scores, double tau, bool bidirectional) {
  check_tau(tau, "tau");
  if (scores.rows() != scores.cols()) {
    throw Error(Errc::NonSquareMatrix, std::to_string(scores.rows()) + "x" +
                                           std::to_string(scores.cols()));
  }
  const std::size_t n = scores.rows();
  LossOutput out{0.0, ScoreMatrix(n, n)};
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  if (!bidirectional) {
    out.loss = inv_n * cross_entropy_rows(scores, tau, [](std::size_t i) { return i; }, inv_n,
                                          out.grad_scores);
    return out;
  }
  ScoreMatrix transposed(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) transposed.at(j, i) = scores.at(i, j);
  ScoreMatrix grad_t(n, n);
  const double forward = cross_entropy_rows(scores, tau, [](std::size_t i) { return i; },
                                            0.5 * inv_n, out.grad_scores);
  const double backward = cross_entropy_rows(transposed, tau, [](std::size_t i) { return i; },
                                             0.5 * inv_n, grad_t);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.grad_scores.at(i, j) += grad_t.at(j, i);
  out.loss = 0.5 * inv_n * (forward + backward);
  return out;
}

LossOutput kd_divergence(const ScoreMatrix& teacher, const ScoreMatrix& student,
                         double tau_teacher, double tau_student) {
  check_tau(tau_teacher, "tau_teacher");
  check_tau(tau_student, "tau_student");
  if (teacher.rows() != student.rows() || teacher.cols() != student.cols()) {
    throw Error(Errc::ShapeMismatch, "teacher " + std::to_string(teacher.rows()) + "x" +
                                         std::to_string(teacher.cols()) + " vs student " +
                                         std::to_string(student.rows()) + "x" +
                                         std::to_string(student.cols()));
  }
  if (student.cols() < 2) {
    throw Error(Errc::ShapeMismatch, "distillation needs at least 2 candidates per query");
  }
  const std::size_t n = student.rows();
  const std::size_t m = student.cols();
  LossOutput out{0.0, ScoreMatrix(n, m)};
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> pt(m), ps(m);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lse_t = softmax_row(teacher.row(i), tau_teacher, pt);
    const double lse_s = softmax_row(student.row(i), tau_student, ps);
    double kl = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (pt[j] == 0.0) continue;
      const double log_pt = teacher.at(i, j) / tau_teacher - lse_t;
      const double log_ps = student.at(i, j) / tau_student - lse_s;
      kl += pt[j] * (log_pt - log_ps);
    }
    // Rounding can leave a tiny negative residue for identical distributions.
    total += std::max(0.0, kl);
    auto g = out.grad_scores.row(i);
    for (std::size_t j = 0; j < m; ++j) g[j] = inv_n * (ps[j] - pt[j]) / tau_student;
  }
  out.loss = inv_n * total;
  return out;
}

FinetuneLossOutput finetune_loss(const ScoreMatrix& student, std::size_t hard_negatives,
                                 const ScoreMatrix* teacher, double tau, double alpha,
                                 double tau_teacher) {
  check_tau(tau, "tau");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(Errc::InvalidArgument, "alpha must be a finite value >= 0");
  }
  const std::size_t n = student.rows();
  const std::size_t expected_cols = n == 0 ? 0 : 1 + hard_negatives + (n - 1);
  if (student.cols() != expected_cols) {
    throw Error(Errc::ShapeMismatch, "student rows need 1 + H + (N - 1) = " +
                                         std::to_string(expected_cols) + " columns, got " +
                                         std::to_string(student.cols()));
  }
  FinetuneLossOutput out;
  out.grad_scores = ScoreMatrix(n, student.cols());
  if (n == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  out.contrastive = inv_n * cross_entropy_rows(student, tau, [](std::size_t) { return 0; },
                                               inv_n, out.grad_scores);
  out.loss = out.contrastive;
  if (teacher != nullptr) {
    const std::size_t scored = 1 + hard_negatives;
    if (teacher->rows() != n || teacher->cols() != scored) {
      throw Error(Errc::ShapeMismatch, "teacher scores must be N x (1 + H)");
    }
    ScoreMatrix sub(n, scored);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < scored; ++j) sub.at(i, j) = student.at(i, j);
    const LossOutput kd = kd_divergence(*teacher, sub, tau_teacher, tau);
    out.distillation = kd.loss;
    out.loss += alpha * kd.loss;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < scored; ++j)
        out.grad_scores.at(i, j) += alpha * kd.grad_scores.at(i, j);
  }
  return out;
}

ScoreMatrix finite_difference_grad(const std::function<double(const ScoreMatrix&)>& f,
                                   const ScoreMatrix& x, double eps) {
  if (!(eps > 0.0)) throw Error(Errc::InvalidArgument, "eps must be > 0");
  ScoreMatrix grad(x.rows(), x.cols());
  ScoreMatrix probe = x;
  for (std::size_t k = 0; k < x.values().size(); ++k) {
    const double orig = x.values()[k];
    probe.values()[k] = orig + eps;
    const double up = f(probe);
    probe.values()[k] = orig - eps;
    const double down = f(probe);
    probe.values()[k] = orig;
    grad.values()[k] = (up - down) / (2.0 * eps);
  }
  return grad;
}

}  // namespace embedforge
