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

#include "embedforge/trainer.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <utility>

#include "embedforge/error.h"
#include "embedforge/parallel.h"
#include "embedforge/simd/kernels.h"

namespace embedforge {

std::string_view to_string(Stage stage) {
  return stage == Stage::Pretrain ? "pretrain" : "finetune";
}

Stage parse_stage(std::string_view name) {
  if (name == "pretrain") return Stage::Pretrain;
  if (name == "finetune") return Stage::Finetune;
  throw Error(Errc::InvalidArgument, "unknown stage '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (stage == Stage::Pretrain && (!steps || epochs)) {
    throw Error(Errc::InvalidArgument, "pretrain sets steps and not epochs");
  }
  if (stage == Stage::Finetune && (!epochs || steps)) {
    throw Error(Errc::InvalidArgument, "finetune sets epochs and not steps");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(Errc::InvalidArgument, "lr must be > 0");
  if (batch_size < 2) throw Error(Errc::InvalidArgument, "batch_size must be >= 2");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(Errc::InvalidArgument, "alpha must be >= 0");
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw Error(Errc::NonPositiveTemperature, "tau must be > 0");
  }
  if (!(tau_teacher > 0.0) || !std::isfinite(tau_teacher)) {
    throw Error(Errc::NonPositiveTemperature, "tau_teacher must be > 0");
  }
}

TrainConfig default_config(Stage stage, SizeClass size) {
  // Exact literals: 3.0 * 1e-4 is not the double nearest 3e-4.
  static constexpr double kPretrainLr[] = {3e-4, 2e-4, 1e-4};
  static constexpr double kFinetuneLr[] = {3e-5, 2e-5, 1e-5};
  const int k = static_cast<int>(size);
  TrainConfig cfg;
  cfg.stage = stage;
  cfg.size_class = size;
  if (stage == Stage::Pretrain) {
    cfg.batch_size = 32768;
    cfg.steps = 30000;
    cfg.lr = kPretrainLr[k];
  } else {
    cfg.batch_size = 512;
    cfg.epochs = 2;
    cfg.lr = kFinetuneLr[k];
    cfg.hard_negatives = 7;
  }
  return cfg;
}

TrainConfig desk_scale(TrainConfig cfg) {
  cfg.batch_size = 64;
  if (cfg.steps) cfg.steps = std::min<std::size_t>(*cfg.steps, 1000);
  return cfg;
}

TeacherOracle make_pair_oracle(std::span<const TextPair> labeled) {
  auto positives = std::make_shared<std::set<std::pair<std::string, std::string>, std::less<>>>();
  for (const TextPair& p : labeled) positives->emplace(p.query, p.positive);
  TeacherOracle oracle;
  oracle.score = [positives](std::string_view q, std::string_view passage) {
    return positives->count(std::pair<std::string, std::string>(q, passage)) ? 1.0 : -1.0;
  };
  return oracle;
}

namespace {

// Dense parameter gradients. Table rows are zeroed lazily: only rows some
// text touched are nonzero at any time.
struct Gradients {
  std::vector<double> table;
  std::vector<double> projection;
  std::vector<char> touched;
  std::vector<std::uint32_t> touched_rows;

  explicit Gradients(const EmbeddingModel& m)
      : table(m.token_table().size(), 0.0),
        projection(m.projection().size(), 0.0),
        touched(m.vocab_size(), 0) {}

  void touch(std::uint32_t row) {
    if (!touched[row]) {
      touched[row] = 1;
      touched_rows.push_back(row);
    }
  }

  void clear(std::size_t hidden) {
    for (std::uint32_t r : touched_rows) {
      std::fill_n(table.begin() + std::size_t{r} * hidden, hidden, 0.0);
      touched[r] = 0;
    }
    touched_rows.clear();
    std::fill(projection.begin(), projection.end(), 0.0);
  }
};

// Texts are laid out [queries | positives | hard negatives of pair 0 | ...];
// cand(i, c) maps score column c of query i to a text index.
struct Layout {
  std::size_t n = 0;
  std::size_t hard = 0;
  std::size_t cols = 0;
  std::vector<std::string> formatted;
  std::vector<std::size_t> cand;  // n x cols
};

Layout build_layout(const EmbeddingModel& model, const PairBatch& batch, const TrainConfig& cfg) {
  Layout L;
  L.n = batch.pairs.size();
  if (L.n < 2) throw Error(Errc::InvalidArgument, "a batch needs at least 2 pairs");
  const bool finetune = cfg.stage == Stage::Finetune;
  L.hard = finetune ? batch.hard_negatives : 0;
  const auto& tpl = model.prompts();
  const InputRole passage_role = cfg.symmetric ? InputRole::symmetric() : InputRole::passage();

  L.formatted.reserve(L.n * (2 + L.hard));
  for (const TextPair& p : batch.pairs) {
    InputRole q = cfg.symmetric ? InputRole::symmetric() : InputRole::query();
    q.instruction = p.instruction;
    L.formatted.push_back(format_input(q, p.query, tpl));
  }
  for (const TextPair& p : batch.pairs) {
    L.formatted.push_back(format_input(passage_role, p.positive, tpl));
  }
  for (const TextPair& p : batch.pairs) {
    if (p.negatives.size() < L.hard) {
      throw Error(Errc::ShapeMismatch, "pair carries fewer hard negatives than its batch");
    }
    for (std::size_t h = 0; h < L.hard; ++h) {
      L.formatted.push_back(format_input(passage_role, p.negatives[h], tpl));
    }
  }

  if (!finetune) {
    L.cols = L.n;
    L.cand.resize(L.n * L.cols);
    for (std::size_t i = 0; i < L.n; ++i) {
      for (std::size_t j = 0; j < L.n; ++j) L.cand[i * L.cols + j] = L.n + j;
    }
    return L;
  }
  L.cols = 1 + L.hard + (L.n - 1);
  L.cand.resize(L.n * L.cols);
  for (std::size_t i = 0; i < L.n; ++i) {
    std::size_t* row = L.cand.data() + i * L.cols;
    row[0] = L.n + i;
    for (std::size_t h = 0; h < L.hard; ++h) row[1 + h] = 2 * L.n + i * L.hard + h;
    std::size_t c = 1 + L.hard;
    for (std::size_t j = 0; j < L.n; ++j) {
      if (j != i) row[c++] = L.n + j;
    }
  }
  return L;
}

ScoreMatrix teacher_scores(const PairBatch& batch, std::size_t hard, const TeacherOracle& t) {
  ScoreMatrix out(batch.pairs.size(), 1 + hard);
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const TextPair& p = batch.pairs[i];
    out.at(i, 0) = t.score(p.query, p.positive);
    for (std::size_t h = 0; h < hard; ++h) out.at(i, 1 + h) = t.score(p.query, p.negatives[h]);
  }
  return out;
}

// Loss of one batch; accumulates parameter gradients when `grads` is set.
FinetuneLossOutput run_batch(const EmbeddingModel& model, const PairBatch& batch,
                             const TrainConfig& cfg, const TeacherOracle* teacher, int workers,
                             Gradients* grads) {
  const auto& k = simd::active();
  const Layout L = build_layout(model, batch, cfg);
  const std::size_t texts = L.formatted.size();
  const std::size_t d = model.dim();
  const std::size_t h = model.hidden();

  std::vector<Activation> acts(texts);
  parallel_for(texts, workers, [&](std::size_t t) { acts[t] = forward(model, L.formatted[t]); });

  ScoreMatrix scores(L.n, L.cols);
  parallel_for(L.n, workers, [&](std::size_t i) {
    const double* q = acts[i].unit.data();
    for (std::size_t c = 0; c < L.cols; ++c) {
      scores.at(i, c) = k.dot_f64(q, acts[L.cand[i * L.cols + c]].unit.data(), d);
    }
  });

  FinetuneLossOutput out;
  if (cfg.stage == Stage::Pretrain) {
    LossOutput l = info_nce(scores, cfg.tau, cfg.bidirectional);
    out.loss = l.loss;
    out.contrastive = l.loss;
    out.grad_scores = std::move(l.grad_scores);
  } else if (teacher && teacher->score) {
    const ScoreMatrix t = teacher_scores(batch, L.hard, *teacher);
    out = finetune_loss(scores, L.hard, &t, cfg.tau, cfg.alpha, cfg.tau_teacher);
  } else {
    out = finetune_loss(scores, L.hard, nullptr, cfg.tau, cfg.alpha, cfg.tau_teacher);
  }
  if (!grads) return out;

  // d loss / d unit, summed in (query, column) order.
  std::vector<double> du(texts * d, 0.0);
  for (std::size_t i = 0; i < L.n; ++i) {
    for (std::size_t c = 0; c < L.cols; ++c) {
      const double g = out.grad_scores.at(i, c);
      const std::size_t t = L.cand[i * L.cols + c];
      k.axpy_f64(du.data() + i * d, acts[t].unit.data(), g, d);
      k.axpy_f64(du.data() + t * d, acts[i].unit.data(), g, d);
    }
  }

  // Through the normalization and projection, per text.
  const auto proj = model.projection();
  std::vector<double> dz(texts * d, 0.0);
  std::vector<double> dpooled(texts * h, 0.0);
  parallel_for(texts, workers, [&](std::size_t t) {
    const Activation& a = acts[t];
    if (!(a.norm > 0.0) || !std::isfinite(a.norm)) return;
    double* z = dz.data() + t * d;
    const double* g = du.data() + t * d;
    const double radial = k.dot_f64(g, a.unit.data(), d);
    for (std::size_t j = 0; j < d; ++j) z[j] = g[j];
    k.axpy_f64(z, a.unit.data(), -radial, d);
    k.scale_f64(z, 1.0 / a.norm, d);
    double* p = dpooled.data() + t * h;
    for (std::size_t r = 0; r < h; ++r) p[r] = k.dot_f32_f64(proj.data() + r * d, z, d);
  });

  parallel_for(h, workers, [&](std::size_t r) {
    double* row = grads->projection.data() + r * d;
    for (std::size_t t = 0; t < texts; ++t) {
      k.axpy_f64(row, dz.data() + t * d, acts[t].pooled[r], d);
    }
  });

  for (std::size_t t = 0; t < texts; ++t) {
    const Activation& a = acts[t];
    const double* p = dpooled.data() + t * h;
    if (a.ids.empty()) {
      grads->touch(0);
      k.axpy_f64(grads->table.data(), p, 1.0, h);
      continue;
    }
    const double scale = 1.0 / static_cast<double>(a.ids.size());
    for (std::uint32_t id : a.ids) {
      grads->touch(id);
      k.axpy_f64(grads->table.data() + std::size_t{id} * h, p, scale, h);
    }
  }
  return out;
}

class Loop {
 public:
  Loop(Checkpoint& ckpt, const TrainConfig& cfg, const TeacherOracle* teacher,
       const TelemetrySink& sink, int workers)
      : ckpt_(ckpt), cfg_(cfg), teacher_(teacher), sink_(sink), workers_(workers),
        grads_(ckpt.model) {}

  void step(const PairBatch& batch, std::uint64_t stage_step, std::size_t epoch) {
    const FinetuneLossOutput l = run_batch(ckpt_.model, batch, cfg_, teacher_, workers_, &grads_);
    if (!std::isfinite(l.loss)) throw Error(Errc::NonFinite, "training loss is not finite");
    apply_update_in_place(ckpt_.model.token_table(), grads_.table, cfg_.lr,
                          ckpt_.optimizer.token_table);
    apply_update_in_place(ckpt_.model.projection(), grads_.projection, cfg_.lr,
                          ckpt_.optimizer.projection);
    grads_.clear(ckpt_.model.hidden());
    ++ckpt_.step;
    if (sink_) {
      StepTelemetry t;
      t.step = stage_step;
      t.epoch = epoch;
      t.loss = l.loss;
      t.contrastive = l.contrastive;
      t.distillation = l.distillation;
      t.has_distillation = cfg_.stage == Stage::Finetune && teacher_ && teacher_->score;
      sink_(t);
    }
  }

 private:
  Checkpoint& ckpt_;
  const TrainConfig& cfg_;
  const TeacherOracle* teacher_;
  const TelemetrySink& sink_;
  int workers_;
  Gradients grads_;
};

}  // namespace

FinetuneLossOutput batch_loss(const EmbeddingModel& model, const PairBatch& batch,
                              const TrainConfig& cfg, const TeacherOracle* teacher,
                              int workers) {
  cfg.validate();
  return run_batch(model, batch, cfg, teacher, workers, nullptr);
}

ParameterGradients batch_gradients(const EmbeddingModel& model, const PairBatch& batch,
                                   const TrainConfig& cfg, const TeacherOracle* teacher,
                                   int workers) {
  cfg.validate();
  Gradients g(model);
  run_batch(model, batch, cfg, teacher, workers, &g);
  return {std::move(g.table), std::move(g.projection)};
}

Checkpoint pretrain(const EmbeddingModel& init, std::span<const PairBatch> batches,
                    const TrainConfig& cfg, const TelemetrySink& sink,
                    const RunOptions& options) {
  if (cfg.stage != Stage::Pretrain) {
    throw Error(Errc::InvalidArgument, "pretrain requires a pretrain-stage config");
  }
  cfg.validate();
  init.validate();
  Checkpoint ckpt{Checkpoint::kFormatVersion, init, cfg, 0, {}};
  const std::size_t steps = *cfg.steps;
  if (steps > 0 && batches.empty()) {
    throw Error(Errc::EmptyCorpus, "pretrain was given no batches");
  }
  Loop loop(ckpt, cfg, nullptr, sink, options.workers);
  for (std::size_t s = 0; s < steps; ++s) {
    loop.step(batches[s % batches.size()], s + 1, s / batches.size());
  }
  return ckpt;
}

Checkpoint finetune(const Checkpoint& init, std::span<const PairBatch> batches,
                    const TeacherOracle* teacher, const TrainConfig& cfg,
                    const TelemetrySink& sink, const RunOptions& options) {
  if (cfg.stage != Stage::Finetune) {
    throw Error(Errc::InvalidArgument, "finetune requires a finetune-stage config");
  }
  cfg.validate();
  if (init.config.stage == Stage::Finetune && !options.allow_refinetune) {
    throw Error(Errc::StageOrder,
                "checkpoint already completed fine-tuning; pass the re-finetune override");
  }
  init.model.validate();
  Checkpoint ckpt{Checkpoint::kFormatVersion, init.model, cfg, init.step, {}};
  Loop loop(ckpt, cfg, teacher, sink, options.workers);
  std::uint64_t stage_step = 0;
  for (std::size_t e = 0; e < *cfg.epochs; ++e) {
    for (const PairBatch& b : batches) loop.step(b, ++stage_step, e);
  }
  return ckpt;
}

Checkpoint finetune(const EmbeddingModel& init, std::span<const PairBatch> batches,
                    const TeacherOracle* teacher, const TrainConfig& cfg,
                    const TelemetrySink& sink, const RunOptions& options) {
  TrainConfig origin = default_config(Stage::Pretrain, init.size_class());
  origin.steps = 0;
  const Checkpoint start{Checkpoint::kFormatVersion, init, origin, 0, {}};
  return finetune(start, batches, teacher, cfg, sink, options);
}

}  // namespace embedforge
