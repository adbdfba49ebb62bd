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

#include "embedforge/embedder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "embedforge/error.h"
#include "embedforge/parallel.h"
#include "embedforge/rng.h"
#include "embedforge/simd/kernels.h"

namespace embedforge {
namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::vector<int> sorted_sizes(const std::vector<int>& sizes) {
  std::vector<int> out = sizes;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

void TokenizerConfig::validate() const {
  if (vocab_size < 2) throw Error(Errc::InvalidArgument, "vocab_size must be >= 2");
  if (vocab_size > (std::uint64_t{1} << 32)) {
    throw Error(Errc::InvalidArgument, "vocab_size must fit 32-bit token ids");
  }
  if (ngram_sizes.empty()) throw Error(Errc::InvalidArgument, "ngram_sizes must be nonempty");
  for (int n : ngram_sizes) {
    if (n < 1) throw Error(Errc::InvalidArgument, "n-gram sizes must be >= 1");
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset ^ seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::vector<std::uint32_t> tokenize(const TokenizerConfig& cfg, std::string_view text) {
  cfg.validate();
  const std::vector<int> sizes = sorted_sizes(cfg.ngram_sizes);
  std::vector<std::uint32_t> ids;
  if (text.size() < static_cast<std::size_t>(sizes.front())) return ids;
  ids.reserve(text.size() * sizes.size());
  for (std::size_t pos = 0; pos < text.size(); ++pos) {
    for (int n : sizes) {
      const auto len = static_cast<std::size_t>(n);
      if (pos + len > text.size()) break;
      ids.push_back(static_cast<std::uint32_t>(fnv1a64(text.substr(pos, len), cfg.hash_seed) %
                                               cfg.vocab_size));
    }
  }
  return ids;
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Query: return "query";
    case Role::Passage: return "passage";
    case Role::Symmetric: return "symmetric";
  }
  return "query";
}

Role parse_role(std::string_view name) {
  if (name == "query") return Role::Query;
  if (name == "passage") return Role::Passage;
  if (name == "symmetric") return Role::Symmetric;
  throw Error(Errc::InvalidArgument, "unknown role '" + std::string(name) + "'");
}

std::string format_input(const InputRole& role, std::string_view text,
                         const PromptTemplates& templates) {
  if (role.instruction && role.role != Role::Query) {
    throw Error(Errc::InstructionOnPassage,
                "instructions are only allowed with the query role, got " +
                    std::string(to_string(role.role)));
  }
  if (role.instruction) {
    // Substitute {text} last so instruction text cannot inject a placeholder.
    std::string out = templates.instruction_template;
    const std::size_t text_at = out.find("{text}");
    std::string head = text_at == std::string::npos ? out : out.substr(0, text_at);
    std::string tail = text_at == std::string::npos ? "" : out.substr(text_at + 6);
    replace_all(head, "{instruction}", *role.instruction);
    replace_all(tail, "{instruction}", *role.instruction);
    if (text_at == std::string::npos) return head;
    return head + std::string(text) + tail;
  }
  switch (role.role) {
    case Role::Passage: return templates.passage_prefix + std::string(text);
    case Role::Query:
    case Role::Symmetric: return templates.query_prefix + std::string(text);
  }
  return std::string(text);
}

std::string_view to_string(SizeClass size) {
  switch (size) {
    case SizeClass::Small: return "small";
    case SizeClass::Base: return "base";
    case SizeClass::Large: return "large";
  }
  return "small";
}

SizeClass parse_size_class(std::string_view name) {
  if (name == "small") return SizeClass::Small;
  if (name == "base") return SizeClass::Base;
  if (name == "large") return SizeClass::Large;
  throw Error(Errc::InvalidArgument, "unknown size class '" + std::string(name) + "'");
}

ModelShape default_shape(SizeClass size) {
  switch (size) {
    case SizeClass::Small: return {16384, 64, 64};
    case SizeClass::Base: return {32768, 96, 96};
    case SizeClass::Large: return {65536, 128, 128};
  }
  return {16384, 64, 64};
}

EmbeddingModel::EmbeddingModel(TokenizerConfig tokenizer, std::size_t hidden, std::size_t dim,
                               SizeClass size_class, PromptTemplates prompts)
    : tokenizer_(std::move(tokenizer)),
      prompts_(std::move(prompts)),
      size_class_(size_class),
      hidden_(hidden),
      dim_(dim) {
  tokenizer_.validate();
  tokenizer_.ngram_sizes = sorted_sizes(tokenizer_.ngram_sizes);
  if (hidden_ < 1) throw Error(Errc::InvalidArgument, "hidden size must be >= 1");
  if (dim_ < 2) throw Error(Errc::InvalidArgument, "output dimension must be >= 2");
  token_table_.assign(tokenizer_.vocab_size * hidden_, 0.0f);
  projection_.assign(hidden_ * dim_, 0.0f);
}

EmbeddingModel EmbeddingModel::initialize(TokenizerConfig tokenizer, std::size_t hidden,
                                          std::size_t dim, SizeClass size_class,
                                          std::uint64_t seed, PromptTemplates prompts) {
  EmbeddingModel model(std::move(tokenizer), hidden, dim, size_class, std::move(prompts));
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  Rng table_rng(derive_seed(seed, 1));
  for (float& w : model.token_table_) w = static_cast<float>(table_rng.uniform(-bound, bound));
  Rng proj_rng(derive_seed(seed, 2));
  for (float& w : model.projection_) w = static_cast<float>(proj_rng.uniform(-bound, bound));
  return model;
}

EmbeddingModel EmbeddingModel::initialize(SizeClass size_class, std::uint64_t seed) {
  const ModelShape shape = default_shape(size_class);
  TokenizerConfig tok;
  tok.vocab_size = shape.vocab_size;
  return initialize(tok, shape.hidden, shape.dim, size_class, seed);
}

void EmbeddingModel::validate() const {
  for (float w : token_table_) {
    if (!std::isfinite(w)) throw Error(Errc::NonFinite, "token_table holds a non-finite value");
  }
  for (float w : projection_) {
    if (!std::isfinite(w)) throw Error(Errc::NonFinite, "projection holds a non-finite value");
  }
}

bool bitwise_equal(const EmbeddingModel& a, const EmbeddingModel& b) {
  return a.tokenizer_ == b.tokenizer_ && a.prompts_ == b.prompts_ &&
         a.size_class_ == b.size_class_ && a.hidden_ == b.hidden_ && a.dim_ == b.dim_ &&
         a.token_table_.size() == b.token_table_.size() &&
         a.projection_.size() == b.projection_.size() &&
         std::memcmp(a.token_table_.data(), b.token_table_.data(),
                     a.token_table_.size() * sizeof(float)) == 0 &&
         std::memcmp(a.projection_.data(), b.projection_.data(),
                     a.projection_.size() * sizeof(float)) == 0;
}

Activation forward(const EmbeddingModel& model, std::string_view formatted) {
  const auto& k = simd::active();
  const std::size_t h = model.hidden();
  const std::size_t d = model.dim();
  const auto table = model.token_table();
  const auto proj = model.projection();

  Activation act;
  act.ids = tokenize(model.tokenizer(), formatted);
  act.pooled.assign(h, 0.0);
  if (act.ids.empty()) {
    k.axpy_f32_to_f64(act.pooled.data(), table.data(), 1.0, h);
  } else {
    for (std::uint32_t id : act.ids) {
      k.axpy_f32_to_f64(act.pooled.data(), table.data() + std::size_t{id} * h, 1.0, h);
    }
    k.scale_f64(act.pooled.data(), 1.0 / static_cast<double>(act.ids.size()), h);
  }

  act.projected.assign(d, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    k.axpy_f32_to_f64(act.projected.data(), proj.data() + r * d, act.pooled[r], d);
  }
  act.norm = std::sqrt(k.dot_f64(act.projected.data(), act.projected.data(), d));
  act.unit = act.projected;
  if (act.norm > 0.0 && std::isfinite(act.norm)) {
    k.scale_f64(act.unit.data(), 1.0 / act.norm, d);
  } else {
    // Only reachable with all-zero parameters; keep the output unit-norm.
    std::fill(act.unit.begin(), act.unit.end(), 0.0);
    act.unit[0] = 1.0;
  }
  return act;
}

Vector encode(const EmbeddingModel& model, const InputRole& role, std::string_view text) {
  return Vector(forward(model, format_input(role, text, model.prompts())).unit);
}

std::vector<Vector> encode_batch(const EmbeddingModel& model, const InputRole& role,
                                 std::span<const std::string> texts, int workers) {
  std::vector<std::optional<Vector>> slots(texts.size());
  parallel_for(texts.size(), workers,
               [&](std::size_t i) { slots[i].emplace(encode(model, role, texts[i])); });
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace embedforge
