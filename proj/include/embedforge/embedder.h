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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embedforge/vecmath.h"

namespace embedforge {

// Hashed byte-n-gram tokenizer settings.
struct TokenizerConfig {
  std::vector<int> ngram_sizes{3, 4};
  std::uint64_t vocab_size = 16384;
  std::uint64_t hash_seed = 0;

  // Throws Error(InvalidArgument) unless vocab_size >= 2 and every n-gram
  // size is >= 1. Sizes are kept sorted and unique.
  void validate() const;
  friend bool operator==(const TokenizerConfig&, const TokenizerConfig&) = default;
};

// 64-bit FNV-1a; the seed is folded into the offset basis (seed 0 gives the
// standard hash).
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);

// Ids of every byte n-gram, by start position; at each position the sizes are
// emitted smallest first. Text shorter than every size yields no ids.
std::vector<std::uint32_t> tokenize(const TokenizerConfig& cfg, std::string_view text);

enum class Role { Query, Passage, Symmetric };

struct InputRole {
  Role role = Role::Query;
  std::optional<std::string> instruction;

  static InputRole query() { return {Role::Query, std::nullopt}; }
  static InputRole passage() { return {Role::Passage, std::nullopt}; }
  static InputRole symmetric() { return {Role::Symmetric, std::nullopt}; }
  static InputRole instructed(std::string task) { return {Role::Query, std::move(task)}; }
};

std::string_view to_string(Role role);
// Throws Error(InvalidArgument) on an unknown name.
Role parse_role(std::string_view name);

struct PromptTemplates {
  std::string query_prefix = "query: ";
  std::string passage_prefix = "passage: ";
  // Placeholders: {instruction}, {text}.
  std::string instruction_template = "Instruct: {instruction}\nQuery: {text}";
  friend bool operator==(const PromptTemplates&, const PromptTemplates&) = default;
};

// Throws Error(InstructionOnPassage) when an instruction accompanies a
// passage or symmetric role.
std::string format_input(const InputRole& role, std::string_view text,
                         const PromptTemplates& templates = {});

enum class SizeClass { Small, Base, Large };

std::string_view to_string(SizeClass size);
SizeClass parse_size_class(std::string_view name);

struct ModelShape {
  std::uint64_t vocab_size;
  std::size_t hidden;
  std::size_t dim;
};

ModelShape default_shape(SizeClass size);

// token_table is vocab x hidden, projection is hidden x dim, both row-major.
// Row 0 of token_table doubles as the pooled value for inputs with no tokens.
class EmbeddingModel {
 public:
  // Zero-initialized parameters.
  EmbeddingModel(TokenizerConfig tokenizer, std::size_t hidden, std::size_t dim,
                 SizeClass size_class, PromptTemplates prompts = {});

  // Uniform(-1/sqrt(hidden), 1/sqrt(hidden)) parameters from `seed`.
  static EmbeddingModel initialize(TokenizerConfig tokenizer, std::size_t hidden,
                                   std::size_t dim, SizeClass size_class,
                                   std::uint64_t seed, PromptTemplates prompts = {});
  static EmbeddingModel initialize(SizeClass size_class, std::uint64_t seed);

  const TokenizerConfig& tokenizer() const noexcept { return tokenizer_; }
  const PromptTemplates& prompts() const noexcept { return prompts_; }
  SizeClass size_class() const noexcept { return size_class_; }
  std::uint64_t vocab_size() const noexcept { return tokenizer_.vocab_size; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const float> token_table() const noexcept { return token_table_; }
  std::span<float> token_table() noexcept { return token_table_; }
  std::span<const float> projection() const noexcept { return projection_; }
  std::span<float> projection() noexcept { return projection_; }

  // Throws Error(NonFinite) if any parameter is NaN or infinite.
  void validate() const;

  friend bool bitwise_equal(const EmbeddingModel& a, const EmbeddingModel& b);

 private:
  TokenizerConfig tokenizer_;
  PromptTemplates prompts_;
  SizeClass size_class_;
  std::size_t hidden_;
  std::size_t dim_;
  std::vector<float> token_table_;
  std::vector<float> projection_;
};

// Forward-pass intermediates of one (already formatted) text.
struct Activation {
  std::vector<std::uint32_t> ids;  // empty: row 0 was pooled
  std::vector<double> pooled;      // hidden
  std::vector<double> projected;   // dim, before normalization
  double norm = 0.0;               // |projected|
  std::vector<double> unit;        // dim
};

Activation forward(const EmbeddingModel& model, std::string_view formatted);

Vector encode(const EmbeddingModel& model, const InputRole& role, std::string_view text);

std::vector<Vector> encode_batch(const EmbeddingModel& model, const InputRole& role,
                                 std::span<const std::string> texts, int workers = 1);

}  // namespace embedforge
