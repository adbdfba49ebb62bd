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

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "embedforge/embedder.h"
#include "embedforge/error.h"
#include "embedforge/rng.h"
#include "oracles.h"

namespace embedforge {
namespace {

template <typename Fn>
Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an embedforge::Error";
  return Errc::InvalidArgument;
}

double norm(const Vector& v) {
  double s = 0.0;
  for (double x : v.values()) s += x * x;
  return std::sqrt(s);
}

// Random UTF-8 mixing ASCII, 2-, 3- and 4-byte sequences.
std::string random_utf8(Rng& rng, std::size_t chars) {
  static const char* pieces[] = {"a", "Z", " ", "7", "é", "ж", "ß", "λ", "中", "ა", "😀", "\t"};
  std::string s;
  for (std::size_t i = 0; i < chars; ++i) s += pieces[rng.uniform_index(12)];
  return s;
}

TEST(Fnv1a, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("abc"), 0xe71fa2190541574bULL);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const std::string s = random_utf8(rng, rng.uniform_index(12));
    const std::uint64_t seed = rng.next_u64();
    EXPECT_EQ(fnv1a64(s, seed), oracle::fnv1a64(s, seed));
  }
}

TEST(Tokenize, Examples) {
  TokenizerConfig cfg;
  EXPECT_TRUE(tokenize(cfg, "").empty());
  EXPECT_EQ(tokenize(cfg, "the same text"), tokenize(cfg, "the same text"));

  TokenizerConfig tri;
  tri.ngram_sizes = {3};
  tri.vocab_size = 1000;
  const auto ids = tokenize(tri, "abcd");
  ASSERT_EQ(ids.size(), 2u);
  EXPECT_EQ(ids[0], oracle::fnv1a64("abc", 0) % 1000);
  EXPECT_EQ(ids[1], oracle::fnv1a64("bcd", 0) % 1000);
  EXPECT_EQ(ids[0], 931u);
  EXPECT_EQ(ids[1], 970u);
}

TEST(Tokenize, InterleavesSizesSmallestFirst) {
  TokenizerConfig cfg;
  cfg.ngram_sizes = {4, 3};
  cfg.vocab_size = 1u << 20;
  const auto ids = tokenize(cfg, "abcde");
  const std::vector<std::string> grams = {"abc", "abcd", "bcd", "bcde", "cde"};
  ASSERT_EQ(ids.size(), grams.size());
  for (std::size_t i = 0; i < grams.size(); ++i) {
    EXPECT_EQ(ids[i], oracle::fnv1a64(grams[i], 0) % cfg.vocab_size) << grams[i];
  }
  EXPECT_TRUE(tokenize(cfg, "ab").empty());
}

TEST(Tokenize, HashSeedIsWiredThrough) {
  TokenizerConfig a, b;
  b.hash_seed = 12345;
  Rng rng(4);
  bool differs = false;
  for (int i = 0; i < 20 && !differs; ++i) {
    const std::string s = random_utf8(rng, 8);
    differs = tokenize(a, s) != tokenize(b, s);
  }
  EXPECT_TRUE(differs);
}

TEST(TokenizerConfig, Validation) {
  TokenizerConfig cfg;
  cfg.vocab_size = 1;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), Errc::InvalidArgument);
  cfg.vocab_size = 10;
  cfg.ngram_sizes = {};
  EXPECT_EQ(code_of([&] { cfg.validate(); }), Errc::InvalidArgument);
  cfg.ngram_sizes = {0};
  EXPECT_EQ(code_of([&] { cfg.validate(); }), Errc::InvalidArgument);
}

TEST(FormatInput, Examples) {
  EXPECT_EQ(format_input(InputRole::passage(), "le chat"), "passage: le chat");
  EXPECT_EQ(format_input(InputRole::query(), "hund"), "query: hund");
  EXPECT_EQ(format_input(InputRole::symmetric(), "hund"), "query: hund");
  EXPECT_EQ(format_input(InputRole::instructed("Retrieve parallel sentences"), "hund"),
            "Instruct: Retrieve parallel sentences\nQuery: hund");
}

TEST(FormatInput, InstructionOnlyWithQueryRole) {
  EXPECT_EQ(code_of([] { format_input({Role::Passage, "task"}, "x"); }),
            Errc::InstructionOnPassage);
  EXPECT_EQ(code_of([] { format_input({Role::Symmetric, "task"}, "x"); }),
            Errc::InstructionOnPassage);
}

TEST(FormatInput, TemplatesAreConfiguration) {
  PromptTemplates t;
  t.query_prefix = "Q| ";
  t.instruction_template = "<{instruction}> {text} <{instruction}>";
  EXPECT_EQ(format_input(InputRole::query(), "x", t), "Q| x");
  EXPECT_EQ(format_input(InputRole::instructed("{text}"), "y", t), "<{text}> y <{text}>");
}

TEST(FormatInput, DistinctTextsNeverCollide) {
  Rng rng(5);
  for (const InputRole& role : {InputRole::query(), InputRole::passage(),
                                InputRole::instructed("find it")}) {
    std::set<std::string> texts, formatted;
    for (int i = 0; i < 300; ++i) {
      const std::string t = random_utf8(rng, rng.uniform_index(6));
      if (texts.insert(t).second) formatted.insert(format_input(role, t));
    }
    EXPECT_EQ(texts.size(), formatted.size());
  }
}

TEST(InputRole, Names) {
  EXPECT_EQ(parse_role("passage"), Role::Passage);
  EXPECT_EQ(to_string(Role::Symmetric), "symmetric");
  EXPECT_EQ(code_of([] { parse_role("doc"); }), Errc::InvalidArgument);
  EXPECT_EQ(parse_size_class("large"), SizeClass::Large);
  EXPECT_EQ(code_of([] { parse_size_class("huge"); }), Errc::InvalidArgument);
}

TEST(EmbeddingModel, ShapeRules) {
  TokenizerConfig tok;
  tok.vocab_size = 16;
  EXPECT_EQ(code_of([&] { EmbeddingModel(tok, 0, 4, SizeClass::Small); }),
            Errc::InvalidArgument);
  EXPECT_EQ(code_of([&] { EmbeddingModel(tok, 4, 1, SizeClass::Small); }),
            Errc::InvalidArgument);
  const EmbeddingModel m(tok, 3, 5, SizeClass::Small);
  EXPECT_EQ(m.token_table().size(), 16u * 3u);
  EXPECT_EQ(m.projection().size(), 15u);
}

TEST(EmbeddingModel, InitializationIsSeededAndBounded) {
  const auto a = EmbeddingModel::initialize(SizeClass::Small, 1);
  const auto b = EmbeddingModel::initialize(SizeClass::Small, 1);
  const auto c = EmbeddingModel::initialize(SizeClass::Small, 2);
  EXPECT_TRUE(bitwise_equal(a, b));
  EXPECT_FALSE(bitwise_equal(a, c));
  const double bound = 1.0 / std::sqrt(static_cast<double>(a.hidden()));
  for (float w : a.token_table()) ASSERT_LE(std::abs(w), bound);
  for (float w : a.projection()) ASSERT_LE(std::abs(w), bound);
}

TEST(EmbeddingModel, ValidateRejectsNonFinite) {
  auto m = EmbeddingModel::initialize(SizeClass::Small, 1);
  m.projection()[3] = std::nanf("");
  EXPECT_EQ(code_of([&] { m.validate(); }), Errc::NonFinite);
}

TEST(Encode, HandBuiltModel) {
  TokenizerConfig tok;
  tok.vocab_size = 2;
  EmbeddingModel m(tok, 1, 2, SizeClass::Small);
  m.token_table()[0] = 1.0f;
  m.token_table()[1] = 1.0f;
  m.projection()[0] = 3.0f;
  m.projection()[1] = 4.0f;
  for (const char* text : {"abc", "some longer text", "ж"}) {
    const Vector v = encode(m, InputRole::query(), text);
    EXPECT_NEAR(v[0], 0.6, 1e-15);
    EXPECT_NEAR(v[1], 0.8, 1e-15);
  }
}

TEST(Encode, EmptyTokenListPoolsRowZero) {
  TokenizerConfig tok;
  tok.vocab_size = 8;
  tok.ngram_sizes = {50};
  EmbeddingModel m(tok, 2, 2, SizeClass::Small);
  m.token_table()[0] = 1.0f;  // row 0 = (1, 0)
  m.token_table()[1] = 0.0f;
  m.projection()[0] = 0.0f;
  m.projection()[1] = 2.0f;
  m.projection()[2] = 5.0f;
  m.projection()[3] = 5.0f;
  const Activation a = forward(m, "short");
  EXPECT_TRUE(a.ids.empty());
  EXPECT_EQ(a.pooled, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(a.unit, (std::vector<double>{0.0, 1.0}));
}

TEST(Encode, ZeroModelStillUnitNorm) {
  TokenizerConfig tok;
  tok.vocab_size = 8;
  const EmbeddingModel m(tok, 2, 3, SizeClass::Small);
  EXPECT_NEAR(norm(encode(m, InputRole::query(), "abc")), 1.0, 1e-15);
}

TEST(Encode, UnitNormOverRandomUtf8) {
  const auto m = EmbeddingModel::initialize(SizeClass::Small, 9);
  Rng rng(6);
  for (int i = 0; i < 300; ++i) {
    const std::string text = random_utf8(rng, rng.uniform_index(30));
    EXPECT_NEAR(norm(encode(m, InputRole::passage(), text)), 1.0, 1e-9) << text;
  }
}

TEST(Encode, MatchesExplicitFormula) {
  TokenizerConfig tok;
  tok.vocab_size = 97;
  const auto m = EmbeddingModel::initialize(tok, 5, 4, SizeClass::Small, 11);
  const std::string formatted = format_input(InputRole::query(), "hello world");
  const auto ids = tokenize(tok, formatted);
  std::vector<long double> pooled(5, 0.0L), out(4, 0.0L);
  for (auto id : ids) {
    for (int r = 0; r < 5; ++r) pooled[r] += m.token_table()[id * 5 + r];
  }
  for (auto& p : pooled) p /= static_cast<long double>(ids.size());
  for (int j = 0; j < 4; ++j) {
    for (int r = 0; r < 5; ++r) out[j] += pooled[r] * m.projection()[r * 4 + j];
  }
  long double n = 0.0L;
  for (auto x : out) n += x * x;
  const Vector v = encode(m, InputRole::query(), "hello world");
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(v[j], static_cast<double>(out[j] / std::sqrt(n)), 1e-12);
  }
}

TEST(EncodeBatch, MatchesEncodeForAnyWorkerCount) {
  const auto m = EmbeddingModel::initialize(SizeClass::Small, 10);
  EXPECT_TRUE(encode_batch(m, InputRole::query(), {}).empty());
  Rng rng(7);
  std::vector<std::string> texts;
  for (int i = 0; i < 41; ++i) texts.push_back(random_utf8(rng, 1 + rng.uniform_index(20)));
  const auto one = encode_batch(m, InputRole::passage(), texts, 1);
  const auto many = encode_batch(m, InputRole::passage(), texts, 8);
  ASSERT_EQ(one.size(), texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    EXPECT_EQ(one[i], encode(m, InputRole::passage(), texts[i]));
    EXPECT_EQ(one[i], many[i]);
  }
}

TEST(Encode, RepeatedCallsAreBitwiseIdentical) {
  const auto m = EmbeddingModel::initialize(SizeClass::Base, 12);
  EXPECT_EQ(encode(m, InputRole::query(), "determinism"), encode(m, InputRole::query(), "determinism"));
}

}  // namespace
}  // namespace embedforge
