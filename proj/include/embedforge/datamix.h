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
#include <fstream>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedforge/embedder.h"
#include "embedforge/qrels.h"

namespace embedforge {

// One training example. `id` and `instruction` are optional extensions of the
// pair schema: `id` links a pair to qrels, `instruction` conditions the query.
struct TextPair {
  std::string query;
  std::string positive;
  std::vector<std::string> negatives;
  std::string source;
  std::string lang;
  std::string id;
  std::optional<std::string> instruction;

  friend bool operator==(const TextPair&, const TextPair&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::string lang;
};

// Streams pairs from a JSONL file with fields query, positive (required) and
// negatives, lang, source, id, instruction (optional). Blank lines are
// skipped; negatives equal to the positive are dropped.
class PairReader {
 public:
  // Throws Error(Io) when the file cannot be opened.
  PairReader(const std::filesystem::path& path, std::string source_name);

  // Next pair in file order, or nullopt at end of file. Throws
  // Error(MalformedJson) / Error(MissingField) tagged with the line number.
  std::optional<TextPair> next();
  std::size_t line() const noexcept { return line_; }

 private:
  std::ifstream in_;
  std::string source_;
  std::size_t line_ = 0;
};

TextPair parse_pair_line(const std::string& line, std::size_t line_no,
                         const std::string& default_source = "");
std::string to_json_line(const TextPair& pair);
void write_pairs_jsonl(std::span<const TextPair> pairs, std::ostream& out);

// Two-column "query<TAB>positive" files, for quick fixtures.
std::vector<TextPair> read_tsv_pairs(const std::filesystem::path& path,
                                     const std::string& source_name);
void convert_tsv_to_jsonl(const std::filesystem::path& tsv,
                          const std::filesystem::path& jsonl, const std::string& source_name);

// Corpus JSONL: {"id": ..., "text": ..., "lang": optional}.
std::vector<Document> load_documents(const std::filesystem::path& path);

struct SourceSpec {
  std::string name;
  std::filesystem::path uri;
  std::optional<std::uint64_t> quota;
  std::optional<double> rate;

  // Exactly one of quota / rate; rate in (0, 1].
  void validate() const;
};

struct MixtureSpec {
  std::vector<SourceSpec> sources;
  std::uint64_t seed = 0;

  // Source names must be unique.
  void validate() const;
};

// Nominal pair counts of the pre-training and fine-tuning mixtures, divided
// by `scale` (1 keeps the published counts).
MixtureSpec pretraining_mixture(std::uint64_t scale = 1);
MixtureSpec finetuning_mixture(std::uint64_t scale = 1);

std::vector<TextPair> load_pairs(const SourceSpec& spec);

struct SampleRef {
  std::size_t source;
  std::uint64_t index;
  friend bool operator==(const SampleRef&, const SampleRef&) = default;
};

struct SourceSample {
  std::string name;
  std::uint64_t pool = 0;
  std::vector<std::uint64_t> indices;  // ascending, no repeats
};

struct MixtureSample {
  std::vector<SourceSample> sources;
  std::vector<SampleRef> order;  // seeded interleaving of every sampled index
  std::uint64_t total() const noexcept { return order.size(); }
};

// Quota sources take exactly `quota` pairs, rate sources floor(rate * pool),
// all without replacement. Throws Error(QuotaExceedsPool) and
// Error(InvalidArgument) when a source has no pool size.
MixtureSample sample_mixture(const MixtureSpec& mix,
                             const std::map<std::string, std::uint64_t>& pools);

// Loads every source, samples the mixture and returns the pairs in the
// interleaved order.
std::vector<TextPair> load_mixture(const MixtureSpec& mix, int workers = 1);

struct PairBatch {
  std::vector<TextPair> pairs;
  std::size_t hard_negatives = 0;  // every pair carries exactly this many
};

// Seeded shuffle then greedy fill. A pair whose positive already appears in
// the open batch waits for a later batch; a final batch smaller than 2 is
// dropped. With hard_negatives > 0 each negative list is truncated or padded
// by repeating its last entry (pairs without any borrow the next pair's
// positive); with 0 the lists are cleared. Throws Error(InvalidArgument)
// when batch_size < 2.
std::vector<PairBatch> build_batches(std::span<const TextPair> pairs, std::size_t batch_size,
                                     std::uint64_t seed, std::size_t hard_negatives = 0);

struct MiningQuery {
  std::string id;
  std::string text;
  std::string positive;  // excluded like a qrels-relevant doc; may be empty
  std::optional<std::string> instruction;
};

struct MiningOptions {
  std::size_t k = 7;
  std::size_t window_lo = 2;  // 1-based inclusive rank window
  std::size_t window_hi = 100;
  int workers = 1;
};

// Corpus indices of up to k non-relevant passages per query whose rank by
// cosine to the query falls in [window_lo, window_hi], best first.
// Throws Error(EmptyCorpus), Error(InvalidArgument) when window_lo < 1 or
// window_hi < window_lo.
std::vector<std::vector<std::size_t>> mine_hard_negatives(
    const EmbeddingModel& model, std::span<const MiningQuery> queries,
    std::span<const Document> corpus, const Qrels& qrels, const MiningOptions& options = {});

}  // namespace embedforge
