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

#include "embedforge/datamix.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <unordered_set>

#include "embedforge/error.h"
#include "embedforge/parallel.h"
#include "embedforge/rng.h"
#include "embedforge/simd/kernels.h"
#include "json.hpp"

namespace embedforge {
namespace {

using nlohmann::json;

json parse_object(const std::string& line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(Errc::MalformedJson, e.what(), line_no);
  }
  if (!obj.is_object()) throw Error(Errc::MalformedJson, "expected a JSON object", line_no);
  return obj;
}

std::string required_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    throw Error(Errc::MissingField, std::string("missing required field '") + field + "'", line_no);
  }
  if (!it->is_string()) {
    throw Error(Errc::MalformedJson, std::string("field '") + field + "' must be a string", line_no);
  }
  std::string value = it->get<std::string>();
  if (value.empty()) {
    throw Error(Errc::MissingField, std::string("field '") + field + "' is empty", line_no);
  }
  return value;
}

std::string optional_string(const json& obj, const char* field, std::size_t line_no) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw Error(Errc::MalformedJson, std::string("field '") + field + "' must be a string", line_no);
  }
  return it->get<std::string>();
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

// A uniformly random m-subset of [0, n), ascending (Floyd's algorithm).
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t m, Rng& rng) {
  std::unordered_set<std::uint64_t> chosen;
  chosen.reserve(static_cast<std::size_t>(m) * 2);
  std::vector<std::uint64_t> out;
  out.reserve(static_cast<std::size_t>(m));
  for (std::uint64_t j = n - m; j < n; ++j) {
    const std::uint64_t t = rng.uniform_index(j + 1);
    const std::uint64_t pick = chosen.count(t) ? j : t;
    chosen.insert(pick);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void pad_negatives(PairBatch& batch, std::size_t h) {
  batch.hard_negatives = h;
  const std::size_t n = batch.pairs.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto& negs = batch.pairs[i].negatives;
    if (h == 0) {
      negs.clear();
      continue;
    }
    if (negs.size() > h) negs.resize(h);
    if (negs.empty()) negs.push_back(batch.pairs[(i + 1) % n].positive);
    while (negs.size() < h) negs.push_back(negs.back());
  }
}

}  // namespace

TextPair parse_pair_line(const std::string& line, std::size_t line_no,
                         const std::string& default_source) {
  const json obj = parse_object(line, line_no);
  TextPair pair;
  pair.query = required_string(obj, "query", line_no);
  pair.positive = required_string(obj, "positive", line_no);
  if (auto it = obj.find("negatives"); it != obj.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw Error(Errc::MalformedJson, "field 'negatives' must be a list of strings", line_no);
    }
    for (const auto& neg : *it) {
      if (!neg.is_string()) {
        throw Error(Errc::MalformedJson, "field 'negatives' must be a list of strings", line_no);
      }
      std::string s = neg.get<std::string>();
      if (s != pair.positive) pair.negatives.push_back(std::move(s));
    }
  }
  pair.lang = optional_string(obj, "lang", line_no);
  pair.source = optional_string(obj, "source", line_no);
  if (pair.source.empty()) pair.source = default_source;
  pair.id = optional_string(obj, "id", line_no);
  if (obj.contains("instruction") && !obj["instruction"].is_null()) {
    pair.instruction = optional_string(obj, "instruction", line_no);
  }
  return pair;
}

std::string to_json_line(const TextPair& pair) {
  json obj;
  if (!pair.id.empty()) obj["id"] = pair.id;
  obj["query"] = pair.query;
  obj["positive"] = pair.positive;
  if (!pair.negatives.empty()) obj["negatives"] = pair.negatives;
  if (!pair.lang.empty()) obj["lang"] = pair.lang;
  if (!pair.source.empty()) obj["source"] = pair.source;
  if (pair.instruction) obj["instruction"] = *pair.instruction;
  return obj.dump();
}

void write_pairs_jsonl(std::span<const TextPair> pairs, std::ostream& out) {
  for (const auto& p : pairs) out << to_json_line(p) << '\n';
}

PairReader::PairReader(const std::filesystem::path& path, std::string source_name)
    : in_(path), source_(std::move(source_name)) {
  if (!in_) throw Error(Errc::Io, "cannot open pair file " + path.string());
}

std::optional<TextPair> PairReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (is_blank(line)) continue;
    return parse_pair_line(line, line_, source_);
  }
  if (in_.bad()) throw Error(Errc::Io, "read failure", line_);
  return std::nullopt;
}

std::vector<TextPair> read_tsv_pairs(const std::filesystem::path& path,
                                     const std::string& source_name) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<TextPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw Error(Errc::MalformedRecord, "expected 'query<TAB>positive'", line_no);
    }
    TextPair p;
    p.query = line.substr(0, tab);
    p.positive = line.substr(tab + 1);
    p.source = source_name;
    out.push_back(std::move(p));
  }
  return out;
}

void convert_tsv_to_jsonl(const std::filesystem::path& tsv, const std::filesystem::path& jsonl,
                          const std::string& source_name) {
  const auto pairs = read_tsv_pairs(tsv, source_name);
  std::ofstream out(jsonl);
  if (!out) throw Error(Errc::Io, "cannot write " + jsonl.string());
  write_pairs_jsonl(pairs, out);
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open corpus file " + path.string());
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const json obj = parse_object(line, line_no);
    Document d;
    d.id = required_string(obj, "id", line_no);
    d.text = required_string(obj, "text", line_no);
    d.lang = optional_string(obj, "lang", line_no);
    docs.push_back(std::move(d));
  }
  return docs;
}

void SourceSpec::validate() const {
  if (name.empty()) throw Error(Errc::InvalidArgument, "source name must be nonempty");
  if (quota.has_value() == rate.has_value()) {
    throw Error(Errc::InvalidArgument, "source '" + name + "' must set exactly one of quota/rate");
  }
  if (rate && !(*rate > 0.0 && *rate <= 1.0)) {
    throw Error(Errc::InvalidArgument, "source '" + name + "' rate must be in (0, 1]");
  }
}

void MixtureSpec::validate() const {
  std::unordered_set<std::string> names;
  for (const auto& s : sources) {
    s.validate();
    if (!names.insert(s.name).second) {
      throw Error(Errc::InvalidArgument, "duplicate source name '" + s.name + "'");
    }
  }
}

namespace {

MixtureSpec quota_mixture(std::initializer_list<std::pair<const char*, std::uint64_t>> rows,
                          std::uint64_t scale) {
  if (scale == 0) throw Error(Errc::InvalidArgument, "scale must be >= 1");
  MixtureSpec mix;
  for (const auto& [name, count] : rows) {
    SourceSpec s;
    s.name = name;
    s.quota = count / scale;
    mix.sources.push_back(std::move(s));
  }
  return mix;
}

}  // namespace

MixtureSpec pretraining_mixture(std::uint64_t scale) {
  return quota_mixture({{"Wikipedia", 150'000'000},
                        {"mC4", 160'000'000},
                        {"Multilingual CC News", 160'000'000},
                        {"NLLB", 160'000'000},
                        {"Reddit", 160'000'000},
                        {"S2ORC", 50'000'000},
                        {"Stackexchange", 50'000'000},
                        {"xP3", 80'000'000},
                        {"Misc. SBERT Data", 10'000'000}},
                       scale);
}

MixtureSpec finetuning_mixture(std::uint64_t scale) {
  return quota_mixture({{"MS-MARCO Passage", 500'000},
                        {"MS-MARCO Document", 70'000},
                        {"NQ, TriviaQA, SQuAD", 220'000},
                        {"NLI", 275'000},
                        {"ELI5", 100'000},
                        {"NLLB", 100'000},
                        {"DuReader Retrieval", 86'000},
                        {"Fever", 70'000},
                        {"HotpotQA", 70'000},
                        {"Quora Duplicate Questions", 15'000},
                        {"Mr. TyDi", 50'000},
                        {"MIRACL", 40'000}},
                       scale);
}

std::vector<TextPair> load_pairs(const SourceSpec& spec) {
  PairReader reader(spec.uri, spec.name);
  std::vector<TextPair> out;
  while (auto p = reader.next()) out.push_back(std::move(*p));
  return out;
}

MixtureSample sample_mixture(const MixtureSpec& mix,
                             const std::map<std::string, std::uint64_t>& pools) {
  mix.validate();
  MixtureSample sample;
  for (std::size_t si = 0; si < mix.sources.size(); ++si) {
    const SourceSpec& src = mix.sources[si];
    auto it = pools.find(src.name);
    if (it == pools.end()) {
      throw Error(Errc::InvalidArgument, "no pool size given for source '" + src.name + "'");
    }
    const std::uint64_t pool = it->second;
    std::uint64_t take = 0;
    if (src.quota) {
      if (*src.quota > pool) {
        throw Error(Errc::QuotaExceedsPool, "source '" + src.name + "' quota " +
                                                std::to_string(*src.quota) + " exceeds pool " +
                                                std::to_string(pool));
      }
      take = *src.quota;
    } else {
      // The epsilon keeps decimal rates like 0.29 * 100 from flooring to 28.
      const double want = *src.rate * static_cast<double>(pool);
      take = std::min<std::uint64_t>(pool, static_cast<std::uint64_t>(std::floor(want + 1e-9)));
    }
    Rng rng(derive_seed(mix.seed, fnv1a64(src.name)));
    SourceSample s{src.name, pool, sample_without_replacement(pool, take, rng)};
    for (std::uint64_t idx : s.indices) sample.order.push_back({si, idx});
    sample.sources.push_back(std::move(s));
  }
  Rng order_rng(derive_seed(mix.seed, 0x6f72646572ULL));
  order_rng.shuffle(std::span<SampleRef>(sample.order));
  return sample;
}

std::vector<TextPair> load_mixture(const MixtureSpec& mix, int workers) {
  mix.validate();
  std::vector<std::vector<TextPair>> loaded(mix.sources.size());
  parallel_for(mix.sources.size(), workers,
               [&](std::size_t i) { loaded[i] = load_pairs(mix.sources[i]); });
  std::map<std::string, std::uint64_t> pools;
  for (std::size_t i = 0; i < mix.sources.size(); ++i) {
    pools[mix.sources[i].name] = loaded[i].size();
  }
  const MixtureSample sample = sample_mixture(mix, pools);
  std::vector<TextPair> out;
  out.reserve(sample.order.size());
  for (const SampleRef& ref : sample.order) out.push_back(loaded[ref.source][ref.index]);
  return out;
}

std::vector<PairBatch> build_batches(std::span<const TextPair> pairs, std::size_t batch_size,
                                     std::uint64_t seed, std::size_t hard_negatives) {
  if (batch_size < 2) throw Error(Errc::InvalidArgument, "batch_size must be >= 2");
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x6261746368ULL));
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<PairBatch> batches;
  std::deque<std::size_t> deferred;
  std::size_t cursor = 0;
  while (cursor < order.size() || !deferred.empty()) {
    PairBatch batch;
    std::unordered_set<std::string_view> seen;
    auto try_take = [&](std::size_t idx) {
      if (batch.pairs.size() >= batch_size) return false;
      if (!seen.insert(pairs[idx].positive).second) return false;
      batch.pairs.push_back(pairs[idx]);
      return true;
    };
    std::deque<std::size_t> still_deferred;
    for (std::size_t idx : deferred) {
      if (!try_take(idx)) still_deferred.push_back(idx);
    }
    while (batch.pairs.size() < batch_size && cursor < order.size()) {
      const std::size_t idx = order[cursor++];
      if (!try_take(idx)) still_deferred.push_back(idx);
    }
    deferred = std::move(still_deferred);
    batches.push_back(std::move(batch));
  }
  if (!batches.empty() && batches.back().pairs.size() < 2) batches.pop_back();
  for (auto& b : batches) pad_negatives(b, hard_negatives);
  return batches;
}

std::vector<std::vector<std::size_t>> mine_hard_negatives(const EmbeddingModel& model,
                                                          std::span<const MiningQuery> queries,
                                                          std::span<const Document> corpus,
                                                          const Qrels& qrels,
                                                          const MiningOptions& options) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "hard-negative mining needs a corpus");
  if (options.window_lo < 1 || options.window_hi < options.window_lo) {
    throw Error(Errc::InvalidArgument, "rank window must satisfy 1 <= lo <= hi");
  }
  std::vector<std::vector<std::size_t>> out(queries.size());
  if (options.k == 0) return out;

  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& d : corpus) texts.push_back(d.text);
  const std::vector<Vector> docs = encode_batch(model, InputRole::passage(), texts, options.workers);
  const auto& kern = simd::active();
  static const QrelsRow kEmpty;

  parallel_for(queries.size(), options.workers, [&](std::size_t qi) {
    const MiningQuery& q = queries[qi];
    const InputRole role{Role::Query, q.instruction};
    const Vector qv = encode(model, role, q.text);
    std::vector<double> scores(docs.size());
    for (std::size_t j = 0; j < docs.size(); ++j) {
      scores[j] = kern.dot_f64(qv.data(), docs[j].data(), qv.size());
    }
    auto row_it = qrels.find(q.id);
    const QrelsRow& row = row_it == qrels.end() ? kEmpty : row_it->second;
    const auto ranked = top_k(scores, options.window_hi);
    for (std::size_t r = options.window_lo; r <= ranked.size(); ++r) {
      const std::size_t doc = ranked[r - 1].index;
      if (is_relevant(row, corpus[doc].id)) continue;
      if (!q.positive.empty() && corpus[doc].text == q.positive) continue;
      out[qi].push_back(doc);
      if (out[qi].size() >= options.k) break;
    }
  });
  return out;
}

}  // namespace embedforge
