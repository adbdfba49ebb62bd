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
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embedforge/datamix.h"
#include "embedforge/embedder.h"
#include "embedforge/qrels.h"
#include "embedforge/vecmath.h"
#include "json.hpp"

namespace embedforge {

// Graded gain 2^rel - 1, discount log2(rank + 1). Docs absent from the qrels
// row have relevance 0. Throws Error(InvalidArgument) when k == 0 or the row
// has no relevant document.
double ndcg_at_k(std::span<const std::string> ranked, const QrelsRow& rels, std::size_t k);

// Binary relevance (rel >= 1). Same preconditions as ndcg_at_k.
double recall_at_k(std::span<const std::string> ranked, const QrelsRow& rels, std::size_t k);

struct RunEntry {
  std::string doc_id;
  double score = 0.0;
  friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

// Query id -> ranked entries, best first.
using RetrievalRun = std::map<std::string, std::vector<RunEntry>>;

// "qid Q0 docid rank score tag", ranks 1-based.
void write_trec_run(const RetrievalRun& run, std::ostream& out, std::string_view tag);

struct EvalQuery {
  std::string id;
  std::string text;
  std::string lang;
  std::optional<std::string> instruction;
};

// How a metric's headline value is formed from its groups.
enum class Averaging {
  MacroOverGroups,  // unweighted mean of the group means
  AllValues,        // mean over every member value
};

struct ReportGroup {
  std::string name;
  std::vector<std::string> member_ids;
  std::vector<double> values;
  double mean = 0.0;
};

struct MetricSummary {
  std::string metric;
  Averaging averaging = Averaging::MacroOverGroups;
  std::vector<ReportGroup> groups;  // sorted by name for retrieval reports
  double value = 0.0;
};

struct EvalReport {
  std::string model_id;
  std::vector<std::size_t> cutoffs;
  std::map<std::string, std::string> metadata;
  std::vector<MetricSummary> metrics;

  const MetricSummary* find(std::string_view metric) const;
  // True when every stored mean recomputes from its members within tol.
  bool consistent(double tol = 1e-9) const;
};

// Value rounded for display, e.g. 60.8375 -> "60.8".
std::string format_rounded(double value, int decimals = 1);

// Ranks each query against the whole corpus by exact cosine, keeping `depth`
// hits per query.
RetrievalRun retrieve(const EmbeddingModel& model, std::span<const EvalQuery> queries,
                      std::span<const Document> corpus, std::size_t depth, int workers = 1);

// Per-query nDCG@k and R@k for each cutoff, grouped by query language.
// Queries without a relevant document are skipped and counted in
// metadata["skipped_queries"].
EvalReport evaluate_run(const RetrievalRun& run, std::span<const EvalQuery> queries,
                        const Qrels& qrels, std::span<const std::size_t> cutoffs,
                        std::string model_id = "");

struct RetrievalOptions {
  std::vector<std::size_t> cutoffs{10, 100};
  int workers = 1;
  std::string model_id;
};

// Throws Error(UnknownDocId) when an evaluated query's qrels name a document
// missing from the corpus.
EvalReport retrieval_eval(const EmbeddingModel& model, std::span<const EvalQuery> queries,
                          std::span<const Document> corpus, const Qrels& qrels,
                          const RetrievalOptions& options = {},
                          RetrievalRun* run_out = nullptr);

struct BitextMode {
  enum class Scoring { Cosine, Margin };
  Scoring scoring = Scoring::Cosine;
  std::size_t k = 4;

  static BitextMode cosine() { return {Scoring::Cosine, 4}; }
  static BitextMode margin(std::size_t k = 4) { return {Scoring::Margin, k}; }
};

// Predicted target index for every source, argmax with ties to the lower
// index. Margin mode divides cos(x, y) by the mean of x's and y's average
// top-k cosines (k clipped to the set size; denominator floored at 1e-12).
std::vector<std::size_t> bitext_predictions(std::span<const Vector> src,
                                            std::span<const Vector> tgt, BitextMode mode,
                                            int workers = 1);

// Fraction of sources whose prediction equals gold[i]. Throws
// Error(CountMismatch) and Error(GoldNotBijective).
double bitext_accuracy(std::span<const Vector> src, std::span<const Vector> tgt,
                       std::span<const std::size_t> gold, BitextMode mode = BitextMode::cosine(),
                       int workers = 1);

// Pearson correlation of average-tie ranks. Throws Error(CountMismatch) on
// differing lengths, Error(DegenerateInput) on fewer than 2 values or a
// constant side.
double spearman(std::span<const double> a, std::span<const double> b);

struct StsPair {
  std::string a;
  std::string b;
  double score = 0.0;
};

// Spearman between gold scores and cosine of symmetric-role embeddings.
double sts_eval(const EmbeddingModel& model, std::span<const StsPair> pairs, int workers = 1);

struct ReportSection {
  std::string name;
  std::vector<std::string> member_ids;  // may be empty
  std::vector<double> values;
};

// One metric whose groups are the sections and whose value is the mean over
// all values. Throws Error(EmptySection) when a section has no values, or
// Error(InvalidArgument) when there are no sections.
EvalReport aggregate_report(std::span<const ReportSection> sections,
                            std::string metric = "score", std::string model_id = "");

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
// metric  group  member  value  rounded; one row per member plus one
// "<mean>" row per group and one "<all>" row per metric.
void write_report_tsv(const EvalReport& report, std::ostream& out);

// Report-only inputs. TSV lines are "section<TAB>value" or
// "section<TAB>member<TAB>value"; '#' starts a comment. JSON is
// {"sections": [{"name", "values", "member_ids"?}]}. Throws
// Error(MalformedRecord) with a line number, Error(MalformedJson).
std::vector<ReportSection> read_sections_tsv(std::istream& in);
std::vector<ReportSection> read_sections_json(const nlohmann::json& j);

}  // namespace embedforge
