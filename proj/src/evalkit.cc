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

#include "embedforge/evalkit.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "embedforge/error.h"
#include "embedforge/parallel.h"

namespace embedforge {
namespace {

int relevance(const QrelsRow& rels, const std::string& doc) {
  const auto it = rels.find(doc);
  return it == rels.end() ? 0 : it->second;
}

double gain(int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; }

double discount(std::size_t rank) { return std::log2(static_cast<double>(rank) + 1.0); }

void check_metric_args(const QrelsRow& rels, std::size_t k) {
  if (k == 0) throw Error(Errc::InvalidArgument, "cutoff k must be >= 1");
  if (std::none_of(rels.begin(), rels.end(), [](const auto& kv) { return kv.second >= 1; })) {
    throw Error(Errc::InvalidArgument, "query has no relevant document");
  }
}

double mean(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    // 1-based ranks i+1 .. j+1 share their average.
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

void finalize(MetricSummary& m) {
  std::vector<double> all;
  std::vector<double> means;
  for (ReportGroup& g : m.groups) {
    g.mean = mean(g.values);
    means.push_back(g.mean);
    all.insert(all.end(), g.values.begin(), g.values.end());
  }
  m.value = m.averaging == Averaging::MacroOverGroups ? mean(means) : mean(all);
}

}  // namespace

double ndcg_at_k(std::span<const std::string> ranked, const QrelsRow& rels, std::size_t k) {
  check_metric_args(rels, k);
  double dcg = 0.0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int rel = relevance(rels, ranked[i]);
    if (rel > 0) dcg += gain(rel) / discount(i + 1);
  }
  // Ideal order by counting grades 1..3; a sort is needed only above that.
  std::size_t count[4] = {0, 0, 0, 0};
  std::vector<int> high;
  for (const auto& [doc, rel] : rels) {
    if (rel > 3) {
      high.push_back(rel);
    } else if (rel > 0) {
      ++count[rel];
    }
  }
  std::sort(high.begin(), high.end(), std::greater<>());
  double idcg = 0.0;
  std::size_t rank = 0;
  for (int rel : high) {
    if (rank == k) break;
    idcg += gain(rel) / discount(++rank);
  }
  for (int rel = 3; rel >= 1; --rel) {
    for (std::size_t c = 0; c < count[rel] && rank < k; ++c) idcg += gain(rel) / discount(++rank);
  }
  return dcg / idcg;
}

double recall_at_k(std::span<const std::string> ranked, const QrelsRow& rels, std::size_t k) {
  check_metric_args(rels, k);
  std::size_t relevant = 0;
  for (const auto& [doc, rel] : rels) relevant += rel >= 1 ? 1 : 0;
  std::size_t found = 0;
  const std::size_t n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) found += is_relevant(rels, ranked[i]) ? 1 : 0;
  return static_cast<double>(found) / static_cast<double>(relevant);
}

void write_trec_run(const RetrievalRun& run, std::ostream& out, std::string_view tag) {
  char score[64];
  for (const auto& [qid, entries] : run) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      std::snprintf(score, sizeof score, "%.9g", entries[i].score);
      out << qid << " Q0 " << entries[i].doc_id << ' ' << (i + 1) << ' ' << score << ' ' << tag
          << '\n';
    }
  }
}

const MetricSummary* EvalReport::find(std::string_view metric) const {
  for (const MetricSummary& m : metrics) {
    if (m.metric == metric) return &m;
  }
  return nullptr;
}

bool EvalReport::consistent(double tol) const {
  for (const MetricSummary& m : metrics) {
    std::vector<double> all;
    std::vector<double> means;
    for (const ReportGroup& g : m.groups) {
      if (g.values.empty()) return false;
      if (!g.member_ids.empty() && g.member_ids.size() != g.values.size()) return false;
      const double gm = mean(g.values);
      if (std::abs(gm - g.mean) > tol) return false;
      means.push_back(g.mean);
      all.insert(all.end(), g.values.begin(), g.values.end());
    }
    if (m.groups.empty()) continue;
    const double v = m.averaging == Averaging::MacroOverGroups ? mean(means) : mean(all);
    if (std::abs(v - m.value) > tol) return false;
  }
  return true;
}

std::string format_rounded(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

RetrievalRun retrieve(const EmbeddingModel& model, std::span<const EvalQuery> queries,
                      std::span<const Document> corpus, std::size_t depth, int workers) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "retrieval corpus is empty");
  if (depth == 0) throw Error(Errc::InvalidArgument, "retrieval depth must be >= 1");
  std::vector<std::string> passages;
  passages.reserve(corpus.size());
  for (const Document& d : corpus) passages.push_back(d.text);
  const std::vector<Vector> docs = encode_batch(model, InputRole::passage(), passages, workers);

  std::vector<std::optional<Vector>> qslots(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t i) {
    qslots[i].emplace(encode(model, InputRole{Role::Query, queries[i].instruction},
                             queries[i].text));
  });

  std::vector<std::vector<RunEntry>> rows(queries.size());
  constexpr std::size_t kChunk = 256;
  for (std::size_t lo = 0; lo < queries.size(); lo += kChunk) {
    const std::size_t hi = std::min(queries.size(), lo + kChunk);
    std::vector<Vector> qs;
    for (std::size_t i = lo; i < hi; ++i) qs.push_back(*qslots[i]);
    const ScoreMatrix s = sim_matrix(qs, docs, workers);
    parallel_for(hi - lo, workers, [&](std::size_t r) {
      for (const Hit& hit : top_k(s.row(r), depth)) {
        rows[lo + r].push_back({corpus[hit.index].id, hit.score});
      }
    });
  }
  RetrievalRun run;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (run.count(queries[i].id)) {
      throw Error(Errc::InvalidArgument, "duplicate query id '" + queries[i].id + "'");
    }
    run[queries[i].id] = std::move(rows[i]);
  }
  return run;
}

EvalReport evaluate_run(const RetrievalRun& run, std::span<const EvalQuery> queries,
                        const Qrels& qrels, std::span<const std::size_t> cutoffs,
                        std::string model_id) {
  if (cutoffs.empty()) throw Error(Errc::InvalidArgument, "no cutoffs given");
  EvalReport report;
  report.model_id = std::move(model_id);
  report.cutoffs.assign(cutoffs.begin(), cutoffs.end());

  // lang -> (query ids, per-cutoff ndcg, per-cutoff recall)
  struct LangAcc {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> ndcg, recall;
  };
  std::map<std::string, LangAcc> langs;
  std::size_t skipped = 0;
  std::size_t evaluated = 0;
  for (const EvalQuery& q : queries) {
    const auto qr = qrels.find(q.id);
    const bool has_relevant =
        qr != qrels.end() && std::any_of(qr->second.begin(), qr->second.end(),
                                         [](const auto& kv) { return kv.second >= 1; });
    if (!has_relevant) {
      ++skipped;
      continue;
    }
    std::vector<std::string> ranked;
    if (const auto it = run.find(q.id); it != run.end()) {
      std::unordered_set<std::string> seen;
      for (const RunEntry& e : it->second) {
        if (!seen.insert(e.doc_id).second) {
          throw Error(Errc::InvalidArgument,
                      "run lists document '" + e.doc_id + "' twice for query '" + q.id + "'");
        }
        ranked.push_back(e.doc_id);
      }
    }
    LangAcc& acc = langs[q.lang.empty() ? "und" : q.lang];
    if (acc.ndcg.empty()) {
      acc.ndcg.resize(cutoffs.size());
      acc.recall.resize(cutoffs.size());
    }
    acc.ids.push_back(q.id);
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      acc.ndcg[c].push_back(ndcg_at_k(ranked, qr->second, cutoffs[c]));
      acc.recall[c].push_back(recall_at_k(ranked, qr->second, cutoffs[c]));
    }
    ++evaluated;
  }
  report.metadata["evaluated_queries"] = std::to_string(evaluated);
  report.metadata["skipped_queries"] = std::to_string(skipped);
  report.metadata["languages"] = std::to_string(langs.size());
  if (langs.empty()) return report;

  for (std::size_t c = 0; c < cutoffs.size(); ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      MetricSummary m;
      m.metric = (pass == 0 ? "ndcg@" : "recall@") + std::to_string(cutoffs[c]);
      for (const auto& [lang, acc] : langs) {
        ReportGroup g;
        g.name = lang;
        g.member_ids = acc.ids;
        g.values = pass == 0 ? acc.ndcg[c] : acc.recall[c];
        m.groups.push_back(std::move(g));
      }
      finalize(m);
      report.metrics.push_back(std::move(m));
    }
  }
  return report;
}

EvalReport retrieval_eval(const EmbeddingModel& model, std::span<const EvalQuery> queries,
                          std::span<const Document> corpus, const Qrels& qrels,
                          const RetrievalOptions& options, RetrievalRun* run_out) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "retrieval corpus is empty");
  std::unordered_set<std::string> ids;
  for (const Document& d : corpus) ids.insert(d.id);
  for (const EvalQuery& q : queries) {
    const auto qr = qrels.find(q.id);
    if (qr == qrels.end()) continue;
    for (const auto& [doc, rel] : qr->second) {
      if (!ids.count(doc)) {
        throw Error(Errc::UnknownDocId,
                    "qrels for query '" + q.id + "' name unknown document '" + doc + "'");
      }
    }
  }
  if (options.cutoffs.empty()) throw Error(Errc::InvalidArgument, "no cutoffs given");
  const std::size_t depth = *std::max_element(options.cutoffs.begin(), options.cutoffs.end());
  RetrievalRun run = retrieve(model, queries, corpus, depth, options.workers);
  EvalReport report = evaluate_run(run, queries, qrels, options.cutoffs, options.model_id);
  if (run_out) *run_out = std::move(run);
  return report;
}

std::vector<std::size_t> bitext_predictions(std::span<const Vector> src,
                                            std::span<const Vector> tgt, BitextMode mode,
                                            int workers) {
  if (tgt.empty()) throw Error(Errc::CountMismatch, "no targets");
  const ScoreMatrix cos = sim_matrix(src, tgt, workers);
  const std::size_t ns = src.size();
  const std::size_t nt = tgt.size();

  std::vector<double> knn_src(ns, 0.0);
  std::vector<double> knn_tgt(nt, 0.0);
  if (mode.scoring == BitextMode::Scoring::Margin) {
    if (mode.k == 0) throw Error(Errc::InvalidArgument, "margin k must be >= 1");
    parallel_for(ns, workers, [&](std::size_t i) {
      const auto hits = top_k(cos.row(i), mode.k);
      double s = 0.0;
      for (const Hit& h : hits) s += h.score;
      knn_src[i] = s / static_cast<double>(hits.size());
    });
    parallel_for(nt, workers, [&](std::size_t j) {
      std::vector<double> col(ns);
      for (std::size_t i = 0; i < ns; ++i) col[i] = cos.at(i, j);
      const auto hits = top_k(col, mode.k);
      double s = 0.0;
      for (const Hit& h : hits) s += h.score;
      knn_tgt[j] = s / static_cast<double>(hits.size());
    });
  }

  std::vector<std::size_t> pred(ns, 0);
  parallel_for(ns, workers, [&](std::size_t i) {
    double best = 0.0;
    for (std::size_t j = 0; j < nt; ++j) {
      double score = cos.at(i, j);
      if (mode.scoring == BitextMode::Scoring::Margin) {
        score /= std::max((knn_src[i] + knn_tgt[j]) / 2.0, 1e-12);
      }
      if (j == 0 || score > best) {
        best = score;
        pred[i] = j;
      }
    }
  });
  return pred;
}

double bitext_accuracy(std::span<const Vector> src, std::span<const Vector> tgt,
                       std::span<const std::size_t> gold, BitextMode mode, int workers) {
  if (src.size() != tgt.size() || gold.size() != src.size()) {
    throw Error(Errc::CountMismatch, "bitext needs equal source, target and gold counts");
  }
  if (src.empty()) throw Error(Errc::CountMismatch, "bitext sets are empty");
  std::vector<char> hit(tgt.size(), 0);
  for (std::size_t g : gold) {
    if (g >= tgt.size() || hit[g]) {
      throw Error(Errc::GoldNotBijective, "gold alignment is not a bijection");
    }
    hit[g] = 1;
  }
  const auto pred = bitext_predictions(src, tgt, mode, workers);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == gold[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(Errc::CountMismatch, "spearman needs equal lengths");
  if (a.size() < 2) throw Error(Errc::DegenerateInput, "spearman needs at least 2 values");
  for (double x : a) {
    if (!std::isfinite(x)) throw Error(Errc::NonFinite, "spearman input is not finite");
  }
  for (double x : b) {
    if (!std::isfinite(x)) throw Error(Errc::NonFinite, "spearman input is not finite");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = mean(ra);
  const double mb = mean(rb);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(Errc::DegenerateInput, "constant input sequence");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double sts_eval(const EmbeddingModel& model, std::span<const StsPair> pairs, int workers) {
  std::vector<double> predicted(pairs.size());
  std::vector<double> gold(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t i) {
    const Vector a = encode(model, InputRole::symmetric(), pairs[i].a);
    const Vector b = encode(model, InputRole::symmetric(), pairs[i].b);
    predicted[i] = std::clamp(dot(a, b), -1.0, 1.0);
    gold[i] = pairs[i].score;
  });
  return spearman(predicted, gold);
}

EvalReport aggregate_report(std::span<const ReportSection> sections, std::string metric,
                            std::string model_id) {
  if (sections.empty()) throw Error(Errc::InvalidArgument, "no sections to aggregate");
  MetricSummary m;
  m.metric = std::move(metric);
  m.averaging = Averaging::AllValues;
  for (const ReportSection& s : sections) {
    if (s.values.empty()) throw Error(Errc::EmptySection, "section '" + s.name + "' is empty");
    if (!s.member_ids.empty() && s.member_ids.size() != s.values.size()) {
      throw Error(Errc::CountMismatch, "section '" + s.name + "' has mismatched member ids");
    }
    for (double v : s.values) {
      if (!std::isfinite(v)) {
        throw Error(Errc::NonFinite, "section '" + s.name + "' holds a non-finite value");
      }
    }
    m.groups.push_back({s.name, s.member_ids, s.values, 0.0});
  }
  finalize(m);
  EvalReport report;
  report.model_id = std::move(model_id);
  report.metadata["sections"] = std::to_string(sections.size());
  report.metrics.push_back(std::move(m));
  return report;
}

}  // namespace embedforge
