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

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "embedforge/cli.h"
#include "embedforge/error.h"
#include "embedforge/evalkit.h"
#include "embedforge/qrels.h"
#include "embedforge/rng.h"

namespace embedforge::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kModelInitTag = 0x6d6f64656c;  // "model"

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

Checkpoint read_checkpoint(const fs::path& path) {
  if (!fs::exists(path)) throw Error(Errc::Io, "checkpoint " + path.string() + " does not exist");
  return load_checkpoint(path);
}

std::string required_string(const json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || (it->is_string() && it->get<std::string>().empty())) {
    throw Error(Errc::MissingField, std::string("missing field '") + key + "'", line_no);
  }
  if (!it->is_string()) {
    throw Error(Errc::MalformedJson, std::string("field '") + key + "' must be a string",
                line_no);
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw Error(Errc::MalformedJson, std::string("field '") + key + "' must be a string",
                line_no);
  }
  return it->get<std::string>();
}

// Queries JSONL: {"id", "text", "lang"?, "instruction"?}.
std::vector<EvalQuery> load_queries(const fs::path& path) {
  std::vector<EvalQuery> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    const std::size_t line_no = i + 1;
    json j;
    try {
      j = json::parse(lines[i]);
    } catch (const json::exception&) {
      throw Error(Errc::MalformedJson, "query line is not valid JSON", line_no);
    }
    if (!j.is_object()) throw Error(Errc::MalformedJson, "query line is not an object", line_no);
    EvalQuery q;
    q.id = required_string(j, "id", line_no);
    q.text = required_string(j, "text", line_no);
    q.lang = optional_string(j, "lang", line_no).value_or("");
    q.instruction = optional_string(j, "instruction", line_no);
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<StsPair> load_sts(const fs::path& path) {
  std::vector<StsPair> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t t1 = lines[i].find('\t');
    const std::size_t t2 = t1 == std::string::npos ? t1 : lines[i].find('\t', t1 + 1);
    if (t2 == std::string::npos || lines[i].find('\t', t2 + 1) != std::string::npos) {
      throw Error(Errc::MalformedRecord, "expected 'text_a<TAB>text_b<TAB>score'", i + 1);
    }
    StsPair p{lines[i].substr(0, t1), lines[i].substr(t1 + 1, t2 - t1 - 1), 0.0};
    const std::string score = lines[i].substr(t2 + 1);
    std::size_t used = 0;
    try {
      p.score = std::stod(score, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != score.size() || !std::isfinite(p.score)) {
      throw Error(Errc::MalformedRecord, "score '" + score + "' is not a number", i + 1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string telemetry_csv(const std::vector<StepTelemetry>& rows, bool with_kd) {
  std::string out = with_kd ? "step,epoch,loss,contrastive,distillation\n"
                            : "step,epoch,loss,contrastive\n";
  for (const StepTelemetry& t : rows) {
    out += std::to_string(t.step) + ',' + std::to_string(t.epoch) + ',' + g17(t.loss) + ',' +
           g17(t.contrastive);
    if (with_kd) out += ',' + g17(t.distillation);
    out += '\n';
  }
  return out;
}

void write_manifest(const fs::path& dir, json manifest) {
  manifest["tool"] = "embedforge";
  manifest["tool_version"] = kToolVersion;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct Context {
  GlobalOptions globals;
  std::ostream& out;
  std::ostream& err;
};

fs::path out_dir_or_default(const GlobalOptions& g) {
  return g.out_dir.value_or(fs::path("embedforge_out"));
}

const fs::path& require_config(const GlobalOptions& g) {
  if (!g.config) throw Error(Errc::Config, "--config is required");
  return *g.config;
}

int cmd_pretrain(const Context& ctx) {
  const RunConfig cfg = load_config(require_config(ctx.globals), Stage::Pretrain, ctx.globals);
  if (cfg.mixture.sources.empty()) throw Error(Errc::Config, "field 'mixture': is required");
  const EmbeddingModel model = EmbeddingModel::initialize(
      cfg.model.tokenizer, cfg.model.hidden, cfg.model.dim, cfg.train.size_class,
      derive_seed(cfg.seed, kModelInitTag), cfg.model.prompts);
  const std::vector<TextPair> pairs = load_mixture(cfg.mixture, ctx.globals.workers);
  const auto batches = build_batches(pairs, cfg.train.batch_size, cfg.seed, 0);

  std::vector<StepTelemetry> rows;
  const Checkpoint ckpt = pretrain(model, batches, cfg.train,
                                   [&](const StepTelemetry& t) { rows.push_back(t); },
                                   {ctx.globals.workers, false});
  ensure_dir(cfg.out_dir);
  save_checkpoint(ckpt, cfg.out_dir / "model.ckpt");
  write_file(cfg.out_dir / "telemetry.csv", telemetry_csv(rows, false));
  write_manifest(cfg.out_dir,
                 {{"command", "pretrain"},
                  {"config_path", cfg.config_path.generic_string()},
                  {"config", config_to_json(cfg)},
                  {"inputs", {{"pairs", pairs.size()}, {"batches", batches.size()}}},
                  {"outputs", {"model.ckpt", "telemetry.csv", "manifest.json"}},
                  {"steps", ckpt.step}});
  ctx.out << "pretrain: " << ckpt.step << " steps over " << batches.size() << " batches";
  if (!rows.empty()) ctx.out << ", final loss " << format_rounded(rows.back().loss, 6);
  ctx.out << "\ncheckpoint: " << (cfg.out_dir / "model.ckpt").string() << "\n";
  return kExitOk;
}

int cmd_finetune(const Context& ctx, const std::string& teacher_name,
                 const std::optional<fs::path>& checkpoint_flag, bool allow_refinetune) {
  const RunConfig cfg = load_config(require_config(ctx.globals), Stage::Finetune, ctx.globals);
  if (cfg.mixture.sources.empty()) throw Error(Errc::Config, "field 'mixture': is required");
  const std::optional<fs::path> input = checkpoint_flag ? checkpoint_flag : cfg.input_checkpoint;
  if (!input) {
    throw Error(Errc::Config, "finetune needs --checkpoint or config field 'input_checkpoint'");
  }
  const Checkpoint init = read_checkpoint(*input);
  TrainConfig train = cfg.train;
  train.size_class = init.model.size_class();

  const std::vector<TextPair> pairs = load_mixture(cfg.mixture, ctx.globals.workers);
  const auto batches = build_batches(pairs, train.batch_size, cfg.seed, train.hard_negatives);
  std::optional<TeacherOracle> teacher;
  if (teacher_name == "oracle") teacher = make_pair_oracle(pairs);

  std::vector<StepTelemetry> rows;
  const Checkpoint ckpt =
      finetune(init, batches, teacher ? &*teacher : nullptr, train,
               [&](const StepTelemetry& t) { rows.push_back(t); },
               {ctx.globals.workers, allow_refinetune});
  ensure_dir(cfg.out_dir);
  save_checkpoint(ckpt, cfg.out_dir / "model.ckpt");
  write_file(cfg.out_dir / "telemetry.csv", telemetry_csv(rows, teacher.has_value()));
  RunConfig used = cfg;
  used.input_checkpoint = *input;
  write_manifest(cfg.out_dir,
                 {{"command", "finetune"},
                  {"config_path", cfg.config_path.generic_string()},
                  {"config", config_to_json(used)},
                  {"teacher", teacher_name},
                  {"allow_refinetune", allow_refinetune},
                  {"inputs", {{"pairs", pairs.size()}, {"batches", batches.size()}}},
                  {"outputs", {"model.ckpt", "telemetry.csv", "manifest.json"}},
                  {"steps", ckpt.step}});
  ctx.out << "finetune: " << rows.size() << " steps over " << batches.size() << " batches";
  if (!rows.empty()) ctx.out << ", final loss " << format_rounded(rows.back().loss, 6);
  ctx.out << "\ncheckpoint: " << (cfg.out_dir / "model.ckpt").string() << "\n";
  return kExitOk;
}

struct MineArgs {
  fs::path checkpoint, pairs, corpus;
  std::optional<fs::path> qrels, output;
  std::size_t k = 7;
  std::string window = "2:100";
};

std::pair<std::size_t, std::size_t> parse_window(const std::string& w) {
  const std::size_t colon = w.find(':');
  auto num = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(Errc::Config, "--window must look like lo:hi, got '" + w + "'");
    }
    return std::stoull(s);
  };
  if (colon == std::string::npos) {
    throw Error(Errc::Config, "--window must look like lo:hi, got '" + w + "'");
  }
  return {num(w.substr(0, colon)), num(w.substr(colon + 1))};
}

int cmd_mine(const Context& ctx, const MineArgs& a) {
  const auto [lo, hi] = parse_window(a.window);
  if (lo < 1 || hi < lo) throw Error(Errc::Config, "--window needs 1 <= lo <= hi");
  const Checkpoint ckpt = read_checkpoint(a.checkpoint);
  std::vector<TextPair> pairs = load_pairs({"pairs", a.pairs, std::nullopt, 1.0});
  const std::vector<Document> corpus = load_documents(a.corpus);
  const Qrels qrels = a.qrels ? read_trec_qrels(*a.qrels) : Qrels{};

  std::vector<MiningQuery> queries;
  queries.reserve(pairs.size());
  for (const TextPair& p : pairs) queries.push_back({p.id, p.query, p.positive, p.instruction});
  const auto mined = mine_hard_negatives(ckpt.model, queries, corpus, qrels,
                                         {a.k, lo, hi, ctx.globals.workers});
  std::ostringstream buf;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].negatives.clear();
    for (std::size_t idx : mined[i]) pairs[i].negatives.push_back(corpus[idx].text);
  }
  write_pairs_jsonl(pairs, buf);
  const fs::path dir = out_dir_or_default(ctx.globals);
  const fs::path output = a.output.value_or(dir / "mined.jsonl");
  if (output.has_parent_path()) ensure_dir(output.parent_path());
  write_file(output, buf.str());
  ensure_dir(dir);
  write_manifest(dir, {{"command", "mine-negs"},
                       {"checkpoint", a.checkpoint.generic_string()},
                       {"pairs", a.pairs.generic_string()},
                       {"corpus", a.corpus.generic_string()},
                       {"qrels", a.qrels ? json(a.qrels->generic_string()) : json(nullptr)},
                       {"k", a.k},
                       {"window", {lo, hi}},
                       {"outputs", {output.generic_string()}}});
  ctx.out << "mine-negs: " << pairs.size() << " queries -> " << output.string() << "\n";
  return kExitOk;
}

struct EmbedArgs {
  fs::path checkpoint, input;
  std::optional<fs::path> output;
  std::string role = "query";
  std::optional<std::string> instruction;
  bool text_format = false;
};

int cmd_embed(const Context& ctx, const EmbedArgs& a) {
  InputRole role{parse_role(a.role), a.instruction};
  // Reject bad role/instruction combinations before any expensive work.
  (void)format_input(role, "");
  const Checkpoint ckpt = read_checkpoint(a.checkpoint);
  const std::vector<std::string> texts = read_lines(a.input);
  const auto vecs = encode_batch(ckpt.model, role, texts, ctx.globals.workers);
  const std::size_t dim = ckpt.model.dim();

  const fs::path dir = out_dir_or_default(ctx.globals);
  const fs::path base = a.output.value_or(dir / "embeddings");
  if (base.has_parent_path()) ensure_dir(base.parent_path());
  std::vector<std::string> outputs;
  if (a.text_format) {
    std::string tsv;
    char buf[40];
    for (const Vector& v : vecs) {
      for (std::size_t j = 0; j < dim; ++j) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(static_cast<float>(v[j])));
        if (j) tsv += '\t';
        tsv += buf;
      }
      tsv += '\n';
    }
    fs::path p = base;
    p += ".tsv";
    write_file(p, tsv);
    outputs.push_back(p.generic_string());
  } else {
    std::string bin;
    bin.reserve(vecs.size() * dim * 4);
    for (const Vector& v : vecs) {
      for (std::size_t j = 0; j < dim; ++j) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v[j]));
        for (int b = 0; b < 4; ++b) bin.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
      }
    }
    fs::path p = base;
    p += ".f32";
    fs::path side = base;
    side += ".json";
    write_file(p, bin);
    const json header = {{"count", vecs.size()},
                         {"dim", dim},
                         {"dtype", "float32"},
                         {"byte_order", "little"},
                         {"role", a.role},
                         {"instruction", a.instruction ? json(*a.instruction) : json(nullptr)},
                         {"payload", p.filename().generic_string()}};
    write_file(side, header.dump(2) + "\n");
    outputs.push_back(p.generic_string());
    outputs.push_back(side.generic_string());
  }
  ensure_dir(dir);
  write_manifest(dir, {{"command", "embed"},
                       {"checkpoint", a.checkpoint.generic_string()},
                       {"input", a.input.generic_string()},
                       {"role", a.role},
                       {"instruction", a.instruction ? json(*a.instruction) : json(nullptr)},
                       {"outputs", outputs}});
  ctx.out << "embed: " << vecs.size() << " vectors of dim " << dim << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string task;
  fs::path checkpoint;
  std::optional<fs::path> queries, corpus, qrels, src, tgt, pairs;
  std::vector<std::size_t> cutoffs{10, 100};
  std::string mode = "cosine";
  std::size_t margin_k = 4;
  std::string model_id;
};

void emit_report(const Context& ctx, const EvalReport& report, const fs::path& dir, int digits) {
  ensure_dir(dir);
  write_file(dir / "report.json", report_to_json(report).dump(2) + "\n");
  std::ostringstream tsv;
  write_report_tsv(report, tsv);
  write_file(dir / "report.tsv", tsv.str());
  for (const MetricSummary& m : report.metrics) {
    ctx.out << m.metric << ' ' << format_rounded(m.value, digits) << "\n";
  }
}

fs::path need(const std::optional<fs::path>& p, const char* flag, const std::string& task) {
  if (!p) throw Error(Errc::Config, std::string(flag) + " is required for --task " + task);
  return *p;
}

int cmd_eval(const Context& ctx, const EvalArgs& a) {
  const fs::path dir = out_dir_or_default(ctx.globals);
  const Checkpoint ckpt = read_checkpoint(a.checkpoint);
  const std::string model_id = a.model_id.empty() ? a.checkpoint.stem().string() : a.model_id;
  json manifest = {{"command", "eval"},
                   {"task", a.task},
                   {"checkpoint", a.checkpoint.generic_string()}};
  EvalReport report;
  if (a.task == "retrieval") {
    const auto queries = load_queries(need(a.queries, "--queries", a.task));
    const auto corpus = load_documents(need(a.corpus, "--corpus", a.task));
    const Qrels qrels = read_trec_qrels(need(a.qrels, "--qrels", a.task));
    RetrievalRun run;
    report = retrieval_eval(ckpt.model, queries, corpus, qrels,
                            {a.cutoffs, ctx.globals.workers, model_id}, &run);
    ensure_dir(dir);
    std::ostringstream trec;
    write_trec_run(run, trec, model_id);
    write_file(dir / "run.trec", trec.str());
    manifest["inputs"] = {{"queries", a.queries->generic_string()},
                          {"corpus", a.corpus->generic_string()},
                          {"qrels", a.qrels->generic_string()}};
    manifest["outputs"] = {"report.json", "report.tsv", "run.trec"};
  } else if (a.task == "bitext") {
    const auto src = read_lines(need(a.src, "--src", a.task));
    const auto tgt = read_lines(need(a.tgt, "--tgt", a.task));
    if (src.size() != tgt.size()) {
      throw Error(Errc::CountMismatch, "--src and --tgt must have the same number of lines");
    }
    const auto es = encode_batch(ckpt.model, InputRole::symmetric(), src, ctx.globals.workers);
    const auto et = encode_batch(ckpt.model, InputRole::symmetric(), tgt, ctx.globals.workers);
    std::vector<std::size_t> gold(src.size());
    for (std::size_t i = 0; i < gold.size(); ++i) gold[i] = i;
    const BitextMode mode =
        a.mode == "margin" ? BitextMode::margin(a.margin_k) : BitextMode::cosine();
    const std::vector<ReportSection> sections = {
        {"src->tgt", {}, {bitext_accuracy(es, et, gold, mode, ctx.globals.workers)}},
        {"tgt->src", {}, {bitext_accuracy(et, es, gold, mode, ctx.globals.workers)}},
    };
    report = aggregate_report(sections, "bitext_accuracy", model_id);
    report.metadata["mode"] = a.mode;
    if (a.mode == "margin") report.metadata["margin_k"] = std::to_string(a.margin_k);
    manifest["inputs"] = {{"src", a.src->generic_string()}, {"tgt", a.tgt->generic_string()}};
    manifest["outputs"] = {"report.json", "report.tsv"};
  } else {
    const auto pairs = load_sts(need(a.pairs, "--pairs", a.task));
    const std::vector<ReportSection> sections = {
        {"sts", {}, {sts_eval(ckpt.model, pairs, ctx.globals.workers)}}};
    report = aggregate_report(sections, "spearman", model_id);
    manifest["inputs"] = {{"pairs", a.pairs->generic_string()}};
    manifest["outputs"] = {"report.json", "report.tsv"};
  }
  emit_report(ctx, report, dir, 3);
  write_manifest(dir, manifest);
  return kExitOk;
}

struct ReportArgs {
  fs::path input;
  std::string metric = "score";
  std::string model_id;
};

int cmd_report(const Context& ctx, const ReportArgs& a) {
  std::vector<ReportSection> sections;
  if (a.input.extension() == ".json") {
    std::ifstream in(a.input, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + a.input.string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(Errc::MalformedJson, std::string("sections file: ") + e.what());
    }
    sections = read_sections_json(j);
  } else {
    std::ifstream in(a.input, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot read " + a.input.string());
    sections = read_sections_tsv(in);
  }
  const EvalReport report = aggregate_report(sections, a.metric, a.model_id);
  for (const ReportGroup& g : report.metrics[0].groups) {
    ctx.out << g.name << ' ' << format_rounded(g.mean) << "\n";
  }
  if (ctx.globals.out_dir) {
    emit_report(ctx, report, *ctx.globals.out_dir, 1);
    write_manifest(*ctx.globals.out_dir, {{"command", "report"},
                                          {"input", a.input.generic_string()},
                                          {"outputs", {"report.json", "report.tsv"}}});
  } else {
    ctx.out << a.metric << ' ' << format_rounded(report.metrics[0].value) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"embedforge: two-stage contrastive text embedding trainer and evaluator"};
  app.require_subcommand(1);
  std::optional<std::string> config, out_dir;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  app.add_option("--config", config, "JSON run config");
  app.add_option("--seed", seed, "Seed (overrides EMBEDFORGE_SEED and the config)");
  app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "Output directory");

  auto* pre = app.add_subcommand("pretrain", "Stage-1 contrastive pre-training");
  auto* fine = app.add_subcommand("finetune", "Stage-2 fine-tuning with hard negatives");
  std::string teacher = "none";
  std::optional<std::string> fine_ckpt;
  bool refinetune = false;
  fine->add_option("--teacher", teacher, "Distillation teacher")
      ->check(CLI::IsMember({"none", "oracle"}));
  fine->add_option("--checkpoint", fine_ckpt, "Input checkpoint (overrides the config)");
  fine->add_flag("--allow-refinetune", refinetune,
                 "Accept a checkpoint that already completed fine-tuning");

  auto* mine = app.add_subcommand("mine-negs", "Mine hard negatives with a checkpoint");
  MineArgs mine_args;
  std::string mine_ckpt, mine_pairs, mine_corpus;
  std::optional<std::string> mine_qrels, mine_out;
  mine->add_option("--checkpoint", mine_ckpt)->required();
  mine->add_option("--pairs", mine_pairs, "Pairs JSONL")->required();
  mine->add_option("--corpus", mine_corpus, "Corpus JSONL")->required();
  mine->add_option("--qrels", mine_qrels, "TREC qrels keyed by pair id");
  mine->add_option("--k", mine_args.k, "Negatives per query")->check(CLI::PositiveNumber);
  mine->add_option("--window", mine_args.window, "Rank window lo:hi (1-based, inclusive)");
  mine->add_option("--output", mine_out, "Output JSONL");

  auto* embed = app.add_subcommand("embed", "Embed one text per line");
  EmbedArgs embed_args;
  std::string embed_ckpt, embed_input;
  std::optional<std::string> embed_out;
  embed->add_option("--checkpoint", embed_ckpt)->required();
  embed->add_option("--input", embed_input, "Text file, one input per line")->required();
  embed->add_option("--role", embed_args.role)
      ->check(CLI::IsMember({"query", "passage", "symmetric"}));
  embed->add_option("--instruction", embed_args.instruction, "Task instruction (query role)");
  embed->add_flag("--text-format", embed_args.text_format, "Write TSV instead of f32 binary");
  embed->add_option("--output", embed_out, "Output path without extension");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  EvalArgs eval_args;
  std::string eval_ckpt;
  std::optional<std::string> e_queries, e_corpus, e_qrels, e_src, e_tgt, e_pairs;
  eval->add_option("--task", eval_args.task)
      ->required()
      ->check(CLI::IsMember({"retrieval", "bitext", "sts"}));
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--queries", e_queries, "Queries JSONL (retrieval)");
  eval->add_option("--corpus", e_corpus, "Corpus JSONL (retrieval)");
  eval->add_option("--qrels", e_qrels, "TREC qrels (retrieval)");
  eval->add_option("--cutoffs", eval_args.cutoffs, "Metric cutoffs")->delimiter(',');
  eval->add_option("--src", e_src, "Source lines (bitext)");
  eval->add_option("--tgt", e_tgt, "Target lines, aligned with --src (bitext)");
  eval->add_option("--mode", eval_args.mode)->check(CLI::IsMember({"cosine", "margin"}));
  eval->add_option("--margin-k", eval_args.margin_k)->check(CLI::PositiveNumber);
  eval->add_option("--pairs", e_pairs, "text_a<TAB>text_b<TAB>score lines (sts)");
  eval->add_option("--model-id", eval_args.model_id);

  auto* report = app.add_subcommand("report", "Aggregate precomputed metric values");
  ReportArgs report_args;
  std::string report_input;
  report->add_option("--input", report_input, "Sections as TSV or JSON")->required();
  report->add_option("--metric", report_args.metric);
  report->add_option("--model-id", report_args.model_id);

  for (auto* sub : {pre, fine, mine, embed, eval, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  Context ctx{{}, out, err};
  if (config) ctx.globals.config = *config;
  ctx.globals.seed = seed;
  ctx.globals.workers = workers;
  if (out_dir) ctx.globals.out_dir = *out_dir;

  try {
    if (pre->parsed()) return cmd_pretrain(ctx);
    if (fine->parsed()) {
      std::optional<fs::path> ck;
      if (fine_ckpt) ck = *fine_ckpt;
      return cmd_finetune(ctx, teacher, ck, refinetune);
    }
    if (mine->parsed()) {
      mine_args.checkpoint = mine_ckpt;
      mine_args.pairs = mine_pairs;
      mine_args.corpus = mine_corpus;
      if (mine_qrels) mine_args.qrels = *mine_qrels;
      if (mine_out) mine_args.output = *mine_out;
      return cmd_mine(ctx, mine_args);
    }
    if (embed->parsed()) {
      embed_args.checkpoint = embed_ckpt;
      embed_args.input = embed_input;
      if (embed_out) embed_args.output = *embed_out;
      return cmd_embed(ctx, embed_args);
    }
    if (eval->parsed()) {
      eval_args.checkpoint = eval_ckpt;
      auto set = [](std::optional<fs::path>& dst, const std::optional<std::string>& src) {
        if (src) dst = *src;
      };
      set(eval_args.queries, e_queries);
      set(eval_args.corpus, e_corpus);
      set(eval_args.qrels, e_qrels);
      set(eval_args.src, e_src);
      set(eval_args.tgt, e_tgt);
      set(eval_args.pairs, e_pairs);
      return cmd_eval(ctx, eval_args);
    }
    report_args.input = report_input;
    return cmd_report(ctx, report_args);
  } catch (const Error& e) {
    err << "embedforge: error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "embedforge: error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace embedforge::cli
