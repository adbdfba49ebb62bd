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

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "embedforge/cli.h"
#include "embedforge/error.h"
#include "embedforge/json_io.h"

namespace embedforge::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw Error(Errc::Config, "field '" + field + "': " + msg);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      fail(where.empty() ? key : where + "." + key, "unknown field");
    }
  }
}

const json* member(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string dotted(const std::string& where, const char* key) {
  return where.empty() ? key : where + "." + key;
}

std::uint64_t as_count(const json& v, const std::string& field) {
  if (!v.is_number_unsigned()) fail(field, "must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "must be a number");
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) fail(field, "must be true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "must be a string");
  return v.get<std::string>();
}

const json& as_object(const json& v, const std::string& field) {
  if (!v.is_object()) fail(field, "must be an object");
  return v;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  const std::size_t end = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + end, '\n'));
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("EMBEDFORGE_SEED");
  if (!raw || !*raw) return std::nullopt;
  const std::string s(raw);
  if (s.find_first_not_of("0123456789") != std::string::npos) {
    throw Error(Errc::Config, "EMBEDFORGE_SEED must be a nonnegative integer, got '" + s + "'");
  }
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw Error(Errc::Config, "EMBEDFORGE_SEED is out of range");
  }
}

}  // namespace

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::Config:
    case Errc::InstructionOnPassage:
    case Errc::StageOrder:
      return kExitConfig;
    case Errc::MissingField:
    case Errc::MalformedJson:
    case Errc::MalformedRecord:
    case Errc::Io:
    case Errc::QuotaExceedsPool:
    case Errc::EmptyCorpus:
    case Errc::BadMagic:
    case Errc::UnsupportedVersion:
    case Errc::TruncatedFile:
    case Errc::UnknownDocId:
    case Errc::CountMismatch:
    case Errc::GoldNotBijective:
    case Errc::EmptySection:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& config_path,
                       Stage stage, const GlobalOptions& globals) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::Config, "config is not valid JSON", line_of(text, e.byte));
  }
  as_object(doc, "<root>");
  reject_unknown(doc, "", {"schema_version", "seed", "out_dir", "model", "train", "mixture",
                           "input_checkpoint"});
  const json* version = member(doc, "schema_version");
  if (!version) fail("schema_version", "is required");
  if (as_count(*version, "schema_version") != kSchemaVersion) {
    fail("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }

  const std::filesystem::path base = config_path.parent_path();
  RunConfig cfg;
  cfg.config_path = config_path;

  std::optional<std::uint64_t> seed;
  if (const json* s = member(doc, "seed")) seed = as_count(*s, "seed");
  if (auto e = env_seed()) seed = e;
  if (globals.seed) seed = globals.seed;
  cfg.seed = seed.value_or(0);

  if (globals.out_dir) {
    cfg.out_dir = *globals.out_dir;
  } else if (const json* o = member(doc, "out_dir")) {
    cfg.out_dir = resolve(base, as_string(*o, "out_dir"));
  } else {
    cfg.out_dir = "embedforge_out";
  }

  SizeClass size = SizeClass::Small;
  json model = json::object();
  if (const json* m = member(doc, "model")) model = as_object(*m, "model");
  reject_unknown(model, "model", {"size_class", "vocab_size", "hidden", "dim", "ngram_sizes",
                                  "hash_seed", "prompts"});
  if (const json* s = member(model, "size_class")) {
    try {
      size = parse_size_class(as_string(*s, "model.size_class"));
    } catch (const Error& e) {
      if (e.code() == Errc::Config) throw;
      fail("model.size_class", "must be small, base or large");
    }
  }
  const ModelShape shape = default_shape(size);
  cfg.model.tokenizer.vocab_size = shape.vocab_size;
  cfg.model.hidden = shape.hidden;
  cfg.model.dim = shape.dim;
  if (const json* v = member(model, "vocab_size")) {
    cfg.model.tokenizer.vocab_size = as_count(*v, "model.vocab_size");
  }
  if (const json* v = member(model, "hidden")) cfg.model.hidden = as_count(*v, "model.hidden");
  if (const json* v = member(model, "dim")) cfg.model.dim = as_count(*v, "model.dim");
  if (const json* v = member(model, "hash_seed")) {
    cfg.model.tokenizer.hash_seed = as_count(*v, "model.hash_seed");
  }
  if (const json* v = member(model, "ngram_sizes")) {
    if (!v->is_array() || v->empty()) fail("model.ngram_sizes", "must be a nonempty array");
    cfg.model.tokenizer.ngram_sizes.clear();
    for (const json& n : *v) {
      cfg.model.tokenizer.ngram_sizes.push_back(
          static_cast<int>(as_count(n, "model.ngram_sizes")));
    }
  }
  if (const json* p = member(model, "prompts")) {
    as_object(*p, "model.prompts");
    reject_unknown(*p, "model.prompts", {"query_prefix", "passage_prefix", "instruction_template"});
    if (const json* v = member(*p, "query_prefix")) {
      cfg.model.prompts.query_prefix = as_string(*v, "model.prompts.query_prefix");
    }
    if (const json* v = member(*p, "passage_prefix")) {
      cfg.model.prompts.passage_prefix = as_string(*v, "model.prompts.passage_prefix");
    }
    if (const json* v = member(*p, "instruction_template")) {
      cfg.model.prompts.instruction_template =
          as_string(*v, "model.prompts.instruction_template");
    }
  }
  try {
    cfg.model.tokenizer.validate();
  } catch (const Error& e) {
    fail("model", e.what());
  }
  if (cfg.model.hidden < 1) fail("model.hidden", "must be >= 1");
  if (cfg.model.dim < 2) fail("model.dim", "must be >= 2");

  cfg.train = desk_scale(default_config(stage, size));
  json train = json::object();
  if (const json* t = member(doc, "train")) train = as_object(*t, "train");
  reject_unknown(train, "train", {"stage", "batch_size", "steps", "epochs", "lr", "tau", "alpha",
                                  "tau_teacher", "hard_negatives", "symmetric", "bidirectional"});
  if (const json* s = member(train, "stage")) {
    if (as_string(*s, "train.stage") != to_string(stage)) {
      fail("train.stage", "is '" + s->get<std::string>() + "' but the command runs '" +
                              std::string(to_string(stage)) + "'");
    }
  }
  if (const json* v = member(train, "batch_size")) {
    cfg.train.batch_size = as_count(*v, "train.batch_size");
  }
  if (const json* v = member(train, "steps")) {
    cfg.train.steps = as_count(*v, "train.steps");
  }
  if (const json* v = member(train, "epochs")) {
    cfg.train.epochs = as_count(*v, "train.epochs");
  }
  if (const json* v = member(train, "lr")) cfg.train.lr = as_number(*v, "train.lr");
  if (const json* v = member(train, "tau")) cfg.train.tau = as_number(*v, "train.tau");
  if (const json* v = member(train, "alpha")) cfg.train.alpha = as_number(*v, "train.alpha");
  if (const json* v = member(train, "tau_teacher")) {
    cfg.train.tau_teacher = as_number(*v, "train.tau_teacher");
  }
  if (const json* v = member(train, "hard_negatives")) {
    cfg.train.hard_negatives = as_count(*v, "train.hard_negatives");
  }
  if (const json* v = member(train, "symmetric")) {
    cfg.train.symmetric = as_bool(*v, "train.symmetric");
  }
  if (const json* v = member(train, "bidirectional")) {
    cfg.train.bidirectional = as_bool(*v, "train.bidirectional");
  }
  cfg.train.seed = cfg.seed;
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    fail("train", e.what());
  }

  cfg.mixture.seed = cfg.seed;
  if (const json* m = member(doc, "mixture")) {
    as_object(*m, "mixture");
    reject_unknown(*m, "mixture", {"sources"});
    const json* sources = member(*m, "sources");
    if (!sources || !sources->is_array() || sources->empty()) {
      fail("mixture.sources", "must be a nonempty array");
    }
    for (std::size_t i = 0; i < sources->size(); ++i) {
      const std::string where = "mixture.sources[" + std::to_string(i) + "]";
      const json& s = as_object((*sources)[i], where);
      reject_unknown(s, where, {"name", "uri", "quota", "rate"});
      SourceSpec spec;
      const json* name = member(s, "name");
      const json* uri = member(s, "uri");
      if (!name) fail(dotted(where, "name"), "is required");
      if (!uri) fail(dotted(where, "uri"), "is required");
      spec.name = as_string(*name, dotted(where, "name"));
      spec.uri = resolve(base, as_string(*uri, dotted(where, "uri")));
      if (const json* q = member(s, "quota")) spec.quota = as_count(*q, dotted(where, "quota"));
      if (const json* r = member(s, "rate")) spec.rate = as_number(*r, dotted(where, "rate"));
      try {
        spec.validate();
      } catch (const Error& e) {
        fail(where, e.what());
      }
      cfg.mixture.sources.push_back(std::move(spec));
    }
    try {
      cfg.mixture.validate();
    } catch (const Error& e) {
      fail("mixture", e.what());
    }
  }

  if (const json* c = member(doc, "input_checkpoint")) {
    cfg.input_checkpoint = resolve(base, as_string(*c, "input_checkpoint"));
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, Stage stage,
                      const GlobalOptions& globals) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Config, "cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path, stage, globals);
}

json config_to_json(const RunConfig& cfg) {
  json sources = json::array();
  for (const SourceSpec& s : cfg.mixture.sources) {
    json js = {{"name", s.name}, {"uri", s.uri.generic_string()}};
    if (s.quota) js["quota"] = *s.quota;
    if (s.rate) js["rate"] = *s.rate;
    sources.push_back(std::move(js));
  }
  const TrainConfig& t = cfg.train;
  json train = {{"stage", std::string(to_string(t.stage))},
                {"batch_size", t.batch_size},
                {"lr", t.lr},
                {"tau", t.tau},
                {"alpha", t.alpha},
                {"tau_teacher", t.tau_teacher},
                {"hard_negatives", t.hard_negatives},
                {"symmetric", t.symmetric},
                {"bidirectional", t.bidirectional}};
  if (t.steps) train["steps"] = *t.steps;
  if (t.epochs) train["epochs"] = *t.epochs;
  json j = {{"schema_version", kSchemaVersion},
            {"seed", cfg.seed},
            {"out_dir", cfg.out_dir.generic_string()},
            {"model",
             {{"size_class", std::string(to_string(t.size_class))},
              {"vocab_size", cfg.model.tokenizer.vocab_size},
              {"ngram_sizes", cfg.model.tokenizer.ngram_sizes},
              {"hash_seed", cfg.model.tokenizer.hash_seed},
              {"hidden", cfg.model.hidden},
              {"dim", cfg.model.dim},
              {"prompts", prompts_to_json(cfg.model.prompts)}}},
            {"train", std::move(train)}};
  if (!cfg.mixture.sources.empty()) j["mixture"] = {{"sources", std::move(sources)}};
  if (cfg.input_checkpoint) j["input_checkpoint"] = cfg.input_checkpoint->generic_string();
  return j;
}

}  // namespace embedforge::cli
