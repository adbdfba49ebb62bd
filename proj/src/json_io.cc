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

#include "embedforge/json_io.h"

#include <string>

#include "embedforge/error.h"

namespace embedforge {
namespace {

using nlohmann::json;

const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw Error(Errc::MalformedJson, "expected an object");
  const auto it = j.find(name);
  if (it == j.end()) throw Error(Errc::MalformedJson, std::string("missing field '") + name + "'");
  return *it;
}

template <typename T>
T get_as(const json& j, const char* name) {
  const json& v = field(j, name);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::MalformedJson, std::string("field '") + name + "' has the wrong type");
  }
}

// Integer literals are accepted as doubles.
double get_double(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) {
    throw Error(Errc::MalformedJson, std::string("field '") + name + "' must be a number");
  }
  return v.get<double>();
}

std::optional<std::size_t> get_optional_count(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_unsigned()) {
    throw Error(Errc::MalformedJson, std::string("field '") + name + "' must be a count");
  }
  return it->get<std::size_t>();
}

}  // namespace

json tokenizer_to_json(const TokenizerConfig& cfg) {
  return {{"ngram_sizes", cfg.ngram_sizes},
          {"vocab_size", cfg.vocab_size},
          {"hash_seed", cfg.hash_seed}};
}

TokenizerConfig tokenizer_from_json(const json& j) {
  TokenizerConfig cfg;
  cfg.ngram_sizes = get_as<std::vector<int>>(j, "ngram_sizes");
  cfg.vocab_size = get_as<std::uint64_t>(j, "vocab_size");
  cfg.hash_seed = get_as<std::uint64_t>(j, "hash_seed");
  return cfg;
}

json prompts_to_json(const PromptTemplates& p) {
  return {{"query_prefix", p.query_prefix},
          {"passage_prefix", p.passage_prefix},
          {"instruction_template", p.instruction_template}};
}

PromptTemplates prompts_from_json(const json& j) {
  PromptTemplates p;
  p.query_prefix = get_as<std::string>(j, "query_prefix");
  p.passage_prefix = get_as<std::string>(j, "passage_prefix");
  p.instruction_template = get_as<std::string>(j, "instruction_template");
  return p;
}

json train_config_to_json(const TrainConfig& cfg) {
  json j = {{"stage", std::string(to_string(cfg.stage))},
            {"size_class", std::string(to_string(cfg.size_class))},
            {"batch_size", cfg.batch_size},
            {"lr", cfg.lr},
            {"tau", cfg.tau},
            {"alpha", cfg.alpha},
            {"tau_teacher", cfg.tau_teacher},
            {"hard_negatives", cfg.hard_negatives},
            {"seed", cfg.seed},
            {"symmetric", cfg.symmetric},
            {"bidirectional", cfg.bidirectional}};
  j["steps"] = cfg.steps ? json(*cfg.steps) : json(nullptr);
  j["epochs"] = cfg.epochs ? json(*cfg.epochs) : json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  try {
    cfg.stage = parse_stage(get_as<std::string>(j, "stage"));
    cfg.size_class = parse_size_class(get_as<std::string>(j, "size_class"));
  } catch (const Error& e) {
    if (e.code() == Errc::MalformedJson) throw;
    throw Error(Errc::MalformedJson, e.what());
  }
  cfg.batch_size = get_as<std::size_t>(j, "batch_size");
  cfg.steps = get_optional_count(j, "steps");
  cfg.epochs = get_optional_count(j, "epochs");
  cfg.lr = get_double(j, "lr");
  cfg.tau = get_double(j, "tau");
  cfg.alpha = get_double(j, "alpha");
  cfg.tau_teacher = get_double(j, "tau_teacher");
  cfg.hard_negatives = get_as<std::size_t>(j, "hard_negatives");
  cfg.seed = get_as<std::uint64_t>(j, "seed");
  cfg.symmetric = get_as<bool>(j, "symmetric");
  cfg.bidirectional = get_as<bool>(j, "bidirectional");
  return cfg;
}

}  // namespace embedforge
