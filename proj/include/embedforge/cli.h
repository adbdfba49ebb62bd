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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "embedforge/datamix.h"
#include "embedforge/error.h"
#include "embedforge/embedder.h"
#include "embedforge/trainer.h"
#include "json.hpp"

namespace embedforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Exit code for an error raised while running a command.
int exit_code_for(Errc code);

struct GlobalOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<std::filesystem::path> out_dir;
};

struct ModelSection {
  TokenizerConfig tokenizer;
  std::size_t hidden = 0;
  std::size_t dim = 0;
  PromptTemplates prompts;
};

// A config file after defaults, relative paths and seed overrides are
// resolved. Relative paths are taken from the config file's directory.
struct RunConfig {
  std::filesystem::path config_path;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  ModelSection model;
  TrainConfig train;
  MixtureSpec mixture;
  std::optional<std::filesystem::path> input_checkpoint;
};

// Seed precedence: flag > EMBEDFORGE_SEED > config "seed" > 0. Throws
// Error(Config) with the JSON line or the dotted field path.
RunConfig parse_config(const std::string& text, const std::filesystem::path& config_path,
                       Stage stage, const GlobalOptions& globals);
RunConfig load_config(const std::filesystem::path& path, Stage stage,
                      const GlobalOptions& globals);

// The resolved run as a config document that parses back to the same run.
nlohmann::json config_to_json(const RunConfig& cfg);

// Entry point behind the embedforge binary.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace embedforge::cli
