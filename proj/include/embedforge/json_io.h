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

#include "embedforge/embedder.h"
#include "embedforge/trainer.h"
#include "json.hpp"

namespace embedforge {

// JSON forms shared by checkpoint headers, run manifests and config files.
// The from_* readers throw Error(MalformedJson) naming the offending field.

nlohmann::json tokenizer_to_json(const TokenizerConfig& cfg);
TokenizerConfig tokenizer_from_json(const nlohmann::json& j);

nlohmann::json prompts_to_json(const PromptTemplates& p);
PromptTemplates prompts_from_json(const nlohmann::json& j);

// Absent steps/epochs are written as null.
nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace embedforge
