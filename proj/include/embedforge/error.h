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
#include <optional>
#include <stdexcept>
#include <string>

namespace embedforge {

enum class Errc {
  InvalidArgument,
  NonFinite,
  ZeroVector,
  DimensionMismatch,
  InstructionOnPassage,
  NonPositiveTemperature,
  NonSquareMatrix,
  ShapeMismatch,
  MissingField,
  MalformedJson,
  MalformedRecord,
  Io,
  QuotaExceedsPool,
  EmptyCorpus,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  UnknownDocId,
  CountMismatch,
  GoldNotBijective,
  DegenerateInput,
  EmptySection,
  StageOrder,
  Config,
};

const char* errc_name(Errc code) noexcept;

// All library failures are reported through this type. Data errors carry the
// 1-based line number of the offending record when one exists.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

}  // namespace embedforge
