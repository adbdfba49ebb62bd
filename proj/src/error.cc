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

#include "embedforge/error.h"

namespace embedforge {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonFinite: return "NonFinite";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InstructionOnPassage: return "InstructionOnPassage";
    case Errc::NonPositiveTemperature: return "NonPositiveTemperature";
    case Errc::NonSquareMatrix: return "NonSquareMatrix";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::MissingField: return "MissingField";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::Io: return "Io";
    case Errc::QuotaExceedsPool: return "QuotaExceedsPool";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::UnknownDocId: return "UnknownDocId";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::GoldNotBijective: return "GoldNotBijective";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::EmptySection: return "EmptySection";
    case Errc::StageOrder: return "StageOrder";
    case Errc::Config: return "Config";
  }
  return "Unknown";
}

namespace {

std::string decorate(Errc code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out = errc_name(code);
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace embedforge
