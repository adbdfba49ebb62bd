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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

namespace embedforge {

// query id -> (doc id -> graded relevance >= 0). Relevance >= 1 is relevant.
using QrelsRow = std::map<std::string, int>;
using Qrels = std::map<std::string, QrelsRow>;

// TREC qrels: whitespace-separated "qid iteration docid rel" per line.
// Blank lines are skipped. Throws Error(Io), Error(MalformedRecord) with the
// line number.
Qrels read_trec_qrels(const std::filesystem::path& path);
Qrels parse_trec_qrels(std::istream& in);

void write_trec_qrels(const Qrels& qrels, std::ostream& out);

inline bool is_relevant(const QrelsRow& row, const std::string& doc) {
  auto it = row.find(doc);
  return it != row.end() && it->second >= 1;
}

}  // namespace embedforge
