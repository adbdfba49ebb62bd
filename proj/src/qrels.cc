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

#include "embedforge/qrels.h"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "embedforge/error.h"

namespace embedforge {

Qrels parse_trec_qrels(std::istream& in) {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> parts;
    for (std::string tok; fields >> tok;) parts.push_back(tok);
    if (parts.empty()) continue;
    if (parts.size() != 4) {
      throw Error(Errc::MalformedRecord, "expected 'qid 0 docid rel', got " +
                                             std::to_string(parts.size()) + " fields",
                  line_no);
    }
    int rel = 0;
    const std::string& r = parts[3];
    auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), rel);
    if (ec != std::errc() || ptr != r.data() + r.size() || rel < 0 || rel > 3) {
      throw Error(Errc::MalformedRecord, "relevance must be an integer in [0, 3], got '" + r + "'",
                  line_no);
    }
    qrels[parts[0]][parts[2]] = rel;
  }
  return qrels;
}

Qrels read_trec_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open qrels file " + path.string());
  return parse_trec_qrels(in);
}

void write_trec_qrels(const Qrels& qrels, std::ostream& out) {
  for (const auto& [qid, row] : qrels) {
    for (const auto& [doc, rel] : row) out << qid << " 0 " << doc << ' ' << rel << '\n';
  }
}

}  // namespace embedforge
