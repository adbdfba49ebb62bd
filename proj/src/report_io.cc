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

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "embedforge/error.h"
#include "embedforge/evalkit.h"

namespace embedforge {
namespace {

using nlohmann::json;

std::string_view averaging_name(Averaging a) {
  return a == Averaging::MacroOverGroups ? "macro_over_groups" : "all_values";
}

Averaging parse_averaging(const std::string& s) {
  if (s == "macro_over_groups") return Averaging::MacroOverGroups;
  if (s == "all_values") return Averaging::AllValues;
  throw Error(Errc::MalformedJson, "unknown averaging '" + s + "'");
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_value(const std::string& s, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v)) {
    throw Error(Errc::MalformedRecord, "'" + s + "' is not a finite number", line_no);
  }
  return v;
}

}  // namespace

json report_to_json(const EvalReport& report) {
  json metrics = json::array();
  for (const MetricSummary& m : report.metrics) {
    json groups = json::array();
    for (const ReportGroup& g : m.groups) {
      groups.push_back({{"name", g.name},
                        {"member_ids", g.member_ids},
                        {"values", g.values},
                        {"mean", g.mean},
                        {"mean_rounded", format_rounded(g.mean)}});
    }
    metrics.push_back({{"metric", m.metric},
                       {"averaging", std::string(averaging_name(m.averaging))},
                       {"value", m.value},
                       {"value_rounded", format_rounded(m.value)},
                       {"groups", std::move(groups)}});
  }
  return {{"model_id", report.model_id},
          {"cutoffs", report.cutoffs},
          {"metadata", report.metadata},
          {"metrics", std::move(metrics)}};
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.cutoffs = j.at("cutoffs").get<std::vector<std::size_t>>();
    r.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    for (const json& jm : j.at("metrics")) {
      MetricSummary m;
      m.metric = jm.at("metric").get<std::string>();
      m.averaging = parse_averaging(jm.at("averaging").get<std::string>());
      m.value = jm.at("value").get<double>();
      for (const json& jg : jm.at("groups")) {
        ReportGroup g;
        g.name = jg.at("name").get<std::string>();
        g.member_ids = jg.at("member_ids").get<std::vector<std::string>>();
        g.values = jg.at("values").get<std::vector<double>>();
        g.mean = jg.at("mean").get<double>();
        m.groups.push_back(std::move(g));
      }
      r.metrics.push_back(std::move(m));
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedJson, std::string("report: ") + e.what());
  }
}

void write_report_tsv(const EvalReport& report, std::ostream& out) {
  auto full = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  out << "metric\tgroup\tmember\tvalue\trounded\n";
  for (const MetricSummary& m : report.metrics) {
    for (const ReportGroup& g : m.groups) {
      for (std::size_t i = 0; i < g.values.size(); ++i) {
        const std::string member = i < g.member_ids.size() ? g.member_ids[i] : std::to_string(i);
        out << m.metric << '\t' << g.name << '\t' << member << '\t' << full(g.values[i]) << '\t'
            << format_rounded(g.values[i]) << '\n';
      }
      out << m.metric << '\t' << g.name << "\t<mean>\t" << full(g.mean) << '\t'
          << format_rounded(g.mean) << '\n';
    }
    out << m.metric << "\t<all>\t<" << averaging_name(m.averaging) << ">\t" << full(m.value)
        << '\t' << format_rounded(m.value) << '\n';
  }
}

std::vector<ReportSection> read_sections_tsv(std::istream& in) {
  std::vector<ReportSection> sections;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 2 && fields.size() != 3) {
      throw Error(Errc::MalformedRecord, "expected 2 or 3 tab-separated fields", line_no);
    }
    if (fields[0].empty()) throw Error(Errc::MalformedRecord, "empty section name", line_no);
    ReportSection* s = nullptr;
    for (ReportSection& existing : sections) {
      if (existing.name == fields[0]) s = &existing;
    }
    if (!s) {
      sections.push_back({fields[0], {}, {}});
      s = &sections.back();
    }
    const bool named = fields.size() == 3;
    if (!s->values.empty() && named != !s->member_ids.empty()) {
      throw Error(Errc::MalformedRecord, "section mixes named and unnamed members", line_no);
    }
    if (named) s->member_ids.push_back(fields[1]);
    s->values.push_back(parse_value(fields.back(), line_no));
  }
  return sections;
}

std::vector<ReportSection> read_sections_json(const json& j) {
  try {
    std::vector<ReportSection> out;
    for (const json& js : j.at("sections")) {
      ReportSection s;
      s.name = js.at("name").get<std::string>();
      s.values = js.at("values").get<std::vector<double>>();
      if (js.contains("member_ids")) {
        s.member_ids = js.at("member_ids").get<std::vector<std::string>>();
      }
      out.push_back(std::move(s));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedJson, std::string("sections: ") + e.what());
  }
}

}  // namespace embedforge
