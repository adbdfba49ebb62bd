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
#include <cstring>
#include <fstream>
#include <sstream>

#include "embedforge/error.h"
#include "embedforge/json_io.h"
#include "embedforge/trainer.h"

namespace embedforge {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'E', 'M', 'B', 'F'};
constexpr std::size_t kPreamble = 4 + 4 + 8;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(std::string_view in, std::size_t at) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return value;
}

void put_floats(std::string& out, std::span<const float> xs) {
  out.reserve(out.size() + xs.size() * 4);
  for (float x : xs) put_le(out, std::bit_cast<std::uint32_t>(x));
}

void get_floats(std::string_view in, std::size_t& at, std::span<float> xs, const char* what) {
  if (in.size() - at < xs.size() * 4) {
    throw Error(Errc::TruncatedFile, std::string("payload '") + what + "' is cut short");
  }
  for (float& x : xs) {
    x = std::bit_cast<float>(get_le<std::uint32_t>(in, at));
    at += 4;
  }
}

json adam_to_json(const AdamState& s) {
  return {{"step", s.step}, {"count", s.m.size()}};
}

std::uint64_t element_count(const json& entry) {
  std::uint64_t n = 1;
  for (const json& d : entry.at("shape")) n *= d.get<std::uint64_t>();
  return n;
}

}  // namespace

bool bitwise_equal(const Checkpoint& a, const Checkpoint& b) {
  auto same = [](const std::vector<float>& x, const std::vector<float>& y) {
    return x.size() == y.size() && std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
  };
  auto same_adam = [&](const AdamState& x, const AdamState& y) {
    return x.step == y.step && same(x.m, y.m) && same(x.v, y.v);
  };
  auto same_config = [](const TrainConfig& x, const TrainConfig& y) {
    return train_config_to_json(x) == train_config_to_json(y) &&
           std::bit_cast<std::uint64_t>(x.lr) == std::bit_cast<std::uint64_t>(y.lr) &&
           std::bit_cast<std::uint64_t>(x.tau) == std::bit_cast<std::uint64_t>(y.tau) &&
           std::bit_cast<std::uint64_t>(x.alpha) == std::bit_cast<std::uint64_t>(y.alpha) &&
           std::bit_cast<std::uint64_t>(x.tau_teacher) ==
               std::bit_cast<std::uint64_t>(y.tau_teacher);
  };
  return a.format_version == b.format_version && bitwise_equal(a.model, b.model) &&
         same_config(a.config, b.config) && a.step == b.step &&
         same_adam(a.optimizer.token_table, b.optimizer.token_table) &&
         same_adam(a.optimizer.projection, b.optimizer.projection);
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const EmbeddingModel& m = ckpt.model;
  const auto& opt = ckpt.optimizer;
  if (opt.token_table.m.size() != opt.token_table.v.size() ||
      opt.projection.m.size() != opt.projection.v.size()) {
    throw Error(Errc::ShapeMismatch, "optimizer moments have inconsistent sizes");
  }
  json header;
  header["format"] = "EMBF";
  header["version"] = ckpt.format_version;
  header["model"] = {{"size_class", std::string(to_string(m.size_class()))},
                     {"hidden", m.hidden()},
                     {"dim", m.dim()},
                     {"tokenizer", tokenizer_to_json(m.tokenizer())},
                     {"prompts", prompts_to_json(m.prompts())}};
  header["tensors"] = json::array({
      {{"name", "token_table"}, {"shape", {m.vocab_size(), m.hidden()}}},
      {{"name", "projection"}, {"shape", {m.hidden(), m.dim()}}},
  });
  header["config"] = train_config_to_json(ckpt.config);
  header["step"] = ckpt.step;
  header["optimizer"] = {{"type", "adamw"},
                         {"beta1", 0.9},
                         {"beta2", 0.999},
                         {"eps", 1e-8},
                         {"weight_decay", 0.0},
                         {"order", {"token_table.m", "token_table.v", "projection.m",
                                    "projection.v"}},
                         {"token_table", adam_to_json(opt.token_table)},
                         {"projection", adam_to_json(opt.projection)}};
  const std::string text = header.dump();

  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, ckpt.format_version);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  put_floats(out, m.token_table());
  put_floats(out, m.projection());
  put_floats(out, opt.token_table.m);
  put_floats(out, opt.token_table.v);
  put_floats(out, opt.projection.m);
  put_floats(out, opt.projection.v);
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::BadMagic, "not a checkpoint file");
  }
  if (bytes.size() < kPreamble) throw Error(Errc::TruncatedFile, "preamble is cut short");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != Checkpoint::kFormatVersion) {
    throw Error(Errc::UnsupportedVersion, "checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (bytes.size() - kPreamble < header_len) {
    throw Error(Errc::TruncatedFile, "header is cut short");
  }
  json header;
  try {
    header = json::parse(bytes.substr(kPreamble, header_len));
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedJson, std::string("checkpoint header: ") + e.what());
  }

  try {
    const json& jm = header.at("model");
    const TokenizerConfig tok = tokenizer_from_json(jm.at("tokenizer"));
    EmbeddingModel model(tok, jm.at("hidden").get<std::size_t>(),
                         jm.at("dim").get<std::size_t>(),
                         parse_size_class(jm.at("size_class").get<std::string>()),
                         prompts_from_json(jm.at("prompts")));
    const json& tensors = header.at("tensors");
    if (tensors.size() != 2 || tensors[0].at("name") != "token_table" ||
        tensors[1].at("name") != "projection" ||
        element_count(tensors[0]) != model.token_table().size() ||
        element_count(tensors[1]) != model.projection().size()) {
      throw Error(Errc::ShapeMismatch, "tensor table does not match the model shape");
    }
    Checkpoint ckpt{version, std::move(model), train_config_from_json(header.at("config")),
                    header.at("step").get<std::uint64_t>(), {}};

    std::size_t at = kPreamble + header_len;
    get_floats(bytes, at, ckpt.model.token_table(), "token_table");
    get_floats(bytes, at, ckpt.model.projection(), "projection");
    const json& jo = header.at("optimizer");
    auto read_adam = [&](AdamState& s, const json& js, std::size_t expected, const char* name) {
      s.step = js.at("step").get<std::uint64_t>();
      const auto count = js.at("count").get<std::size_t>();
      if (count != 0 && count != expected) {
        throw Error(Errc::ShapeMismatch, std::string("optimizer state '") + name +
                                             "' does not match its tensor");
      }
      s.m.resize(count);
      s.v.resize(count);
    };
    read_adam(ckpt.optimizer.token_table, jo.at("token_table"), ckpt.model.token_table().size(),
              "token_table");
    read_adam(ckpt.optimizer.projection, jo.at("projection"), ckpt.model.projection().size(),
              "projection");
    get_floats(bytes, at, ckpt.optimizer.token_table.m, "token_table.m");
    get_floats(bytes, at, ckpt.optimizer.token_table.v, "token_table.v");
    get_floats(bytes, at, ckpt.optimizer.projection.m, "projection.m");
    get_floats(bytes, at, ckpt.optimizer.projection.v, "projection.v");
    if (at != bytes.size()) {
      throw Error(Errc::MalformedRecord, "trailing bytes after the optimizer payload");
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedJson, std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::Io, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace embedforge
