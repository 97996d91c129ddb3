// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "json.hpp"

#include "dprw/autoencoder.hpp"
#include "dprw/error.hpp"

namespace dprw {

// File layout: the 5-byte magic, a little-endian uint64 header length, a
// UTF-8 JSON header (config, vocabulary, metadata, and the parameter
// name/shape table), then each parameter's values as little-endian
// float64 in table order.
inline constexpr char kCheckpointMagic[] = "DPRW1";
inline constexpr std::size_t kMagicSize = 5;
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFF) << (8 * (7 - i));
    return r;
  }
}

inline void put_u64(std::string& out, std::uint64_t v) {
  v = to_le(v);
  char b[8];
  std::memcpy(b, &v, 8);
  out.append(b, 8);
}

inline std::uint64_t get_u64(const char* p) {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return to_le(v);
}

inline nlohmann::ordered_json config_to_json(const AutoencoderConfig& c) {
  nlohmann::ordered_json j;
  j["vocab_size"] = c.vocab_size;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["max_len"] = c.max_len;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["clip_c"] = c.clip_c;
  return j;
}

inline AutoencoderConfig config_from_json(const nlohmann::json& j) {
  AutoencoderConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.clip_c = j.at("clip_c").get<double>();
  return c;
}

}  // namespace detail

inline std::string serialize_checkpoint(const AutoencoderCheckpoint& ckpt) {
  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = detail::config_to_json(ckpt.config());
  header["vocabulary"] = ckpt.vocabulary.tokens();
  nlohmann::ordered_json meta;
  meta["epochs_completed"] = ckpt.metadata.epochs_completed;
  meta["final_loss"] = ckpt.metadata.final_loss ? nlohmann::ordered_json(*ckpt.metadata.final_loss) : nullptr;
  meta["loss_history"] = ckpt.metadata.loss_history;
  meta["seed"] = ckpt.metadata.seed;
  meta["dataset_name"] = ckpt.metadata.dataset_name;
  meta["optimizer"] = "adam(beta1=0.9,beta2=0.999,eps=1e-8)";
  header["metadata"] = meta;
  auto table = nlohmann::ordered_json::array();
  for (const Parameter& p : ckpt.model.parameters())
    table.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  header["parameters"] = table;

  const std::string text = header.dump();
  std::string out(kCheckpointMagic, kMagicSize);
  detail::put_u64(out, text.size());
  out += text;
  for (const Parameter& p : ckpt.model.parameters())
    for (double v : p.value.storage()) {
      std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      detail::put_u64(out, bits);
    }
  return out;
}

inline AutoencoderCheckpoint deserialize_checkpoint(const std::string& bytes) {
  using Kind = CheckpointError::Kind;
  if (bytes.size() < kMagicSize + 8) throw CheckpointError(Kind::kCorrupt, "checkpoint truncated before header");
  if (bytes.compare(0, kMagicSize, kCheckpointMagic, kMagicSize) != 0) {
    if (bytes.compare(0, 4, "DPRW") == 0)
      throw CheckpointError(Kind::kVersion, "unsupported checkpoint version '" + bytes.substr(0, kMagicSize) + "'");
    throw CheckpointError(Kind::kCorrupt, "not a checkpoint (bad magic)");
  }
  const std::uint64_t hlen = detail::get_u64(bytes.data() + kMagicSize);
  const std::size_t body = kMagicSize + 8;
  if (hlen > bytes.size() - body) throw CheckpointError(Kind::kCorrupt, "checkpoint truncated inside header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(body),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(body + hlen));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::kCorrupt, std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  AutoencoderConfig config;
  std::vector<std::string> tokens;
  TrainingMetadata meta;
  std::vector<std::pair<std::string, Shape>> table;
  try {
    if (header.at("format_version").get<int>() != kCheckpointVersion)
      throw CheckpointError(Kind::kVersion, "unsupported checkpoint format_version " +
                                                 header.at("format_version").dump());
    config = detail::config_from_json(header.at("config"));
    tokens = header.at("vocabulary").get<std::vector<std::string>>();
    const auto& m = header.at("metadata");
    meta.epochs_completed = m.at("epochs_completed").get<std::size_t>();
    if (!m.at("final_loss").is_null()) meta.final_loss = m.at("final_loss").get<double>();
    meta.loss_history = m.at("loss_history").get<std::vector<double>>();
    meta.seed = m.at("seed").get<std::uint64_t>();
    meta.dataset_name = m.at("dataset_name").get<std::string>();
    for (const auto& entry : header.at("parameters"))
      table.emplace_back(entry.at("name").get<std::string>(), entry.at("shape").get<Shape>());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(Kind::kCorrupt, std::string("checkpoint header malformed: ") + e.what());
  }

  std::size_t offset = body + hlen;
  std::vector<Parameter> params;
  for (const auto& [name, shape] : table) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
      if (d == 0) throw CheckpointError(Kind::kCorrupt, "zero dimension in parameter '" + name + "'");
      n *= d;
    }
    if ((bytes.size() - offset) / 8 < n) throw CheckpointError(Kind::kCorrupt, "checkpoint truncated in '" + name + "'");
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i, offset += 8)
      values[i] = std::bit_cast<double>(detail::get_u64(bytes.data() + offset));
    params.push_back(Parameter{name, NDArray(shape, std::move(values)), {}});
  }
  if (offset != bytes.size()) throw CheckpointError(Kind::kCorrupt, "trailing bytes after parameter data");

  if (tokens.size() != config.vocab_size)
    throw CheckpointError(Kind::kShape, "vocabulary has " + std::to_string(tokens.size()) +
                                            " tokens, config says vocab_size " + std::to_string(config.vocab_size));
  try {
    Autoencoder model = Autoencoder::from_parameters(config, std::move(params));
    return AutoencoderCheckpoint{std::move(model), Vocabulary::from_tokens(tokens), std::move(meta)};
  } catch (const ShapeError& e) {
    throw CheckpointError(Kind::kShape, e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(Kind::kShape, std::string("invalid config in checkpoint: ") + e.what());
  } catch (const DataError& e) {
    throw CheckpointError(Kind::kCorrupt, e.what());
  }
}

inline void save_checkpoint(const AutoencoderCheckpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::kIo, "write to '" + path + "' failed");
}

inline AutoencoderCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace dprw
