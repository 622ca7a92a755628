// Copyright 2026 The figsep Authors. All Rights Reserved.
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

#include "figsep/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace figsep {

namespace {
constexpr char kMagic[8] = {'F', 'I', 'G', 'S', 'E', 'P', 'C', 'K'};
}

void write_checkpoint(const std::filesystem::path& path, const std::string& model_kind,
                      const nlohmann::json& config,
                      const std::function<void(std::ostream&)>& write_weights) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  const nlohmann::json header = {
      {"format_version", kCheckpointFormatVersion}, {"model_kind", model_kind}, {"config", config}};
  const std::string text = header.dump();
  const auto len = static_cast<std::uint32_t>(text.size());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  write_weights(out);
  if (!out) throw CheckpointError("write failure on checkpoint " + path.string());
}

CheckpointHeader read_checkpoint(
    const std::filesystem::path& path, const std::string& expected_kind,
    const std::function<void(const CheckpointHeader&, std::istream&)>& read_weights) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[8];
  std::uint32_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw CheckpointError(path.string() + " is not a figsep checkpoint");
  std::string text(len, '\0');
  in.read(text.data(), len);
  if (!in) throw CheckpointError("truncated checkpoint header in " + path.string());
  CheckpointHeader header;
  try {
    const auto j = nlohmann::json::parse(text);
    header.format_version = j.at("format_version").get<int>();
    header.model_kind = j.at("model_kind").get<std::string>();
    header.config = j.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  if (header.format_version != kCheckpointFormatVersion)
    throw CheckpointError("unsupported checkpoint format version " +
                          std::to_string(header.format_version));
  if (header.model_kind != expected_kind)
    throw CheckpointError("checkpoint holds a '" + header.model_kind + "' model, expected '" +
                          expected_kind + "'");
  try {
    read_weights(header, in);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  return header;
}

}  // namespace figsep
