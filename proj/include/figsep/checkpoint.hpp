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

#pragma once

#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace figsep {

inline constexpr int kCheckpointFormatVersion = 1;

/// Single-file model container:
///   8-byte magic "FIGSEPCK" | uint32 header length | header JSON | weights.
/// The header records {format_version, model_kind, config}.
struct CheckpointHeader {
  int format_version{kCheckpointFormatVersion};
  std::string model_kind;
  nlohmann::json config;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(const std::filesystem::path& path, const std::string& model_kind,
                      const nlohmann::json& config,
                      const std::function<void(std::ostream&)>& write_weights);

/// Opens the file, validates magic, version and model kind, and hands the
/// weight stream to `read_weights`. Returns the header.
CheckpointHeader read_checkpoint(const std::filesystem::path& path,
                                 const std::string& expected_kind,
                                 const std::function<void(const CheckpointHeader&, std::istream&)>&
                                     read_weights);

}  // namespace figsep
