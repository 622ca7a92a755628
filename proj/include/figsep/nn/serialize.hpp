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

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "figsep/nn/tensor.hpp"

namespace figsep::nn {

/// Writes parameter values as (rows, cols, float32 data) records.
template <typename Scalar>
void write_parameters(std::ostream& os, const ParameterList<Scalar>& params) {
  const auto count = static_cast<std::uint32_t>(params.size());
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto* p : params) {
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(p->value.rows()),
                                   static_cast<std::uint32_t>(p->value.cols())};
    os.write(reinterpret_cast<const char*>(dims), sizeof dims);
    std::vector<float> buf(p->value.data(), p->value.data() + p->value.size());
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

/// Reads values written by `write_parameters`; shapes must match exactly.
template <typename Scalar>
void read_parameters(std::istream& is, const ParameterList<Scalar>& params) {
  std::uint32_t count = 0;
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!is || count != params.size()) throw std::runtime_error("weights: parameter count mismatch");
  for (auto* p : params) {
    std::uint32_t dims[2] = {0, 0};
    is.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!is || dims[0] != p->value.rows() || dims[1] != p->value.cols())
      throw std::runtime_error("weights: parameter shape mismatch");
    std::vector<float> buf(static_cast<std::size_t>(dims[0]) * dims[1]);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw std::runtime_error("weights: truncated parameter data");
    for (std::size_t k = 0; k < buf.size(); ++k) p->value.data()[k] = static_cast<Scalar>(buf[k]);
    p->grad.setZero();
    p->m.setZero();
    p->v.setZero();
  }
}

}  // namespace figsep::nn
