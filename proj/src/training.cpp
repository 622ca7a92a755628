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

#include "figsep/training.hpp"

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace figsep {

void tune_allocator() {
#ifdef __GLIBC__
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 << 20);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
    return true;
  }();
  (void)done;
#endif
}

TrainingLog::TrainingLog(std::vector<std::string> loss_columns) {
  columns_ = {"step", "lr"};
  columns_.insert(columns_.end(), loss_columns.begin(), loss_columns.end());
}

void TrainingLog::add(long step, double lr, std::vector<double> losses) {
  if (losses.size() + 2 != columns_.size()) throw std::invalid_argument("TrainingLog: column count");
  std::vector<double> row{static_cast<double>(step), lr};
  row.insert(row.end(), losses.begin(), losses.end());
  rows_.push_back(std::move(row));
}

std::vector<double> TrainingLog::series(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw std::invalid_argument("TrainingLog: no column " + name);
  const auto col = static_cast<std::size_t>(it - columns_.begin());
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[col]);
  return out;
}

double TrainingLog::window_mean(const std::string& name, std::size_t begin, std::size_t end) const {
  const auto s = series(name);
  end = std::min(end, s.size());
  if (begin >= end) throw std::invalid_argument("TrainingLog: empty window");
  double sum = 0.0;
  for (std::size_t k = begin; k < end; ++k) sum += s[k];
  return sum / static_cast<double>(end - begin);
}

std::string TrainingLog::to_csv() const {
  std::ostringstream os;
  for (std::size_t c = 0; c < columns_.size(); ++c) os << (c ? "," : "") << columns_[c];
  os << '\n';
  char buf[64];
  for (const auto& r : rows_) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c == 0)
        std::snprintf(buf, sizeof buf, "%ld", static_cast<long>(r[c]));
      else
        std::snprintf(buf, sizeof buf, "%.9g", r[c]);
      os << (c ? "," : "") << buf;
    }
    os << '\n';
  }
  return os.str();
}

void TrainingLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_csv();
}

}  // namespace figsep
