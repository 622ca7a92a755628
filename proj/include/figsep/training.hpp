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
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace figsep {

/// Optimization schedule shared by all three training stages. The learning
/// rate decays by `decay_factor` every `decay_interval` steps.
struct TrainingSchedule {
  long steps{200};
  int batch_size{4};
  double learning_rate{1e-3};
  long decay_interval{10000};
  double decay_factor{0.1};
  double grad_clip{10.0};
  std::uint64_t seed{0};
  bool operator==(const TrainingSchedule&) const = default;
};

/// Raised when a loss becomes non-finite during training.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-step loss curve; the first two columns are always "step" and "lr".
class TrainingLog {
 public:
  TrainingLog() = default;
  explicit TrainingLog(std::vector<std::string> loss_columns);

  void add(long step, double lr, std::vector<double> losses);
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  /// Column values by name (losses only).
  std::vector<double> series(const std::string& name) const;
  /// Mean of a loss column over rows [begin, end).
  double window_mean(const std::string& name, std::size_t begin, std::size_t end) const;

  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace figsep

#include <cmath>
#include <numeric>
#include <random>

#include "figsep/nn/adam.hpp"

namespace figsep {

/// Mini-batch Adam loop. `sample(index)` runs forward/backward for one training
/// example, accumulating parameter gradients, and returns its loss components
/// (first entry is the total). Gradients are averaged over the batch.
/// Raises the allocator's mmap and trim thresholds so the large per-step
/// temporaries are recycled instead of being mapped and faulted in again.
/// Idempotent; a no-op outside glibc.
void tune_allocator();

template <typename Scalar, typename SampleFn>
TrainingLog run_training(const nn::ParameterList<Scalar>& params, std::size_t n_samples,
                         const TrainingSchedule& schedule, std::vector<std::string> columns,
                         SampleFn&& sample) {
  if (n_samples == 0) throw std::invalid_argument("training: no samples");
  if (schedule.batch_size < 1) throw std::invalid_argument("training: batch_size must be >= 1");
  tune_allocator();
  nn::AdamOptions opts;
  opts.learning_rate = schedule.learning_rate;
  opts.grad_clip = schedule.grad_clip;
  nn::Adam<Scalar> adam(opts);
  TrainingLog log(columns);
  std::mt19937_64 rng(schedule.seed ^ 0x7EA1ULL);
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n_samples;
  for (auto* p : params) p->zero_grad();
  for (long step = 0; step < schedule.steps; ++step) {
    const double lr = nn::step_decay(schedule.learning_rate, step, schedule.decay_interval,
                                     schedule.decay_factor);
    adam.set_learning_rate(lr);
    std::vector<double> sums(columns.size(), 0.0);
    for (int b = 0; b < schedule.batch_size; ++b) {
      if (cursor == n_samples) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::vector<double> losses = sample(order[cursor++]);
      for (std::size_t c = 0; c < sums.size() && c < losses.size(); ++c) sums[c] += losses[c];
    }
    for (auto& s : sums) s /= schedule.batch_size;
    if (!std::isfinite(sums.front()))
      throw TrainingDivergence("training diverged at step " + std::to_string(step) +
                               ": non-finite loss");
    adam.step(params, 1.0 / schedule.batch_size);
    log.add(step, lr, std::move(sums));
  }
  return log;
}

}  // namespace figsep
