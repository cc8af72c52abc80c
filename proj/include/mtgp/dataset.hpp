/*
 * Copyright 2026 The mtgp Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mtgp {

/// One task's series. Inputs are strictly increasing; `train` marks the
/// training partition (the rest is test).
struct TaskSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::uint8_t> train;

  std::size_t size() const noexcept { return x.size(); }
};

struct TaskedDataset {
  std::vector<TaskSeries> tasks;
  // Unix time (seconds) of input 0 when inputs came from ISO-8601 timestamps;
  // inputs are then hours since that instant.
  std::optional<std::int64_t> time_origin;

  std::size_t num_tasks() const noexcept { return tasks.size(); }
  std::size_t num_points() const noexcept;
  std::size_t num_train() const noexcept;
  int task_index(const std::string& label) const;  // -1 when absent
  void validate() const;
};

enum class Subset { all, train, test };

/// Stacked, task-contiguous view of a dataset: rows of `x` are points
/// (N x P), `task[k]` is the task of row k.
struct Observations {
  Eigen::MatrixXd x;
  std::vector<int> task;
  Eigen::VectorXd y;
  int num_tasks = 1;

  std::size_t size() const noexcept { return task.size(); }
  int dims() const noexcept { return static_cast<int>(x.cols()); }
};

Observations stack(const TaskedDataset& data, Subset subset = Subset::all);

}  // namespace mtgp
