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

// Dataset construction: the synthetic signal / integral / derivative
// benchmark, numerical calculus, split protocols, metrics and CSV series I/O.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtgp/dataset.hpp"
#include "mtgp/kernel_core.hpp"

namespace mtgp::data {

struct SyntheticConfig {
  std::size_t points = 300;
  double lower = -10.0;
  double upper = 10.0;
  int components = 3;
};

struct SyntheticDataset {
  TaskedDataset data;  // tasks "signal", "integral", "derivative"
  std::vector<kernel::ComponentParams> signal_components;
};

/// Signal drawn from a zero-mean GP with a randomized SM kernel (weights
/// U[0.5, 1.5], means U[0.05, 0.4], variances U[0.001, 0.01]), plus its
/// cumulative integral and derivative. Every point is marked train.
SyntheticDataset generate_synthetic(std::uint64_t seed, const SyntheticConfig& config = {});

/// Cumulative trapezoid, first entry 0.
std::vector<double> cumulative_integral(std::span<const double> y, std::span<const double> x);
/// Second-order differences: central inside, one-sided three-point at the ends.
std::vector<double> derivative(std::span<const double> y, std::span<const double> x);

enum class SplitStrategy { random_half, first_half, last_half };

std::string_view split_name(SplitStrategy s) noexcept;
SplitStrategy parse_split(std::string_view name);

/// Marks exactly floor(N/2) points of `task` as train and the rest as test.
TaskedDataset split(TaskedDataset data, std::size_t task, SplitStrategy strategy, std::uint64_t seed = 0);

double mae(std::span<const double> predicted, std::span<const double> actual);

struct SeriesSchema {
  std::string timestamp = "timestamp";
  std::string value = "value";
  std::string task = "task";       // optional column; absent means one task
  std::string default_label = "";  // label when there is no task column; file stem if empty
};

struct LoadReport {
  std::size_t rows = 0;     // data rows read
  std::size_t dropped = 0;  // rows with a missing value
};

/// Reads `timestamp,value[,task]` CSV. ISO-8601 timestamps become hours since
/// the earliest kept sample (recorded in `time_origin`); numeric timestamps
/// are used as is. Empty or NaN values are dropped and counted.
TaskedDataset load_series(const std::filesystem::path& path, const SeriesSchema& schema = {},
                          LoadReport* report = nullptr);

/// One file per task, in order; labels are file stems.
TaskedDataset load_series(std::span<const std::filesystem::path> paths, const SeriesSchema& schema = {},
                          LoadReport* report = nullptr);

/// Writes `timestamp,value,task` with shortest round-trip number formatting.
void write_series(const TaskedDataset& data, const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_number(double v);
double parse_number(std::string_view text);

std::string format_timestamp(std::int64_t unix_seconds);
/// Seconds since the Unix epoch; accepts `YYYY-MM-DD[T ]hh:mm[:ss][Z]`.
std::int64_t parse_timestamp(std::string_view text);

}  // namespace mtgp::data
