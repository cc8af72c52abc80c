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

// Experiment protocol shared by the command-line tool and the acceptance
// suite: configuration, data preparation, per-kernel fit/predict/score, and
// JSON (de)serialization of configs, metrics, manifests and trained models.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtgp/data.hpp"
#include "mtgp/gp.hpp"
#include "mtgp/multitask.hpp"
#include "mtgp/spectral_init.hpp"
#include "mtgp/trainer.hpp"

namespace mtgp::experiment {

using nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

std::string_view version() noexcept;

struct ExperimentConfig {
  std::vector<Family> kernels{Family::gcsm_cc, Family::sm_lmc};
  int components = 10;
  kernel::MaternOrder matern = kernel::MaternOrder::three_halves;
  std::uint64_t seed = 0;
  std::vector<std::filesystem::path> csv;  // empty: synthetic data
  data::SeriesSchema schema;
  data::SyntheticConfig synthetic;
  // Per task, cycled when there are more tasks: random_half, first_half,
  // last_half, or none (every point trains).
  std::vector<std::string> splits{"random_half", "first_half", "last_half"};
  train::TrainConfig train;
  init::InitOptions init;
  bool standardize = true;  // per-task zero mean, unit variance on training targets
  std::filesystem::path output = "mtgp-out";

  void validate() const;
};

/// Relative CSV paths resolve against `base_dir`.
ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base_dir = {});
json to_json(const ExperimentConfig& config);

json to_json(const TaskedDataset& data);
TaskedDataset dataset_from_json(const json& j);

struct PreparedData {
  TaskedDataset data;
  json provenance;
};

/// Loads or generates the dataset and applies the configured splits.
PreparedData prepare_data(const ExperimentConfig& config);

/// Affine per-task target transform fitted on training targets.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardization fit(const TaskedDataset& data, bool enabled);
  TaskedDataset apply(const TaskedDataset& data) const;
};

struct KernelRun {
  Family family = Family::gcsm_cc;
  std::unique_ptr<train::TrainResult> result;
  init::Initialization initialization;
  Standardization standardization;
  std::vector<std::vector<gp::Prediction>> predictions;  // [task][point], original units
  std::map<std::string, double> mae;                    // test points, per task label
  double seconds = 0.0;
};

KernelShape shape_for(Family family, const ExperimentConfig& config, int tasks);

/// Seed of the spectral initialization derived from the experiment seed.
std::uint64_t init_seed(const ExperimentConfig& config) noexcept;

/// Standardize, initialize, train and predict every point of `data`.
KernelRun run_kernel(const TaskedDataset& data, Family family, const ExperimentConfig& config);

json metrics_json(const std::vector<KernelRun>& runs);
json manifest_json(const ExperimentConfig& config, const PreparedData& prepared, const std::vector<KernelRun>& runs);
json run_summary(const KernelRun& run);

/// `task,x,y_true,y_mean,y_std,is_train`
void write_predictions(const std::filesystem::path& path, const TaskedDataset& data,
                       const std::vector<std::vector<gp::Prediction>>& predictions);

json model_to_json(const KernelRun& run, const TaskedDataset& data, const json& manifest);

struct LoadedModel {
  std::unique_ptr<gp::TrainedModel> model;  // conditioned on standardized data
  Standardization standardization;
  TaskedDataset data;                       // original units
  double stored_nlml = 0.0;
};

/// Throws VersionError when the schema version differs.
LoadedModel model_from_json(const json& j);

/// Predictions in original units for arbitrary (task, x) points.
std::vector<gp::Prediction> predict_original(const LoadedModel& model, const std::vector<int>& tasks,
                                             const std::vector<double>& x);

}  // namespace mtgp::experiment
