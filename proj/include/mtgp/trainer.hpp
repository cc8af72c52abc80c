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

// NLML minimization over the flat transformed parameter vector (kernel
// parameters followed by log noise variances).

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mtgp/dataset.hpp"
#include "mtgp/gp.hpp"
#include "mtgp/multitask.hpp"
#include "mtgp/spectral_init.hpp"

namespace mtgp::train {

enum class GradientMode { analytic, numeric };

struct TrainConfig {
  int max_iters = 200;
  double learning_rate = 0.05;  // initial Adam step
  double max_learning_rate = 0.2;
  double grow = 1.1;            // step multiplier after an accepted move
  double shrink = 0.5;          // after a rejected move
  double tolerance = 1e-6;      // relative NLML improvement counted as stalled
  int patience = 5;             // consecutive stalled steps before stopping
  int max_rejections = 12;      // consecutive rejected steps before stopping
  GradientMode gradient = GradientMode::analytic;
  std::uint64_t seed = 0;
  int restarts = 3;             // extra starts beyond the given initialization
  init::InitOptions rejitter;   // ranges for re-drawn delays, phases and factors

  void validate() const;
};

/// Kernel parameters then log noise variances.
struct ParamVector {
  KernelShape shape;
  Eigen::VectorXd values;
  int noise_size = 1;

  static ParamVector pack(const KernelSpec& spec, const gp::Noise& noise);
  KernelSpec spec() const;
  gp::Noise noise() const;
  Eigen::VectorXd kernel_values() const { return values.head(values.size() - noise_size); }
};

double objective(const ParamVector& params, const Observations& obs);

/// Gradient of the NLML in transformed coordinates.
Eigen::VectorXd gradient(const ParamVector& params, const Observations& obs,
                         GradientMode mode = GradientMode::analytic);

struct TraceEntry {
  int restart = 0;
  int iteration = 0;
  double nlml = 0.0;
  double learning_rate = 0.0;
  bool accepted = false;
};

struct TrainResult {
  gp::TrainedModel model;
  double initial_nlml = 0.0;
  int best_restart = 0;
  std::vector<double> restart_nlml;  // final NLML per start, NaN if it failed
  std::vector<TraceEntry> trace;
};

/// Minimizes the NLML on the training partition of `data`, starting from
/// `init` and `restarts` re-jittered copies of it; returns the best start.
TrainResult optimize(const KernelSpec& init, const gp::Noise& noise, const TaskedDataset& data,
                     const TrainConfig& config = {});

/// Same parameters with phases wrapped into one period centred on zero
/// (the kernel value is unchanged).
Eigen::VectorXd wrap_phases(const KernelShape& shape, const Eigen::VectorXd& values);

}  // namespace mtgp::train
