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

// Exact GP inference: negative log marginal likelihood, posterior
// prediction and prior sampling on top of a multi-task covariance.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mtgp/covariance.hpp"
#include "mtgp/dataset.hpp"
#include "mtgp/multitask.hpp"

namespace mtgp::gp {

/// Cholesky factor of a covariance plus the diagonal jitter it needed.
struct JitteredCholesky {
  Eigen::MatrixXd lower;
  double jitter = 0.0;
};

/// Factorizes `k`, adding jitter from a ladder of 1e-8..1e-2 times the mean
/// diagonal (x10 per rung) only when the plain factorization fails. Throws
/// NumericalError after the last rung.
JitteredCholesky factorize(const Eigen::MatrixXd& k);

/// Observation noise variances: one shared entry or one per task.
using Noise = Eigen::VectorXd;

double noise_for(const Noise& noise, int task);
void check_noise(const Noise& noise, int tasks);

struct NlmlTerms {
  double data_fit = 0.0;    // 1/2 y^T (K + S)^-1 y
  double complexity = 0.0;  // 1/2 log|K + S|
  double constant = 0.0;    // N/2 log 2 pi

  double total() const noexcept { return data_fit + complexity + constant; }
};

NlmlTerms nlml_terms(const Covariance& cov, const Noise& noise, const Observations& obs);
double nlml(const KernelSpec& spec, const Noise& noise, const Observations& obs);
/// Uses the training partition of `data`.
double nlml(const KernelSpec& spec, const Noise& noise, const TaskedDataset& data);

struct NlmlGradient {
  double value = 0.0;
  Eigen::VectorXd kernel;     // d/d flat kernel parameters
  Eigen::VectorXd log_noise;  // d/d log noise, same length as the noise vector
};

NlmlGradient nlml_gradient(const Covariance& cov, const Noise& noise, const Observations& obs);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;  // latent function, noise excluded
};

/// Posterior over a fixed training set. Immutable; predict is thread-safe.
class TrainedModel {
 public:
  /// Conditions on the training partition of `data`.
  TrainedModel(KernelSpec spec, Noise noise, TaskedDataset data);

  const KernelSpec& spec() const noexcept { return spec_; }
  const Noise& noise() const noexcept { return noise_; }
  const TaskedDataset& data() const noexcept { return data_; }
  const Observations& training() const noexcept { return train_; }
  const Eigen::MatrixXd& chol() const noexcept { return chol_.lower; }
  double jitter() const noexcept { return chol_.jitter; }
  double nlml() const noexcept { return nlml_.total(); }
  const NlmlTerms& nlml_terms() const noexcept { return nlml_; }

  Prediction predict(std::span<const double> x, int task) const;
  std::vector<Prediction> predict(const Observations& points) const;

 private:
  KernelSpec spec_;
  Noise noise_;
  TaskedDataset data_;
  Covariance cov_;
  Observations train_;
  JitteredCholesky chol_;
  Eigen::VectorXd alpha_;
  NlmlTerms nlml_;
};

/// One draw L z, z ~ N(0, I) from a seeded generator, with L the jittered
/// Cholesky factor of the prior covariance at `inputs`.
Eigen::VectorXd sample_prior(const KernelSpec& spec, const Observations& inputs, std::uint64_t seed);

}  // namespace mtgp::gp
