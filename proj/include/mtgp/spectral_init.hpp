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

// Data-driven hyperparameter initialization: periodograms, a weighted
// Gaussian mixture fitted by EM over frequency bins, and the mapping of that
// mixture onto every kernel family's parameters.

#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mtgp/dataset.hpp"
#include "mtgp/multitask.hpp"

namespace mtgp::init {

/// One-sided power spectral density on frequencies k / (N dt), k = 1..N/2,
/// scaled so that sum(power) * bin_width is the variance of the input.
struct SpectralDensityEstimate {
  std::vector<double> frequency;
  std::vector<double> power;
  double bin_width = 0.0;
};

SpectralDensityEstimate periodogram(std::span<const double> y, double dt);

/// Returns the spacing of a uniform grid; throws InputError otherwise.
double uniform_spacing(std::span<const double> x, double rel_tol = 1e-6);

struct UniformSeries {
  double start = 0.0;
  double dt = 0.0;
  std::vector<double> y;
  double interpolated_fraction = 0.0;  // grid points not present in the input
};

/// Linear interpolation onto the grid start + k dt spanning the input, with
/// dt the smallest input spacing.
UniformSeries resample_uniform(std::span<const double> x, std::span<const double> y);

/// Periodogram of one series: directly when `x` is a uniform grid, after
/// resample_uniform otherwise. `interpolated` receives the interpolated
/// fraction (0 for uniform input).
SpectralDensityEstimate series_periodogram(std::span<const double> x, std::span<const double> y,
                                           double* interpolated = nullptr, std::size_t* grid_points = nullptr);

struct GmmComponent {
  double weight = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

struct GmmOptions {
  double tolerance = 1e-8;
  int max_iters = 500;
  int max_restarts = 5;
  double collapse = 1e-12;
};

struct GmmFit {
  std::vector<GmmComponent> components;  // sorted by mean
  Eigen::MatrixXd responsibilities;      // bins x components
  std::vector<double> log_likelihood;    // per EM iteration
  int restarts = 0;
};

/// EM on the bins of `density`, each a sample at its centre frequency with
/// weight power / total. A bin is a uniform spread of width `bin_width`, which
/// adds bin_width^2 / 12 to every component variance update.
GmmFit fit_gmm(const SpectralDensityEstimate& density, int components, std::uint64_t seed,
               const GmmOptions& options = {});

struct InitOptions {
  double delay_range = 0.5;                       // theta ~ U[-r, r]
  double phase_range = std::numbers::pi / 4.0;    // phi ~ U[-r, r]
  double factor_scale = 0.1;                      // C entries ~ scale * N(0, 1)
  double factor_clip = 4.0;                       // |N(0, 1)| draws clipped here
  double diagonal_boost = 1.0;                    // added to diag(C)
  double noise_fraction = 0.01;                   // noise = fraction * target variance
  bool pooled = false;                            // pool bins instead of averaging per task
  bool shared_noise = true;
};

struct Initialization {
  KernelSpec spec;
  Eigen::VectorXd noise;
  SpectralDensityEstimate density;  // averaged (or pooled) normalized density
  GmmFit gmm;
  double target_variance = 0.0;
  double interpolated_fraction = 0.0;
};

/// Initializes `shape` from the training partition of `data` (scalar inputs).
Initialization init_hyperparams(const TaskedDataset& data, const KernelShape& shape, std::uint64_t seed,
                                const InitOptions& options = {});

/// Draws the randomized parts (delays, phases, coregionalization factors)
/// around fixed spectral components.
KernelSpec spec_from_mixture(const KernelShape& shape, const std::vector<GmmComponent>& mixture,
                             double target_variance, std::uint64_t seed, const InitOptions& options = {});

}  // namespace mtgp::init
