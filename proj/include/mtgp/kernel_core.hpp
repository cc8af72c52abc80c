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

// Single-task stationary kernels: squared exponential, Matern, spectral
// mixture (SM) and generalized convolution spectral mixture (GCSM), plus the
// spectral densities they are Fourier pairs of.
//
// Conventions: frequencies are in cycles per input unit, `variance` is the
// diagonal of a component's spectral covariance, tau = x - x'.

#include <complex>
#include <span>
#include <vector>

namespace mtgp::kernel {

using Vector = std::vector<double>;

/// One Gaussian base component of a spectral mixture.
///
/// `phase_delay` has one entry per input dimension; the entries are summed
/// where the phase enters the cosine, so for one-dimensional inputs it is the
/// usual scalar phase.
struct ComponentParams {
  double weight = 1.0;
  Vector mean_freq;
  Vector variance;
  Vector time_delay;
  Vector phase_delay;

  std::size_t dims() const noexcept { return mean_freq.size(); }
  void validate() const;

  /// Zero-delay component with the given spectral mean and variance.
  static ComponentParams spectral(double weight, Vector mean_freq, Vector variance);
};

/// Convolution of components i and j: the quantities that parameterize the
/// (i, j) term of a GCSM kernel.
struct CrossComponentParams {
  double cross_weight = 0.0;     // sqrt(w_i w_j)
  double cross_amplitude = 0.0;  // in (0, 1]
  Vector cross_mean;
  Vector cross_variance;
  Vector cross_time_delay;       // theta_i - theta_j
  Vector cross_phase_delay;      // phi_i - phi_j

  std::size_t dims() const noexcept { return cross_mean.size(); }
  double contribution() const noexcept { return cross_weight * cross_amplitude; }
  double total_phase() const noexcept;
};

enum class MaternOrder { half, three_halves, five_halves };

double matern_nu(MaternOrder order) noexcept;

struct BaselineKernelParams {
  double signal_scale = 1.0;
  Vector length_scale;
  MaternOrder matern_order = MaternOrder::three_halves;

  void validate() const;
};

void check_components(std::span<const ComponentParams> components, std::size_t dims);

double sm_eval(std::span<const ComponentParams> components, std::span<const double> tau);

CrossComponentParams cross_params(const ComponentParams& a, const ComponentParams& b);

/// Value of the single (i, j) term of a GCSM kernel at lag tau.
double gcsm_term(const CrossComponentParams& cp, std::span<const double> tau);

/// Sum over all Q^2 ordered pairs (i, j) of the GCSM terms.
double gcsm_eval(std::span<const ComponentParams> components, std::span<const double> tau);

/// Complex cross spectral density of the (i, j) GCSM term at frequency s.
std::complex<double> gcsm_cross_density(const CrossComponentParams& cp, std::span<const double> s);

/// Sum of term magnitudes: an upper bound on |gcsm_eval| (and on |sm_eval|).
double gcsm_abs_bound(std::span<const ComponentParams> components);

double se_eval(const BaselineKernelParams& params, std::span<const double> tau);
double matern_eval(const BaselineKernelParams& params, std::span<const double> tau);

/// Symmetrized Gaussian-mixture spectral density of an SM kernel.
double sm_spectral_density(std::span<const ComponentParams> components, std::span<const double> s);
double se_spectral_density(const BaselineKernelParams& params, std::span<const double> s);
/// Matern spectral density; one-dimensional inputs only.
double matern_spectral_density(const BaselineKernelParams& params, double s);

}  // namespace mtgp::kernel
