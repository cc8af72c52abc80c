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

#include "mtgp/kernel_core.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mtgp/detail/cross_algebra.hpp"
#include "mtgp/errors.hpp"

namespace mtgp::kernel {

namespace {

constexpr double kPi = std::numbers::pi;

void check_lag(std::span<const double> tau, std::size_t dims, const char* where) {
  if (tau.size() != dims) {
    throw DimensionError(std::string(where) + ": lag has " + std::to_string(tau.size()) +
                         " dimensions, kernel has " + std::to_string(dims));
  }
}

// Product of one-dimensional Gaussian densities (diagonal covariance).
double diag_gaussian(std::span<const double> s, const Vector& mean, const Vector& variance) {
  double log_density = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) {
    const double d = s[p] - mean[p];
    log_density += -0.5 * d * d / variance[p] - 0.5 * std::log(2.0 * kPi * variance[p]);
  }
  return std::exp(log_density);
}

}  // namespace

void ComponentParams::validate() const {
  const std::size_t p = mean_freq.size();
  if (p == 0) throw DimensionError("component has zero input dimensions");
  if (variance.size() != p || time_delay.size() != p || phase_delay.size() != p) {
    throw DimensionError("component fields disagree on the input dimension");
  }
  if (!(weight > 0.0) || !std::isfinite(weight)) throw InputError("component weight must be positive");
  for (double v : variance) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("component variances must be positive");
  }
}

ComponentParams ComponentParams::spectral(double weight, Vector mean_freq, Vector variance) {
  ComponentParams c;
  c.weight = weight;
  const std::size_t p = mean_freq.size();
  c.mean_freq = std::move(mean_freq);
  c.variance = std::move(variance);
  c.time_delay.assign(p, 0.0);
  c.phase_delay.assign(p, 0.0);
  return c;
}

double CrossComponentParams::total_phase() const noexcept {
  return std::accumulate(cross_phase_delay.begin(), cross_phase_delay.end(), 0.0);
}

double matern_nu(MaternOrder order) noexcept {
  switch (order) {
    case MaternOrder::half: return 0.5;
    case MaternOrder::three_halves: return 1.5;
    case MaternOrder::five_halves: return 2.5;
  }
  return 1.5;
}

void BaselineKernelParams::validate() const {
  if (length_scale.empty()) throw DimensionError("baseline kernel has zero input dimensions");
  if (!(signal_scale > 0.0)) throw InputError("signal scale must be positive");
  for (double l : length_scale) {
    if (!(l > 0.0)) throw InputError("length scales must be positive");
  }
}

void check_components(std::span<const ComponentParams> components, std::size_t dims) {
  if (components.empty()) throw InputError("kernel needs at least one component");
  for (const auto& c : components) {
    c.validate();
    if (c.dims() != dims) throw DimensionError("components disagree on the input dimension");
  }
}

double sm_eval(std::span<const ComponentParams> components, std::span<const double> tau) {
  check_components(components, tau.size());
  double k = 0.0;
  for (const auto& c : components) {
    double decay = 0.0;
    double arg = 0.0;
    for (std::size_t p = 0; p < tau.size(); ++p) {
      decay += tau[p] * tau[p] * c.variance[p];
      arg += tau[p] * c.mean_freq[p];
    }
    k += c.weight * std::cos(2.0 * kPi * arg) * std::exp(-2.0 * kPi * kPi * decay);
  }
  return k;
}

CrossComponentParams cross_params(const ComponentParams& a, const ComponentParams& b) {
  a.validate();
  b.validate();
  if (a.dims() != b.dims()) throw DimensionError("cross_params: components differ in dimension");
  const std::size_t dims = a.dims();
  CrossComponentParams cp;
  cp.cross_weight = std::sqrt(a.weight * b.weight);
  cp.cross_mean.resize(dims);
  cp.cross_variance.resize(dims);
  cp.cross_time_delay.resize(dims);
  cp.cross_phase_delay.resize(dims);
  double log_amp = 0.0;
  for (std::size_t p = 0; p < dims; ++p) {
    const auto d = detail::cross_dim(a.mean_freq[p], a.variance[p], b.mean_freq[p], b.variance[p]);
    cp.cross_mean[p] = d.mean;
    cp.cross_variance[p] = d.variance;
    cp.cross_time_delay[p] = a.time_delay[p] - b.time_delay[p];
    cp.cross_phase_delay[p] = a.phase_delay[p] - b.phase_delay[p];
    log_amp += d.log_amplitude;
  }
  cp.cross_amplitude = std::exp(log_amp);
  return cp;
}

double gcsm_term(const CrossComponentParams& cp, std::span<const double> tau) {
  check_lag(tau, cp.dims(), "gcsm_term");
  double quad = 0.0;
  double arg = 0.0;
  for (std::size_t p = 0; p < tau.size(); ++p) {
    const double u = 2.0 * tau[p] - cp.cross_time_delay[p];
    quad += u * u * cp.cross_variance[p];
    arg += u * cp.cross_mean[p];
  }
  return cp.contribution() * std::exp(-0.5 * kPi * kPi * quad) * std::cos(kPi * (arg - cp.total_phase()));
}

double gcsm_eval(std::span<const ComponentParams> components, std::span<const double> tau) {
  check_components(components, tau.size());
  double k = 0.0;
  for (const auto& a : components) {
    for (const auto& b : components) k += gcsm_term(cross_params(a, b), tau);
  }
  return k;
}

std::complex<double> gcsm_cross_density(const CrossComponentParams& cp, std::span<const double> s) {
  check_lag(s, cp.dims(), "gcsm_cross_density");
  double delay = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p) delay += cp.cross_time_delay[p] * s[p];
  const double magnitude = cp.contribution() * diag_gaussian(s, cp.cross_mean, cp.cross_variance);
  return std::polar(magnitude, -kPi * (delay + cp.total_phase()));
}

double gcsm_abs_bound(std::span<const ComponentParams> components) {
  double bound = 0.0;
  for (const auto& a : components) {
    for (const auto& b : components) bound += cross_params(a, b).contribution();
  }
  return bound;
}

double se_eval(const BaselineKernelParams& params, std::span<const double> tau) {
  params.validate();
  check_lag(tau, params.length_scale.size(), "se_eval");
  double r2 = 0.0;
  for (std::size_t p = 0; p < tau.size(); ++p) {
    const double z = tau[p] / params.length_scale[p];
    r2 += z * z;
  }
  return params.signal_scale * params.signal_scale * std::exp(-0.5 * r2);
}

double matern_eval(const BaselineKernelParams& params, std::span<const double> tau) {
  params.validate();
  check_lag(tau, params.length_scale.size(), "matern_eval");
  double r2 = 0.0;
  for (std::size_t p = 0; p < tau.size(); ++p) {
    const double z = tau[p] / params.length_scale[p];
    r2 += z * z;
  }
  const double r = std::sqrt(r2);
  const double s2 = params.signal_scale * params.signal_scale;
  switch (params.matern_order) {
    case MaternOrder::half:
      return s2 * std::exp(-r);
    case MaternOrder::three_halves: {
      const double a = std::sqrt(3.0) * r;
      return s2 * (1.0 + a) * std::exp(-a);
    }
    case MaternOrder::five_halves: {
      const double a = std::sqrt(5.0) * r;
      return s2 * (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

double sm_spectral_density(std::span<const ComponentParams> components, std::span<const double> s) {
  check_components(components, s.size());
  Vector neg(s.begin(), s.end());
  for (double& v : neg) v = -v;
  double density = 0.0;
  for (const auto& c : components) {
    density += c.weight * 0.5 * (diag_gaussian(s, c.mean_freq, c.variance) + diag_gaussian(neg, c.mean_freq, c.variance));
  }
  return density;
}

double se_spectral_density(const BaselineKernelParams& params, std::span<const double> s) {
  params.validate();
  check_lag(s, params.length_scale.size(), "se_spectral_density");
  double density = params.signal_scale * params.signal_scale;
  for (std::size_t p = 0; p < s.size(); ++p) {
    const double l = params.length_scale[p];
    density *= std::sqrt(2.0 * kPi) * l * std::exp(-2.0 * kPi * kPi * l * l * s[p] * s[p]);
  }
  return density;
}

double matern_spectral_density(const BaselineKernelParams& params, double s) {
  params.validate();
  if (params.length_scale.size() != 1) throw DimensionError("matern_spectral_density: one-dimensional inputs only");
  const double nu = matern_nu(params.matern_order);
  const double l = params.length_scale[0];
  const double s2 = params.signal_scale * params.signal_scale;
  const double norm = 2.0 * std::sqrt(kPi) * std::tgamma(nu + 0.5) * std::pow(2.0 * nu, nu) /
                      (std::tgamma(nu) * std::pow(l, 2.0 * nu));
  return s2 * norm * std::pow(2.0 * nu / (l * l) + 4.0 * kPi * kPi * s * s, -(nu + 0.5));
}

}  // namespace mtgp::kernel
