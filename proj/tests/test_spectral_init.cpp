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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "mtgp/errors.hpp"
#include "mtgp/spectral_init.hpp"
#include "support.hpp"

using namespace mtgp;
using namespace mtgp::init;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tones(std::size_t n, double dt, std::vector<std::pair<double, double>> parts) {
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (auto [freq, amp] : parts) y[i] += amp * std::cos(2.0 * kPi * freq * dt * static_cast<double>(i));
  return y;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// |X_k|^2 by direct summation over the mean-removed samples.
std::vector<double> direct_dft_power(const std::vector<double>& y) {
  const std::size_t n = y.size();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  std::vector<double> out;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += (y[t] - mean) * std::polar(1.0, -2.0 * kPi * static_cast<double>(k * t) / static_cast<double>(n));
    }
    out.push_back(std::norm(acc));
  }
  return out;
}

double variance(const std::vector<double>& y) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double v = 0.0;
  for (double x : y) v += (x - mean) * (x - mean);
  return v / static_cast<double>(y.size());
}

std::pair<double, double> two_means_by_grid_search(const SpectralDensityEstimate& d) {
  // Weighted within-cluster scatter over every pair of candidate means.
  double best = std::numeric_limits<double>::infinity();
  std::pair<double, double> arg;
  const auto& f = d.frequency;
  for (std::size_t a = 0; a < f.size(); ++a) {
    for (std::size_t b = a + 1; b < f.size(); ++b) {
      double cost = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) {
        const double da = f[k] - f[a], db = f[k] - f[b];
        cost += d.power[k] * std::min(da * da, db * db);
      }
      if (cost < best) {
        best = cost;
        arg = {f[a], f[b]};
      }
    }
  }
  return arg;
}

}  // namespace

TEST_SUITE("spectral-init") {

TEST_CASE("pure tone gives a single dominant peak") {
  const auto y = tones(256, 1.0, {{0.1, 1.0}});
  const auto d = periodogram(y, 1.0);
  REQUIRE(d.frequency.size() == 128);
  CHECK(d.frequency.front() == doctest::Approx(1.0 / 256));
  CHECK(d.frequency.back() == doctest::Approx(0.5));
  CHECK(d.bin_width == doctest::Approx(1.0 / 256));
  CHECK(std::abs(d.frequency[argmax(d.power)] - 0.1) <= d.bin_width);
  for (std::size_t k = 1; k < d.frequency.size(); ++k) CHECK(d.frequency[k] > d.frequency[k - 1]);
  for (double p : d.power) CHECK(p >= 0.0);
}

TEST_CASE("constant input has zero power") {
  const std::vector<double> y(64, 3.25);
  for (double p : periodogram(y, 0.5).power) CHECK(std::abs(p) < 1e-24);
}

TEST_CASE("two tones against a direct DFT") {
  const auto y = tones(200, 1.0, {{0.05, 1.0}, {0.2, 0.6}});
  const auto d = periodogram(y, 1.0);
  const auto ref = direct_dft_power(y);
  REQUIRE(ref.size() == d.power.size());
  // one-sided scaling: 2 |X_k|^2 / (N^2 df) below Nyquist
  const double df = d.bin_width;
  const double peak = d.power[argmax(d.power)];
  for (std::size_t k = 0; k < ref.size(); ++k) {
    const double fold = 2 * (k + 1) == y.size() ? 1.0 : 2.0;
    CHECK(std::abs(d.power[k] - fold * ref[k] / (200.0 * 200.0 * df)) < 1e-10 * peak);
  }
  std::vector<std::size_t> order(ref.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ref[a] > ref[b]; });
  std::vector<double> peaks{d.frequency[order[0]], d.frequency[order[1]]};
  std::sort(peaks.begin(), peaks.end());
  CHECK(peaks[0] == doctest::Approx(0.05));
  CHECK(peaks[1] == doctest::Approx(0.2));
}

TEST_CASE("Parseval: total power equals the sample variance") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  for (std::size_t n : {8u, 9u, 64u, 101u, 500u}) {
    std::vector<double> y(n);
    for (double& v : y) v = 2.0 + normal(rng);
    for (double dt : {1.0, 0.25}) {
      const auto d = periodogram(y, dt);
      const double total = std::accumulate(d.power.begin(), d.power.end(), 0.0) * d.bin_width;
      CHECK(std::abs(total - variance(y)) <= 1e-6 * variance(y));
    }
  }
}

TEST_CASE("periodogram preconditions") {
  CHECK_THROWS_AS(periodogram(std::vector<double>(7, 1.0), 1.0), InputError);
  CHECK_THROWS_AS(periodogram(std::vector<double>(16, 1.0), 0.0), InputError);
  const std::vector<double> x{0.0, 1.0, 2.0, 3.5, 4.0, 5.0, 6.0, 7.0};
  CHECK_THROWS_AS(uniform_spacing(x), InputError);
  CHECK(uniform_spacing(std::vector<double>{0.0, 0.5, 1.0, 1.5}) == doctest::Approx(0.5));
}

TEST_CASE("gaps are interpolated onto the uniform grid") {
  std::vector<double> x, y;
  for (int i = 0; i < 40; ++i) {
    if (i % 5 == 2) continue;
    x.push_back(i);
    y.push_back(std::sin(0.3 * i));
  }
  const UniformSeries g = resample_uniform(x, y);
  CHECK(g.dt == doctest::Approx(1.0));
  REQUIRE(g.y.size() == 40);
  CHECK(g.interpolated_fraction == doctest::Approx(8.0 / 40.0));
  CHECK(g.y[2] == doctest::Approx(0.5 * (std::sin(0.3) + std::sin(0.9))));
  double frac = -1.0;
  const auto d = series_periodogram(x, y, &frac);
  CHECK(frac == doctest::Approx(0.2));
  CHECK(d.frequency.size() == 20);
}

TEST_CASE("point mass fits exactly") {
  SpectralDensityEstimate d;
  d.bin_width = 0.01;
  for (int k = 1; k <= 50; ++k) {
    d.frequency.push_back(0.01 * k);
    d.power.push_back(k == 17 ? 4.0 : 0.0);
  }
  const GmmFit fit = fit_gmm(d, 1, 3);
  REQUIRE(fit.components.size() == 1);
  CHECK(fit.components[0].weight == doctest::Approx(1.0));
  CHECK(fit.components[0].mean == doctest::Approx(0.17));
  CHECK(fit.components[0].variance == doctest::Approx(0.01 * 0.01 / 12.0));
}

TEST_CASE("two separated peaks") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal;
  auto y = tones(400, 1.0, {{0.05, 1.0}, {0.2, 0.8}});
  for (double& v : y) v += 0.05 * normal(rng);
  const auto d = periodogram(y, 1.0);
  const GmmFit fit = fit_gmm(d, 2, 5);
  REQUIRE(fit.components.size() == 2);
  const auto [a, b] = two_means_by_grid_search(d);
  CHECK(std::abs(fit.components[0].mean - a) <= d.bin_width);
  CHECK(std::abs(fit.components[1].mean - b) <= d.bin_width);
  CHECK(std::abs(fit.components[0].mean - 0.05) <= d.bin_width);
  CHECK(std::abs(fit.components[1].mean - 0.2) <= d.bin_width);
}

TEST_CASE("EM invariants") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal;
  auto y = tones(300, 0.5, {{0.1, 1.0}, {0.4, 0.5}, {0.7, 0.3}});
  for (double& v : y) v += 0.3 * normal(rng);
  const auto d = periodogram(y, 0.5);
  for (int q : {1, 2, 3, 5}) {
    const GmmFit fit = fit_gmm(d, q, 7);
    REQUIRE(static_cast<int>(fit.components.size()) == q);
    double wsum = 0.0;
    for (std::size_t i = 0; i < fit.components.size(); ++i) {
      wsum += fit.components[i].weight;
      CHECK(fit.components[i].variance > 0.0);
      if (i > 0) CHECK(fit.components[i].mean >= fit.components[i - 1].mean);
    }
    CHECK(std::abs(wsum - 1.0) < 1e-10);
    for (std::size_t t = 1; t < fit.log_likelihood.size(); ++t) {
      CHECK(fit.log_likelihood[t] >= fit.log_likelihood[t - 1] - 1e-12 * std::abs(fit.log_likelihood[t - 1]));
    }
    CHECK(fit.log_likelihood.size() <= 500);
    for (Eigen::Index k = 0; k < fit.responsibilities.rows(); ++k) {
      CHECK(std::abs(fit.responsibilities.row(k).sum() - 1.0) < 1e-10);
    }
    const GmmFit again = fit_gmm(d, q, 7);
    for (std::size_t i = 0; i < fit.components.size(); ++i) CHECK(again.components[i].mean == fit.components[i].mean);
  }
}

TEST_CASE("too few support points") {
  SpectralDensityEstimate d;
  d.bin_width = 0.1;
  d.frequency = {0.1, 0.2, 0.3};
  d.power = {1.0, 0.0, 2.0};
  CHECK_THROWS_AS(fit_gmm(d, 3, 1), InputError);
  CHECK_NOTHROW(fit_gmm(d, 2, 1));
}

TEST_CASE("initialization on a pure tone recovers the frequency") {
  const auto y = tones(256, 0.5, {{0.3, 1.5}});
  const TaskedDataset data = testing::grid_dataset({y}, 0.0, 0.5);
  const Initialization init = init_hyperparams(data, KernelShape{Family::gcsm_cc, 1, 1, 1}, 4);
  const auto& p = std::get<GcsmCcParams>(init.spec.params);
  CHECK(std::abs(p.components[0].mean_freq[0] - 0.3) <= init.density.bin_width);
  CHECK(p.components[0].weight == doctest::Approx(init.target_variance));
  CHECK(init.target_variance == doctest::Approx(variance(y)));
}

TEST_CASE("initialization invariants for every family") {
  std::mt19937_64 rng(24);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> ys(3, std::vector<double>(120));
  for (auto& row : ys) {
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = std::sin(0.4 * i) + 0.5 * std::cos(1.3 * i) + 0.2 * normal(rng);
  }
  TaskedDataset data = testing::grid_dataset(ys, 0.0, 1.0);
  data.tasks[1].train[7] = 0;  // irregular training grid on one task
  for (Family f : all_families()) {
    const KernelShape shape{f, 3, 3, 1};
    const Initialization a = init_hyperparams(data, shape, 99);
    const Initialization b = init_hyperparams(data, shape, 99);
    CHECK_NOTHROW(a.spec.validate());
    CHECK(flatten(a.spec) == flatten(b.spec));
    CHECK(a.noise.size() == 1);
    CHECK(a.noise(0) == doctest::Approx(0.01 * a.target_variance));
    CHECK(a.interpolated_fraction > 0.0);
    std::vector<Eigen::MatrixXd> factors;
    if (auto* p = std::get_if<GcsmCcParams>(&a.spec.params)) factors = p->coregionalization.factors;
    if (auto* p = std::get_if<SmLmcParams>(&a.spec.params)) factors = p->coregionalization.factors;
    if (auto* p = std::get_if<GcsmCParams>(&a.spec.params)) factors = {p->factor};
    if (auto* p = std::get_if<LmcParams>(&a.spec.params)) factors = {p->factor};
    for (const auto& c : factors) {
      for (int m = 0; m < 3; ++m) {
        for (int n = m + 1; n < 3; ++n) CHECK(c(m, n) == 0.0);
        for (int n = 0; n < m; ++n) CHECK(std::abs(c(m, m)) > std::abs(c(m, n)));
      }
    }
    if (auto* p = std::get_if<GcsmCcParams>(&a.spec.params)) {
      double wsum = 0.0;
      for (const auto& comp : p->components) {
        wsum += comp.weight;
        CHECK(std::abs(comp.time_delay[0]) <= 0.5);
        CHECK(std::abs(comp.phase_delay[0]) <= kPi / 4.0);
      }
      CHECK(wsum == doctest::Approx(a.target_variance));
    }
  }
  InitOptions per_task;
  per_task.shared_noise = false;
  CHECK(init_hyperparams(data, KernelShape{Family::sm_lmc, 2, 3, 1}, 1, per_task).noise.size() == 3);
  InitOptions pooled;
  pooled.pooled = true;
  CHECK_NOTHROW(init_hyperparams(data, KernelShape{Family::gcsm_cc, 2, 3, 1}, 1, pooled));
  CHECK_THROWS_AS(init_hyperparams(data, KernelShape{Family::gcsm_cc, 2, 2, 1}, 1), DimensionError);
}

}
