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

#include "mtgp/spectral_init.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <string>

#include <fftw3.h>

#include "mtgp/errors.hpp"
#include "mtgp/logging.hpp"

namespace mtgp::init {

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

SpectralDensityEstimate periodogram(std::span<const double> y, double dt) {
  const std::size_t n = y.size();
  if (n < 8) throw InputError("periodogram needs at least 8 samples, got " + std::to_string(n));
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("sampling interval must be positive");
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  const std::size_t bins = n / 2 + 1;
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) in[i] = y[i] - mean;
  fftw_execute(plan);

  SpectralDensityEstimate est;
  const double nn = static_cast<double>(n);
  est.bin_width = 1.0 / (nn * dt);
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double mag2 = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    const double fold = (2 * k == n) ? 1.0 : 2.0;  // Nyquist bin has no mirror
    est.frequency.push_back(static_cast<double>(k) * est.bin_width);
    est.power.push_back(fold * mag2 / (nn * nn) / est.bin_width);
  }
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return est;
}

double uniform_spacing(std::span<const double> x, double rel_tol) {
  if (x.size() < 2) throw InputError("a grid needs at least 2 points");
  const double dt = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  if (!(dt > 0.0)) throw InputError("grid inputs must be increasing");
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs((x[i] - x[i - 1]) - dt) > rel_tol * dt) {
      throw InputError("inputs are not on a uniform grid (resample before estimating the spectrum)");
    }
  }
  return dt;
}

UniformSeries resample_uniform(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("resample: x and y differ in length");
  if (x.size() < 2) throw InputError("resample needs at least 2 points");
  double dt = x[1] - x[0];
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw InputError("resample: inputs must be strictly increasing");
    dt = std::min(dt, x[i] - x[i - 1]);
  }
  const double span = x.back() - x.front();
  // Guard against a single tight pair blowing up the grid.
  const double coarsest = span / (16.0 * static_cast<double>(x.size()));
  dt = std::max(dt, coarsest);
  const auto count = static_cast<std::size_t>(std::floor(span / dt + 1e-9)) + 1;

  UniformSeries out;
  out.start = x.front();
  out.dt = dt;
  out.y.resize(count);
  std::size_t j = 0;
  std::size_t interpolated = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = x.front() + dt * static_cast<double>(k);
    while (j + 2 < x.size() && x[j + 1] <= t) ++j;
    const double x0 = x[j], x1 = x[j + 1];
    const double tol = 1e-9 * dt;
    if (std::abs(t - x0) <= tol) {
      out.y[k] = y[j];
    } else if (std::abs(t - x1) <= tol) {
      out.y[k] = y[j + 1];
    } else {
      const double a = std::clamp((t - x0) / (x1 - x0), 0.0, 1.0);
      out.y[k] = (1.0 - a) * y[j] + a * y[j + 1];
      ++interpolated;
    }
  }
  out.interpolated_fraction = static_cast<double>(interpolated) / static_cast<double>(count);
  return out;
}

SpectralDensityEstimate series_periodogram(std::span<const double> x, std::span<const double> y,
                                           double* interpolated, std::size_t* grid_points) {
  if (x.size() != y.size()) throw DimensionError("series x and y differ in length");
  if (x.size() < 8) throw InputError("periodogram needs at least 8 samples, got " + std::to_string(x.size()));
  double dt = 0.0;
  try {
    dt = uniform_spacing(x);
  } catch (const InputError&) {
    const auto grid = resample_uniform(x, y);
    if (interpolated != nullptr) *interpolated = grid.interpolated_fraction;
    if (grid_points != nullptr) *grid_points = grid.y.size();
    return periodogram(grid.y, grid.dt);
  }
  if (interpolated != nullptr) *interpolated = 0.0;
  if (grid_points != nullptr) *grid_points = y.size();
  return periodogram(y, dt);
}

namespace {

struct EmResult {
  std::vector<GmmComponent> comps;
  Eigen::MatrixXd resp;
  std::vector<double> trace;
  bool collapsed = false;
};

EmResult run_em(const std::vector<double>& f, const std::vector<double>& w, double spread, int Q,
                std::mt19937_64& rng, const GmmOptions& opt) {
  const std::size_t n = f.size();
  EmResult r;
  // Seeding: first mean drawn by weight, the rest by weight x squared distance.
  std::vector<double> means;
  std::vector<double> score(w);
  for (int q = 0; q < Q; ++q) {
    std::discrete_distribution<std::size_t> pick(score.begin(), score.end());
    means.push_back(f[pick(rng)]);
    for (std::size_t k = 0; k < n; ++k) {
      double d2 = std::numeric_limits<double>::infinity();
      for (double m : means) d2 = std::min(d2, (f[k] - m) * (f[k] - m));
      score[k] = w[k] * d2;
    }
    if (std::accumulate(score.begin(), score.end(), 0.0) <= 0.0) score = w;
  }
  double mean_all = 0.0, var_all = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean_all += w[k] * f[k];
  for (std::size_t k = 0; k < n; ++k) var_all += w[k] * (f[k] - mean_all) * (f[k] - mean_all);
  const double var0 = std::max(var_all / (Q * Q), spread) + spread;

  r.comps.resize(Q);
  for (int q = 0; q < Q; ++q) r.comps[q] = {1.0 / Q, means[q], var0};

  r.resp.resize(static_cast<Eigen::Index>(n), Q);
  std::vector<double> logg(Q);
  for (int iter = 0; iter <= opt.max_iters; ++iter) {
    // E-step
    double ll = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double top = -std::numeric_limits<double>::infinity();
      for (int q = 0; q < Q; ++q) {
        const auto& c = r.comps[q];
        const double d = f[k] - c.mean;
        logg[q] = std::log(c.weight) - 0.5 * std::log(2.0 * kPi * c.variance) - (d * d + spread) / (2.0 * c.variance);
        top = std::max(top, logg[q]);
      }
      double sum = 0.0;
      for (int q = 0; q < Q; ++q) sum += std::exp(logg[q] - top);
      for (int q = 0; q < Q; ++q) r.resp(static_cast<Eigen::Index>(k), q) = std::exp(logg[q] - top) / sum;
      ll += w[k] * (top + std::log(sum));
    }
    r.trace.push_back(ll);
    const std::size_t t = r.trace.size();
    if (t > 1 && r.trace[t - 1] - r.trace[t - 2] < opt.tolerance) break;
    if (iter == opt.max_iters) break;
    // M-step
    for (int q = 0; q < Q; ++q) {
      double mass = 0.0, mu = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double wr = w[k] * r.resp(static_cast<Eigen::Index>(k), q);
        mass += wr;
        mu += wr * f[k];
      }
      if (mass < opt.collapse) {
        r.collapsed = true;
        return r;
      }
      mu /= mass;
      double var = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double d = f[k] - mu;
        var += w[k] * r.resp(static_cast<Eigen::Index>(k), q) * (d * d + spread);
      }
      var /= mass;
      if (var < opt.collapse) {
        r.collapsed = true;
        return r;
      }
      r.comps[q] = {mass, mu, var};
    }
  }
  return r;
}

}  // namespace

GmmFit fit_gmm(const SpectralDensityEstimate& density, int components, std::uint64_t seed, const GmmOptions& options) {
  if (components < 1) throw InputError("mixture needs at least one component");
  if (density.frequency.size() != density.power.size()) throw DimensionError("density frequency/power length mismatch");
  double total = 0.0;
  int support = 0;
  for (double p : density.power) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("spectral power must be finite and nonnegative");
    total += p;
    support += p > 0.0 ? 1 : 0;
  }
  if (support < components) {
    throw InputError("density has " + std::to_string(support) + " bins with positive power, fewer than " +
                     std::to_string(components) + " components");
  }
  std::vector<double> w(density.power.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = density.power[k] / total;
  const double spread = density.bin_width * density.bin_width / 12.0;

  for (int attempt = 0; attempt <= options.max_restarts; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt) * 0x9E3779B97F4A7C15ULL);
    EmResult r = run_em(density.frequency, w, spread, components, rng, options);
    if (r.collapsed) {
      logger().info("mixture component collapsed, restarting EM ({} of {})", attempt + 1, options.max_restarts);
      continue;
    }
    std::vector<int> order(components);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return r.comps[a].mean < r.comps[b].mean; });
    GmmFit fit;
    fit.restarts = attempt;
    fit.log_likelihood = std::move(r.trace);
    fit.responsibilities.resize(r.resp.rows(), components);
    for (int q = 0; q < components; ++q) {
      fit.components.push_back(r.comps[order[q]]);
      fit.responsibilities.col(q) = r.resp.col(order[q]);
    }
    return fit;
  }
  throw NumericalError("mixture fit collapsed on every restart (" + std::to_string(options.max_restarts) + ")");
}

namespace {

Eigen::MatrixXd draw_factor(int tasks, std::mt19937_64& rng, const InitOptions& opt) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(tasks, tasks);
  for (int m = 0; m < tasks; ++m) {
    for (int n = 0; n <= m; ++n) c(m, n) = opt.factor_scale * std::clamp(normal(rng), -opt.factor_clip, opt.factor_clip);
    c(m, m) += opt.diagonal_boost;
  }
  return c;
}

// Density on `grid`, linear between the estimate's bins and zero beyond them.
std::vector<double> resample_density(const SpectralDensityEstimate& d, const std::vector<double>& grid) {
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double g = grid[k];
    if (g > d.frequency.back() * (1.0 + 1e-12)) continue;
    if (g <= d.frequency.front()) {
      out[k] = d.power.front();
      continue;
    }
    const auto it = std::lower_bound(d.frequency.begin(), d.frequency.end(), g);
    const auto j = static_cast<std::size_t>(it - d.frequency.begin());
    if (j >= d.frequency.size()) {
      out[k] = d.power.back();
      continue;
    }
    const double a = (g - d.frequency[j - 1]) / (d.frequency[j] - d.frequency[j - 1]);
    out[k] = (1.0 - a) * d.power[j - 1] + a * d.power[j];
  }
  return out;
}

void normalize(SpectralDensityEstimate& d) {
  double mass = 0.0;
  for (double p : d.power) mass += p * d.bin_width;
  if (mass > 0.0) {
    for (double& p : d.power) p /= mass;
  }
}

}  // namespace

KernelSpec spec_from_mixture(const KernelShape& shape, const std::vector<GmmComponent>& mixture,
                             double target_variance, std::uint64_t seed, const InitOptions& options) {
  shape.validate();
  if (shape.dims != 1) throw DimensionError("spectral initialization supports one-dimensional inputs only");
  if (!(target_variance > 0.0)) throw InputError("target variance must be positive");
  const bool baseline = shape.family == Family::se_lmc || shape.family == Family::matern_lmc;
  if (!baseline && static_cast<int>(mixture.size()) != shape.components) {
    throw DimensionError("mixture has " + std::to_string(mixture.size()) + " components, kernel expects " +
                         std::to_string(shape.components));
  }
  const int Q = shape.components;
  const int M = shape.tasks;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> delay(-options.delay_range, options.delay_range);
  std::uniform_real_distribution<double> phase(-options.phase_range, options.phase_range);
  auto component = [&](int q, bool delays) {
    const auto& g = mixture[q];
    auto c = kernel::ComponentParams::spectral(g.weight * target_variance, {g.mean}, {g.variance});
    if (delays) {
      c.time_delay = {delay(rng)};
      c.phase_delay = {phase(rng)};
    }
    return c;
  };

  KernelSpec spec;
  spec.shape = shape;
  switch (shape.family) {
    case Family::se_lmc:
    case Family::matern_lmc: {
      double mean_freq = 0.0;
      for (const auto& g : mixture) mean_freq += g.weight * std::abs(g.mean);
      LmcParams b;
      b.factor = draw_factor(M, rng, options);
      b.base.signal_scale = std::sqrt(target_variance);
      b.base.length_scale = {1.0 / (2.0 * kPi * std::max(mean_freq, 1e-6))};
      b.base.matern_order = shape.matern;
      spec.params = std::move(b);
      break;
    }
    case Family::sm_lmc: {
      SmLmcParams b;
      for (int q = 0; q < Q; ++q) {
        b.coregionalization.factors.push_back(draw_factor(M, rng, options));
        b.components.push_back(component(q, false));
      }
      spec.params = std::move(b);
      break;
    }
    case Family::csm: {
      CsmParams b;
      b.weight.resize(Q, M);
      b.phase = Eigen::MatrixXd::Zero(Q, M);
      for (int q = 0; q < Q; ++q) {
        b.variance.push_back(mixture[q].variance);
        b.mean.push_back(mixture[q].mean);
        for (int r = 0; r < M; ++r) {
          b.weight(q, r) = mixture[q].weight * target_variance;
          if (q > 0) b.phase(q, r) = phase(rng);
        }
      }
      spec.params = std::move(b);
      break;
    }
    case Family::mosm: {
      MosmParams b;
      b.channels.resize(Q);
      for (int q = 0; q < Q; ++q) {
        const double mean_ang = 2.0 * kPi * mixture[q].mean;
        const double var_ang = 4.0 * kPi * kPi * mixture[q].variance;
        const double target = mixture[q].weight * target_variance;
        for (int m = 0; m < M; ++m) {
          MosmChannel c;
          c.weight = std::sqrt(target / (std::sqrt(2.0 * kPi) * std::sqrt(var_ang)));
          c.mean = {mean_ang};
          c.variance = {var_ang};
          c.delay = {delay(rng)};
          c.phase = phase(rng);
          b.channels[q].push_back(std::move(c));
        }
      }
      spec.params = std::move(b);
      break;
    }
    case Family::gcsm_c: {
      GcsmCParams b;
      b.factor = draw_factor(M, rng, options);
      for (int q = 0; q < Q; ++q) b.components.push_back(component(q, true));
      spec.params = std::move(b);
      break;
    }
    case Family::gcsm_cc: {
      GcsmCcParams b;
      for (int q = 0; q < Q; ++q) {
        b.coregionalization.factors.push_back(draw_factor(M, rng, options));
        b.components.push_back(component(q, true));
      }
      spec.params = std::move(b);
      break;
    }
  }
  spec.validate();
  return spec;
}

Initialization init_hyperparams(const TaskedDataset& data, const KernelShape& shape, std::uint64_t seed,
                                const InitOptions& options) {
  shape.validate();
  data.validate();
  if (shape.dims != 1) throw DimensionError("spectral initialization supports one-dimensional inputs only");
  if (static_cast<int>(data.num_tasks()) != shape.tasks) {
    throw DimensionError("dataset has " + std::to_string(data.num_tasks()) + " tasks, kernel expects " +
                         std::to_string(shape.tasks));
  }

  Initialization out;
  std::vector<SpectralDensityEstimate> per_task;
  std::vector<double> all_targets;
  std::size_t points = 0;
  double interpolated = 0.0;
  for (const auto& t : data.tasks) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.train[i] == 0) continue;
      x.push_back(t.x[i]);
      y.push_back(t.y[i]);
    }
    if (x.empty()) throw InputError("task '" + t.label + "' has no training points");
    all_targets.insert(all_targets.end(), y.begin(), y.end());
    double frac = 0.0;
    std::size_t grid = 0;
    SpectralDensityEstimate d = series_periodogram(x, y, &frac, &grid);
    interpolated += frac * static_cast<double>(grid);
    points += grid;
    normalize(d);
    per_task.push_back(std::move(d));
  }
  out.interpolated_fraction = points > 0 ? interpolated / static_cast<double>(points) : 0.0;

  const double mean = std::accumulate(all_targets.begin(), all_targets.end(), 0.0) / all_targets.size();
  double var = 0.0;
  for (double v : all_targets) var += (v - mean) * (v - mean);
  out.target_variance = var / static_cast<double>(all_targets.size());
  if (!(out.target_variance > 0.0)) throw InputError("training targets have zero variance");

  // Common grid: the finest frequency resolution among the tasks.
  std::size_t finest = 0;
  for (std::size_t m = 1; m < per_task.size(); ++m) {
    if (per_task[m].bin_width < per_task[finest].bin_width) finest = m;
  }
  SpectralDensityEstimate& base = per_task[finest];
  out.density.bin_width = base.bin_width;
  if (options.pooled) {
    std::vector<std::pair<double, double>> bins;  // frequency, probability mass
    for (const auto& d : per_task) {
      for (std::size_t k = 0; k < d.frequency.size(); ++k) {
        bins.emplace_back(d.frequency[k], d.power[k] * d.bin_width / static_cast<double>(per_task.size()));
      }
    }
    std::sort(bins.begin(), bins.end());
    for (const auto& [f, mass] : bins) {
      if (!out.density.frequency.empty() && std::abs(f - out.density.frequency.back()) <= 1e-12 * f) {
        out.density.power.back() += mass / base.bin_width;
      } else {
        out.density.frequency.push_back(f);
        out.density.power.push_back(mass / base.bin_width);
      }
    }
  } else {
    out.density.frequency = base.frequency;
    out.density.power.assign(base.frequency.size(), 0.0);
    for (const auto& d : per_task) {
      const auto resampled = resample_density(d, base.frequency);
      for (std::size_t k = 0; k < resampled.size(); ++k) {
        out.density.power[k] += resampled[k] / static_cast<double>(per_task.size());
      }
    }
  }
  normalize(out.density);

  const int mixture_size =
      (shape.family == Family::se_lmc || shape.family == Family::matern_lmc) ? 1 : shape.components;
  std::mt19937_64 rng(seed);
  out.gmm = fit_gmm(out.density, mixture_size, rng(), {});
  out.spec = spec_from_mixture(shape, out.gmm.components, out.target_variance, rng(), options);
  const Eigen::Index noise_size = options.shared_noise ? 1 : shape.tasks;
  out.noise = Eigen::VectorXd::Constant(noise_size, options.noise_fraction * out.target_variance);
  return out;
}

}  // namespace mtgp::init
