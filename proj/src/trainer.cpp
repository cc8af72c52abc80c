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

#include "mtgp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "mtgp/covariance.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/logging.hpp"

namespace mtgp::train {

void TrainConfig::validate() const {
  if (max_iters < 0) throw InputError("max_iters must be nonnegative");
  if (!(learning_rate > 0.0) || !(max_learning_rate >= learning_rate)) {
    throw InputError("learning rates must be positive with max >= initial");
  }
  if (!(grow >= 1.0) || !(shrink > 0.0 && shrink < 1.0)) throw InputError("step multipliers out of range");
  if (!(tolerance > 0.0)) throw InputError("tolerance must be positive");
  if (patience < 1 || max_rejections < 1) throw InputError("patience and max_rejections must be positive");
  if (restarts < 0) throw InputError("restarts must be nonnegative");
}

ParamVector ParamVector::pack(const KernelSpec& spec, const gp::Noise& noise) {
  gp::check_noise(noise, spec.shape.tasks);
  const Eigen::VectorXd z = flatten(spec);
  ParamVector p;
  p.shape = spec.shape;
  p.noise_size = static_cast<int>(noise.size());
  p.values.resize(z.size() + noise.size());
  p.values << z, noise.array().log().matrix();
  return p;
}

KernelSpec ParamVector::spec() const { return unflatten(shape, kernel_values()); }

gp::Noise ParamVector::noise() const { return values.tail(noise_size).array().exp().matrix(); }

double objective(const ParamVector& params, const Observations& obs) {
  const Covariance cov(params.shape, params.kernel_values());
  return gp::nlml_terms(cov, params.noise(), obs).total();
}

namespace {

struct Evaluation {
  double value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
};

Evaluation evaluate(const ParamVector& params, const Observations& obs, GradientMode mode) {
  Evaluation e;
  if (mode == GradientMode::analytic) {
    const Covariance cov(params.shape, params.kernel_values());
    const auto g = gp::nlml_gradient(cov, params.noise(), obs);
    e.value = g.value;
    e.grad.resize(params.values.size());
    e.grad << g.kernel, g.log_noise;
  } else {
    e.value = objective(params, obs);
    e.grad = gradient(params, obs, GradientMode::numeric);
  }
  return e;
}

}  // namespace

Eigen::VectorXd gradient(const ParamVector& params, const Observations& obs, GradientMode mode) {
  if (mode == GradientMode::analytic) return evaluate(params, obs, mode).grad;
  Eigen::VectorXd g(params.values.size());
  ParamVector probe = params;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double p = params.values(i);
    const double h = 1e-6 * (1.0 + std::abs(p));
    probe.values(i) = p + h;
    const double up = objective(probe, obs);
    probe.values(i) = p - h;
    const double down = objective(probe, obs);
    probe.values(i) = p;
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd wrap_phases(const KernelShape& shape, const Eigen::VectorXd& values) {
  const auto roles = parameter_roles(shape);
  if (static_cast<Eigen::Index>(roles.size()) != values.size()) throw DimensionError("parameter vector length mismatch");
  // GCSM phases enter as pi * phi, the others directly.
  const bool gcsm = shape.family == Family::gcsm_c || shape.family == Family::gcsm_cc;
  const double period = gcsm ? 2.0 : 2.0 * std::numbers::pi;
  Eigen::VectorXd out = values;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (roles[i] != ParamRole::phase) continue;
    double w = std::remainder(out(i), period);
    if (w <= -0.5 * period) w += period;
    out(i) = w;
  }
  return out;
}

namespace {

Eigen::VectorXd rejitter(const ParamVector& base, std::mt19937_64& rng, const init::InitOptions& opt) {
  const auto roles = parameter_roles(base.shape);
  std::uniform_real_distribution<double> delay(-opt.delay_range, opt.delay_range);
  std::uniform_real_distribution<double> phase(-opt.phase_range, opt.phase_range);
  std::normal_distribution<double> normal;
  auto factor_draw = [&] { return opt.factor_scale * std::clamp(normal(rng), -opt.factor_clip, opt.factor_clip); };
  Eigen::VectorXd v = base.values;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    switch (roles[i]) {
      case ParamRole::delay: v(i) = delay(rng); break;
      case ParamRole::phase: v(i) = phase(rng); break;
      case ParamRole::factor: v(i) = factor_draw(); break;
      case ParamRole::factor_diagonal: v(i) = opt.diagonal_boost + factor_draw(); break;
      default: break;
    }
  }
  return v;
}

struct RunOutcome {
  ParamVector best;
  double nlml = std::numeric_limits<double>::infinity();
};

RunOutcome descend(ParamVector p, const Observations& obs, const TrainConfig& cfg, int restart,
                   std::vector<TraceEntry>& trace) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  Evaluation cur = evaluate(p, obs, cfg.gradient);
  if (!std::isfinite(cur.value) || !cur.grad.allFinite()) throw InputError("NLML is not finite at the initial parameters");
  trace.push_back({restart, 0, cur.value, cfg.learning_rate, true});

  Eigen::VectorXd m = Eigen::VectorXd::Zero(p.values.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p.values.size());
  double lr = cfg.learning_rate;
  int t = 0;
  int stalled = 0;
  int rejected = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const Eigen::VectorXd g2 = cur.grad.array().square().matrix();
    const Eigen::VectorXd m_next = kBeta1 * m + (1.0 - kBeta1) * cur.grad;
    const Eigen::VectorXd v_next = kBeta2 * v + (1.0 - kBeta2) * g2;
    const double c1 = 1.0 - std::pow(kBeta1, t + 1);
    const double c2 = 1.0 - std::pow(kBeta2, t + 1);
    const Eigen::VectorXd step =
        lr * ((m_next / c1).array() / ((v_next / c2).array().sqrt() + kEps)).matrix();

    ParamVector trial = p;
    trial.values -= step;
    Evaluation next;
    try {
      next = evaluate(trial, obs, cfg.gradient);
    } catch (const NumericalError& e) {
      logger().debug("restart {} iter {}: {}", restart, it, e.what());
    }
    const bool ok = std::isfinite(next.value) && next.grad.allFinite() && next.value <= cur.value;
    if (ok) {
      const double gain = cur.value - next.value;
      p = std::move(trial);
      cur = std::move(next);
      m = m_next;
      v = v_next;
      ++t;
      rejected = 0;
      lr = std::min(lr * cfg.grow, cfg.max_learning_rate);
      stalled = gain < cfg.tolerance * (1.0 + std::abs(cur.value)) ? stalled + 1 : 0;
    } else {
      // Stale momentum can point uphill; restart the moments from the current gradient.
      m.setZero();
      v.setZero();
      t = 0;
      lr *= cfg.shrink;
      ++rejected;
    }
    trace.push_back({restart, it, ok ? cur.value : next.value, lr, ok});
    if (stalled >= cfg.patience) {
      logger().debug("restart {} converged after {} iterations (NLML {:.6f})", restart, it, cur.value);
      break;
    }
    if (rejected >= cfg.max_rejections) {
      logger().debug("restart {} stopped after {} rejected steps (NLML {:.6f})", restart, rejected, cur.value);
      break;
    }
  }
  return {std::move(p), cur.value};
}

}  // namespace

TrainResult optimize(const KernelSpec& init, const gp::Noise& noise, const TaskedDataset& data,
                     const TrainConfig& config) {
  config.validate();
  init.validate();
  const Observations obs = stack(data, Subset::train);
  if (obs.size() == 0) throw InputError("no training points");
  const ParamVector start = ParamVector::pack(init, noise);

  std::vector<TraceEntry> trace;
  std::vector<double> finals;
  std::optional<RunOutcome> best;
  int best_restart = 0;
  double initial = 0.0;
  try {
    initial = objective(start, obs);
  } catch (const NumericalError& e) {
    throw InputError(std::string("initial parameters give no finite NLML: ") + e.what());
  }
  if (!std::isfinite(initial)) throw InputError("NLML is not finite at the initial parameters");

  const int starts = config.max_iters == 0 ? 1 : 1 + config.restarts;
  for (int r = 0; r < starts; ++r) {
    ParamVector p = start;
    if (r > 0) {
      std::mt19937_64 rng(config.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r));
      p.values = rejitter(start, rng, config.rejitter);
    }
    try {
      RunOutcome out = descend(std::move(p), obs, config, r, trace);
      finals.push_back(out.nlml);
      logger().info("start {}: NLML {:.6f}", r, out.nlml);
      if (!best || out.nlml < best->nlml) {
        best = std::move(out);
        best_restart = r;
      }
    } catch (const Error& e) {
      if (r == 0) throw;
      logger().warn("start {} abandoned: {}", r, e.what());
      finals.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  const ParamVector& chosen = best->best;
  TrainResult result{gp::TrainedModel(chosen.spec(), chosen.noise(), data), initial, best_restart, std::move(finals),
                     std::move(trace)};
  return result;
}

}  // namespace mtgp::train
