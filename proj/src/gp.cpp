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

#include "mtgp/gp.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "mtgp/errors.hpp"
#include "mtgp/logging.hpp"

namespace mtgp::gp {

namespace {

constexpr double kFirstRung = 1e-8;
constexpr double kLastRung = 1e-2;

bool try_cholesky(const Eigen::MatrixXd& k, Eigen::MatrixXd& lower) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return false;
  lower = llt.matrixL();
  const auto d = lower.diagonal();
  return d.allFinite() && (d.array() > 0.0).all();
}

Eigen::MatrixXd with_noise(Eigen::MatrixXd k, const Noise& noise, const Observations& obs) {
  for (Eigen::Index a = 0; a < k.rows(); ++a) k(a, a) += noise_for(noise, obs.task[a]);
  return k;
}

Eigen::VectorXd solve(const JitteredCholesky& c, const Eigen::VectorXd& y) {
  const auto l = c.lower.triangularView<Eigen::Lower>();
  return l.transpose().solve(l.solve(y));
}

}  // namespace

JitteredCholesky factorize(const Eigen::MatrixXd& k) {
  if (k.rows() != k.cols()) throw DimensionError("covariance must be square");
  if (k.rows() == 0) throw InputError("empty input: nothing to factorize");
  if (!k.allFinite()) throw NumericalError("covariance has non-finite entries");
  JitteredCholesky out;
  if (try_cholesky(k, out.lower)) return out;
  const double scale = k.diagonal().mean();
  if (!(scale > 0.0)) throw NumericalError("covariance has a non-positive mean diagonal");
  Eigen::MatrixXd shifted = k;
  for (double rung = kFirstRung; rung <= kLastRung * 1.0000001; rung *= 10.0) {
    const double jitter = rung * scale;
    shifted.diagonal() = k.diagonal().array() + jitter;
    logger().debug("cholesky failed, retrying with jitter {:g} ({:g} x mean diagonal)", jitter, rung);
    if (try_cholesky(shifted, out.lower)) {
      out.jitter = jitter;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "cholesky failed after jitter ladder 0, " << kFirstRung << " .. " << kLastRung
      << " (x10 per step) times mean diagonal " << scale;
  throw NumericalError(msg.str());
}

double noise_for(const Noise& noise, int task) { return noise.size() == 1 ? noise(0) : noise(task); }

void check_noise(const Noise& noise, int tasks) {
  if (noise.size() != 1 && noise.size() != tasks) {
    throw DimensionError("noise must have 1 entry or one per task (" + std::to_string(tasks) + ")");
  }
  if (!noise.allFinite() || (noise.array() <= 0.0).any()) throw InputError("noise variances must be positive");
}

NlmlTerms nlml_terms(const Covariance& cov, const Noise& noise, const Observations& obs) {
  check_noise(noise, cov.shape().tasks);
  const auto c = factorize(with_noise(cov.gram(obs), noise, obs));
  const Eigen::VectorXd v = c.lower.triangularView<Eigen::Lower>().solve(obs.y);
  NlmlTerms t;
  t.data_fit = 0.5 * v.squaredNorm();
  t.complexity = c.lower.diagonal().array().log().sum();
  t.constant = 0.5 * static_cast<double>(obs.size()) * std::log(2.0 * std::numbers::pi);
  return t;
}

double nlml(const KernelSpec& spec, const Noise& noise, const Observations& obs) {
  return nlml_terms(Covariance(spec), noise, obs).total();
}

double nlml(const KernelSpec& spec, const Noise& noise, const TaskedDataset& data) {
  return nlml(spec, noise, stack(data, Subset::train));
}

NlmlGradient nlml_gradient(const Covariance& cov, const Noise& noise, const Observations& obs) {
  check_noise(noise, cov.shape().tasks);
  const auto c = factorize(with_noise(cov.gram(obs), noise, obs));
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::VectorXd alpha = solve(c, obs.y);
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
  const auto l = c.lower.triangularView<Eigen::Lower>();
  l.solveInPlace(inv);
  l.transpose().solveInPlace(inv);
  // W = (K^-1 - alpha alpha^T) / 2, so that dNLML = sum W . dK
  Eigen::MatrixXd w = 0.5 * (inv - alpha * alpha.transpose());
  w = 0.5 * (w + w.transpose()).eval();

  NlmlGradient g;
  g.value = 0.5 * obs.y.dot(alpha) + c.lower.diagonal().array().log().sum() +
            0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  g.kernel = cov.contract_gradient(obs, w);
  g.log_noise = Eigen::VectorXd::Zero(noise.size());
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index slot = noise.size() == 1 ? 0 : obs.task[a];
    g.log_noise(slot) += w(a, a) * noise(slot);
  }
  return g;
}

TrainedModel::TrainedModel(KernelSpec spec, Noise noise, TaskedDataset data)
    : spec_(std::move(spec)), noise_(std::move(noise)), data_(std::move(data)), cov_(spec_) {
  check_noise(noise_, spec_.shape.tasks);
  if (static_cast<int>(data_.num_tasks()) != spec_.shape.tasks) {
    throw DimensionError("dataset has " + std::to_string(data_.num_tasks()) + " tasks, kernel expects " +
                         std::to_string(spec_.shape.tasks));
  }
  train_ = stack(data_, Subset::train);
  chol_ = factorize(with_noise(cov_.gram(train_), noise_, train_));
  alpha_ = solve(chol_, train_.y);
  const Eigen::VectorXd v = chol_.lower.triangularView<Eigen::Lower>().solve(train_.y);
  nlml_.data_fit = 0.5 * v.squaredNorm();
  nlml_.complexity = chol_.lower.diagonal().array().log().sum();
  nlml_.constant = 0.5 * static_cast<double>(train_.size()) * std::log(2.0 * std::numbers::pi);
}

Prediction TrainedModel::predict(std::span<const double> x, int task) const {
  if (static_cast<int>(x.size()) != spec_.shape.dims) throw DimensionError("input dimension does not match the model");
  Observations point;
  point.x = Eigen::Map<const Eigen::RowVectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  point.task = {task};
  point.y = Eigen::VectorXd::Zero(1);
  point.num_tasks = spec_.shape.tasks;
  return predict(point).front();
}

std::vector<Prediction> TrainedModel::predict(const Observations& points) const {
  for (int t : points.task) {
    if (t < 0 || t >= spec_.shape.tasks) {
      throw InputError("task index " + std::to_string(t) + " out of range (model has " +
                       std::to_string(spec_.shape.tasks) + " tasks)");
    }
  }
  const Eigen::MatrixXd kstar = cov_.cross(train_, points);  // N x T
  const Eigen::VectorXd prior = cov_.diagonal(points);
  const Eigen::MatrixXd v = chol_.lower.triangularView<Eigen::Lower>().solve(kstar);
  std::vector<Prediction> out(points.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    out[j].mean = kstar.col(col).dot(alpha_);
    double var = prior(col) - v.col(col).squaredNorm();
    if (var < 0.0) {
      // Round-off tolerance scaled by the prior variance.
      const double tol = 1e-10 * std::max(1.0, std::abs(prior(col)));
      if (var < -tol) {
        throw NumericalError("predicted variance " + std::to_string(var) + " is negative beyond round-off");
      }
      logger().debug("clamped predicted variance {:g} to 0", var);
      var = 0.0;
    }
    out[j].variance = var;
  }
  return out;
}

Eigen::VectorXd sample_prior(const KernelSpec& spec, const Observations& inputs, std::uint64_t seed) {
  if (!inputs.x.allFinite()) throw InputError("inputs must be finite");
  const auto c = factorize(assemble(spec, inputs));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(c.lower.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
  return c.lower.triangularView<Eigen::Lower>() * z;
}

}  // namespace mtgp::gp
