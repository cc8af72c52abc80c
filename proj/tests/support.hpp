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

// Shared helpers for the unit and acceptance tests: random kernel instances
// and small datasets.

#include <algorithm>
#include <cmath>
#include <string>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mtgp/dataset.hpp"
#include "mtgp/multitask.hpp"

namespace mtgp::testing {

/// Random parameter vector of the given shape, drawn per coordinate role.
inline Eigen::VectorXd random_values(const KernelShape& shape, std::mt19937_64& rng) {
  const auto roles = parameter_roles(shape);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
  const bool angular = shape.family == Family::mosm;
  Eigen::VectorXd v(static_cast<Eigen::Index>(roles.size()));
  for (std::size_t i = 0; i < roles.size(); ++i) {
    double x = 0.0;
    switch (roles[i]) {
      case ParamRole::factor: x = 0.5 * normal(rng); break;
      case ParamRole::factor_diagonal: x = uniform(0.5, 1.5) * (unit(rng) < 0.5 ? -1.0 : 1.0); break;
      case ParamRole::log_weight: x = std::log(uniform(0.3, 1.5)); break;
      case ParamRole::weight: x = uniform(0.4, 1.2); break;
      case ParamRole::mean: x = angular ? uniform(0.3, 3.0) : uniform(0.03, 0.5); break;
      case ParamRole::log_variance: x = angular ? std::log(uniform(0.05, 1.0)) : std::log(uniform(0.002, 0.05)); break;
      case ParamRole::log_scale: x = std::log(uniform(0.5, 2.0)); break;
      case ParamRole::delay: x = uniform(-0.5, 0.5); break;
      case ParamRole::phase: x = uniform(-1.0, 1.0); break;
    }
    v(static_cast<Eigen::Index>(i)) = x;
  }
  return v;
}

inline KernelSpec random_spec(const KernelShape& shape, std::mt19937_64& rng) {
  return unflatten(shape, random_values(shape, rng));
}

/// Random inputs: `per_task` sorted points in [lo, hi] for each task, P dims.
inline Observations random_observations(int tasks, int per_task, int dims, std::mt19937_64& rng, double lo = -3.0,
                                        double hi = 3.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::normal_distribution<double> normal;
  Observations obs;
  obs.num_tasks = tasks;
  const int n = tasks * per_task;
  obs.x.resize(n, dims);
  obs.y.resize(n);
  for (int m = 0; m < tasks; ++m) {
    std::vector<double> xs(per_task);
    for (double& x : xs) x = u(rng);
    std::sort(xs.begin(), xs.end());
    for (int i = 0; i < per_task; ++i) {
      const int row = m * per_task + i;
      obs.x(row, 0) = xs[i];
      for (int p = 1; p < dims; ++p) obs.x(row, p) = u(rng);
      obs.y(row) = normal(rng);
      obs.task.push_back(m);
    }
  }
  return obs;
}

/// Dataset with `per_task` points per task on a uniform grid, everything train.
inline TaskedDataset grid_dataset(const std::vector<std::vector<double>>& ys, double x0, double dx) {
  TaskedDataset d;
  for (std::size_t m = 0; m < ys.size(); ++m) {
    TaskSeries t;
    t.label = "task" + std::to_string(m);
    for (std::size_t i = 0; i < ys[m].size(); ++i) t.x.push_back(x0 + dx * static_cast<double>(i));
    t.y = ys[m];
    t.train.assign(t.x.size(), 1);
    d.tasks.push_back(std::move(t));
  }
  return d;
}

}  // namespace mtgp::testing
