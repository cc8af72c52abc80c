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

// Evaluation engine behind every kernel family. A Covariance is built once
// from a spec (or a flat parameter vector) and lowers the family to tables
// of damped-cosine terms per task pair; Matern-LMC is evaluated directly.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mtgp/dataset.hpp"
#include "mtgp/multitask.hpp"
#include "mtgp/simd/damped_cosine.hpp"

namespace mtgp {

template <class T>
struct TermTable {
  int tasks = 0;
  int dims = 0;
  double scale = 1.0;
  std::vector<std::size_t> offset;  // tasks * tasks + 1, block (m, n) at m * tasks + n
  std::vector<T> coef;
  std::vector<T> phase;
  std::vector<T> shift;  // term-major, dims per term
  std::vector<T> decay;
  std::vector<T> freq;

  std::size_t block(int m, int n) const noexcept { return static_cast<std::size_t>(m) * tasks + n; }
  std::size_t size() const noexcept { return coef.size(); }
};

class Covariance {
 public:
  explicit Covariance(const KernelSpec& spec);
  Covariance(const KernelShape& shape, Eigen::VectorXd values);
  // Views point into the term table, so copies rebuild them.
  Covariance(const Covariance& other);
  Covariance& operator=(const Covariance& other);
  Covariance(Covariance&&) noexcept = default;
  Covariance& operator=(Covariance&&) noexcept = default;

  const KernelShape& shape() const noexcept { return shape_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  /// k(x, m; x2, n) through the scalar reference path.
  double operator()(std::span<const double> x, int m, std::span<const double> x2, int n) const;

  /// Symmetric Gram matrix over `obs`.
  Eigen::MatrixXd gram(const Observations& obs) const;
  /// rows.size() x cols.size() cross-covariance.
  Eigen::MatrixXd cross(const Observations& rows, const Observations& cols) const;
  Eigen::VectorXd diagonal(const Observations& obs) const;

  /// Gradient with respect to `values()` of sum_ab W_ab K_ab for symmetric W.
  Eigen::VectorXd contract_gradient(const Observations& obs, const Eigen::MatrixXd& weights) const;

  /// Terms enumerated for the (m, n) task block.
  std::size_t term_count(int m, int n) const;

 private:
  void fill_column(const Observations& rows, std::size_t row_end, std::span<const double> origin, int origin_task,
                   double* out) const;
  void check_observations(const Observations& obs) const;
  void build_views();
  bool is_matern() const noexcept { return shape_.family == Family::matern_lmc; }

  KernelShape shape_;
  Eigen::VectorXd values_;
  TermTable<double> terms_;
  std::vector<std::vector<simd::TermView>> views_;
  // Matern-LMC
  Eigen::MatrixXd matern_coupling_;
  std::vector<double> length_scale_;
};

}  // namespace mtgp
