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

#include "mtgp/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtgp/detail/dual.hpp"
#include "mtgp/errors.hpp"
#include "terms.hpp"

namespace mtgp {

namespace {

struct Run {
  std::size_t start;
  std::size_t end;
  int task;
};

std::vector<Run> task_runs(const Observations& obs) {
  std::vector<Run> runs;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (runs.empty() || runs.back().task != obs.task[k]) runs.push_back({k, k + 1, obs.task[k]});
    else runs.back().end = k + 1;
  }
  return runs;
}

double matern_shape(kernel::MaternOrder order, double r) {
  switch (order) {
    case kernel::MaternOrder::half: return std::exp(-r);
    case kernel::MaternOrder::three_halves: {
      const double a = std::sqrt(3.0) * r;
      return (1.0 + a) * std::exp(-a);
    }
    case kernel::MaternOrder::five_halves: {
      const double a = std::sqrt(5.0) * r;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

// d/dr of matern_shape divided by r; callers only use it for r > 0.
double matern_slope_over_r(kernel::MaternOrder order, double r) {
  switch (order) {
    case kernel::MaternOrder::half: return -std::exp(-r) / r;
    case kernel::MaternOrder::three_halves: return -3.0 * std::exp(-std::sqrt(3.0) * r);
    case kernel::MaternOrder::five_halves: {
      const double a = std::sqrt(5.0) * r;
      return -(5.0 / 3.0) * (1.0 + a) * std::exp(-a);
    }
  }
  return 0.0;
}

}  // namespace

Covariance::Covariance(const KernelSpec& spec) : Covariance(spec.shape, flatten(spec)) {}

Covariance::Covariance(const KernelShape& shape, Eigen::VectorXd values) : shape_(shape), values_(std::move(values)) {
  shape_.validate();
  if (values_.size() != degrees_of_freedom(shape_)) {
    throw DimensionError("parameter vector length " + std::to_string(values_.size()) + " does not match " +
                         std::string(family_name(shape_.family)) + " (" +
                         std::to_string(degrees_of_freedom(shape_)) + ")");
  }
  const std::span<const double> z(values_.data(), static_cast<std::size_t>(values_.size()));
  if (is_matern()) {
    detail::Cursor<double> cur(z);
    const int M = shape_.tasks;
    Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(M, M);
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n <= m; ++n) factor(m, n) = cur.next();
    }
    const double signal2 = std::exp(2.0 * cur.next());
    matern_coupling_ = signal2 * factor * factor.transpose();
    for (double l : cur.take(shape_.dims)) length_scale_.push_back(std::exp(l));
    cur.finish();
    return;
  }
  detail::build_terms<double>(shape_, z, terms_);
  build_views();
}

Covariance::Covariance(const Covariance& other)
    : shape_(other.shape_),
      values_(other.values_),
      terms_(other.terms_),
      matern_coupling_(other.matern_coupling_),
      length_scale_(other.length_scale_) {
  build_views();
}

Covariance& Covariance::operator=(const Covariance& other) {
  if (this != &other) {
    Covariance copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Covariance::build_views() {
  views_.clear();
  if (terms_.offset.empty()) return;
  const int P = shape_.dims;
  views_.resize(terms_.offset.size() - 1);
  for (std::size_t b = 0; b + 1 < terms_.offset.size(); ++b) {
    for (std::size_t t = terms_.offset[b]; t < terms_.offset[b + 1]; ++t) {
      views_[b].push_back(simd::TermView{terms_.coef[t], terms_.phase[t], terms_.scale, &terms_.shift[t * P],
                                         &terms_.decay[t * P], &terms_.freq[t * P]});
    }
  }
}

std::size_t Covariance::term_count(int m, int n) const {
  if (is_matern()) return 1;
  const std::size_t b = terms_.block(m, n);
  return terms_.offset.at(b + 1) - terms_.offset.at(b);
}

double Covariance::operator()(std::span<const double> x, int m, std::span<const double> x2, int n) const {
  const int P = shape_.dims;
  if (static_cast<int>(x.size()) != P || static_cast<int>(x2.size()) != P) {
    throw DimensionError("input dimension does not match the kernel (" + std::to_string(P) + ")");
  }
  if (m < 0 || n < 0 || m >= shape_.tasks || n >= shape_.tasks) {
    throw InputError("task index out of range (kernel has " + std::to_string(shape_.tasks) + " tasks)");
  }
  if (is_matern()) {
    double r2 = 0.0;
    for (int p = 0; p < P; ++p) {
      const double z = (x[p] - x2[p]) / length_scale_[p];
      r2 += z * z;
    }
    return matern_coupling_(m, n) * matern_shape(shape_.matern, std::sqrt(r2));
  }
  double k = 0.0;
  for (const auto& t : views_[terms_.block(m, n)]) {
    double quad = 0.0;
    double arg = -t.phase;
    for (int p = 0; p < P; ++p) {
      const double u = t.scale * (x[p] - x2[p]) - t.shift[p];
      quad += t.decay[p] * u * u;
      arg += t.freq[p] * u;
    }
    k += t.coef * std::exp(-quad) * std::cos(arg);
  }
  return k;
}

void Covariance::check_observations(const Observations& obs) const {
  if (obs.size() == 0) throw InputError("empty input: no observations to assemble");
  if (obs.dims() != shape_.dims || static_cast<std::size_t>(obs.x.rows()) != obs.size()) {
    throw DimensionError("observation inputs do not match the kernel input dimension");
  }
  for (int t : obs.task) {
    if (t < 0 || t >= shape_.tasks) throw InputError("task index out of range in observations");
  }
  if (!obs.x.allFinite()) throw InputError("observation inputs must be finite");
}

void Covariance::fill_column(const Observations& rows, std::size_t row_end, std::span<const double> origin,
                             int origin_task, double* out) const {
  const int P = shape_.dims;
  if (is_matern()) {
    for (std::size_t b = 0; b < row_end; ++b) {
      double r2 = 0.0;
      for (int p = 0; p < P; ++p) {
        const double z = (origin[p] - rows.x(static_cast<Eigen::Index>(b), p)) / length_scale_[p];
        r2 += z * z;
      }
      out[b] += matern_coupling_(origin_task, rows.task[b]) * matern_shape(shape_.matern, std::sqrt(r2));
    }
    return;
  }
  const auto& kernels = simd::active_kernels();
  simd::ColumnRun run;
  run.dims = P;
  for (int p = 0; p < P; ++p) run.origin[p] = origin[p];
  std::size_t start = 0;
  while (start < row_end) {
    std::size_t end = start + 1;
    while (end < row_end && rows.task[end] == rows.task[start]) ++end;
    for (int p = 0; p < P; ++p) run.column[p] = rows.x.col(p).data() + start;
    run.count = end - start;
    kernels.accumulate_values(views_[terms_.block(origin_task, rows.task[start])], run, out + start);
    start = end;
  }
}

Eigen::MatrixXd Covariance::gram(const Observations& obs) const {
  check_observations(obs);
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> origin(shape_.dims);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (int p = 0; p < shape_.dims; ++p) origin[p] = obs.x(a, p);
    fill_column(obs, static_cast<std::size_t>(a) + 1, origin, obs.task[a], k.col(a).data());
  }
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < a; ++b) k(a, b) = k(b, a);
  }
  return k;
}

Eigen::MatrixXd Covariance::cross(const Observations& rows, const Observations& cols) const {
  check_observations(rows);
  check_observations(cols);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  std::vector<double> origin(shape_.dims);
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (int p = 0; p < shape_.dims; ++p) origin[p] = cols.x(j, p);
    fill_column(rows, rows.size(), origin, cols.task[j], k.col(j).data());
  }
  return k;
}

Eigen::VectorXd Covariance::diagonal(const Observations& obs) const {
  check_observations(obs);
  Eigen::VectorXd d(static_cast<Eigen::Index>(obs.size()));
  std::vector<double> x(shape_.dims);
  for (Eigen::Index a = 0; a < d.size(); ++a) {
    for (int p = 0; p < shape_.dims; ++p) x[p] = obs.x(a, p);
    d(a) = (*this)(x, obs.task[a], x, obs.task[a]);
  }
  return d;
}

Eigen::VectorXd Covariance::contract_gradient(const Observations& obs, const Eigen::MatrixXd& weights) const {
  check_observations(obs);
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (weights.rows() != n || weights.cols() != n) throw DimensionError("weight matrix must be N x N");
  const int P = shape_.dims;
  const int M = shape_.tasks;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(values_.size());

  if (is_matern()) {
    // Per task block: sum W m(r) and sum W m'(r)/r (tau_p / l_p)^2.
    Eigen::MatrixXd s0 = Eigen::MatrixXd::Zero(M, M);
    std::vector<Eigen::MatrixXd> sp(P, Eigen::MatrixXd::Zero(M, M));
    std::vector<double> z2(P);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b <= a; ++b) {
        const double w = weights(b, a) * (b == a ? 1.0 : 2.0);
        double r2 = 0.0;
        for (int p = 0; p < P; ++p) {
          const double z = (obs.x(a, p) - obs.x(b, p)) / length_scale_[p];
          z2[p] = z * z;
          r2 += z2[p];
        }
        const double r = std::sqrt(r2);
        const int m = obs.task[a];
        const int t = obs.task[b];
        s0(m, t) += w * matern_shape(shape_.matern, r);
        if (r > 0.0) {
          const double g = w * matern_slope_over_r(shape_.matern, r);
          for (int p = 0; p < P; ++p) sp[p](m, t) += g * z2[p];
        }
      }
    }
    detail::Cursor<double> cur(std::span<const double>(values_.data(), static_cast<std::size_t>(values_.size())));
    Eigen::MatrixXd factor = Eigen::MatrixXd::Zero(M, M);
    for (int m = 0; m < M; ++m) {
      for (int k = 0; k <= m; ++k) factor(m, k) = cur.next();
    }
    const double signal2 = std::exp(2.0 * cur.next());
    // d(B)_{mt} / d L_{ak} = delta_{ma} L_{tk} + delta_{ta} L_{mk}
    Eigen::Index idx = 0;
    for (int a = 0; a < M; ++a) {
      for (int k = 0; k <= a; ++k, ++idx) {
        double g = 0.0;
        for (int t = 0; t < M; ++t) g += factor(t, k) * (s0(a, t) + s0(t, a));
        grad(idx) = signal2 * g;
      }
    }
    grad(idx++) = 2.0 * (matern_coupling_.cwiseProduct(s0)).sum();
    for (int p = 0; p < P; ++p) grad(idx++) = -(matern_coupling_.cwiseProduct(sp[p])).sum();
    return grad;
  }

  const auto& kernels = simd::active_kernels();
  std::vector<simd::Moments> moments(terms_.size());
  std::vector<double> w(static_cast<std::size_t>(n));
  simd::ColumnRun run;
  run.dims = P;
  const auto runs = task_runs(obs);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (int p = 0; p < P; ++p) run.origin[p] = obs.x(a, p);
    for (Eigen::Index b = 0; b < a; ++b) w[b] = 2.0 * weights(b, a);
    w[a] = weights(a, a);
    const int m = obs.task[a];
    for (const Run& r : runs) {
      if (r.start > static_cast<std::size_t>(a)) break;
      const std::size_t end = std::min(r.end, static_cast<std::size_t>(a) + 1);
      for (int p = 0; p < P; ++p) run.column[p] = obs.x.col(p).data() + r.start;
      run.count = end - r.start;
      const std::size_t block = terms_.block(m, r.task);
      kernels.accumulate_moments(views_[block], run, w.data() + r.start, moments.data() + terms_.offset[block]);
    }
  }

  // Chain the per-term adjoints through the parameter map, one tangent
  // direction per parameter.
  std::vector<detail::Dual> seeded(static_cast<std::size_t>(values_.size()));
  for (Eigen::Index i = 0; i < values_.size(); ++i) seeded[i] = detail::Dual(values_(i));
  TermTable<detail::Dual> tangent;
  for (Eigen::Index k = 0; k < values_.size(); ++k) {
    seeded[k].d = 1.0;
    detail::build_terms<detail::Dual>(shape_, std::span<const detail::Dual>(seeded), tangent);
    seeded[k].d = 0.0;
    double g = 0.0;
    for (std::size_t t = 0; t < tangent.size(); ++t) {
      const simd::Moments& mo = moments[t];
      const auto& coef = tangent.coef[t];
      double inner = tangent.phase[t].d * mo.es;
      for (int p = 0; p < P; ++p) {
        const auto& decay = tangent.decay[t * P + p];
        const auto& freq = tangent.freq[t * P + p];
        const double dshift = tangent.shift[t * P + p].d;
        inner += -decay.d * mo.uu_ec[p] - freq.d * mo.u_es[p] + dshift * (2.0 * decay.v * mo.u_ec[p] + freq.v * mo.es);
      }
      g += coef.d * mo.ec + coef.v * inner;
    }
    grad(k) = g;
  }
  return grad;
}

}  // namespace mtgp
