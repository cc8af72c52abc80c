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

// Multi-task kernel families and their parameter blocks.
//
// Every family lowers to a flat vector of unconstrained ("transformed")
// parameters: log for weights, variances and scales; identity for means,
// delays, phases and coregionalization factor entries. `flatten` and
// `unflatten` convert between that vector and the structured blocks below.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mtgp/dataset.hpp"
#include "mtgp/kernel_core.hpp"

namespace mtgp {

enum class Family { se_lmc, matern_lmc, sm_lmc, csm, mosm, gcsm_c, gcsm_cc };

std::string_view family_name(Family family) noexcept;
Family parse_family(std::string_view name);
const std::array<Family, 7>& all_families() noexcept;

/// Lower-triangular factors C_i; B_ij = C_i C_j^T.
struct CoregionalizationSet {
  std::vector<Eigen::MatrixXd> factors;

  Eigen::MatrixXd coupling(std::size_t i, std::size_t j) const;
  void validate(int tasks) const;
};

/// SE-LMC and Matern-LMC: B = L L^T times one stationary kernel.
struct LmcParams {
  Eigen::MatrixXd factor;
  kernel::BaselineKernelParams base;
};

/// Delays in the components are ignored (and not part of the parameter vector).
struct SmLmcParams {
  std::vector<kernel::ComponentParams> components;
  CoregionalizationSet coregionalization;
};

/// Cross-spectral mixture. Component q has a shared spectral variance and
/// mean; task r has weight(q, r) and phase(q, r). Row 0 of `phase` is pinned
/// to zero.
struct CsmParams {
  std::vector<double> variance;
  std::vector<double> mean;
  Eigen::MatrixXd weight;
  Eigen::MatrixXd phase;
};

/// Per-(component, task) parameters of the multi-output spectral mixture.
/// Means and variances are in angular units (radians per input unit).
struct MosmChannel {
  double weight = 1.0;
  kernel::Vector mean;
  kernel::Vector variance;
  kernel::Vector delay;
  double phase = 0.0;
};

struct MosmParams {
  std::vector<std::vector<MosmChannel>> channels;  // [q][task]
};

struct GcsmCParams {
  Eigen::MatrixXd factor;
  std::vector<kernel::ComponentParams> components;
};

struct GcsmCcParams {
  std::vector<kernel::ComponentParams> components;
  CoregionalizationSet coregionalization;
};

using ParamBlock = std::variant<LmcParams, SmLmcParams, CsmParams, MosmParams, GcsmCParams, GcsmCcParams>;

struct KernelShape {
  Family family = Family::gcsm_cc;
  int components = 1;  // Q
  int tasks = 1;       // M
  int dims = 1;        // P
  kernel::MaternOrder matern = kernel::MaternOrder::three_halves;

  void validate() const;
};

struct KernelSpec {
  KernelShape shape;
  ParamBlock params;

  void validate() const;
};

/// Free-parameter count of a family (noise excluded).
int degrees_of_freedom(const KernelShape& shape);
inline int degrees_of_freedom(const KernelSpec& spec) { return degrees_of_freedom(spec.shape); }

/// Number of convolution terms per task pair: Q^2 for the GCSM families,
/// Q for the other spectral families, 1 for SE/Matern.
int convolution_terms(const KernelShape& shape);

/// What each coordinate of the flat parameter vector means.
enum class ParamRole {
  factor_diagonal,  // coregionalization factor, diagonal entry
  factor,           // coregionalization factor, strictly lower entry
  log_weight,
  weight,           // MOSM magnitude (signed, untransformed)
  mean,
  log_variance,
  log_scale,        // SE/Matern signal scale and length-scales
  delay,
  phase,
};

std::vector<ParamRole> parameter_roles(const KernelShape& shape);

Eigen::VectorXd flatten(const KernelSpec& spec);
KernelSpec unflatten(const KernelShape& shape, const Eigen::VectorXd& values);

double eval_pair(const KernelSpec& spec, std::span<const double> x, int task_m, std::span<const double> x2,
                 int task_n);

Eigen::MatrixXd assemble(const KernelSpec& spec, const Observations& obs);
Eigen::MatrixXd assemble(const KernelSpec& spec, const TaskedDataset& data);

}  // namespace mtgp
