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

#include "mtgp/multitask.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtgp/covariance.hpp"
#include "mtgp/errors.hpp"
#include "terms.hpp"

namespace mtgp {

namespace {

constexpr std::array<Family, 7> kFamilies = {Family::se_lmc, Family::matern_lmc, Family::sm_lmc, Family::csm,
                                             Family::mosm,   Family::gcsm_c,     Family::gcsm_cc};


void push_factor(std::vector<double>& out, const Eigen::MatrixXd& c) {
  for (Eigen::Index m = 0; m < c.rows(); ++m) {
    for (Eigen::Index n = 0; n <= m; ++n) out.push_back(c(m, n));
  }
}

Eigen::MatrixXd pull_factor(detail::Cursor<double>& cur, int tasks) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(tasks, tasks);
  for (int m = 0; m < tasks; ++m) {
    for (int n = 0; n <= m; ++n) c(m, n) = cur.next();
  }
  return c;
}

void check_factor(const Eigen::MatrixXd& c, int tasks, const char* what) {
  if (c.rows() != tasks || c.cols() != tasks) {
    throw DimensionError(std::string(what) + ": factor must be " + std::to_string(tasks) + "x" +
                         std::to_string(tasks));
  }
  for (int m = 0; m < tasks; ++m) {
    for (int n = m + 1; n < tasks; ++n) {
      if (c(m, n) != 0.0) throw InputError(std::string(what) + ": factor must be lower triangular");
    }
    if (c(m, m) == 0.0) throw InputError(std::string(what) + ": factor diagonal entries must be nonzero");
  }
}

void push_component(std::vector<double>& out, const kernel::ComponentParams& c, bool with_delays) {
  out.push_back(std::log(c.weight));
  out.insert(out.end(), c.mean_freq.begin(), c.mean_freq.end());
  for (double v : c.variance) out.push_back(std::log(v));
  if (with_delays) {
    out.insert(out.end(), c.time_delay.begin(), c.time_delay.end());
    out.insert(out.end(), c.phase_delay.begin(), c.phase_delay.end());
  }
}

kernel::ComponentParams pull_component(detail::Cursor<double>& cur, int dims, bool with_delays) {
  kernel::ComponentParams c;
  c.weight = std::exp(cur.next());
  c.mean_freq = cur.take(dims);
  c.variance = cur.take(dims);
  for (double& v : c.variance) v = std::exp(v);
  if (with_delays) {
    c.time_delay = cur.take(dims);
    c.phase_delay = cur.take(dims);
  } else {
    c.time_delay.assign(dims, 0.0);
    c.phase_delay.assign(dims, 0.0);
  }
  return c;
}

void check_components(const std::vector<kernel::ComponentParams>& comps, const KernelShape& shape) {
  if (static_cast<int>(comps.size()) != shape.components) {
    throw DimensionError("expected " + std::to_string(shape.components) + " components");
  }
  kernel::check_components(comps, shape.dims);
}

template <class Block>
const Block& expect(const KernelSpec& spec) {
  const Block* block = std::get_if<Block>(&spec.params);
  if (block == nullptr) {
    throw InputError("parameter block does not match kernel family " + std::string(family_name(spec.shape.family)));
  }
  return *block;
}

}  // namespace

std::string_view family_name(Family family) noexcept {
  switch (family) {
    case Family::se_lmc: return "SE-LMC";
    case Family::matern_lmc: return "MATERN-LMC";
    case Family::sm_lmc: return "SM-LMC";
    case Family::csm: return "CSM";
    case Family::mosm: return "MOSM";
    case Family::gcsm_c: return "GCSM-C";
    case Family::gcsm_cc: return "GCSM-CC";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char ch) {
    return ch == '_' ? '-' : static_cast<char>(std::toupper(ch));
  });
  for (Family f : kFamilies) {
    if (family_name(f) == upper) return f;
  }
  throw InputError("unknown kernel family '" + std::string(name) + "'");
}

const std::array<Family, 7>& all_families() noexcept { return kFamilies; }

Eigen::MatrixXd CoregionalizationSet::coupling(std::size_t i, std::size_t j) const {
  return factors.at(i) * factors.at(j).transpose();
}

void CoregionalizationSet::validate(int tasks) const {
  for (const auto& c : factors) check_factor(c, tasks, "coregionalization");
}

void KernelShape::validate() const {
  if (components < 1 || tasks < 1 || dims < 1) throw InputError("kernel shape needs Q, M, P >= 1");
  if (dims > simd::kMaxDims) throw DimensionError("at most " + std::to_string(simd::kMaxDims) + " input dimensions");
}

void KernelSpec::validate() const {
  shape.validate();
  const int Q = shape.components;
  const int M = shape.tasks;
  const int P = shape.dims;
  switch (shape.family) {
    case Family::se_lmc:
    case Family::matern_lmc: {
      const auto& b = expect<LmcParams>(*this);
      check_factor(b.factor, M, "LMC");
      b.base.validate();
      if (static_cast<int>(b.base.length_scale.size()) != P) throw DimensionError("length scale size != P");
      break;
    }
    case Family::sm_lmc: {
      const auto& b = expect<SmLmcParams>(*this);
      check_components(b.components, shape);
      if (static_cast<int>(b.coregionalization.factors.size()) != Q) throw DimensionError("need Q factors");
      b.coregionalization.validate(M);
      break;
    }
    case Family::csm: {
      const auto& b = expect<CsmParams>(*this);
      if (static_cast<int>(b.variance.size()) != Q || static_cast<int>(b.mean.size()) != Q) {
        throw DimensionError("CSM needs Q variances and means");
      }
      if (b.weight.rows() != Q || b.weight.cols() != M || b.phase.rows() != Q || b.phase.cols() != M) {
        throw DimensionError("CSM weight/phase must be Q x M");
      }
      for (double v : b.variance) {
        if (!(v > 0.0)) throw InputError("CSM variances must be positive");
      }
      if ((b.weight.array() <= 0.0).any()) throw InputError("CSM weights must be positive");
      if ((b.phase.row(0).array() != 0.0).any()) throw InputError("CSM phases of the first component are pinned to 0");
      break;
    }
    case Family::mosm: {
      const auto& b = expect<MosmParams>(*this);
      if (static_cast<int>(b.channels.size()) != Q) throw DimensionError("MOSM needs Q channel sets");
      for (const auto& per_task : b.channels) {
        if (static_cast<int>(per_task.size()) != M) throw DimensionError("MOSM needs M channels per component");
        for (const auto& c : per_task) {
          if (static_cast<int>(c.mean.size()) != P || static_cast<int>(c.variance.size()) != P ||
              static_cast<int>(c.delay.size()) != P) {
            throw DimensionError("MOSM channel fields must have P entries");
          }
          for (double v : c.variance) {
            if (!(v > 0.0)) throw InputError("MOSM variances must be positive");
          }
        }
      }
      break;
    }
    case Family::gcsm_c: {
      const auto& b = expect<GcsmCParams>(*this);
      check_factor(b.factor, M, "GCSM-C");
      check_components(b.components, shape);
      break;
    }
    case Family::gcsm_cc: {
      const auto& b = expect<GcsmCcParams>(*this);
      check_components(b.components, shape);
      if (static_cast<int>(b.coregionalization.factors.size()) != Q) throw DimensionError("need Q factors");
      b.coregionalization.validate(M);
      break;
    }
  }
}

int degrees_of_freedom(const KernelShape& s) {
  s.validate();
  const int Q = s.components;
  const int M = s.tasks;
  const int P = s.dims;
  switch (s.family) {
    case Family::se_lmc:
    case Family::matern_lmc: return (M * M + M) / 2 + P + 1;
    case Family::sm_lmc: return Q * ((M * M + M) / 2 + 2 * P + 1);
    case Family::csm: return 2 * Q + M * (2 * Q - 1);
    case Family::mosm: return Q * M * (3 * P + 2);
    case Family::gcsm_c: return (M * M + M) / 2 + Q * (4 * P + 1);
    case Family::gcsm_cc: return Q * ((M * M + M) / 2 + 4 * P + 1);
  }
  return 0;
}

int convolution_terms(const KernelShape& s) {
  switch (s.family) {
    case Family::se_lmc:
    case Family::matern_lmc: return 1;
    case Family::gcsm_c:
    case Family::gcsm_cc: return s.components * s.components;
    default: return s.components;
  }
}

std::vector<ParamRole> parameter_roles(const KernelShape& shape) {
  shape.validate();
  const int Q = shape.components;
  const int M = shape.tasks;
  const int P = shape.dims;
  std::vector<ParamRole> roles;
  auto repeat = [&](ParamRole r, int n) { roles.insert(roles.end(), static_cast<std::size_t>(n), r); };
  auto factor = [&] {
    for (int m = 0; m < M; ++m) {
      repeat(ParamRole::factor, m);
      roles.push_back(ParamRole::factor_diagonal);
    }
  };
  auto component = [&](bool with_delays) {
    roles.push_back(ParamRole::log_weight);
    repeat(ParamRole::mean, P);
    repeat(ParamRole::log_variance, P);
    if (with_delays) {
      repeat(ParamRole::delay, P);
      repeat(ParamRole::phase, P);
    }
  };
  switch (shape.family) {
    case Family::se_lmc:
    case Family::matern_lmc:
      factor();
      repeat(ParamRole::log_scale, 1 + P);
      break;
    case Family::sm_lmc:
    case Family::gcsm_cc:
      for (int q = 0; q < Q; ++q) {
        factor();
        component(shape.family == Family::gcsm_cc);
      }
      break;
    case Family::csm:
      for (int q = 0; q < Q; ++q) {
        roles.push_back(ParamRole::log_variance);
        roles.push_back(ParamRole::mean);
      }
      repeat(ParamRole::log_weight, Q * M);
      repeat(ParamRole::phase, (Q - 1) * M);
      break;
    case Family::mosm:
      for (int k = 0; k < Q * M; ++k) {
        roles.push_back(ParamRole::weight);
        repeat(ParamRole::mean, P);
        repeat(ParamRole::log_variance, P);
        repeat(ParamRole::delay, P);
        roles.push_back(ParamRole::phase);
      }
      break;
    case Family::gcsm_c:
      factor();
      for (int q = 0; q < Q; ++q) component(true);
      break;
  }
  return roles;
}

Eigen::VectorXd flatten(const KernelSpec& spec) {
  spec.validate();
  const int M = spec.shape.tasks;
  std::vector<double> out;
  switch (spec.shape.family) {
    case Family::se_lmc:
    case Family::matern_lmc: {
      const auto& b = std::get<LmcParams>(spec.params);
      push_factor(out, b.factor);
      out.push_back(std::log(b.base.signal_scale));
      for (double l : b.base.length_scale) out.push_back(std::log(l));
      break;
    }
    case Family::sm_lmc: {
      const auto& b = std::get<SmLmcParams>(spec.params);
      for (std::size_t q = 0; q < b.components.size(); ++q) {
        push_factor(out, b.coregionalization.factors[q]);
        push_component(out, b.components[q], false);
      }
      break;
    }
    case Family::csm: {
      const auto& b = std::get<CsmParams>(spec.params);
      const int Q = spec.shape.components;
      for (int q = 0; q < Q; ++q) {
        out.push_back(std::log(b.variance[q]));
        out.push_back(b.mean[q]);
      }
      for (int q = 0; q < Q; ++q) {
        for (int r = 0; r < M; ++r) out.push_back(std::log(b.weight(q, r)));
      }
      for (int q = 1; q < Q; ++q) {
        for (int r = 0; r < M; ++r) out.push_back(b.phase(q, r));
      }
      break;
    }
    case Family::mosm: {
      const auto& b = std::get<MosmParams>(spec.params);
      for (const auto& per_task : b.channels) {
        for (const auto& c : per_task) {
          out.push_back(c.weight);
          out.insert(out.end(), c.mean.begin(), c.mean.end());
          for (double v : c.variance) out.push_back(std::log(v));
          out.insert(out.end(), c.delay.begin(), c.delay.end());
          out.push_back(c.phase);
        }
      }
      break;
    }
    case Family::gcsm_c: {
      const auto& b = std::get<GcsmCParams>(spec.params);
      push_factor(out, b.factor);
      for (const auto& c : b.components) push_component(out, c, true);
      break;
    }
    case Family::gcsm_cc: {
      const auto& b = std::get<GcsmCcParams>(spec.params);
      for (std::size_t q = 0; q < b.components.size(); ++q) {
        push_factor(out, b.coregionalization.factors[q]);
        push_component(out, b.components[q], true);
      }
      break;
    }
  }
  return Eigen::Map<const Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

KernelSpec unflatten(const KernelShape& shape, const Eigen::VectorXd& values) {
  shape.validate();
  if (values.size() != degrees_of_freedom(shape)) {
    throw DimensionError("parameter vector has " + std::to_string(values.size()) + " entries, " +
                         std::string(family_name(shape.family)) + " needs " +
                         std::to_string(degrees_of_freedom(shape)));
  }
  const int Q = shape.components;
  const int M = shape.tasks;
  const int P = shape.dims;
  detail::Cursor<double> cur(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
  KernelSpec spec;
  spec.shape = shape;
  switch (shape.family) {
    case Family::se_lmc:
    case Family::matern_lmc: {
      LmcParams b;
      b.factor = pull_factor(cur, M);
      b.base.signal_scale = std::exp(cur.next());
      b.base.length_scale = cur.take(P);
      for (double& l : b.base.length_scale) l = std::exp(l);
      b.base.matern_order = shape.matern;
      spec.params = std::move(b);
      break;
    }
    case Family::sm_lmc: {
      SmLmcParams b;
      for (int q = 0; q < Q; ++q) {
        b.coregionalization.factors.push_back(pull_factor(cur, M));
        b.components.push_back(pull_component(cur, P, false));
      }
      spec.params = std::move(b);
      break;
    }
    case Family::csm: {
      CsmParams b;
      b.variance.resize(Q);
      b.mean.resize(Q);
      for (int q = 0; q < Q; ++q) {
        b.variance[q] = std::exp(cur.next());
        b.mean[q] = cur.next();
      }
      b.weight.resize(Q, M);
      for (int q = 0; q < Q; ++q) {
        for (int r = 0; r < M; ++r) b.weight(q, r) = std::exp(cur.next());
      }
      b.phase = Eigen::MatrixXd::Zero(Q, M);
      for (int q = 1; q < Q; ++q) {
        for (int r = 0; r < M; ++r) b.phase(q, r) = cur.next();
      }
      spec.params = std::move(b);
      break;
    }
    case Family::mosm: {
      MosmParams b;
      b.channels.resize(Q);
      for (int q = 0; q < Q; ++q) {
        for (int m = 0; m < M; ++m) {
          MosmChannel c;
          c.weight = cur.next();
          c.mean = cur.take(P);
          c.variance = cur.take(P);
          for (double& v : c.variance) v = std::exp(v);
          c.delay = cur.take(P);
          c.phase = cur.next();
          b.channels[q].push_back(std::move(c));
        }
      }
      spec.params = std::move(b);
      break;
    }
    case Family::gcsm_c: {
      GcsmCParams b;
      b.factor = pull_factor(cur, M);
      for (int q = 0; q < Q; ++q) b.components.push_back(pull_component(cur, P, true));
      spec.params = std::move(b);
      break;
    }
    case Family::gcsm_cc: {
      GcsmCcParams b;
      for (int q = 0; q < Q; ++q) {
        b.coregionalization.factors.push_back(pull_factor(cur, M));
        b.components.push_back(pull_component(cur, P, true));
      }
      spec.params = std::move(b);
      break;
    }
  }
  cur.finish();
  return spec;
}

double eval_pair(const KernelSpec& spec, std::span<const double> x, int task_m, std::span<const double> x2,
                 int task_n) {
  return Covariance(spec)(x, task_m, x2, task_n);
}

Eigen::MatrixXd assemble(const KernelSpec& spec, const Observations& obs) { return Covariance(spec).gram(obs); }

Eigen::MatrixXd assemble(const KernelSpec& spec, const TaskedDataset& data) {
  return assemble(spec, stack(data, Subset::all));
}

}  // namespace mtgp
