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

#include <cmath>

#include "mtgp/simd/damped_cosine.hpp"
#include "simd/kernels.hpp"

namespace mtgp::simd {

Moments& Moments::operator+=(const Moments& o) {
  ec += o.ec;
  es += o.es;
  for (int p = 0; p < kMaxDims; ++p) {
    uu_ec[p] += o.uu_ec[p];
    u_es[p] += o.u_es[p];
    u_ec[p] += o.u_ec[p];
  }
  return *this;
}

namespace {

void scalar_values(std::span<const TermView> terms, const ColumnRun& run, double* out) {
  for (std::size_t k = 0; k < run.count; ++k) {
    double sum = 0.0;
    for (const auto& t : terms) {
      double quad = 0.0;
      double arg = -t.phase;
      for (int p = 0; p < run.dims; ++p) {
        const double u = t.scale * (run.origin[p] - run.column[p][k]) - t.shift[p];
        quad += t.decay[p] * u * u;
        arg += t.freq[p] * u;
      }
      sum += t.coef * std::exp(-quad) * std::cos(arg);
    }
    out[k] += sum;
  }
}

void scalar_moments(std::span<const TermView> terms, const ColumnRun& run, const double* weight, Moments* moments) {
  std::array<double, kMaxDims> u{};
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const TermView& term = terms[t];
    Moments& m = moments[t];
    for (std::size_t k = 0; k < run.count; ++k) {
      double quad = 0.0;
      double arg = -term.phase;
      for (int p = 0; p < run.dims; ++p) {
        u[p] = term.scale * (run.origin[p] - run.column[p][k]) - term.shift[p];
        quad += term.decay[p] * u[p] * u[p];
        arg += term.freq[p] * u[p];
      }
      const double we = weight[k] * std::exp(-quad);
      const double wec = we * std::cos(arg);
      const double wes = we * std::sin(arg);
      m.ec += wec;
      m.es += wes;
      for (int p = 0; p < run.dims; ++p) {
        m.u_ec[p] += u[p] * wec;
        m.uu_ec[p] += u[p] * u[p] * wec;
        m.u_es[p] += u[p] * wes;
      }
    }
  }
}

}  // namespace

const KernelSet& scalar_kernels() {
  static const KernelSet set{Isa::scalar, "scalar", &scalar_values, &scalar_moments};
  return set;
}

}  // namespace mtgp::simd
