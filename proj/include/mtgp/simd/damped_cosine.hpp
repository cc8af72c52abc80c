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

// Batched evaluation of damped-cosine terms
//
//   v(tau) = coef * exp(-sum_p decay_p u_p^2) * cos(sum_p freq_p u_p - phase),
//   u_p    = scale * tau_p - shift_p,
//
// over a contiguous run of columns, tau = origin - column. Every spectral
// kernel in the library lowers to tables of these terms, so covariance
// assembly and NLML gradient accumulation both bottom out here.
//
// Two implementations exist: a scalar reference built on <cmath>, and an
// AVX2/FMA variant with its own exp/sincos. The variant is selected once at
// runtime from CPUID (override with MTGP_SIMD=scalar|avx2).

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace mtgp::simd {

inline constexpr int kMaxDims = 8;

struct TermView {
  double coef = 0.0;
  double phase = 0.0;
  double scale = 1.0;
  const double* shift = nullptr;  // [dims]
  const double* decay = nullptr;  // [dims]
  const double* freq = nullptr;   // [dims]
};

struct ColumnRun {
  std::array<const double*, kMaxDims> column{};  // per-dimension, `count` contiguous values
  std::array<double, kMaxDims> origin{};
  int dims = 1;
  std::size_t count = 0;
};

// Weighted sums needed to differentiate sum_k w_k v(tau_k) with respect to
// the term's fields. E = exp(.), C = cos(.), S = sin(.).
struct Moments {
  double ec = 0.0;
  double es = 0.0;
  std::array<double, kMaxDims> uu_ec{};
  std::array<double, kMaxDims> u_es{};
  std::array<double, kMaxDims> u_ec{};

  Moments& operator+=(const Moments& o);
};

enum class Isa { scalar, avx2 };

struct KernelSet {
  Isa isa;
  std::string_view name;
  // out[k] += sum over terms of v(tau_k)
  void (*accumulate_values)(std::span<const TermView> terms, const ColumnRun& run, double* out);
  // moments[t] += sum_k weight[k] * (E, C, S products) for each term t
  void (*accumulate_moments)(std::span<const TermView> terms, const ColumnRun& run, const double* weight,
                             Moments* moments);
};

const KernelSet& scalar_kernels();
/// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelSet* avx2_kernels();
const KernelSet& active_kernels();
/// Forces a specific variant (tests, benchmarks). Throws if unavailable.
void select_isa(Isa isa);

}  // namespace mtgp::simd
