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

// AVX2/FMA variant of the damped-cosine kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; it is reached through the dispatcher
// only after CPUID confirms support.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "mtgp/simd/damped_cosine.hpp"
#include "simd/kernels.hpp"

namespace mtgp::simd::detail {

namespace {

constexpr int kLanes = 4;

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

// Cody-Waite reduction by ln 2 followed by the Cephes (2,3) Pade form.
inline __m256d exp_pd(__m256d x) {
  const __m256d underflow = _mm256_cmp_pd(x, set1(-708.0), _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, set1(-708.0)), set1(709.0));
  const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, set1(1.4426950408889634073599)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(fx, set1(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(fx, set1(1.42860682030941723212E-6), x);
  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_fmadd_pd(set1(1.26177193074810590878E-4), xx, set1(3.02994407707441961300E-2));
  px = _mm256_fmadd_pd(px, xx, set1(9.99999999999999999910E-1));
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_fmadd_pd(set1(3.00198505138664455042E-6), xx, set1(2.52448340349684104192E-3));
  qx = _mm256_fmadd_pd(qx, xx, set1(2.27265548208155028766E-1));
  qx = _mm256_fmadd_pd(qx, xx, set1(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  r = _mm256_fmadd_pd(set1(2.0), r, set1(1.0));
  __m256i n = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(fx));
  n = _mm256_slli_epi64(_mm256_add_epi64(n, _mm256_set1_epi64x(1023)), 52);
  r = _mm256_mul_pd(r, _mm256_castsi256_pd(n));
  return _mm256_andnot_pd(underflow, r);
}

// Quadrant reduction by pi/2 (three-part constant) and the Cephes sin/cos
// polynomials on [-pi/4, pi/4].
inline void sincos_pd(__m256d x, __m256d& s_out, __m256d& c_out) {
  const __m256d j = _mm256_round_pd(_mm256_mul_pd(x, set1(0.63661977236758134308)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(j, set1(1.57079625129699707031E0), x);
  r = _mm256_fnmadd_pd(j, set1(7.54978941586159635335E-8), r);
  r = _mm256_fnmadd_pd(j, set1(5.39030285815811905290E-15), r);
  const __m256d z = _mm256_mul_pd(r, r);

  __m256d ps = _mm256_fmadd_pd(set1(1.58962301576546568060E-10), z, set1(-2.50507477628578072866E-8));
  ps = _mm256_fmadd_pd(ps, z, set1(2.75573136213857245213E-6));
  ps = _mm256_fmadd_pd(ps, z, set1(-1.98412698295895385996E-4));
  ps = _mm256_fmadd_pd(ps, z, set1(8.33333333332211858878E-3));
  ps = _mm256_fmadd_pd(ps, z, set1(-1.66666666666666307295E-1));
  const __m256d s = _mm256_fmadd_pd(_mm256_mul_pd(r, z), ps, r);

  __m256d pc = _mm256_fmadd_pd(set1(-1.13585365213876817300E-11), z, set1(2.08757008419747316778E-9));
  pc = _mm256_fmadd_pd(pc, z, set1(-2.75573141792967388112E-7));
  pc = _mm256_fmadd_pd(pc, z, set1(2.48015872888517045348E-5));
  pc = _mm256_fmadd_pd(pc, z, set1(-1.38888888888730564116E-3));
  pc = _mm256_fmadd_pd(pc, z, set1(4.16666666666665929218E-2));
  const __m256d c = _mm256_fmadd_pd(_mm256_mul_pd(z, z), pc, _mm256_fnmadd_pd(set1(0.5), z, set1(1.0)));

  const __m256i q = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(j));
  const __m256i one = _mm256_set1_epi64x(1);
  const __m256i two = _mm256_set1_epi64x(2);
  const __m256d swap = _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
  const __m256d sin_sign = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_and_si256(q, two), 62));
  const __m256d cos_sign =
      _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_and_si256(_mm256_add_epi64(q, one), two), 62));
  s_out = _mm256_xor_pd(_mm256_blendv_pd(s, c, swap), sin_sign);
  c_out = _mm256_xor_pd(_mm256_blendv_pd(c, s, swap), cos_sign);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

// Lags for four columns starting at k. Tail columns beyond `count` are padded
// with the origin (lag 0); callers mask them out.
inline void load_lags(const ColumnRun& run, std::size_t k, __m256d* tau) {
  if (k + kLanes <= run.count) {
    for (int p = 0; p < run.dims; ++p) {
      tau[p] = _mm256_sub_pd(set1(run.origin[p]), _mm256_loadu_pd(run.column[p] + k));
    }
    return;
  }
  alignas(32) double buf[kLanes];
  for (int p = 0; p < run.dims; ++p) {
    for (int l = 0; l < kLanes; ++l) {
      buf[l] = (k + l < run.count) ? run.column[p][k + l] : run.origin[p];
    }
    tau[p] = _mm256_sub_pd(set1(run.origin[p]), _mm256_load_pd(buf));
  }
}

void avx2_values(std::span<const TermView> terms, const ColumnRun& run, double* out) {
  __m256d tau[kMaxDims];
  for (std::size_t k = 0; k < run.count; k += kLanes) {
    load_lags(run, k, tau);
    __m256d acc = _mm256_setzero_pd();
    for (const auto& t : terms) {
      const __m256d scale = set1(t.scale);
      __m256d quad = _mm256_setzero_pd();
      __m256d arg = set1(-t.phase);
      for (int p = 0; p < run.dims; ++p) {
        const __m256d u = _mm256_fmsub_pd(scale, tau[p], set1(t.shift[p]));
        quad = _mm256_fmadd_pd(_mm256_mul_pd(set1(t.decay[p]), u), u, quad);
        arg = _mm256_fmadd_pd(set1(t.freq[p]), u, arg);
      }
      __m256d s, c;
      sincos_pd(arg, s, c);
      const __m256d e = exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), quad));
      acc = _mm256_fmadd_pd(_mm256_mul_pd(set1(t.coef), e), c, acc);
    }
    if (k + kLanes <= run.count) {
      _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_loadu_pd(out + k), acc));
    } else {
      alignas(32) double buf[kLanes];
      _mm256_store_pd(buf, acc);
      for (std::size_t l = 0; k + l < run.count; ++l) out[k + l] += buf[l];
    }
  }
}

inline __m256d load_weights(const double* weight, std::size_t k, std::size_t count) {
  if (k + kLanes <= count) return _mm256_loadu_pd(weight + k);
  alignas(32) double buf[kLanes] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t l = 0; k + l < count; ++l) buf[l] = weight[k + l];
  return _mm256_load_pd(buf);
}

void avx2_moments(std::span<const TermView> terms, const ColumnRun& run, const double* weight, Moments* moments) {
  __m256d tau[kMaxDims];
  __m256d u[kMaxDims];
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const TermView& term = terms[t];
    const __m256d scale = set1(term.scale);
    __m256d ec = _mm256_setzero_pd();
    __m256d es = _mm256_setzero_pd();
    __m256d uu_ec[kMaxDims];
    __m256d u_es[kMaxDims];
    __m256d u_ec[kMaxDims];
    for (int p = 0; p < run.dims; ++p) {
      uu_ec[p] = _mm256_setzero_pd();
      u_es[p] = _mm256_setzero_pd();
      u_ec[p] = _mm256_setzero_pd();
    }
    for (std::size_t k = 0; k < run.count; k += kLanes) {
      load_lags(run, k, tau);
      __m256d quad = _mm256_setzero_pd();
      __m256d arg = set1(-term.phase);
      for (int p = 0; p < run.dims; ++p) {
        u[p] = _mm256_fmsub_pd(scale, tau[p], set1(term.shift[p]));
        quad = _mm256_fmadd_pd(_mm256_mul_pd(set1(term.decay[p]), u[p]), u[p], quad);
        arg = _mm256_fmadd_pd(set1(term.freq[p]), u[p], arg);
      }
      __m256d s, c;
      sincos_pd(arg, s, c);
      const __m256d we = _mm256_mul_pd(load_weights(weight, k, run.count),
                                       exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), quad)));
      const __m256d wec = _mm256_mul_pd(we, c);
      const __m256d wes = _mm256_mul_pd(we, s);
      ec = _mm256_add_pd(ec, wec);
      es = _mm256_add_pd(es, wes);
      for (int p = 0; p < run.dims; ++p) {
        const __m256d uwec = _mm256_mul_pd(u[p], wec);
        u_ec[p] = _mm256_add_pd(u_ec[p], uwec);
        uu_ec[p] = _mm256_fmadd_pd(u[p], uwec, uu_ec[p]);
        u_es[p] = _mm256_fmadd_pd(u[p], wes, u_es[p]);
      }
    }
    Moments& m = moments[t];
    m.ec += hsum(ec);
    m.es += hsum(es);
    for (int p = 0; p < run.dims; ++p) {
      m.uu_ec[p] += hsum(uu_ec[p]);
      m.u_es[p] += hsum(u_es[p]);
      m.u_ec[p] += hsum(u_ec[p]);
    }
  }
}

}  // namespace

const KernelSet& avx2_kernel_set() {
  static const KernelSet set{Isa::avx2, "avx2", &avx2_values, &avx2_moments};
  return set;
}

void avx2_exp(const double* x, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; k += kLanes) {
    alignas(32) double in[kLanes] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double res[kLanes];
    for (std::size_t l = 0; l < kLanes && k + l < n; ++l) in[l] = x[k + l];
    _mm256_store_pd(res, exp_pd(_mm256_load_pd(in)));
    for (std::size_t l = 0; l < kLanes && k + l < n; ++l) out[k + l] = res[l];
  }
}

void avx2_sincos(const double* x, double* sin_out, double* cos_out, std::size_t n) {
  for (std::size_t k = 0; k < n; k += kLanes) {
    alignas(32) double in[kLanes] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double s[kLanes];
    alignas(32) double c[kLanes];
    for (std::size_t l = 0; l < kLanes && k + l < n; ++l) in[l] = x[k + l];
    __m256d vs, vc;
    sincos_pd(_mm256_load_pd(in), vs, vc);
    _mm256_store_pd(s, vs);
    _mm256_store_pd(c, vc);
    for (std::size_t l = 0; l < kLanes && k + l < n; ++l) {
      sin_out[k + l] = s[l];
      cos_out[k + l] = c[l];
    }
  }
}

}  // namespace mtgp::simd::detail
