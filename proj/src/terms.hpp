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

// Lowering of every spectral family (and SE-LMC) from its flat transformed
// parameter vector to a TermTable. Templated on the scalar so one code path
// produces both values and dual-number tangents.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "mtgp/covariance.hpp"
#include "mtgp/detail/cross_algebra.hpp"
#include "mtgp/detail/dual.hpp"
#include "mtgp/errors.hpp"

namespace mtgp::detail {

inline constexpr double kPi = std::numbers::pi;

template <class T>
class Cursor {
 public:
  explicit Cursor(std::span<const T> values) : values_(values) {}
  const T& next() {
    if (pos_ >= values_.size()) throw DimensionError("parameter vector is too short for the kernel shape");
    return values_[pos_++];
  }
  std::vector<T> take(int n) {
    std::vector<T> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) out.push_back(next());
    return out;
  }
  void finish() const {
    if (pos_ != values_.size()) throw DimensionError("parameter vector is too long for the kernel shape");
  }

 private:
  std::span<const T> values_;
  std::size_t pos_ = 0;
};

// Dense row-major M x M lower-triangular factor read from M(M+1)/2 entries.
template <class T>
std::vector<T> read_factor(Cursor<T>& cur, int tasks) {
  std::vector<T> c(static_cast<std::size_t>(tasks) * tasks, T(0.0));
  for (int m = 0; m < tasks; ++m) {
    for (int n = 0; n <= m; ++n) c[m * tasks + n] = cur.next();
  }
  return c;
}

// (C_a C_b^T)_{mn}
template <class T>
T coupling_entry(const std::vector<T>& ca, const std::vector<T>& cb, int tasks, int m, int n) {
  T sum(0.0);
  const int upto = std::min(m, n);
  for (int k = 0; k <= upto; ++k) sum += ca[m * tasks + k] * cb[n * tasks + k];
  return sum;
}

template <class T>
struct SpectralComponent {
  T log_weight;
  std::vector<T> mean;
  std::vector<T> log_variance;
  std::vector<T> delay;
  std::vector<T> phase;
};

template <class T>
SpectralComponent<T> read_component(Cursor<T>& cur, int dims, bool with_delays) {
  SpectralComponent<T> c;
  c.log_weight = cur.next();
  c.mean = cur.take(dims);
  c.log_variance = cur.take(dims);
  if (with_delays) {
    c.delay = cur.take(dims);
    c.phase = cur.take(dims);
  } else {
    c.delay.assign(dims, T(0.0));
    c.phase.assign(dims, T(0.0));
  }
  return c;
}

template <class T>
struct TermSink {
  TermTable<T>& table;
  void push(const T& coef, const T& phase, const std::vector<T>& shift, const std::vector<T>& decay,
            const std::vector<T>& freq) {
    table.coef.push_back(coef);
    table.phase.push_back(phase);
    table.shift.insert(table.shift.end(), shift.begin(), shift.end());
    table.decay.insert(table.decay.end(), decay.begin(), decay.end());
    table.freq.insert(table.freq.end(), freq.begin(), freq.end());
  }
  void close_block() { table.offset.push_back(table.coef.size()); }
};

// Geometry of one GCSM (i, j) convolution term.
template <class T>
struct GcsmTerm {
  T contribution;
  T phase;
  std::vector<T> shift, decay, freq;
};

template <class T>
std::vector<GcsmTerm<T>> gcsm_terms(const std::vector<SpectralComponent<T>>& comps, int dims) {
  using std::exp;
  std::vector<GcsmTerm<T>> terms;
  terms.reserve(comps.size() * comps.size());
  std::vector<T> var_a(dims), var_b(dims);
  for (const auto& a : comps) {
    for (int p = 0; p < dims; ++p) var_a[p] = exp(a.log_variance[p]);
    for (const auto& b : comps) {
      for (int p = 0; p < dims; ++p) var_b[p] = exp(b.log_variance[p]);
      GcsmTerm<T> t;
      t.shift.resize(dims);
      t.decay.resize(dims);
      t.freq.resize(dims);
      T log_c = T(0.5) * (a.log_weight + b.log_weight);
      T phase(0.0);
      for (int p = 0; p < dims; ++p) {
        const auto d = cross_dim(a.mean[p], var_a[p], b.mean[p], var_b[p]);
        log_c += d.log_amplitude;
        t.shift[p] = a.delay[p] - b.delay[p];
        t.decay[p] = T(0.5 * kPi * kPi) * d.variance;
        t.freq[p] = T(kPi) * d.mean;
        phase += a.phase[p] - b.phase[p];
      }
      t.contribution = exp(log_c);
      t.phase = T(kPi) * phase;
      terms.push_back(std::move(t));
    }
  }
  return terms;
}

template <class T>
void build_terms(const KernelShape& shape, std::span<const T> values, TermTable<T>& table) {
  using std::exp;
  using std::log;
  using std::sqrt;
  const int Q = shape.components;
  const int M = shape.tasks;
  const int P = shape.dims;
  table = TermTable<T>{};
  table.tasks = M;
  table.dims = P;
  table.offset.push_back(0);
  TermSink<T> sink{table};
  Cursor<T> cur(values);
  const std::vector<T> zeros(P, T(0.0));

  switch (shape.family) {
    case Family::se_lmc: {
      table.scale = 1.0;
      const auto factor = read_factor(cur, M);
      const T signal2 = exp(T(2.0) * cur.next());
      std::vector<T> decay(P);
      for (int p = 0; p < P; ++p) decay[p] = T(0.5) * exp(T(-2.0) * cur.next());
      for (int m = 0; m < M; ++m) {
        for (int n = 0; n < M; ++n) {
          sink.push(coupling_entry(factor, factor, M, m, n) * signal2, T(0.0), zeros, decay, zeros);
          sink.close_block();
        }
      }
      break;
    }
    case Family::sm_lmc: {
      table.scale = 1.0;
      std::vector<std::vector<T>> factors;
      std::vector<SpectralComponent<T>> comps;
      for (int q = 0; q < Q; ++q) {
        factors.push_back(read_factor(cur, M));
        comps.push_back(read_component(cur, P, false));
      }
      std::vector<T> decay(P), freq(P);
      for (int m = 0; m < M; ++m) {
        for (int n = 0; n < M; ++n) {
          for (int q = 0; q < Q; ++q) {
            for (int p = 0; p < P; ++p) {
              decay[p] = T(2.0 * kPi * kPi) * exp(comps[q].log_variance[p]);
              freq[p] = T(2.0 * kPi) * comps[q].mean[p];
            }
            const T coef = exp(comps[q].log_weight) * coupling_entry(factors[q], factors[q], M, m, n);
            sink.push(coef, T(0.0), zeros, decay, freq);
          }
          sink.close_block();
        }
      }
      break;
    }
    case Family::csm: {
      table.scale = 1.0;
      std::vector<T> log_var(Q), mean(Q);
      for (int q = 0; q < Q; ++q) {
        log_var[q] = cur.next();
        mean[q] = cur.next();
      }
      std::vector<T> log_w(static_cast<std::size_t>(Q) * M);
      for (auto& w : log_w) w = cur.next();
      std::vector<T> phase(static_cast<std::size_t>(Q) * M, T(0.0));
      for (int q = 1; q < Q; ++q) {
        for (int r = 0; r < M; ++r) phase[q * M + r] = cur.next();
      }
      std::vector<T> decay(P), freq(P);
      for (int m = 0; m < M; ++m) {
        for (int n = 0; n < M; ++n) {
          for (int q = 0; q < Q; ++q) {
            const T var = exp(log_var[q]);
            for (int p = 0; p < P; ++p) {
              decay[p] = T(2.0 * kPi * kPi) * var;
              freq[p] = T(2.0 * kPi) * mean[q];
            }
            const T coef = exp(T(0.5) * (log_w[q * M + m] + log_w[q * M + n]));
            // cos(2 pi tau mu + phi_m - phi_n)
            sink.push(coef, phase[q * M + n] - phase[q * M + m], zeros, decay, freq);
          }
          sink.close_block();
        }
      }
      break;
    }
    case Family::mosm: {
      table.scale = 1.0;
      struct Channel {
        T weight;
        std::vector<T> mean, var, delay;
        T phase;
      };
      std::vector<Channel> ch;  // [q * M + m]
      for (int q = 0; q < Q; ++q) {
        for (int m = 0; m < M; ++m) {
          Channel c;
          c.weight = cur.next();
          c.mean = cur.take(P);
          c.var = cur.take(P);
          for (auto& v : c.var) v = exp(v);
          c.delay = cur.take(P);
          c.phase = cur.next();
          ch.push_back(std::move(c));
        }
      }
      std::vector<T> shift(P), decay(P), freq(P);
      const double log_two_pi_half = 0.5 * P * std::log(2.0 * kPi);
      for (int m = 0; m < M; ++m) {
        for (int n = 0; n < M; ++n) {
          for (int q = 0; q < Q; ++q) {
            const Channel& a = ch[q * M + m];
            const Channel& b = ch[q * M + n];
            T log_mag(log_two_pi_half);
            for (int p = 0; p < P; ++p) {
              const T sum = a.var[p] + b.var[p];
              const T diff = a.mean[p] - b.mean[p];
              const T var = T(2.0) * a.var[p] * b.var[p] / sum;
              freq[p] = (a.var[p] * b.mean[p] + b.var[p] * a.mean[p]) / sum;
              decay[p] = T(0.5) * var;
              shift[p] = b.delay[p] - a.delay[p];  // u = tau + (theta_m - theta_n)
              log_mag += T(0.5) * log(var) - T(0.25) * diff * diff / sum;
            }
            sink.push(a.weight * b.weight * exp(log_mag), b.phase - a.phase, shift, decay, freq);
          }
          sink.close_block();
        }
      }
      break;
    }
    case Family::gcsm_c:
    case Family::gcsm_cc: {
      table.scale = 2.0;
      std::vector<std::vector<T>> factors;
      std::vector<SpectralComponent<T>> comps;
      if (shape.family == Family::gcsm_c) factors.push_back(read_factor(cur, M));
      for (int q = 0; q < Q; ++q) {
        if (shape.family == Family::gcsm_cc) factors.push_back(read_factor(cur, M));
        comps.push_back(read_component(cur, P, true));
      }
      const auto geometry = gcsm_terms(comps, P);
      for (int m = 0; m < M; ++m) {
        for (int n = 0; n < M; ++n) {
          for (int i = 0; i < Q; ++i) {
            for (int j = 0; j < Q; ++j) {
              const auto& g = geometry[i * Q + j];
              const T coupling = shape.family == Family::gcsm_c
                                     ? coupling_entry(factors[0], factors[0], M, m, n)
                                     : coupling_entry(factors[i], factors[j], M, m, n);
              sink.push(g.contribution * coupling, g.phase, g.shift, g.decay, g.freq);
            }
          }
          sink.close_block();
        }
      }
      break;
    }
    case Family::matern_lmc:
      throw Error("Matern-LMC has no spectral term table");
  }
  cur.finish();
}

}  // namespace mtgp::detail
