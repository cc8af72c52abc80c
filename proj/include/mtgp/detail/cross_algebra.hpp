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

// Per-dimension algebra for the convolution of two Gaussian spectral
// components. Templated on the scalar so the same code serves plain
// evaluation and dual-number tangent propagation.

namespace mtgp::detail {

template <class T>
struct CrossDim {
  T mean;
  T variance;
  T log_amplitude;  // log of this dimension's factor of the cross amplitude
};

template <class T>
CrossDim<T> cross_dim(const T& mean_a, const T& var_a, const T& mean_b, const T& var_b) {
  using std::log;
  const T sum = var_a + var_b;
  const T diff = mean_a - mean_b;
  CrossDim<T> out;
  out.mean = (var_a * mean_b + var_b * mean_a) / sum;
  out.variance = T(2.0) * var_a * var_b / sum;
  // |2 sqrt(va vb) / (va + vb)|^(1/2) exp(-(ma - mb)^2 / (4 (va + vb)))
  out.log_amplitude = T(0.25) * log(T(4.0) * var_a * var_b / (sum * sum)) - T(0.25) * diff * diff / sum;
  return out;
}

}  // namespace mtgp::detail
