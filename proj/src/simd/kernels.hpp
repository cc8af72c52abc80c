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

#include "mtgp/simd/damped_cosine.hpp"

namespace mtgp::simd::detail {

// Defined in damped_cosine_avx2.cpp when built with AVX2 support.
const KernelSet& avx2_kernel_set();

// Vector math exposed for accuracy tests: out arrays of length n.
void avx2_exp(const double* x, double* out, std::size_t n);
void avx2_sincos(const double* x, double* sin_out, double* cos_out, std::size_t n);

}  // namespace mtgp::simd::detail
