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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include <spdlog/spdlog.h>

#include "mtgp/errors.hpp"
#include "mtgp/simd/damped_cosine.hpp"
#include "simd/kernels.hpp"

namespace mtgp::simd {

namespace {

bool cpu_has_avx2() {
#if defined(MTGP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelSet* detect() {
  const KernelSet* best = avx2_kernels();
  if (const char* env = std::getenv("MTGP_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") best = nullptr;
    else if (want == "avx2" && best == nullptr) spdlog::warn("MTGP_SIMD=avx2 requested but unavailable; using scalar");
  }
  const KernelSet* chosen = best ? best : &scalar_kernels();
  spdlog::debug("damped-cosine kernels: {}", chosen->name);
  return chosen;
}

std::atomic<const KernelSet*>& active_slot() {
  static std::atomic<const KernelSet*> slot{detect()};
  return slot;
}

}  // namespace

const KernelSet* avx2_kernels() {
#if defined(MTGP_HAVE_AVX2)
  static const bool available = cpu_has_avx2();
  return available ? &detail::avx2_kernel_set() : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

void select_isa(Isa isa) {
  const KernelSet* set = isa == Isa::scalar ? &scalar_kernels() : avx2_kernels();
  if (set == nullptr) throw Error("requested SIMD variant is not available on this host");
  active_slot().store(set, std::memory_order_release);
}

}  // namespace mtgp::simd
