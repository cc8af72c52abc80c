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

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "mtgp/covariance.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/simd/damped_cosine.hpp"
#include "simd/kernels.hpp"
#include "support.hpp"

using namespace mtgp;
using namespace mtgp::simd;

namespace {

struct TermStore {
  std::vector<double> shift, decay, freq;
  std::vector<TermView> views;
};

TermStore random_terms(std::mt19937_64& rng, int count, int dims) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.01, 3.0);
  TermStore s;
  s.shift.resize(count * dims);
  s.decay.resize(count * dims);
  s.freq.resize(count * dims);
  for (auto& v : s.shift) v = u(rng);
  for (auto& v : s.decay) v = pos(rng);
  for (auto& v : s.freq) v = 4.0 * u(rng);
  for (int t = 0; t < count; ++t) {
    s.views.push_back({u(rng), u(rng), t % 2 == 0 ? 1.0 : 2.0, &s.shift[t * dims], &s.decay[t * dims], &s.freq[t * dims]});
  }
  return s;
}

// RAII switch of the active kernel set.
struct IsaScope {
  Isa previous;
  explicit IsaScope(Isa isa) : previous(active_kernels().isa) { select_isa(isa); }
  ~IsaScope() { select_isa(previous); }
};

}  // namespace

TEST_SUITE("simd") {

TEST_CASE("avx2 vector exp and sincos match the C library") {
  if (avx2_kernels() == nullptr) return;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> wide(-700.0, 700.0), trig(-1e4, 1e4);
  std::vector<double> x(1003), e(x.size()), s(x.size()), c(x.size());
  for (auto& v : x) v = wide(rng);
  x[0] = 0.0;
  x[1] = -745.0;
  x[2] = -1e5;
  detail::avx2_exp(x.data(), e.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double ref = std::exp(x[i]);
    CHECK(std::abs(e[i] - ref) <= 4e-16 * ref + 1e-300);
  }
  for (auto& v : x) v = trig(rng);
  detail::avx2_sincos(x.data(), s.data(), c.data(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(std::abs(s[i] - std::sin(x[i])) < 1e-14);
    CHECK(std::abs(c[i] - std::cos(x[i])) < 1e-14);
  }
}

TEST_CASE("value accumulation agrees across variants for every run length") {
  const KernelSet* fast = avx2_kernels();
  if (fast == nullptr) return;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int dims : {1, 2, 3}) {
    const TermStore terms = random_terms(rng, 7, dims);
    for (std::size_t count : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 33u}) {
      std::vector<std::vector<double>> cols(dims, std::vector<double>(count));
      ColumnRun run;
      run.dims = dims;
      run.count = count;
      for (int p = 0; p < dims; ++p) {
        for (auto& v : cols[p]) v = u(rng);
        run.column[p] = cols[p].data();
        run.origin[p] = u(rng);
      }
      std::vector<double> a(count, 0.5), b(count, 0.5);
      scalar_kernels().accumulate_values(terms.views, run, a.data());
      fast->accumulate_values(terms.views, run, b.data());
      for (std::size_t k = 0; k < count; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-13);
    }
  }
}

TEST_CASE("moment accumulation agrees across variants") {
  const KernelSet* fast = avx2_kernels();
  if (fast == nullptr) return;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int dims : {1, 2}) {
    const TermStore terms = random_terms(rng, 5, dims);
    for (std::size_t count : {1u, 3u, 4u, 6u, 17u}) {
      std::vector<std::vector<double>> cols(dims, std::vector<double>(count));
      std::vector<double> w(count);
      ColumnRun run;
      run.dims = dims;
      run.count = count;
      for (int p = 0; p < dims; ++p) {
        for (auto& v : cols[p]) v = u(rng);
        run.column[p] = cols[p].data();
        run.origin[p] = u(rng);
      }
      for (auto& v : w) v = u(rng);
      std::vector<Moments> a(terms.views.size()), b(terms.views.size());
      scalar_kernels().accumulate_moments(terms.views, run, w.data(), a.data());
      fast->accumulate_moments(terms.views, run, w.data(), b.data());
      for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(std::abs(a[t].ec - b[t].ec) < 1e-12);
        CHECK(std::abs(a[t].es - b[t].es) < 1e-12);
        for (int p = 0; p < dims; ++p) {
          CHECK(std::abs(a[t].uu_ec[p] - b[t].uu_ec[p]) < 1e-11);
          CHECK(std::abs(a[t].u_es[p] - b[t].u_es[p]) < 1e-11);
          CHECK(std::abs(a[t].u_ec[p] - b[t].u_ec[p]) < 1e-11);
        }
      }
    }
  }
}

TEST_CASE("scalar moments are the weighted sums they document") {
  std::mt19937_64 rng(4);
  const TermStore terms = random_terms(rng, 1, 1);
  const TermView& t = terms.views[0];
  std::vector<double> col{0.3, -1.2, 2.0};
  std::vector<double> w{0.5, -1.0, 2.0};
  ColumnRun run;
  run.column[0] = col.data();
  run.origin[0] = 0.7;
  run.count = col.size();
  Moments m;
  scalar_kernels().accumulate_moments({&t, 1}, run, w.data(), &m);
  double ec = 0.0, es = 0.0, uu = 0.0, ues = 0.0, uec = 0.0;
  for (std::size_t k = 0; k < col.size(); ++k) {
    const double u = t.scale * (run.origin[0] - col[k]) - t.shift[0];
    const double e = std::exp(-t.decay[0] * u * u);
    const double arg = t.freq[0] * u - t.phase;
    ec += w[k] * e * std::cos(arg);
    es += w[k] * e * std::sin(arg);
    uu += w[k] * u * u * e * std::cos(arg);
    ues += w[k] * u * e * std::sin(arg);
    uec += w[k] * u * e * std::cos(arg);
  }
  CHECK(m.ec == doctest::Approx(ec).epsilon(1e-14));
  CHECK(m.es == doctest::Approx(es).epsilon(1e-14));
  CHECK(m.uu_ec[0] == doctest::Approx(uu).epsilon(1e-14));
  CHECK(m.u_es[0] == doctest::Approx(ues).epsilon(1e-14));
  CHECK(m.u_ec[0] == doctest::Approx(uec).epsilon(1e-14));
}

TEST_CASE("assembly and gradients agree between scalar and avx2 paths") {
  if (avx2_kernels() == nullptr) return;
  std::mt19937_64 rng(5);
  for (Family f : all_families()) {
    const Covariance cov(mtgp::testing::random_spec(KernelShape{f, 2, 2, 1}, rng));
    const Observations obs = mtgp::testing::random_observations(2, 15, 1, rng);
    Eigen::MatrixXd w = Eigen::MatrixXd::Random(obs.size(), obs.size());
    w = (w + w.transpose()).eval();
    Eigen::MatrixXd k_scalar, k_avx;
    Eigen::VectorXd g_scalar, g_avx;
    {
      IsaScope scope(Isa::scalar);
      k_scalar = cov.gram(obs);
      g_scalar = cov.contract_gradient(obs, w);
    }
    {
      IsaScope scope(Isa::avx2);
      k_avx = cov.gram(obs);
      g_avx = cov.contract_gradient(obs, w);
    }
    CHECK((k_scalar - k_avx).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((g_scalar - g_avx).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + g_scalar.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("isa selection") {
  CHECK(scalar_kernels().isa == Isa::scalar);
  const Isa before = active_kernels().isa;
  select_isa(Isa::scalar);
  CHECK(active_kernels().isa == Isa::scalar);
  if (avx2_kernels() == nullptr) {
    CHECK_THROWS_AS(select_isa(Isa::avx2), Error);
  }
  select_isa(before);
}

}
