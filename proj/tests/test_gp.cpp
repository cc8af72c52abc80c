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
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mtgp/covariance.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/gp.hpp"
#include "support.hpp"

using namespace mtgp;
using namespace mtgp::gp;

namespace {

KernelSpec se_spec(double sigma, double ell) {
  LmcParams p;
  p.factor = Eigen::MatrixXd::Ones(1, 1);
  p.base.signal_scale = sigma;
  p.base.length_scale = {ell};
  return KernelSpec{KernelShape{Family::se_lmc, 1, 1, 1}, p};
}

// Squared exponential written out by hand.
double se(double sigma, double ell, double a, double b) {
  return sigma * sigma * std::exp(-0.5 * (a - b) * (a - b) / (ell * ell));
}

Observations single_task(const std::vector<double>& x, const std::vector<double>& y) {
  Observations obs;
  obs.x.resize(static_cast<Eigen::Index>(x.size()), 1);
  obs.y.resize(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    obs.x(static_cast<Eigen::Index>(i), 0) = x[i];
    obs.y(static_cast<Eigen::Index>(i)) = y[i];
    obs.task.push_back(0);
  }
  return obs;
}

Eigen::MatrixXd se_gram(double sigma, double ell, const std::vector<double>& x) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = se(sigma, ell, x[i], x[j]);
  return k;
}

// Multivariate normal negative log density through an explicit inverse and determinant.
double dense_nlml(const Eigen::MatrixXd& k, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd inv = k.inverse();
  const double n = static_cast<double>(y.size());
  return 0.5 * y.dot(inv * y) + 0.5 * std::log(k.determinant()) + 0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::MatrixXd noisy(Eigen::MatrixXd k, const Noise& noise, const Observations& obs) {
  for (Eigen::Index a = 0; a < k.rows(); ++a) k(a, a) += noise_for(noise, obs.task[a]);
  return k;
}

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("single observation with zero target") {
  const Observations obs = single_task({0.0}, {0.0});
  const Noise noise = Noise::Constant(1, 1.0);
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(nlml(se_spec(1.0, 1.0), noise, obs) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("three point SE instance against an explicit inverse") {
  const std::vector<double> x{-0.7, 0.1, 1.3}, y{0.4, -1.1, 0.9};
  const double sigma = 1.3, ell = 0.8, s2 = 0.05;
  const Observations obs = single_task(x, y);
  Eigen::MatrixXd k = se_gram(sigma, ell, x);
  k.diagonal().array() += s2;
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), 3);
  CHECK(nlml(se_spec(sigma, ell), Noise::Constant(1, s2), obs) == doctest::Approx(dense_nlml(k, yv)).epsilon(1e-12));
}

TEST_CASE("scaling targets scales only the data-fit term") {
  std::mt19937_64 rng(11);
  const KernelSpec spec = testing::random_spec(KernelShape{Family::gcsm_cc, 2, 2, 1}, rng);
  Observations obs = testing::random_observations(2, 8, 1, rng);
  const Covariance cov(spec);
  const Noise noise = Noise::Constant(1, 0.1);
  const NlmlTerms base = nlml_terms(cov, noise, obs);
  const double c = 3.7;
  obs.y *= c;
  const NlmlTerms scaled = nlml_terms(cov, noise, obs);
  CHECK(scaled.data_fit == doctest::Approx(c * c * base.data_fit).epsilon(1e-12));
  CHECK(scaled.complexity == base.complexity);
  CHECK(scaled.constant == base.constant);
}

TEST_CASE("nlml terms sum to the total") {
  std::mt19937_64 rng(12);
  for (Family f : all_families()) {
    const KernelSpec spec = testing::random_spec(KernelShape{f, 2, 2, 1}, rng);
    const Observations obs = testing::random_observations(2, 10, 1, rng);
    const Noise noise = Noise::Constant(2, 0.2);
    const NlmlTerms t = nlml_terms(Covariance(spec), noise, obs);
    const double total = nlml(spec, noise, obs);
    CHECK(std::abs(t.data_fit + t.complexity + t.constant - total) <= 1e-12 * std::abs(total));
    CHECK(t.data_fit >= 0.0);
  }
}

TEST_CASE("cholesky and dense inverse agree on random multi-task instances") {
  std::mt19937_64 rng(13);
  for (Family f : all_families()) {
    for (int rep = 0; rep < 3; ++rep) {
      const KernelSpec spec = testing::random_spec(KernelShape{f, 2, 3, 1}, rng);
      const Observations obs = testing::random_observations(3, 16, 1, rng);
      Noise noise(3);
      noise << 0.1, 0.3, 0.05;
      const Eigen::MatrixXd k = noisy(assemble(spec, obs), noise, obs);
      const double chol = nlml(spec, noise, obs);
      CHECK(std::abs(chol - dense_nlml(k, obs.y)) <= 1e-8 * std::max(1.0, std::abs(chol)));
    }
  }
}

TEST_CASE("cached factor reproduces the noisy covariance") {
  std::mt19937_64 rng(14);
  const KernelSpec spec = testing::random_spec(KernelShape{Family::gcsm_cc, 2, 2, 1}, rng);
  std::vector<std::vector<double>> ys(2, std::vector<double>(20));
  for (auto& row : ys)
    for (double& v : row) v = std::normal_distribution<double>()(rng);
  const TaskedDataset data = testing::grid_dataset(ys, 0.0, 0.3);
  const TrainedModel model(spec, Noise::Constant(1, 0.01), data);
  Eigen::MatrixXd target = noisy(assemble(spec, model.training()), model.noise(), model.training());
  target.diagonal().array() += model.jitter();
  const Eigen::MatrixXd l = model.chol();
  CHECK((l * l.transpose() - target).norm() <= 1e-8 * target.norm());
  CHECK(model.nlml() == doctest::Approx(nlml(spec, model.noise(), data)).epsilon(1e-12));
}

TEST_CASE("predictions match an explicit solve on three points") {
  const std::vector<double> xs{0.0, 1.0, 2.0}, y{0.3, 1.2, -0.6};
  const double sigma = 0.9, ell = 1.1, s2 = 0.02;
  const TrainedModel model(se_spec(sigma, ell), Noise::Constant(1, s2), testing::grid_dataset({y}, 0.0, 1.0));
  Eigen::MatrixXd k = se_gram(sigma, ell, xs);
  k.diagonal().array() += s2;
  const Eigen::MatrixXd inv = k.inverse();
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), 3);
  for (double xstar : {-0.5, 0.0, 0.7, 1.9, 3.5}) {
    Eigen::VectorXd ks(3);
    for (int i = 0; i < 3; ++i) ks(i) = se(sigma, ell, xstar, xs[i]);
    const double mean = ks.dot(inv * yv);
    const double var = sigma * sigma - ks.dot(inv * ks);
    const Prediction p = model.predict(std::vector<double>{xstar}, 0);
    CHECK(std::abs(p.mean - mean) < 1e-10);
    CHECK(std::abs(p.variance - var) < 1e-10);
  }
}

TEST_CASE("near-noiseless prediction interpolates training points") {
  const std::vector<double> y{0.5, -0.3, 1.1, 0.2, -0.8};
  const TrainedModel model(se_spec(1.0, 0.7), Noise::Constant(1, 1e-10), testing::grid_dataset({y}, 0.0, 1.0));
  for (std::size_t i = 0; i < y.size(); ++i) {
    const Prediction p = model.predict(std::vector<double>{static_cast<double>(i)}, 0);
    CHECK(std::abs(p.mean - y[i]) < 1e-4);
    CHECK(std::abs(p.variance) < 1e-4);
    CHECK(p.variance >= 0.0);
  }
}

TEST_CASE("posterior variance never exceeds the prior") {
  std::mt19937_64 rng(15);
  for (Family f : all_families()) {
    const KernelSpec spec = testing::random_spec(KernelShape{f, 2, 2, 1}, rng);
    std::vector<std::vector<double>> ys(2, std::vector<double>(15));
    for (auto& row : ys)
      for (double& v : row) v = std::normal_distribution<double>()(rng);
    const TrainedModel model(spec, Noise::Constant(1, 0.05), testing::grid_dataset(ys, -2.0, 0.25));
    const Observations probes = testing::random_observations(2, 40, 1, rng, -4.0, 4.0);
    const auto preds = model.predict(probes);
    const Eigen::VectorXd prior = Covariance(spec).diagonal(probes);
    for (std::size_t j = 0; j < preds.size(); ++j) {
      CHECK(preds[j].variance >= 0.0);
      CHECK(preds[j].variance <= prior(static_cast<Eigen::Index>(j)) + 1e-12);
    }
  }
}

TEST_CASE("prediction is linear in the targets") {
  std::mt19937_64 rng(16);
  const KernelSpec spec = testing::random_spec(KernelShape{Family::gcsm_cc, 2, 2, 1}, rng);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> y1(2, std::vector<double>(12)), y2 = y1, sum = y1;
  for (int m = 0; m < 2; ++m) {
    for (int i = 0; i < 12; ++i) {
      y1[m][i] = normal(rng);
      y2[m][i] = normal(rng);
      sum[m][i] = y1[m][i] + y2[m][i];
    }
  }
  const Noise noise = Noise::Constant(1, 0.1);
  const TrainedModel a(spec, noise, testing::grid_dataset(y1, 0.0, 0.4));
  const TrainedModel b(spec, noise, testing::grid_dataset(y2, 0.0, 0.4));
  const TrainedModel s(spec, noise, testing::grid_dataset(sum, 0.0, 0.4));
  const Observations probes = testing::random_observations(2, 10, 1, rng, -1.0, 6.0);
  const auto pa = a.predict(probes), pb = b.predict(probes), ps = s.predict(probes);
  for (std::size_t j = 0; j < ps.size(); ++j) {
    CHECK(ps[j].mean == doctest::Approx(pa[j].mean + pb[j].mean).epsilon(1e-9));
    CHECK(ps[j].variance == pa[j].variance);
  }
}

TEST_CASE("prediction rejects bad tasks and dimensions") {
  const TrainedModel model(se_spec(1.0, 1.0), Noise::Constant(1, 0.1), testing::grid_dataset({{0.0, 1.0}}, 0.0, 1.0));
  CHECK_THROWS_AS(model.predict(std::vector<double>{0.5}, 1), InputError);
  CHECK_THROWS_AS(model.predict(std::vector<double>{0.5}, -1), InputError);
  CHECK_THROWS_AS(model.predict(std::vector<double>{0.5, 0.2}, 0), DimensionError);
}

TEST_CASE("noise validation") {
  CHECK_THROWS_AS(check_noise(Noise::Constant(2, 0.1), 3), DimensionError);
  CHECK_THROWS_AS(check_noise(Noise::Constant(1, 0.0), 3), InputError);
  CHECK_THROWS_AS(check_noise(Noise::Constant(1, -1.0), 1), InputError);
  CHECK_NOTHROW(check_noise(Noise::Constant(3, 0.1), 3));
}

TEST_CASE("prior samples are deterministic per seed") {
  std::mt19937_64 rng(17);
  const KernelSpec spec = testing::random_spec(KernelShape{Family::sm_lmc, 3, 2, 1}, rng);
  const Observations inputs = testing::random_observations(2, 20, 1, rng);
  const Eigen::VectorXd a = sample_prior(spec, inputs, 42);
  const Eigen::VectorXd b = sample_prior(spec, inputs, 42);
  const Eigen::VectorXd c = sample_prior(spec, inputs, 43);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("prior samples have the kernel's first two moments") {
  std::mt19937_64 rng(18);
  const KernelSpec spec = testing::random_spec(KernelShape{Family::gcsm_cc, 2, 2, 1}, rng);
  const Observations inputs = testing::random_observations(2, 5, 1, rng);
  const Eigen::MatrixXd k = assemble(spec, inputs);
  constexpr int kSamples = 10000;
  const auto n = k.rows();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < kSamples; ++s) {
    const Eigen::VectorXd f = sample_prior(spec, inputs, 1000 + static_cast<std::uint64_t>(s));
    mean += f;
    second += f * f.transpose();
  }
  mean /= kSamples;
  const Eigen::MatrixXd cov = (second - kSamples * mean * mean.transpose()) / (kSamples - 1);
  for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(mean(i)) < 3.0 * std::sqrt(k(i, i) / kSamples));
  CHECK((cov - k).norm() < 0.05 * k.norm());
}

TEST_CASE("jitter ladder") {
  SUBCASE("positive definite input needs none") {
    const JitteredCholesky c = factorize(Eigen::MatrixXd::Identity(3, 3));
    CHECK(c.jitter == 0.0);
  }
  SUBCASE("rank-deficient input gets the smallest working rung") {
    Eigen::MatrixXd k = Eigen::MatrixXd::Ones(4, 4);
    const JitteredCholesky c = factorize(k);
    CHECK(c.jitter > 0.0);
    CHECK(c.jitter <= 1e-2);
    k.diagonal().array() += c.jitter;
    CHECK((c.lower * c.lower.transpose() - k).norm() < 1e-10);
  }
  SUBCASE("indefinite input exhausts the ladder") {
    Eigen::MatrixXd k = Eigen::MatrixXd::Identity(2, 2);
    k(1, 1) = -0.5;
    try {
      factorize(k);
      FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
      const std::string what = e.what();
      CHECK(what.find("jitter ladder") != std::string::npos);
      CHECK(what.find("1e-08") != std::string::npos);
      CHECK(what.find("0.01") != std::string::npos);
    }
  }
}

TEST_CASE("noise gradient matches finite differences") {
  std::mt19937_64 rng(19);
  const KernelSpec spec = testing::random_spec(KernelShape{Family::gcsm_cc, 2, 2, 1}, rng);
  const Observations obs = testing::random_observations(2, 9, 1, rng);
  const Covariance cov(spec);
  Noise noise(2);
  noise << 0.2, 0.05;
  const NlmlGradient g = nlml_gradient(cov, noise, obs);
  CHECK(g.value == doctest::Approx(nlml_terms(cov, noise, obs).total()).epsilon(1e-12));
  for (int slot = 0; slot < 2; ++slot) {
    const double h = 1e-5;
    Noise up = noise, down = noise;
    up(slot) *= std::exp(h);
    down(slot) *= std::exp(-h);
    const double fd = (nlml_terms(cov, up, obs).total() - nlml_terms(cov, down, obs).total()) / (2 * h);
    CHECK(g.log_noise(slot) == doctest::Approx(fd).epsilon(1e-6));
  }
}

}
