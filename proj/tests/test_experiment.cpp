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
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mtgp/errors.hpp"
#include "mtgp/experiment.hpp"

using namespace mtgp;
using namespace mtgp::experiment;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.kernels = {Family::sm_lmc};
  c.components = 2;
  c.seed = 3;
  c.synthetic.points = 60;
  c.train.max_iters = 15;
  c.train.restarts = 0;
  return c;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("config parsing") {
  const json j = json::parse(R"({
    "kernels": ["GCSM-CC", "MOSM"],
    "q": 4,
    "seed": 17,
    "matern": "5/2",
    "data": {"source": "csv", "paths": ["a.csv", "/abs/b.csv"], "task_column": "station"},
    "splits": ["first_half", "none"],
    "train": {"max_iters": 30, "restarts": 1, "gradient": "numeric"},
    "init": {"pooled": true, "delay_range": 0.25},
    "standardize": false
  })");
  const ExperimentConfig c = config_from_json(j, "/base");
  CHECK(c.kernels == std::vector<Family>{Family::gcsm_cc, Family::mosm});
  CHECK(c.components == 4);
  CHECK(c.seed == 17);
  CHECK(c.matern == kernel::MaternOrder::five_halves);
  REQUIRE(c.csv.size() == 2);
  CHECK(c.csv[0] == fs::path("/base/a.csv"));
  CHECK(c.csv[1] == fs::path("/abs/b.csv"));
  CHECK(c.schema.task == "station");
  CHECK(c.splits == std::vector<std::string>{"first_half", "none"});
  CHECK(c.train.max_iters == 30);
  CHECK(c.train.restarts == 1);
  CHECK(c.train.gradient == train::GradientMode::numeric);
  CHECK(c.init.pooled);
  CHECK(c.init.delay_range == 0.25);
  CHECK(c.train.rejitter.delay_range == 0.25);
  CHECK_FALSE(c.standardize);

  const ExperimentConfig again = config_from_json(to_json(c));
  CHECK(again.kernels == c.kernels);
  CHECK(again.csv == c.csv);
  CHECK(again.train.max_iters == c.train.max_iters);
  CHECK(again.init.pooled == c.init.pooled);
}

TEST_CASE("config rejects unknown keys and bad values") {
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"kernal": ["SM-LMC"]})")), InputError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"train": {"iters": 3}})")), InputError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"q": 0})")), InputError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"kernels": ["RBF"]})")), InputError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"splits": ["middle"]})")), InputError);
  CHECK_THROWS_AS(config_from_json(json::parse(R"({"data": {"source": "csv"}})")), InputError);
}

TEST_CASE("prepared synthetic data follows the split protocol") {
  const ExperimentConfig c = small_config();
  const PreparedData a = prepare_data(c);
  const PreparedData b = prepare_data(c);
  REQUIRE(a.data.num_tasks() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(a.data.tasks[m].y == b.data.tasks[m].y);
    CHECK(a.data.tasks[m].train == b.data.tasks[m].train);
    CHECK(std::count(a.data.tasks[m].train.begin(), a.data.tasks[m].train.end(), 1) == 30);
  }
  CHECK(a.data.tasks[1].train.front() == 1);
  CHECK(a.data.tasks[1].train.back() == 0);
  CHECK(a.data.tasks[2].train.front() == 0);
  CHECK(a.data.tasks[2].train.back() == 1);
  CHECK(a.provenance.at("splits").size() == 3);
  CHECK(a.provenance.at("signal_components").size() == 3);
}

TEST_CASE("standardization uses training targets only") {
  TaskedDataset d;
  TaskSeries t;
  t.label = "a";
  t.x = {0, 1, 2, 3};
  t.y = {1.0, 3.0, 100.0, -50.0};
  t.train = {1, 1, 0, 0};
  d.tasks.push_back(t);
  const Standardization s = Standardization::fit(d, true);
  CHECK(s.mean[0] == doctest::Approx(2.0));
  CHECK(s.scale[0] == doctest::Approx(1.0));
  const TaskedDataset z = s.apply(d);
  CHECK(z.tasks[0].y[0] == doctest::Approx(-1.0));
  CHECK(z.tasks[0].y[2] == doctest::Approx(98.0));
  const Standardization off = Standardization::fit(d, false);
  CHECK(off.mean[0] == 0.0);
  CHECK(off.scale[0] == 1.0);
}

TEST_CASE("dataset JSON round trip") {
  const PreparedData p = prepare_data(small_config());
  const TaskedDataset back = dataset_from_json(to_json(p.data));
  REQUIRE(back.num_tasks() == p.data.num_tasks());
  for (std::size_t m = 0; m < back.num_tasks(); ++m) {
    CHECK(back.tasks[m].label == p.data.tasks[m].label);
    CHECK(back.tasks[m].x == p.data.tasks[m].x);
    CHECK(back.tasks[m].y == p.data.tasks[m].y);
    CHECK(back.tasks[m].train == p.data.tasks[m].train);
  }
}

TEST_CASE("kernel run, model serialization and reload") {
  const ExperimentConfig c = small_config();
  const PreparedData p = prepare_data(c);
  std::vector<KernelRun> runs;
  runs.push_back(run_kernel(p.data, Family::sm_lmc, c));
  const KernelRun& run = runs.front();
  REQUIRE(run.predictions.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(run.predictions[m].size() == p.data.tasks[m].size());
    REQUIRE(run.mae.count(p.data.tasks[m].label) == 1);
    CHECK(std::isfinite(run.mae.at(p.data.tasks[m].label)));
  }
  CHECK(run.result->model.nlml() <= run.result->initial_nlml);

  const json metrics = metrics_json(runs);
  CHECK(metrics.at("mae").at("SM-LMC").size() == 3);
  const json manifest = manifest_json(c, p, runs);
  CHECK(manifest.at("version") == std::string(version()));

  const json model = model_to_json(run, p.data, manifest);
  const LoadedModel loaded = model_from_json(json::parse(model.dump()));
  CHECK(std::abs(loaded.model->nlml() - run.result->model.nlml()) <= 1e-10 * std::max(1.0, std::abs(loaded.stored_nlml)));
  CHECK(loaded.stored_nlml == run.result->model.nlml());

  std::vector<int> tasks;
  std::vector<double> xs;
  for (int m = 0; m < 3; ++m) {
    for (std::size_t i = 0; i < p.data.tasks[m].size(); i += 7) {
      tasks.push_back(m);
      xs.push_back(p.data.tasks[m].x[i]);
    }
  }
  const auto pred = predict_original(loaded, tasks, xs);
  std::size_t k = 0;
  for (int m = 0; m < 3; ++m) {
    for (std::size_t i = 0; i < p.data.tasks[m].size(); i += 7, ++k) {
      CHECK(pred[k].mean == doctest::Approx(run.predictions[m][i].mean).epsilon(1e-9));
      CHECK(pred[k].variance == doctest::Approx(run.predictions[m][i].variance).epsilon(1e-8).scale(1e-12));
    }
  }
  CHECK_THROWS_AS(predict_original(loaded, {3}, {0.0}), InputError);
  CHECK_THROWS_AS(predict_original(loaded, {-1}, {0.0}), InputError);

  json future = model;
  future["schema_version"] = kModelSchemaVersion + 1;
  CHECK_THROWS_AS(model_from_json(future), VersionError);
  json unversioned = model;
  unversioned.erase("schema_version");
  CHECK_THROWS_AS(model_from_json(unversioned), VersionError);
  json broken = model;
  broken.erase("params");
  CHECK_THROWS_AS(model_from_json(broken), InputError);
}

TEST_CASE("predictions file layout") {
  const ExperimentConfig c = small_config();
  const PreparedData p = prepare_data(c);
  std::vector<std::vector<gp::Prediction>> preds;
  for (const auto& t : p.data.tasks) preds.emplace_back(t.size(), gp::Prediction{0.5, 0.25});
  const fs::path path = fs::temp_directory_path() / "mtgp_predictions_test.csv";
  write_predictions(path, p.data, preds);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "task,x,y_true,y_mean,y_std,is_train");
  CHECK(first.rfind("signal,-10,", 0) == 0);
  CHECK(first.find(",0.5,0.5,") != std::string::npos);
  std::size_t rows = 1;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 180);
  fs::remove(path);
}

}
