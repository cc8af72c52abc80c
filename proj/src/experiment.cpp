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

#include "mtgp/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "mtgp/errors.hpp"
#include "mtgp/logging.hpp"
#include "mtgp/simd/damped_cosine.hpp"

namespace mtgp::experiment {

namespace fs = std::filesystem;

std::string_view version() noexcept { return MTGP_VERSION; }

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw InputError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw InputError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config key '") + key + "': " + e.what());
  }
}

std::string_view matern_label(kernel::MaternOrder o) {
  switch (o) {
    case kernel::MaternOrder::half: return "1/2";
    case kernel::MaternOrder::three_halves: return "3/2";
    case kernel::MaternOrder::five_halves: return "5/2";
  }
  return "?";
}

kernel::MaternOrder parse_matern(const std::string& s) {
  for (auto o : {kernel::MaternOrder::half, kernel::MaternOrder::three_halves, kernel::MaternOrder::five_halves}) {
    if (s == matern_label(o)) return o;
  }
  throw InputError("matern order must be 1/2, 3/2 or 5/2, got '" + s + "'");
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) { return seed ^ (0x9E3779B97F4A7C15ULL * (salt + 1)); }

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void ExperimentConfig::validate() const {
  if (kernels.empty()) throw InputError("config lists no kernels");
  if (components < 1) throw InputError("q must be at least 1");
  if (splits.empty()) throw InputError("config lists no splits");
  for (const auto& s : splits) {
    if (s != "none") data::parse_split(s);
  }
  train.validate();
  if (!(init.delay_range >= 0.0) || !(init.phase_range >= 0.0) || !(init.factor_scale >= 0.0) ||
      !(init.noise_fraction > 0.0) || !(init.factor_clip > 0.0)) {
    throw InputError("init ranges must be nonnegative and noise fraction positive");
  }
  if (!(init.diagonal_boost > init.factor_scale * init.factor_clip)) {
    throw InputError("diagonal boost must exceed factor_scale * factor_clip so factor diagonals stay dominant");
  }
  for (Family f : kernels) {
    KernelShape s{f, components, 1, 1, matern};
    s.validate();
  }
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  check_keys(j, {"kernels", "q", "seed", "matern", "data", "splits", "train", "init", "standardize", "output"},
             "config");
  ExperimentConfig c;
  if (j.contains("kernels")) {
    c.kernels.clear();
    for (const auto& k : j.at("kernels")) c.kernels.push_back(parse_family(k.get<std::string>()));
  }
  read(j, "q", c.components);
  read(j, "seed", c.seed);
  if (j.contains("matern")) c.matern = parse_matern(j.at("matern").get<std::string>());
  read(j, "splits", c.splits);
  read(j, "standardize", c.standardize);
  if (j.contains("output")) c.output = j.at("output").get<std::string>();
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, {"source", "paths", "points", "lower", "upper", "components", "timestamp_column", "value_column",
                   "task_column"},
               "data");
    std::string source = "synthetic";
    read(d, "source", source);
    if (source == "csv") {
      std::vector<std::string> paths;
      read(d, "paths", paths);
      if (paths.empty()) throw InputError("csv data source needs at least one path");
      for (const auto& p : paths) c.csv.push_back(fs::path(p).is_absolute() ? fs::path(p) : base_dir / p);
    } else if (source != "synthetic") {
      throw InputError("data source must be 'synthetic' or 'csv'");
    }
    read(d, "points", c.synthetic.points);
    read(d, "lower", c.synthetic.lower);
    read(d, "upper", c.synthetic.upper);
    read(d, "components", c.synthetic.components);
    read(d, "timestamp_column", c.schema.timestamp);
    read(d, "value_column", c.schema.value);
    read(d, "task_column", c.schema.task);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    check_keys(t, {"max_iters", "learning_rate", "max_learning_rate", "tolerance", "patience", "max_rejections",
                   "restarts", "gradient"},
               "train");
    read(t, "max_iters", c.train.max_iters);
    read(t, "learning_rate", c.train.learning_rate);
    read(t, "max_learning_rate", c.train.max_learning_rate);
    read(t, "tolerance", c.train.tolerance);
    read(t, "patience", c.train.patience);
    read(t, "max_rejections", c.train.max_rejections);
    read(t, "restarts", c.train.restarts);
    std::string mode = "analytic";
    read(t, "gradient", mode);
    if (mode == "analytic") c.train.gradient = train::GradientMode::analytic;
    else if (mode == "numeric") c.train.gradient = train::GradientMode::numeric;
    else throw InputError("train.gradient must be 'analytic' or 'numeric'");
  }
  if (j.contains("init")) {
    const json& i = j.at("init");
    check_keys(i, {"delay_range", "phase_range", "factor_scale", "factor_clip", "diagonal_boost", "noise_fraction",
                   "pooled", "shared_noise"},
               "init");
    read(i, "delay_range", c.init.delay_range);
    read(i, "phase_range", c.init.phase_range);
    read(i, "factor_scale", c.init.factor_scale);
    read(i, "factor_clip", c.init.factor_clip);
    read(i, "diagonal_boost", c.init.diagonal_boost);
    read(i, "noise_fraction", c.init.noise_fraction);
    read(i, "pooled", c.init.pooled);
    read(i, "shared_noise", c.init.shared_noise);
  }
  c.train.seed = c.seed;
  c.train.rejitter = c.init;
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json kernels = json::array();
  for (Family f : c.kernels) kernels.push_back(std::string(family_name(f)));
  json data;
  if (c.csv.empty()) {
    data = {{"source", "synthetic"},
            {"points", c.synthetic.points},
            {"lower", c.synthetic.lower},
            {"upper", c.synthetic.upper},
            {"components", c.synthetic.components}};
  } else {
    std::vector<std::string> paths;
    for (const auto& p : c.csv) paths.push_back(p.string());
    data = {{"source", "csv"},
            {"paths", paths},
            {"timestamp_column", c.schema.timestamp},
            {"value_column", c.schema.value},
            {"task_column", c.schema.task}};
  }
  return {{"kernels", kernels},
          {"q", c.components},
          {"seed", c.seed},
          {"matern", std::string(matern_label(c.matern))},
          {"data", data},
          {"splits", c.splits},
          {"train",
           {{"max_iters", c.train.max_iters},
            {"learning_rate", c.train.learning_rate},
            {"max_learning_rate", c.train.max_learning_rate},
            {"tolerance", c.train.tolerance},
            {"patience", c.train.patience},
            {"max_rejections", c.train.max_rejections},
            {"restarts", c.train.restarts},
            {"gradient", c.train.gradient == train::GradientMode::analytic ? "analytic" : "numeric"}}},
          {"init",
           {{"delay_range", c.init.delay_range},
            {"phase_range", c.init.phase_range},
            {"factor_scale", c.init.factor_scale},
            {"factor_clip", c.init.factor_clip},
            {"diagonal_boost", c.init.diagonal_boost},
            {"noise_fraction", c.init.noise_fraction},
            {"pooled", c.init.pooled},
            {"shared_noise", c.init.shared_noise}}},
          {"standardize", c.standardize},
          {"output", c.output.string()}};
}

json to_json(const TaskedDataset& data) {
  json tasks = json::array();
  for (const auto& t : data.tasks) {
    std::vector<int> train(t.train.begin(), t.train.end());
    tasks.push_back({{"label", t.label}, {"x", t.x}, {"y", t.y}, {"train", train}});
  }
  json out = {{"tasks", tasks}};
  out["time_origin"] = data.time_origin ? json(*data.time_origin) : json(nullptr);
  return out;
}

TaskedDataset dataset_from_json(const json& j) {
  TaskedDataset data;
  try {
    for (const auto& t : j.at("tasks")) {
      TaskSeries s;
      s.label = t.at("label").get<std::string>();
      s.x = t.at("x").get<std::vector<double>>();
      s.y = t.at("y").get<std::vector<double>>();
      for (int b : t.at("train").get<std::vector<int>>()) s.train.push_back(b != 0 ? 1 : 0);
      data.tasks.push_back(std::move(s));
    }
    if (j.contains("time_origin") && !j.at("time_origin").is_null()) data.time_origin = j.at("time_origin").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed dataset JSON: ") + e.what());
  }
  data.validate();
  return data;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData out;
  if (config.csv.empty()) {
    const auto synth = data::generate_synthetic(mix(config.seed, 100), config.synthetic);
    out.data = synth.data;
    json comps = json::array();
    for (const auto& c : synth.signal_components) {
      comps.push_back({{"weight", c.weight}, {"mean", c.mean_freq[0]}, {"variance", c.variance[0]}});
    }
    out.provenance = {{"source", "synthetic"}, {"seed", mix(config.seed, 100)}, {"signal_components", comps}};
  } else {
    data::LoadReport report;
    if (config.csv.size() == 1) {
      out.data = data::load_series(config.csv.front(), config.schema, &report);
    } else {
      out.data = data::load_series(std::span<const fs::path>(config.csv), config.schema, &report);
    }
    std::vector<std::string> files;
    for (const auto& p : config.csv) files.push_back(p.string());
    out.provenance = {{"source", "csv"}, {"files", files}, {"rows", report.rows}, {"dropped", report.dropped}};
    if (out.data.time_origin) out.provenance["time_origin"] = data::format_timestamp(*out.data.time_origin);
  }
  json splits = json::array();
  for (std::size_t m = 0; m < out.data.num_tasks(); ++m) {
    const std::string& name = config.splits[m % config.splits.size()];
    const std::uint64_t seed = mix(config.seed, 200 + m);
    if (name != "none") out.data = data::split(std::move(out.data), m, data::parse_split(name), seed);
    splits.push_back({{"task", out.data.tasks[m].label}, {"strategy", name}, {"seed", seed}});
  }
  out.provenance["splits"] = splits;
  return out;
}

Standardization Standardization::fit(const TaskedDataset& data, bool enabled) {
  Standardization s;
  for (const auto& t : data.tasks) {
    double mean = 0.0, var = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.train[i] == 0) continue;
      mean += t.y[i];
      ++n;
    }
    if (n == 0) throw InputError("task '" + t.label + "' has no training points");
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.train[i] != 0) var += (t.y[i] - mean) * (t.y[i] - mean);
    }
    var /= static_cast<double>(n);
    const bool usable = enabled && var > 0.0;
    s.mean.push_back(enabled ? mean : 0.0);
    s.scale.push_back(usable ? std::sqrt(var) : 1.0);
  }
  return s;
}

TaskedDataset Standardization::apply(const TaskedDataset& data) const {
  TaskedDataset out = data;
  for (std::size_t m = 0; m < out.tasks.size(); ++m) {
    for (double& y : out.tasks[m].y) y = (y - mean.at(m)) / scale.at(m);
  }
  return out;
}

KernelShape shape_for(Family family, const ExperimentConfig& config, int tasks) {
  const bool baseline = family == Family::se_lmc || family == Family::matern_lmc;
  return KernelShape{family, baseline ? 1 : config.components, tasks, 1, config.matern};
}

std::uint64_t init_seed(const ExperimentConfig& config) noexcept { return mix(config.seed, 300); }

KernelRun run_kernel(const TaskedDataset& data, Family family, const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  KernelRun run;
  run.family = family;
  run.standardization = Standardization::fit(data, config.standardize);
  const TaskedDataset z = run.standardization.apply(data);
  const KernelShape shape = shape_for(family, config, static_cast<int>(data.num_tasks()));
  logger().info("{}: initializing (Q={}, M={})", family_name(family), shape.components, shape.tasks);
  run.initialization = init::init_hyperparams(z, shape, init_seed(config), config.init);
  train::TrainConfig tc = config.train;
  tc.seed = mix(config.seed, 400);
  tc.rejitter = config.init;
  run.result = std::make_unique<train::TrainResult>(
      train::optimize(run.initialization.spec, run.initialization.noise, z, tc));
  logger().info("{}: NLML {:.6f} -> {:.6f}", family_name(family), run.result->initial_nlml,
                run.result->model.nlml());

  const Observations all = stack(z, Subset::all);
  const auto pred = run.result->model.predict(all);
  std::size_t k = 0;
  for (std::size_t m = 0; m < data.num_tasks(); ++m) {
    const auto& t = data.tasks[m];
    std::vector<gp::Prediction> p(t.size());
    std::vector<double> test_pred, test_true;
    for (std::size_t i = 0; i < t.size(); ++i, ++k) {
      p[i].mean = pred[k].mean * run.standardization.scale[m] + run.standardization.mean[m];
      p[i].variance = pred[k].variance * run.standardization.scale[m] * run.standardization.scale[m];
      if (t.train[i] == 0) {
        test_pred.push_back(p[i].mean);
        test_true.push_back(t.y[i]);
      }
    }
    if (!test_pred.empty()) run.mae[t.label] = data::mae(test_pred, test_true);
    run.predictions.push_back(std::move(p));
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

json metrics_json(const std::vector<KernelRun>& runs) {
  json mae = json::object();
  for (const auto& r : runs) {
    json per = json::object();
    for (const auto& [label, v] : r.mae) per[label] = v;
    mae[std::string(family_name(r.family))] = per;
  }
  return {{"mae", mae}};
}

json run_summary(const KernelRun& r) {
  const auto& model = r.result->model;
  const KernelShape& shape = model.spec().shape;
  const Eigen::VectorXd params = train::wrap_phases(shape, flatten(model.spec()));
  json restarts = json::array();
  for (double v : r.result->restart_nlml) restarts.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  json gmm = json::array();
  for (const auto& g : r.initialization.gmm.components) {
    gmm.push_back({{"weight", g.weight}, {"mean", g.mean}, {"variance", g.variance}});
  }
  return {{"q", shape.components},
          {"tasks", shape.tasks},
          {"degrees_of_freedom", degrees_of_freedom(shape)},
          {"params", to_vec(params)},
          {"noise", to_vec(model.noise())},
          {"jitter", model.jitter()},
          {"initial_nlml", r.result->initial_nlml},
          {"nlml", model.nlml()},
          {"best_restart", r.result->best_restart},
          {"restart_nlml", restarts},
          {"init_mixture", gmm},
          {"init_interpolated_fraction", r.initialization.interpolated_fraction},
          {"standardization", {{"mean", r.standardization.mean}, {"scale", r.standardization.scale}}},
          {"seconds", r.seconds}};
}

json manifest_json(const ExperimentConfig& config, const PreparedData& prepared, const std::vector<KernelRun>& runs) {
  json kernels = json::object();
  for (const auto& r : runs) kernels[std::string(family_name(r.family))] = run_summary(r);
  return {{"library", "mtgp"},
          {"version", std::string(version())},
          {"simd", std::string(simd::active_kernels().name)},
          {"config", to_json(config)},
          {"seeds",
           {{"experiment", config.seed},
            {"init", init_seed(config)},
            {"train", mix(config.seed, 400)}}},
          {"data", prepared.provenance},
          {"kernels", kernels}};
}

void write_predictions(const fs::path& path, const TaskedDataset& data,
                       const std::vector<std::vector<gp::Prediction>>& predictions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "task,x,y_true,y_mean,y_std,is_train\n";
  for (std::size_t m = 0; m < data.num_tasks(); ++m) {
    const auto& t = data.tasks[m];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto& p = predictions.at(m).at(i);
      out << t.label << ',' << data::format_number(t.x[i]) << ',' << data::format_number(t.y[i]) << ','
          << data::format_number(p.mean) << ',' << data::format_number(std::sqrt(p.variance)) << ','
          << (t.train[i] != 0 ? 1 : 0) << '\n';
    }
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

json model_to_json(const KernelRun& run, const TaskedDataset& data, const json& manifest) {
  const auto& model = run.result->model;
  const KernelShape& s = model.spec().shape;
  return {{"schema_version", kModelSchemaVersion},
          {"family", std::string(family_name(s.family))},
          {"shape", {{"q", s.components}, {"tasks", s.tasks}, {"dims", s.dims}, {"matern", std::string(matern_label(s.matern))}}},
          {"params", to_vec(flatten(model.spec()))},
          {"noise", to_vec(model.noise())},
          {"nlml", model.nlml()},
          {"standardization", {{"mean", run.standardization.mean}, {"scale", run.standardization.scale}}},
          {"data", to_json(data)},
          {"manifest", manifest}};
}

LoadedModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) throw VersionError("model file has no schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kModelSchemaVersion) {
    throw VersionError("model schema version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(kModelSchemaVersion) + ")");
  }
  LoadedModel out;
  try {
    KernelShape shape;
    shape.family = parse_family(j.at("family").get<std::string>());
    const json& s = j.at("shape");
    shape.components = s.at("q").get<int>();
    shape.tasks = s.at("tasks").get<int>();
    shape.dims = s.at("dims").get<int>();
    shape.matern = parse_matern(s.at("matern").get<std::string>());
    const auto params = j.at("params").get<std::vector<double>>();
    const auto noise = j.at("noise").get<std::vector<double>>();
    out.standardization.mean = j.at("standardization").at("mean").get<std::vector<double>>();
    out.standardization.scale = j.at("standardization").at("scale").get<std::vector<double>>();
    out.data = dataset_from_json(j.at("data"));
    out.stored_nlml = j.at("nlml").get<double>();
    if (out.standardization.mean.size() != out.data.num_tasks() ||
        out.standardization.scale.size() != out.data.num_tasks()) {
      throw InputError("standardization does not match the task count");
    }
    const KernelSpec spec =
        unflatten(shape, Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size())));
    gp::Noise nz = Eigen::Map<const Eigen::VectorXd>(noise.data(), static_cast<Eigen::Index>(noise.size()));
    out.model = std::make_unique<gp::TrainedModel>(spec, nz, out.standardization.apply(out.data));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed model JSON: ") + e.what());
  }
  return out;
}

std::vector<gp::Prediction> predict_original(const LoadedModel& model, const std::vector<int>& tasks,
                                             const std::vector<double>& x) {
  if (tasks.size() != x.size()) throw DimensionError("task and input lists differ in length");
  const int M = model.model->spec().shape.tasks;
  Observations pts;
  pts.num_tasks = M;
  pts.x.resize(static_cast<Eigen::Index>(x.size()), 1);
  pts.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (tasks[i] < 0 || tasks[i] >= M) {
      throw InputError("task index " + std::to_string(tasks[i]) + " out of range (model has " + std::to_string(M) +
                       " tasks)");
    }
    pts.x(static_cast<Eigen::Index>(i), 0) = x[i];
  }
  pts.task = tasks;
  auto pred = model.model->predict(pts);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double a = model.standardization.scale[tasks[i]];
    pred[i].mean = pred[i].mean * a + model.standardization.mean[tasks[i]];
    pred[i].variance *= a * a;
  }
  return pred;
}

}  // namespace mtgp::experiment
