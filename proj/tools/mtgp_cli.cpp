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

// mtgp: command-line experiment harness.
//
//   mtgp synth        synthetic signal / integral / derivative benchmark
//   mtgp compare      every configured kernel on the configured data
//   mtgp fit          train one kernel and save the model
//   mtgp predict      predictions from a saved model
//   mtgp inspect-init periodograms and the fitted spectral mixture

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtgp/data.hpp"
#include "mtgp/errors.hpp"
#include "mtgp/experiment.hpp"
#include "mtgp/logging.hpp"
#include "mtgp/spectral_init.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mtgp;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> kernels;
  std::optional<int> q;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Experiment seed");
  cmd->add_option("--kernel", o.kernels, "Kernel family (repeatable): GCSM-CC, GCSM-C, MOSM, CSM, SM-LMC, SE-LMC, MATERN-LMC")
      ->delimiter(',');
  cmd->add_option("--q", o.q, "Number of spectral components");
  cmd->add_option("--out", o.out, "Output directory");
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// Config file, then command-line overrides. `defaults` seeds keys the file omits.
experiment::ExperimentConfig resolve(const CommonOptions& o, const json& defaults = json::object()) {
  json j = defaults;
  fs::path base;
  if (!o.config.empty()) {
    j.update(read_json(o.config));
    base = fs::path(o.config).parent_path();
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.q) j["q"] = *o.q;
  if (!o.kernels.empty()) j["kernels"] = o.kernels;
  if (!o.out.empty()) j["output"] = o.out;
  return experiment::config_from_json(j, base);
}

// Files written by the current command; removed again unless commit() runs.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_ = true;
    }
  }
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(f, ec);
    if (created_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  fs::path file(const std::string& name) {
    files_.push_back(dir_ / name);
    return files_.back();
  }
  void write_json(const std::string& name, const json& j) {
    std::ofstream out(file(name));
    out << j.dump(2) << '\n';
    if (!out) throw InputError("failed writing '" + (dir_ / name).string() + "'");
  }
  void commit() { committed_ = true; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool created_ = false;
  bool committed_ = false;
};

int run_experiment(const experiment::ExperimentConfig& config) {
  const auto prepared = experiment::prepare_data(config);
  Outputs out(config.output);
  data::write_series(prepared.data, out.file("dataset.csv"));
  std::vector<experiment::KernelRun> runs;
  for (Family f : config.kernels) {
    runs.push_back(experiment::run_kernel(prepared.data, f, config));
    experiment::write_predictions(out.file("predictions_" + std::string(family_name(f)) + ".csv"), prepared.data,
                                  runs.back().predictions);
  }
  const json metrics = experiment::metrics_json(runs);
  out.write_json("metrics.json", metrics);
  out.write_json("manifest.json", experiment::manifest_json(config, prepared, runs));
  out.commit();
  std::cout << metrics.dump(2) << '\n';
  return 0;
}

int cmd_synth(const CommonOptions& o) {
  auto config = resolve(o);
  config.csv.clear();
  return run_experiment(config);
}

int cmd_compare(const CommonOptions& o) {
  const json defaults = {{"kernels", {"GCSM-CC", "MOSM", "CSM", "SM-LMC"}}};
  return run_experiment(resolve(o, defaults));
}

int cmd_fit(const CommonOptions& o) {
  const auto config = resolve(o);
  const auto prepared = experiment::prepare_data(config);
  Outputs out(config.output);
  const Family family = config.kernels.front();
  std::vector<experiment::KernelRun> runs;
  runs.push_back(experiment::run_kernel(prepared.data, family, config));
  const json manifest = experiment::manifest_json(config, prepared, runs);
  out.write_json("model.json", experiment::model_to_json(runs.front(), prepared.data, manifest));
  out.write_json("manifest.json", manifest);
  out.commit();
  std::cout << family_name(family) << " NLML " << runs.front().result->model.nlml() << '\n';
  return 0;
}

// `task,x` rows; task is a label or a zero-based index.
void read_inputs(const fs::path& path, const TaskedDataset& data, std::vector<int>& tasks, std::vector<double>& x) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row", 1);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(path.string() + ": expected 'task,x'", lineno);
    const std::string task = line.substr(0, comma);
    int index = data.task_index(task);
    try {
      if (index < 0) index = static_cast<int>(data::parse_number(task));
      x.push_back(data::parse_number(line.substr(comma + 1)));
    } catch (const InputError& e) {
      throw ParseError(path.string() + ": " + e.what(), lineno);
    }
    tasks.push_back(index);
  }
}

int cmd_predict(const std::string& model_path, const std::string& inputs, const std::string& out_dir) {
  const auto loaded = experiment::model_from_json(read_json(model_path));
  std::vector<int> tasks;
  std::vector<double> x;
  std::vector<std::optional<double>> truth;
  if (inputs.empty()) {
    for (std::size_t m = 0; m < loaded.data.num_tasks(); ++m) {
      const auto& t = loaded.data.tasks[m];
      for (std::size_t i = 0; i < t.size(); ++i) {
        tasks.push_back(static_cast<int>(m));
        x.push_back(t.x[i]);
        truth.emplace_back(t.y[i]);
      }
    }
  } else {
    read_inputs(inputs, loaded.data, tasks, x);
    truth.resize(x.size());
  }
  const auto pred = experiment::predict_original(loaded, tasks, x);
  Outputs out(out_dir.empty() ? fs::path(".") : fs::path(out_dir));
  std::ofstream csv(out.file("predictions.csv"), std::ios::binary);
  csv << "task,x,y_true,y_mean,y_std,is_train\n";
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& t = loaded.data.tasks[tasks[i]];
    const auto it = std::find(t.x.begin(), t.x.end(), x[i]);
    const bool train = it != t.x.end() && t.train[static_cast<std::size_t>(it - t.x.begin())] != 0;
    csv << t.label << ',' << data::format_number(x[i]) << ','
        << (truth[i] ? data::format_number(*truth[i]) : std::string()) << ',' << data::format_number(pred[i].mean)
        << ',' << data::format_number(std::sqrt(pred[i].variance)) << ',' << (train ? 1 : 0) << '\n';
  }
  csv.close();
  if (!csv) throw InputError("failed writing predictions");
  out.commit();
  return 0;
}

int cmd_inspect_init(const CommonOptions& o) {
  const auto config = resolve(o);
  const auto prepared = experiment::prepare_data(config);
  const auto standardization = experiment::Standardization::fit(prepared.data, config.standardize);
  const TaskedDataset z = standardization.apply(prepared.data);
  Outputs out(config.output);

  std::ofstream csv(out.file("periodogram.csv"), std::ios::binary);
  csv << "task,frequency,power\n";
  for (const auto& t : z.tasks) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t.train[i] == 0) continue;
      x.push_back(t.x[i]);
      y.push_back(t.y[i]);
    }
    const auto d = init::series_periodogram(x, y);
    for (std::size_t k = 0; k < d.frequency.size(); ++k) {
      csv << t.label << ',' << data::format_number(d.frequency[k]) << ',' << data::format_number(d.power[k]) << '\n';
    }
  }
  csv.close();
  if (!csv) throw InputError("failed writing periodogram");

  const Family family = config.kernels.front();
  const auto shape = experiment::shape_for(family, config, static_cast<int>(z.num_tasks()));
  const auto ini = init::init_hyperparams(z, shape, experiment::init_seed(config), config.init);
  json comps = json::array();
  for (const auto& g : ini.gmm.components) comps.push_back({{"weight", g.weight}, {"mean", g.mean}, {"variance", g.variance}});
  const Eigen::VectorXd params = flatten(ini.spec);
  json gmm = {{"kernel", std::string(family_name(family))},
              {"components", comps},
              {"log_likelihood", ini.gmm.log_likelihood},
              {"em_restarts", ini.gmm.restarts},
              {"target_variance", ini.target_variance},
              {"interpolated_fraction", ini.interpolated_fraction},
              {"init_params", std::vector<double>(params.data(), params.data() + params.size())}};
  out.write_json("gmm.json", gmm);
  out.write_json("manifest.json", {{"library", "mtgp"},
                                   {"version", std::string(experiment::version())},
                                   {"config", experiment::to_json(config)},
                                   {"data", prepared.provenance}});
  out.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-task Gaussian process experiments"};
  app.set_version_flag("--version", std::string(experiment::version()));
  app.require_subcommand(1);

  CommonOptions synth_opts, compare_opts, fit_opts, inspect_opts;
  auto* synth = app.add_subcommand("synth", "Synthetic signal/integral/derivative benchmark");
  add_common(synth, synth_opts);
  auto* compare = app.add_subcommand("compare", "Compare kernels on the configured data and splits");
  add_common(compare, compare_opts);
  auto* fit = app.add_subcommand("fit", "Train one kernel and save the model");
  add_common(fit, fit_opts);
  auto* inspect = app.add_subcommand("inspect-init", "Write periodograms and the fitted spectral mixture");
  add_common(inspect, inspect_opts);

  std::string model_path, inputs, predict_out;
  auto* predict = app.add_subcommand("predict", "Predict from a saved model");
  predict->add_option("--model", model_path, "Model JSON written by fit")->required()->check(CLI::ExistingFile);
  predict->add_option("--inputs", inputs, "CSV with task,x rows (default: the model's data)")->check(CLI::ExistingFile);
  predict->add_option("--out", predict_out, "Output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (synth->parsed()) return cmd_synth(synth_opts);
    if (compare->parsed()) return cmd_compare(compare_opts);
    if (fit->parsed()) return cmd_fit(fit_opts);
    if (inspect->parsed()) return cmd_inspect_init(inspect_opts);
    if (predict->parsed()) return cmd_predict(model_path, inputs, predict_out);
  } catch (const mtgp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
