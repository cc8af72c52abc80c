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

#include "mtgp/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>

#include "mtgp/errors.hpp"
#include "mtgp/gp.hpp"
#include "mtgp/multitask.hpp"

namespace mtgp {

std::size_t TaskedDataset::num_points() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tasks) n += t.size();
  return n;
}

std::size_t TaskedDataset::num_train() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tasks) n += static_cast<std::size_t>(std::count(t.train.begin(), t.train.end(), 1));
  return n;
}

int TaskedDataset::task_index(const std::string& label) const {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].label == label) return static_cast<int>(i);
  }
  return -1;
}

void TaskedDataset::validate() const {
  if (tasks.empty()) throw InputError("dataset has no tasks");
  std::set<std::string> labels;
  for (const auto& t : tasks) {
    if (!labels.insert(t.label).second) throw InputError("duplicate task label '" + t.label + "'");
    if (t.y.size() != t.x.size() || t.train.size() != t.x.size()) {
      throw DimensionError("task '" + t.label + "': inputs, observations and train mask differ in length");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!std::isfinite(t.x[i]) || !std::isfinite(t.y[i])) {
        throw InputError("task '" + t.label + "': non-finite value at index " + std::to_string(i));
      }
      if (i > 0 && !(t.x[i] > t.x[i - 1])) {
        throw InputError("task '" + t.label + "': inputs are not strictly increasing at index " + std::to_string(i));
      }
    }
  }
}

Observations stack(const TaskedDataset& data, Subset subset) {
  data.validate();
  std::vector<double> x, y;
  Observations obs;
  obs.num_tasks = static_cast<int>(data.num_tasks());
  for (std::size_t m = 0; m < data.tasks.size(); ++m) {
    const auto& t = data.tasks[m];
    for (std::size_t i = 0; i < t.size(); ++i) {
      const bool train = t.train[i] != 0;
      if ((subset == Subset::train && !train) || (subset == Subset::test && train)) continue;
      x.push_back(t.x[i]);
      y.push_back(t.y[i]);
      obs.task.push_back(static_cast<int>(m));
    }
  }
  obs.x = Eigen::Map<const Eigen::MatrixXd>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  obs.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
  return obs;
}

}  // namespace mtgp

namespace mtgp::data {

namespace {

void check_grid(std::span<const double> y, std::span<const double> x) {
  if (x.size() != y.size()) {
    throw DimensionError("x has " + std::to_string(x.size()) + " entries, y has " + std::to_string(y.size()));
  }
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw InputError("x must be strictly increasing");
  }
}

}  // namespace

SyntheticDataset generate_synthetic(std::uint64_t seed, const SyntheticConfig& config) {
  if (config.points < 3) throw InputError("synthetic data needs at least 3 points");
  if (config.components < 1) throw InputError("synthetic data needs at least one component");
  if (!(config.upper > config.lower)) throw InputError("synthetic interval is empty");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(0.5, 1.5), mean(0.05, 0.4), variance(0.001, 0.01);

  SyntheticDataset out;
  for (int q = 0; q < config.components; ++q) {
    const double w = weight(rng);
    const double mu = mean(rng);
    const double var = variance(rng);
    out.signal_components.push_back(kernel::ComponentParams::spectral(w, {mu}, {var}));
  }

  std::vector<double> x(config.points);
  const double step = (config.upper - config.lower) / static_cast<double>(config.points - 1);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = config.lower + step * static_cast<double>(i);
  x.back() = config.upper;

  KernelSpec spec;
  spec.shape = {Family::sm_lmc, config.components, 1, 1};
  SmLmcParams block;
  block.components = out.signal_components;
  block.coregionalization.factors.assign(config.components, Eigen::MatrixXd::Ones(1, 1));
  spec.params = block;

  Observations inputs;
  inputs.x = Eigen::Map<const Eigen::MatrixXd>(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  inputs.task.assign(x.size(), 0);
  inputs.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd f = gp::sample_prior(spec, inputs, rng());
  const std::vector<double> signal(f.data(), f.data() + f.size());

  const std::vector<std::uint8_t> all(x.size(), 1);
  out.data.tasks.push_back({"signal", x, signal, all});
  out.data.tasks.push_back({"integral", x, cumulative_integral(signal, x), all});
  out.data.tasks.push_back({"derivative", x, derivative(signal, x), all});
  return out;
}

std::vector<double> cumulative_integral(std::span<const double> y, std::span<const double> x) {
  check_grid(y, x);
  std::vector<double> out(y.size(), 0.0);
  for (std::size_t i = 1; i < y.size(); ++i) out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

std::vector<double> derivative(std::span<const double> y, std::span<const double> x) {
  check_grid(y, x);
  const std::size_t n = y.size();
  if (n < 2) throw InputError("derivative needs at least 2 points");
  std::vector<double> d(n);
  if (n == 2) {
    d[0] = d[1] = (y[1] - y[0]) / (x[1] - x[0]);
    return d;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double hs = x[i] - x[i - 1];
    const double hd = x[i + 1] - x[i];
    d[i] = (hs * hs * y[i + 1] + (hd * hd - hs * hs) * y[i] - hd * hd * y[i - 1]) / (hs * hd * (hd + hs));
  }
  {
    const double h1 = x[1] - x[0];
    const double h2 = x[2] - x[1];
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y[0] + (h1 + h2) / (h1 * h2) * y[1] - h1 / (h2 * (h1 + h2)) * y[2];
  }
  {
    const double h1 = x[n - 2] - x[n - 3];
    const double h2 = x[n - 1] - x[n - 2];
    d[n - 1] = h2 / (h1 * (h1 + h2)) * y[n - 3] - (h1 + h2) / (h1 * h2) * y[n - 2] +
               (2.0 * h2 + h1) / (h2 * (h1 + h2)) * y[n - 1];
  }
  return d;
}

std::string_view split_name(SplitStrategy s) noexcept {
  switch (s) {
    case SplitStrategy::random_half: return "random_half";
    case SplitStrategy::first_half: return "first_half";
    case SplitStrategy::last_half: return "last_half";
  }
  return "?";
}

SplitStrategy parse_split(std::string_view name) {
  for (auto s : {SplitStrategy::random_half, SplitStrategy::first_half, SplitStrategy::last_half}) {
    if (name == split_name(s)) return s;
  }
  throw InputError("unknown split strategy '" + std::string(name) + "' (random_half, first_half, last_half)");
}

TaskedDataset split(TaskedDataset data, std::size_t task, SplitStrategy strategy, std::uint64_t seed) {
  if (task >= data.tasks.size()) throw InputError("split: task " + std::to_string(task) + " does not exist");
  auto& t = data.tasks[task];
  const std::size_t n = t.size();
  const std::size_t half = n / 2;
  t.train.assign(n, 0);
  switch (strategy) {
    case SplitStrategy::first_half:
      std::fill_n(t.train.begin(), half, 1);
      break;
    case SplitStrategy::last_half:
      std::fill(t.train.end() - static_cast<std::ptrdiff_t>(half), t.train.end(), 1);
      break;
    case SplitStrategy::random_half: {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      std::mt19937_64 rng(seed);
      std::shuffle(idx.begin(), idx.end(), rng);
      for (std::size_t k = 0; k < half; ++k) t.train[idx[k]] = 1;
      break;
    }
  }
  return data;
}

double mae(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size()) throw DimensionError("mae: predictions and targets differ in length");
  if (predicted.empty()) throw InputError("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) sum += std::abs(predicted[i] - actual[i]);
  return sum / static_cast<double>(predicted.size());
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InputError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  const char* first = text.data() + pos;
  const auto res = std::from_chars(first, first + len, out);
  return res.ec == std::errc() && res.ptr == first + len;
}

bool looks_like_date(std::string_view text) {
  return text.size() >= 10 && text[4] == '-' && text[7] == '-';
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const auto fail = [&] { return InputError("not an ISO-8601 timestamp: '" + std::string(text) + "'"); };
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!looks_like_date(text) || !read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d)) {
    throw fail();
  }
  std::size_t pos = 10;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    if (!read_int(text, pos + 1, 2, h) || pos + 3 >= text.size() || text[pos + 3] != ':' ||
        !read_int(text, pos + 4, 2, mi)) {
      throw fail();
    }
    pos += 6;
    if (pos < text.size() && text[pos] == ':') {
      if (!read_int(text, pos + 1, 2, s)) throw fail();
      pos += 3;
    }
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) throw fail();
  const year_month_day date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!date.ok() || h > 23 || mi > 59 || s > 59) throw fail();
  const auto t = sys_days{date} + hours{h} + minutes{mi} + seconds{s};
  return t.time_since_epoch().count();
}

std::string format_timestamp(std::int64_t unix_seconds) {
  using namespace std::chrono;
  const sys_seconds t{seconds{unix_seconds}};
  const auto day_start = floor<days>(t);
  const year_month_day date{day_start};
  const hh_mm_ss tod{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

namespace {

struct RawRow {
  std::string label;
  double x = 0.0;             // numeric input
  std::int64_t seconds = 0;   // ISO input
  double value = 0.0;
  std::size_t line = 0;
  std::string file;
};

std::vector<std::string> split_fields(const std::string& line, const std::string& file, std::size_t lineno) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ParseError(file + ": unterminated quote", lineno);
  return fields;
}

bool is_missing(std::string_view v) {
  while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
  while (!v.empty() && v.back() == ' ') v.remove_suffix(1);
  if (v.empty()) return true;
  std::string lower(v);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return lower == "nan";
}

// Returns true when timestamps were ISO-8601.
bool read_rows(const std::filesystem::path& path, const SeriesSchema& schema, const std::string& fallback_label,
               std::vector<RawRow>& rows, LoadReport& report) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  const std::string file = path.string();
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(file + ": missing header row", 1);
  ++lineno;
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line, file, lineno);
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto ts_col = column(schema.timestamp);
  const auto value_col = column(schema.value);
  const auto task_col = schema.task.empty() ? std::nullopt : column(schema.task);
  if (!ts_col || !value_col) {
    throw ParseError(file + ": header must contain '" + schema.timestamp + "' and '" + schema.value + "'", 1);
  }
  std::optional<bool> iso;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto fields = split_fields(line, file, lineno);
    if (fields.size() != header.size()) {
      throw ParseError(file + ": expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       lineno);
    }
    ++report.rows;
    if (is_missing(fields[*value_col])) {
      ++report.dropped;
      continue;
    }
    RawRow row;
    row.line = lineno;
    row.file = file;
    row.label = task_col ? fields[*task_col] : fallback_label;
    if (row.label.empty()) throw ParseError(file + ": empty task label", lineno);
    try {
      row.value = parse_number(fields[*value_col]);
      if (!std::isfinite(row.value)) throw InputError("non-finite value");
      const std::string& ts = fields[*ts_col];
      const bool row_iso = looks_like_date(ts);
      if (iso && *iso != row_iso) throw InputError("timestamp format differs from earlier rows");
      iso = row_iso;
      if (row_iso) row.seconds = parse_timestamp(ts);
      else row.x = parse_number(ts);
      if (!row_iso && !std::isfinite(row.x)) throw InputError("non-finite timestamp");
    } catch (const InputError& e) {
      throw ParseError(file + ": " + e.what(), lineno);
    }
    rows.push_back(std::move(row));
  }
  return iso.value_or(false);
}

TaskedDataset build(std::vector<RawRow> rows, bool iso) {
  TaskedDataset data;
  if (rows.empty()) throw InputError("no usable rows in series input");
  if (iso) {
    std::int64_t origin = rows.front().seconds;
    for (const auto& r : rows) origin = std::min(origin, r.seconds);
    data.time_origin = origin;
    for (auto& r : rows) r.x = static_cast<double>(r.seconds - origin) / 3600.0;
  }
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const RawRow*>> grouped;
  for (const auto& r : rows) {
    auto [it, inserted] = index.emplace(r.label, grouped.size());
    if (inserted) {
      grouped.emplace_back();
      data.tasks.push_back({r.label, {}, {}, {}});
    }
    grouped[it->second].push_back(&r);
  }
  for (std::size_t m = 0; m < grouped.size(); ++m) {
    auto& g = grouped[m];
    std::stable_sort(g.begin(), g.end(), [](const RawRow* a, const RawRow* b) { return a->x < b->x; });
    auto& t = data.tasks[m];
    for (const RawRow* r : g) {
      if (!t.x.empty() && r->x == t.x.back()) {
        throw ParseError(r->file + ": duplicate timestamp in task '" + t.label + "'", r->line);
      }
      t.x.push_back(r->x);
      t.y.push_back(r->value);
    }
    t.train.assign(t.x.size(), 1);
  }
  return data;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

TaskedDataset load_series(const std::filesystem::path& path, const SeriesSchema& schema, LoadReport* report) {
  LoadReport local;
  std::vector<RawRow> rows;
  const std::string label = schema.default_label.empty() ? path.stem().string() : schema.default_label;
  const bool iso = read_rows(path, schema, label, rows, local);
  if (report != nullptr) *report = local;
  return build(std::move(rows), iso);
}

TaskedDataset load_series(std::span<const std::filesystem::path> paths, const SeriesSchema& schema,
                          LoadReport* report) {
  LoadReport local;
  std::vector<RawRow> rows;
  std::optional<bool> iso;
  SeriesSchema per_file = schema;
  per_file.task.clear();
  for (const auto& p : paths) {
    const bool file_iso = read_rows(p, per_file, p.stem().string(), rows, local);
    if (iso && *iso != file_iso) throw InputError("series files mix ISO and numeric timestamps");
    iso = file_iso;
  }
  if (report != nullptr) *report = local;
  return build(std::move(rows), iso.value_or(false));
}

void write_series(const TaskedDataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << "timestamp,value,task\n";
  for (const auto& t : data.tasks) {
    const std::string label = csv_field(t.label);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (data.time_origin) {
        out << format_timestamp(*data.time_origin + std::llround(t.x[i] * 3600.0));
      } else {
        out << format_number(t.x[i]);
      }
      out << ',' << format_number(t.y[i]) << ',' << label << '\n';
    }
  }
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

}  // namespace mtgp::data
