// Copyright 2026 The iterflow Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Built-in operator registry.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "iterflow/dsl.hpp"
#include "iterflow/error.hpp"
#include "iterflow/graph.hpp"
#include "iterflow/value.hpp"

namespace iterflow {

// --- CSV ---------------------------------------------------------------------

/// RFC 4180 style: comma separated, optional double quotes with "" escapes,
/// CRLF or LF line ends, first record is the header. A column is numeric if
/// every cell parses as a decimal number.
inline Table ParseCsv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && !field_started && field.empty()) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') continue;
      end_record();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("csv: unterminated quoted field");
  if (!field.empty() || !record.empty() || field_started) end_record();
  if (records.empty()) throw DataError("csv: missing header row");

  const auto& header = records.front();
  std::set<std::string> seen;
  for (const auto& h : header)
    if (!seen.insert(h).second) throw DataError("csv: duplicate column '" + h + "'");
  for (std::size_t r = 1; r < records.size(); ++r)
    if (records[r].size() != header.size())
      throw DataError("csv: record " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, expected " + std::to_string(header.size()));

  Table table;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::vector<double> nums;
    bool numeric = records.size() > 1;
    for (std::size_t r = 1; r < records.size() && numeric; ++r) {
      const auto& cell = records[r][c];
      double v = 0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      numeric = !cell.empty() && res.ec == std::errc() && res.ptr == cell.data() + cell.size();
      nums.push_back(v);
    }
    Column col;
    col.name = header[c];
    if (numeric) {
      col.cells = std::move(nums);
    } else {
      std::vector<std::string> strs;
      for (std::size_t r = 1; r < records.size(); ++r) strs.push_back(records[r][c]);
      col.cells = std::move(strs);
    }
    table.columns.push_back(std::move(col));
  }
  return table;
}

// --- Logistic regression -----------------------------------------------------

/// Row-major design matrix with 0/1 targets.
struct LogisticData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<double> y;
};

inline double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

inline double Softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Mean logistic loss plus (reg / 2) * |w|^2. The bias is not penalised.
inline double LogisticLoss(const LogisticData& d, const std::vector<double>& w, double b, double reg) {
  double loss = 0;
  for (std::size_t i = 0; i < d.rows; ++i) {
    double z = b;
    for (std::size_t j = 0; j < d.cols; ++j) z += w[j] * d.x[i * d.cols + j];
    loss += Softplus(z) - d.y[i] * z;
  }
  double norm = 0;
  for (double v : w) norm += v * v;
  return (d.rows ? loss / static_cast<double>(d.rows) : 0.0) + 0.5 * reg * norm;
}

struct LogisticGradient {
  std::vector<double> weights;
  double bias = 0;
};

inline LogisticGradient LogisticLossGradient(const LogisticData& d, const std::vector<double>& w, double b,
                                             double reg) {
  LogisticGradient g{std::vector<double>(d.cols, 0.0), 0.0};
  for (std::size_t i = 0; i < d.rows; ++i) {
    double z = b;
    for (std::size_t j = 0; j < d.cols; ++j) z += w[j] * d.x[i * d.cols + j];
    double err = Sigmoid(z) - d.y[i];
    for (std::size_t j = 0; j < d.cols; ++j) g.weights[j] += err * d.x[i * d.cols + j];
    g.bias += err;
  }
  const double inv = d.rows ? 1.0 / static_cast<double>(d.rows) : 0.0;
  for (std::size_t j = 0; j < d.cols; ++j) g.weights[j] = g.weights[j] * inv + reg * w[j];
  g.bias *= inv;
  return g;
}

/// Full-batch gradient descent from zero weights.
inline LogisticGradient TrainLogistic(const LogisticData& d, double reg, int iters, double lr) {
  LogisticGradient params{std::vector<double>(d.cols, 0.0), 0.0};
  for (int it = 0; it < iters; ++it) {
    auto g = LogisticLossGradient(d, params.weights, params.bias, reg);
    for (std::size_t j = 0; j < d.cols; ++j) params.weights[j] -= lr * g.weights[j];
    params.bias -= lr * g.bias;
  }
  return params;
}

// --- Registry ----------------------------------------------------------------

struct OperatorContext {
  std::filesystem::path data_root = ".";
  bool sim_clock = false;  // sim operators advance a virtual clock instead of sleeping
};

using OperatorFn =
    std::function<Value(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext& ctx)>;

struct OperatorSpec {
  std::size_t min_parents = 0;
  std::size_t max_parents = 0;
  std::set<std::string> keys;  // accepted keyword options
  bool open_keys = false;      // accept any keyword
  OperatorFn fn;
};

namespace ops {

template <typename T>
const T& As(const Value* v, const DagNode& node, std::size_t i) {
  if (const auto* t = std::get_if<T>(v)) return *t;
  throw DataError("parent " + std::to_string(i) + " of " + node.func + " is a " + ValueTypeName(*v));
}

inline std::optional<std::string> StringOpt(const DagNode& node, const std::string& key) {
  const Literal* v = node.Option(key);
  if (!v) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(v)) return *s;
  if (const auto* sym = std::get_if<Symbol>(v)) return sym->name;
  throw DataError("option '" + key + "' must be a string");
}

inline double NumberOpt(const DagNode& node, const std::string& key, double fallback) {
  const Literal* v = node.Option(key);
  if (!v) return fallback;
  if (const auto* d = std::get_if<double>(v)) return *d;
  throw DataError("option '" + key + "' must be a number");
}

/// Column name: first positional string literal, or the `col` option.
inline std::string ColumnArg(const DagNode& node) {
  for (const auto& a : node.Literals())
    if (const auto* s = std::get_if<std::string>(&a)) return *s;
  if (auto c = StringOpt(node, "col")) return *c;
  throw DataError(node.func + " needs a column name");
}

inline const Column& RequireColumn(const Table& t, const std::string& name) {
  if (const auto* c = t.Find(name)) return *c;
  throw DataError("unknown column '" + name + "'");
}

inline std::vector<std::string> CellText(const Column& c) {
  if (const auto* s = std::get_if<std::vector<std::string>>(&c.cells)) return *s;
  std::vector<std::string> out;
  for (double d : std::get<std::vector<double>>(c.cells)) out.push_back(FormatNumber(d));
  return out;
}

inline Value Csv(const std::vector<const Value*>&, const DagNode& node, const OperatorContext& ctx) {
  auto path = SourcePath(node);
  if (!path) throw DataError("csv needs a path");
  std::filesystem::path p(*path);
  if (p.is_relative()) p = ctx.data_root / p;
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read '" + p.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseCsv(buf.str());
}

inline Value Numeric(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  const auto& t = As<Table>(parents[0], node, 0);
  const std::string name = ColumnArg(node);
  const auto& col = RequireColumn(t, name);
  if (!col.numeric()) throw DataError("column '" + name + "' is not numeric");
  FeatureMatrix m;
  m.rows = t.rows();
  m.names = {name};
  m.origins = {name};
  m.data = std::get<std::vector<double>>(col.cells);
  return m;
}

inline Value Categorical(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  const auto& t = As<Table>(parents[0], node, 0);
  const std::string name = ColumnArg(node);
  const auto cells = CellText(RequireColumn(t, name));
  std::set<std::string> distinct(cells.begin(), cells.end());
  std::vector<std::string> levels(distinct.begin(), distinct.end());
  FeatureMatrix m;
  m.rows = cells.size();
  for (const auto& lv : levels) {
    m.names.push_back(name + "=" + lv);
    m.origins.push_back(name);
  }
  m.data.assign(m.rows * levels.size(), 0.0);
  for (std::size_t r = 0; r < cells.size(); ++r) {
    auto j = std::lower_bound(levels.begin(), levels.end(), cells[r]) - levels.begin();
    m.data[r * levels.size() + static_cast<std::size_t>(j)] = 1.0;
  }
  return m;
}

inline Value Bucketize(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  const auto& t = As<Table>(parents[0], node, 0);
  const std::string name = ColumnArg(node);
  std::vector<double> edges;
  for (const auto& a : node.Literals())
    if (const auto* d = std::get_if<double>(&a)) edges.push_back(*d);
  if (edges.empty()) throw DataError("bucketize needs at least one edge");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i - 1] < edges[i])) throw DataError("bucketize edges must be strictly increasing");
  const auto& col = RequireColumn(t, name);
  if (!col.numeric()) throw DataError("column '" + name + "' is not numeric");
  const auto& values = std::get<std::vector<double>>(col.cells);

  FeatureMatrix m;
  m.rows = values.size();
  const std::size_t k = edges.size() + 1;
  for (std::size_t b = 0; b < k; ++b) {
    std::string lo = b == 0 ? "-inf" : FormatNumber(edges[b - 1]);
    std::string hi = b == k - 1 ? "inf" : FormatNumber(edges[b]);
    m.names.push_back(name + "[" + lo + "," + hi + ")");
    m.origins.push_back(name);
  }
  m.data.assign(m.rows * k, 0.0);
  for (std::size_t r = 0; r < values.size(); ++r) {
    auto b = std::upper_bound(edges.begin(), edges.end(), values[r]) - edges.begin();
    m.data[r * k + static_cast<std::size_t>(b)] = 1.0;
  }
  return m;
}

inline Value Union(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  std::vector<const FeatureMatrix*> parts;
  for (std::size_t i = 0; i < parents.size(); ++i) parts.push_back(&As<FeatureMatrix>(parents[i], node, i));
  FeatureMatrix m;
  m.rows = parts.front()->rows;
  std::set<std::string> seen;
  for (const auto* p : parts) {
    if (p->rows != m.rows) throw DataError("union of matrices with different row counts");
    for (std::size_t j = 0; j < p->cols(); ++j) {
      if (!seen.insert(p->names[j]).second) throw DataError("duplicate feature column '" + p->names[j] + "'");
      m.names.push_back(p->names[j]);
      m.origins.push_back(p->origins[j]);
    }
  }
  m.data.reserve(m.rows * m.names.size());
  for (std::size_t r = 0; r < m.rows; ++r)
    for (const auto* p : parts)
      for (std::size_t j = 0; j < p->cols(); ++j) m.data.push_back(p->at(r, j));
  return m;
}

/// Splits a matrix into the design matrix for `features` and 0/1 targets
/// from column `label` (empty targets if the label column is absent).
inline LogisticData Design(const FeatureMatrix& m, const std::vector<std::string>& features,
                           const std::string& label, bool require_label) {
  LogisticData d;
  d.rows = m.rows;
  d.cols = features.size();
  std::vector<std::size_t> idx;
  for (const auto& f : features) {
    auto j = m.IndexOf(f);
    if (!j) throw DataError("feature column '" + f + "' missing");
    idx.push_back(*j);
  }
  d.x.reserve(d.rows * d.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t j : idx) d.x.push_back(m.at(r, j));
  auto lj = m.IndexOf(label);
  if (!lj) {
    if (require_label) throw DataError("label column '" + label + "' missing");
    return d;
  }
  for (std::size_t r = 0; r < m.rows; ++r) {
    double v = m.at(r, *lj);
    if (v != 0.0 && v != 1.0) throw DataError("label column '" + label + "' is not binary");
    d.y.push_back(v);
  }
  return d;
}

inline Value Logreg(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  const auto& m = As<FeatureMatrix>(parents[0], node, 0);
  auto label = StringOpt(node, "label");
  if (!label) throw DataError("logreg needs label=");
  auto lj = m.IndexOf(*label);
  if (!lj) throw DataError("label column '" + *label + "' missing");
  const std::string& origin = m.origins[*lj];
  Model model;
  model.label = *label;
  for (std::size_t j = 0; j < m.cols(); ++j)
    if (m.origins[j] != origin) model.features.push_back(m.names[j]);
  if (model.features.empty()) throw DataError("logreg has no feature columns besides the label");
  const double reg = NumberOpt(node, "reg", 0.0);
  const double iters = NumberOpt(node, "iters", 100);
  const double lr = NumberOpt(node, "lr", 0.1);
  if (reg < 0 || iters < 0 || lr <= 0 || iters != std::floor(iters))
    throw DataError("logreg needs reg >= 0, integer iters >= 0, lr > 0");
  // Zero initialisation and full-batch steps make training independent of
  // `seed`; the option is accepted so it participates in the signature.
  auto trained = TrainLogistic(Design(m, model.features, *label, true), reg, static_cast<int>(iters), lr);
  model.weights = std::move(trained.weights);
  model.bias = trained.bias;
  return model;
}

inline Predictions Score(const Model& model, const FeatureMatrix& m) {
  LogisticData d = Design(m, model.features, model.label, false);
  Predictions p;
  p.label = model.label;
  p.labels = d.y;
  for (std::size_t r = 0; r < d.rows; ++r) {
    double z = model.bias;
    for (std::size_t j = 0; j < d.cols; ++j) z += model.weights[j] * d.x[r * d.cols + j];
    p.scores.push_back(Sigmoid(z));
  }
  return p;
}

inline Value Predict(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  return Score(As<Model>(parents[0], node, 0), As<FeatureMatrix>(parents[1], node, 1));
}

/// Predictions from either a Predictions parent or a (Model, FeatureMatrix) pair.
inline Predictions EvalInput(const std::vector<const Value*>& parents, const DagNode& node) {
  Predictions p;
  if (parents.size() == 1) {
    p = As<Predictions>(parents[0], node, 0);
  } else {
    p = Score(As<Model>(parents[0], node, 0), As<FeatureMatrix>(parents[1], node, 1));
  }
  if (auto label = StringOpt(node, "label"); label && *label != p.label)
    throw DataError("label '" + *label + "' does not match predictions for '" + p.label + "'");
  if (p.labels.size() != p.scores.size()) throw DataError("predictions carry no true labels");
  return p;
}

inline Value Accuracy(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  Predictions p = EvalInput(parents, node);
  if (p.scores.empty()) throw DataError("accuracy over zero rows");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.scores.size(); ++i) correct += (p.scores[i] >= 0.5) == (p.labels[i] == 1.0);
  return Scalar{static_cast<double>(correct) / static_cast<double>(p.scores.size())};
}

inline Value F1(const std::vector<const Value*>& parents, const DagNode& node, const OperatorContext&) {
  Predictions p = EvalInput(parents, node);
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < p.scores.size(); ++i) {
    bool pred = p.scores[i] >= 0.5;
    bool truth = p.labels[i] == 1.0;
    tp += pred && truth;
    fp += pred && !truth;
    fn += !pred && truth;
  }
  double denom = 2 * tp + fp + fn;
  return Scalar{denom == 0 ? 0.0 : 2 * tp / denom};
}

inline Value Sim(const std::vector<const Value*>&, const DagNode& node, const OperatorContext& ctx) {
  const double cost_ms = NumberOpt(node, "cost_ms", 0);
  const double size_kb = NumberOpt(node, "size_kb", 0);
  if (cost_ms < 0 || size_kb < 0) throw DataError("sim needs cost_ms >= 0 and size_kb >= 0");
  if (!ctx.sim_clock) std::this_thread::sleep_for(std::chrono::microseconds(static_cast<std::int64_t>(cost_ms * 1000)));
  return SimBlob{static_cast<std::uint64_t>(std::llround(size_kb * 1024)), NumberOpt(node, "value", 0)};
}

}  // namespace ops

inline const std::map<std::string, OperatorSpec>& BuiltinOperators() {
  constexpr std::size_t kMany = static_cast<std::size_t>(-1);
  static const std::map<std::string, OperatorSpec> kOps = {
      {"csv", {0, 0, {"path"}, false, ops::Csv}},
      {"numeric", {1, 1, {"col"}, false, ops::Numeric}},
      {"categorical", {1, 1, {"col"}, false, ops::Categorical}},
      {"bucketize", {1, 1, {"col"}, false, ops::Bucketize}},
      {"union", {1, kMany, {}, false, ops::Union}},
      {"logreg", {1, 1, {"label", "reg", "iters", "lr", "seed"}, false, ops::Logreg}},
      {"predict", {2, 2, {}, false, ops::Predict}},
      {"accuracy", {1, 2, {"label"}, false, ops::Accuracy}},
      {"f1", {1, 2, {"label"}, false, ops::F1}},
      {"sim", {0, kMany, {"cost_ms", "size_kb", "value"}, true, ops::Sim}},
  };
  return kOps;
}

/// Checks arity and options, then runs the node's operator. Throws DataError.
inline Value InvokeOperator(const DagNode& node, const std::vector<const Value*>& parents,
                            const OperatorContext& ctx) {
  const auto& registry = BuiltinOperators();
  auto it = registry.find(node.func);
  if (it == registry.end()) throw DataError("unknown operator '" + node.func + "'");
  const OperatorSpec& spec = it->second;
  if (parents.size() < spec.min_parents || parents.size() > spec.max_parents)
    throw DataError(node.func + ": wrong number of parents (" + std::to_string(parents.size()) + ")");
  if (!spec.open_keys)
    for (const auto& [key, value] : node.options)
      if (!spec.keys.contains(key)) throw DataError(node.func + ": unknown option '" + key + "'");
  return spec.fn(parents, node, ctx);
}

}  // namespace iterflow
