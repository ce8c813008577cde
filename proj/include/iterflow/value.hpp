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

// Values flowing between operators, and their on-disk artifact container.
//
// Container layout (little-endian):
//   "IFAV"  u16 format version  u8 tag  payload
// Strings are u64 length + bytes; vectors are u64 count + elements.

#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "iterflow/error.hpp"

namespace iterflow {

static_assert(std::endian::native == std::endian::little, "artifact encoding assumes little-endian");

inline constexpr std::uint16_t kArtifactFormatVersion = 1;
inline constexpr std::string_view kArtifactFormatName = "iterflow-artifact-v1";

struct Column {
  std::string name;
  std::variant<std::vector<double>, std::vector<std::string>> cells;

  std::size_t size() const {
    return std::visit([](const auto& v) { return v.size(); }, cells);
  }
  bool numeric() const { return std::holds_alternative<std::vector<double>>(cells); }

  bool operator==(const Column&) const = default;
};

struct Table {
  std::vector<Column> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }

  const Column* Find(std::string_view name) const {
    for (const auto& c : columns)
      if (c.name == name) return &c;
    return nullptr;
  }

  bool operator==(const Table&) const = default;
};

/// Dense row-major matrix. `origins[j]` names the table column that
/// feature j was derived from (one-hot and bucket columns share an origin).
struct FeatureMatrix {
  std::size_t rows = 0;
  std::vector<std::string> names;
  std::vector<std::string> origins;
  std::vector<double> data;

  std::size_t cols() const noexcept { return names.size(); }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  std::optional<std::size_t> IndexOf(std::string_view name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return j;
    return std::nullopt;
  }

  bool operator==(const FeatureMatrix&) const = default;
};

struct Model {
  std::string label;
  std::vector<std::string> features;
  std::vector<double> weights;
  double bias = 0;

  bool operator==(const Model&) const = default;
};

/// Scores are P(label = 1); `labels` holds the true 0/1 labels.
struct Predictions {
  std::string label;
  std::vector<double> scores;
  std::vector<double> labels;

  bool operator==(const Predictions&) const = default;
};

struct Scalar {
  double value = 0;
  bool operator==(const Scalar&) const = default;
};

/// Output of simulated-cost operators: only its declared size is real.
struct SimBlob {
  std::uint64_t declared_bytes = 0;
  double value = 0;
  bool operator==(const SimBlob&) const = default;
};

using Value = std::variant<Table, FeatureMatrix, Model, Predictions, Scalar, SimBlob>;

inline const char* ValueTypeName(const Value& v) {
  static constexpr const char* kNames[] = {"Table", "FeatureMatrix", "Model", "Predictions", "Scalar", "SimBlob"};
  return kNames[v.index()];
}

namespace detail {

class Writer {
 public:
  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void Put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void Str(std::string_view s) {
    Put<std::uint64_t>(s.size());
    out_.append(s);
  }
  void Doubles(const std::vector<double>& v) {
    Put<std::uint64_t>(v.size());
    for (double d : v) Put(d);
  }
  void Strings(const std::vector<std::string>& v) {
    Put<std::uint64_t>(v.size());
    for (const auto& s : v) Str(s);
  }
  std::string Take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string Str() {
    auto n = Count(1);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<double> Doubles() {
    auto n = Count(sizeof(double));
    std::vector<double> v(n);
    for (auto& d : v) d = Get<double>();
    return v;
  }
  std::vector<std::string> Strings() {
    auto n = Count(sizeof(std::uint64_t));
    std::vector<std::string> v;
    v.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) v.push_back(Str());
    return v;
  }
  bool AtEnd() const { return pos_ == in_.size(); }

 private:
  // Element count, rejected early if the remaining bytes cannot hold it.
  std::uint64_t Count(std::size_t min_elem) {
    auto n = Get<std::uint64_t>();
    if (n > (in_.size() - pos_) / min_elem) throw DataError("corrupt artifact: bad length");
    return n;
  }
  void Need(std::size_t n) {
    if (in_.size() - pos_ < n) throw DataError("corrupt artifact: truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string EncodeValue(const Value& value) {
  detail::Writer w;
  w.Put('I'); w.Put('F'); w.Put('A'); w.Put('V');
  w.Put<std::uint16_t>(kArtifactFormatVersion);
  w.Put<std::uint8_t>(static_cast<std::uint8_t>(value.index()));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Table>) {
          w.Put<std::uint64_t>(v.columns.size());
          for (const auto& c : v.columns) {
            w.Str(c.name);
            if (const auto* nums = std::get_if<std::vector<double>>(&c.cells)) {
              w.Put<std::uint8_t>(0);
              w.Doubles(*nums);
            } else {
              w.Put<std::uint8_t>(1);
              w.Strings(std::get<std::vector<std::string>>(c.cells));
            }
          }
        } else if constexpr (std::is_same_v<T, FeatureMatrix>) {
          w.Put<std::uint64_t>(v.rows);
          w.Strings(v.names);
          w.Strings(v.origins);
          w.Doubles(v.data);
        } else if constexpr (std::is_same_v<T, Model>) {
          w.Str(v.label);
          w.Strings(v.features);
          w.Doubles(v.weights);
          w.Put(v.bias);
        } else if constexpr (std::is_same_v<T, Predictions>) {
          w.Str(v.label);
          w.Doubles(v.scores);
          w.Doubles(v.labels);
        } else if constexpr (std::is_same_v<T, Scalar>) {
          w.Put(v.value);
        } else {
          w.Put(v.declared_bytes);
          w.Put(v.value);
        }
      },
      value);
  return w.Take();
}

inline Value DecodeValue(std::string_view bytes) {
  detail::Reader r(bytes);
  char magic[4];
  for (char& c : magic) c = r.Get<char>();
  if (std::string_view(magic, 4) != "IFAV") throw DataError("not an artifact container");
  if (auto ver = r.Get<std::uint16_t>(); ver != kArtifactFormatVersion)
    throw DataError("unsupported artifact format version " + std::to_string(ver));
  Value out;
  switch (r.Get<std::uint8_t>()) {
    case 0: {
      Table t;
      auto n = r.Get<std::uint64_t>();
      for (std::uint64_t i = 0; i < n; ++i) {
        Column c;
        c.name = r.Str();
        auto type = r.Get<std::uint8_t>();
        if (type == 0) c.cells = r.Doubles();
        else if (type == 1) c.cells = r.Strings();
        else throw DataError("corrupt artifact: bad column type");
        t.columns.push_back(std::move(c));
      }
      out = std::move(t);
      break;
    }
    case 1: {
      FeatureMatrix m;
      m.rows = r.Get<std::uint64_t>();
      m.names = r.Strings();
      m.origins = r.Strings();
      m.data = r.Doubles();
      if (m.origins.size() != m.names.size() || m.data.size() != m.rows * m.names.size())
        throw DataError("corrupt artifact: matrix shape");
      out = std::move(m);
      break;
    }
    case 2: {
      Model m;
      m.label = r.Str();
      m.features = r.Strings();
      m.weights = r.Doubles();
      m.bias = r.Get<double>();
      out = std::move(m);
      break;
    }
    case 3: {
      Predictions p;
      p.label = r.Str();
      p.scores = r.Doubles();
      p.labels = r.Doubles();
      out = std::move(p);
      break;
    }
    case 4: out = Scalar{r.Get<double>()}; break;
    case 5: {
      SimBlob b;
      b.declared_bytes = r.Get<std::uint64_t>();
      b.value = r.Get<double>();
      out = b;
      break;
    }
    default: throw DataError("corrupt artifact: unknown tag");
  }
  if (!r.AtEnd()) throw DataError("corrupt artifact: trailing bytes");
  return out;
}

/// Bytes charged against the storage budget for this value.
inline std::uint64_t Footprint(const Value& v, std::size_t encoded_size) {
  if (const auto* b = std::get_if<SimBlob>(&v)) return b->declared_bytes;
  return encoded_size;
}

}  // namespace iterflow
