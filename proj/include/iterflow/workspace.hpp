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

// On-disk workspace:
//
//   <root>/manifest            format identifiers (JSON)
//   <root>/versions/<id>/      source.wf, record.json (written to a temp
//                              directory, then renamed into place)
//   <root>/artifacts/<hex>     content-addressed artifact containers
//   <root>/artifacts.log       hex<TAB>bytes<TAB>file_bytes<TAB>version
//   <root>/stats.log           hex<TAB>c_us<TAB>l_us<TAB>bytes
//   <root>/lock                writer lock (flock)

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iterflow/digest.hpp"
#include "iterflow/dsl.hpp"
#include "iterflow/error.hpp"
#include "iterflow/record.hpp"
#include "iterflow/value.hpp"

namespace iterflow {

namespace fs = std::filesystem;

inline constexpr std::string_view kWorkspaceFormat = "iterflow-workspace";
inline constexpr int kWorkspaceFormatVersion = 1;

struct VersionEntry {
  int id = 0;
  std::optional<int> parent_id;
  std::string timestamp;  // UTC, ISO 8601
  std::string source;
  std::string source_hash;  // sha256 of the normalized source
  DeclDiff change;          // against the parent version
  RunRecord run;

  bool operator==(const VersionEntry&) const = default;
};

inline void to_json(Json& j, const VersionEntry& v) {
  j = Json{{"id", v.id},
           {"parent_id", v.parent_id ? Json(*v.parent_id) : Json(nullptr)},
           {"timestamp", v.timestamp},
           {"source_hash", v.source_hash},
           {"change", v.change},
           {"run", v.run}};
}

/// `source` is stored beside the record and is not part of the JSON.
inline void from_json(const Json& j, VersionEntry& v) {
  j.at("id").get_to(v.id);
  v.parent_id.reset();
  if (!j.at("parent_id").is_null()) v.parent_id = j.at("parent_id").get<int>();
  j.at("timestamp").get_to(v.timestamp);
  j.at("source_hash").get_to(v.source_hash);
  j.at("change").get_to(v.change);
  j.at("run").get_to(v.run);
}

struct ArtifactEntry {
  std::string path;  // relative to the workspace root
  std::uint64_t bytes = 0;  // budget footprint
  std::uint64_t file_bytes = 0;
  int version = 0;  // version that created it
};

class ArtifactIndex {
 public:
  bool contains(const Digest& d) const { return entries_.contains(d); }
  const ArtifactEntry* find(const Digest& d) const {
    auto it = entries_.find(d);
    return it == entries_.end() ? nullptr : &it->second;
  }
  void insert(const Digest& d, ArtifactEntry e) { entries_.insert_or_assign(d, std::move(e)); }
  std::size_t size() const { return entries_.size(); }
  std::uint64_t total_bytes() const {
    std::uint64_t total = 0;
    for (const auto& [d, e] : entries_) total += e.bytes;
    return total;
  }
  const std::map<Digest, ArtifactEntry>& entries() const { return entries_; }

 private:
  std::map<Digest, ArtifactEntry> entries_;
};

struct StatsEntry {
  std::int64_t compute_us = 0;  // 0: never computed
  std::int64_t load_us = 0;
  std::uint64_t bytes = 0;
};

using StatsIndex = std::map<Digest, StatsEntry>;

struct DiffLine {
  char op = ' ';  // ' ', '-', '+'
  std::string text;
  bool operator==(const DiffLine&) const = default;
};

struct StateChange {
  std::string name;
  std::string from;
  std::string to;
  bool operator==(const StateChange&) const = default;
};

struct MetricDelta {
  std::string name;
  std::optional<double> a;
  std::optional<double> b;
  std::optional<double> delta() const {
    if (a && b) return *b - *a;
    return std::nullopt;
  }
  bool operator==(const MetricDelta&) const = default;
};

struct ComparisonReport {
  int a = 0;
  int b = 0;
  std::vector<DiffLine> source_diff;
  DeclDiff decls;
  std::set<std::string> nodes_added;
  std::set<std::string> nodes_removed;
  std::vector<StateChange> state_changed;
  std::vector<MetricDelta> metrics;
};

inline void to_json(Json& j, const ComparisonReport& r) {
  Json diff = Json::array();
  for (const auto& l : r.source_diff) diff.push_back(Json{{"op", std::string(1, l.op)}, {"text", l.text}});
  Json changed = Json::array();
  for (const auto& c : r.state_changed) changed.push_back(Json{{"name", c.name}, {"from", c.from}, {"to", c.to}});
  Json metrics = Json::array();
  for (const auto& m : r.metrics) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    metrics.push_back(Json{{"name", m.name}, {"a", opt(m.a)}, {"b", opt(m.b)}, {"delta", opt(m.delta())}});
  }
  j = Json{{"a", r.a},
           {"b", r.b},
           {"source_diff", diff},
           {"decls", r.decls},
           {"dag", Json{{"added", r.nodes_added}, {"removed", r.nodes_removed}, {"state_changed", changed}}},
           {"metrics", metrics}};
}

/// Line-level diff from a longest-common-subsequence alignment.
inline std::vector<DiffLine> LineDiff(std::string_view a, std::string_view b) {
  auto split = [](std::string_view s) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < s.size()) {
      auto end = s.find('\n', pos);
      if (end == std::string_view::npos) end = s.size();
      lines.emplace_back(s.substr(pos, end - pos));
      pos = end + 1;
    }
    return lines;
  };
  auto x = split(a), y = split(b);
  const std::size_t n = x.size(), m = y.size();
  std::vector<std::vector<std::uint32_t>> lcs(n + 1, std::vector<std::uint32_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      lcs[i][j] = x[i] == y[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
  std::vector<DiffLine> out;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    if (i < n && j < m && x[i] == y[j]) {
      out.push_back({' ', x[i]});
      ++i, ++j;
    } else if (i < n && (j == m || lcs[i + 1][j] >= lcs[i][j + 1])) {
      out.push_back({'-', x[i++]});
    } else {
      out.push_back({'+', y[j++]});
    }
  }
  return out;
}

/// RAII holder of the workspace writer lock.
class WorkspaceLock {
 public:
  WorkspaceLock() = default;
  explicit WorkspaceLock(const fs::path& file) {
    fd_ = ::open(file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + file.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw LockHeld("workspace is locked by another execution");
    }
  }
  WorkspaceLock(WorkspaceLock&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  WorkspaceLock& operator=(WorkspaceLock&& o) noexcept {
    if (this != &o) {
      Release();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;
  ~WorkspaceLock() { Release(); }

  bool held() const noexcept { return fd_ >= 0; }

 private:
  void Release() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
      fd_ = -1;
    }
  }
  int fd_ = -1;
};

namespace detail {

inline std::string ReadFile(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFound("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string TempSuffix() {
  static std::atomic<unsigned> counter{0};
  return ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
}

/// Write-to-temp then rename, so readers never see a partial file.
inline void WriteFileAtomic(const fs::path& p, std::string_view data) {
  fs::path tmp = p;
  tmp += TempSuffix();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

inline void AppendLine(const fs::path& p, const std::string& line) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + p.string());
  out << line << '\n';
  out.flush();
}

inline std::vector<std::string> SplitTabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto end = line.find('\t', pos);
    out.emplace_back(line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

template <typename T>
bool ParseInt(std::string_view s, T& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::string UtcTimestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

class Workspace {
 public:
  /// Opens an existing workspace or creates an empty one.
  static Workspace Init(const fs::path& root) {
    fs::create_directories(root / "versions");
    fs::create_directories(root / "artifacts");
    if (!fs::exists(root / "manifest")) {
      Json m{{"format", kWorkspaceFormat},
             {"format_version", kWorkspaceFormatVersion},
             {"digest", kDigestAlgorithm},
             {"artifact_format", kArtifactFormatName},
             {"record_encoding", "json"},
             {"content_type", "application/json"}};
      detail::WriteFileAtomic(root / "manifest", m.dump(2) + "\n");
    }
    return Open(root);
  }

  static Workspace Open(const fs::path& root) {
    if (!fs::exists(root / "manifest")) throw NotFound("no workspace at " + root.string());
    Json m = Json::parse(detail::ReadFile(root / "manifest"));
    if (m.value("format", "") != kWorkspaceFormat || m.value("format_version", 0) != kWorkspaceFormatVersion)
      throw Error("unsupported workspace format at " + root.string());
    if (m.value("digest", "") != kDigestAlgorithm) throw Error("workspace uses an unsupported digest");
    return Workspace(root);
  }

  const fs::path& root() const noexcept { return root_; }

  WorkspaceLock Lock() const { return WorkspaceLock(root_ / "lock"); }

  // --- artifacts -------------------------------------------------------------

  /// Entries whose file exists with the recorded size. Later lines win.
  ArtifactIndex LoadArtifactIndex() const {
    ArtifactIndex index;
    std::ifstream in(root_ / "artifacts.log");
    std::string line;
    while (std::getline(in, line)) {
      auto f = detail::SplitTabs(line);
      if (f.size() != 4) continue;
      auto d = Digest::FromHex(f[0]);
      ArtifactEntry e;
      e.path = "artifacts/" + f[0];
      if (!d || !detail::ParseInt(f[1], e.bytes) || !detail::ParseInt(f[2], e.file_bytes) ||
          !detail::ParseInt(f[3], e.version))
        continue;
      std::error_code ec;
      auto size = fs::file_size(root_ / e.path, ec);
      if (ec || size != e.file_bytes) continue;
      index.insert(*d, std::move(e));
    }
    return index;
  }

  bool HasArtifact(const Digest& d) const { return fs::exists(ArtifactPath(d)); }

  std::string ReadArtifact(const Digest& d) const {
    std::error_code ec;
    if (!fs::exists(ArtifactPath(d), ec)) throw NotFound("no artifact " + d.hex());
    return detail::ReadFile(ArtifactPath(d));
  }

  void WriteArtifact(const Digest& d, std::string_view encoded, std::uint64_t footprint, int version) const {
    detail::WriteFileAtomic(ArtifactPath(d), encoded);
    detail::AppendLine(root_ / "artifacts.log", d.hex() + "\t" + std::to_string(footprint) + "\t" +
                                                    std::to_string(encoded.size()) + "\t" + std::to_string(version));
  }

  // --- runtime statistics ---------------------------------------------------

  StatsIndex LoadStats() const {
    StatsIndex stats;
    std::ifstream in(root_ / "stats.log");
    std::string line;
    while (std::getline(in, line)) {
      auto f = detail::SplitTabs(line);
      if (f.size() != 4) continue;
      auto d = Digest::FromHex(f[0]);
      StatsEntry e;
      if (!d || !detail::ParseInt(f[1], e.compute_us) || !detail::ParseInt(f[2], e.load_us) ||
          !detail::ParseInt(f[3], e.bytes))
        continue;
      stats[*d] = e;
    }
    return stats;
  }

  void AppendStats(const std::vector<std::pair<Digest, StatsEntry>>& entries) const {
    std::string block;
    for (const auto& [d, e] : entries)
      block += d.hex() + "\t" + std::to_string(e.compute_us) + "\t" + std::to_string(e.load_us) + "\t" +
               std::to_string(e.bytes) + "\n";
    if (block.empty()) return;
    std::ofstream out(root_ / "stats.log", std::ios::binary | std::ios::app);
    out << block;
    if (!out) throw Error("cannot append to stats.log");
  }

  // --- versions ----------------------------------------------------------------

  std::vector<int> VersionIds() const {
    std::vector<int> ids;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(root_ / "versions", ec)) {
      int id = 0;
      std::string name = entry.path().filename().string();
      if (entry.is_directory() && detail::ParseInt(name, id) && id > 0 && fs::exists(entry.path() / "record.json"))
        ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  int NextVersionId() const {
    auto ids = VersionIds();
    return ids.empty() ? 1 : ids.back() + 1;
  }

  VersionEntry GetVersion(int id) const {
    fs::path dir = root_ / "versions" / std::to_string(id);
    if (id <= 0 || !fs::exists(dir / "record.json")) throw NotFound("no version " + std::to_string(id));
    VersionEntry v = Json::parse(detail::ReadFile(dir / "record.json")).get<VersionEntry>();
    v.source = detail::ReadFile(dir / "source.wf");
    return v;
  }

  std::vector<VersionEntry> ListVersions() const {
    std::vector<VersionEntry> out;
    for (int id : VersionIds()) out.push_back(GetVersion(id));
    return out;
  }

  std::optional<VersionEntry> Latest() const {
    auto ids = VersionIds();
    if (ids.empty()) return std::nullopt;
    return GetVersion(ids.back());
  }

  /// Version with the highest value of `metric`; ties go to the lowest id.
  VersionEntry BestVersion(const std::string& metric) const {
    std::optional<VersionEntry> best;
    for (auto& v : ListVersions()) {
      auto it = v.run.metrics.find(metric);
      if (it == v.run.metrics.end()) continue;
      if (!best || it->second > best->run.metrics.at(metric)) best = std::move(v);
    }
    if (!best) throw NotFound("no version reports metric '" + metric + "'");
    return *best;
  }

  std::string Checkout(int id) const {
    fs::path p = root_ / "versions" / std::to_string(id) / "source.wf";
    if (id <= 0 || !fs::exists(root_ / "versions" / std::to_string(id) / "record.json"))
      throw NotFound("no version " + std::to_string(id));
    return detail::ReadFile(p);
  }

  /// Appends a version. The caller must hold the writer lock. The version
  /// directory is assembled under a temporary name and renamed into place.
  VersionEntry RecordVersion(RunRecord run, const std::string& source) const {
    VersionEntry v;
    v.id = NextVersionId();
    if (v.id > 1) v.parent_id = v.id - 1;
    v.timestamp = detail::UtcTimestamp();
    v.source = source;
    WorkflowAst ast = Parse(source);
    v.source_hash = Sha256Of(Normalize(ast)).hex();
    if (v.parent_id) {
      try {
        v.change = Diff(Parse(Checkout(*v.parent_id)), ast);
      } catch (const ParseError&) {
      }
    } else {
      for (const auto& d : ast.decls) v.change.added.insert(d.name);
    }
    run.version = v.id;
    v.run = std::move(run);

    fs::path final_dir = root_ / "versions" / std::to_string(v.id);
    fs::path tmp_dir = root_ / "versions" / (".pending" + detail::TempSuffix());
    fs::create_directories(tmp_dir);
    detail::WriteFileAtomic(tmp_dir / "source.wf", source);
    detail::WriteFileAtomic(tmp_dir / "record.json", Json(v).dump(2) + "\n");
    fs::rename(tmp_dir, final_dir);
    return v;
  }

  ComparisonReport Compare(int a, int b) const {
    VersionEntry va = GetVersion(a), vb = GetVersion(b);
    ComparisonReport r;
    r.a = a;
    r.b = b;
    r.source_diff = LineDiff(va.source, vb.source);
    try {
      r.decls = Diff(Parse(va.source), Parse(vb.source));
    } catch (const ParseError&) {
    }
    std::map<std::string, std::string> sa, sb;
    for (const auto& n : va.run.graph) sa[n.name] = va.run.DisplayState(n.name);
    for (const auto& n : vb.run.graph) sb[n.name] = vb.run.DisplayState(n.name);
    for (const auto& [name, state] : sb) {
      auto it = sa.find(name);
      if (it == sa.end()) r.nodes_added.insert(name);
      else if (it->second != state) r.state_changed.push_back({name, it->second, state});
    }
    for (const auto& [name, state] : sa)
      if (!sb.contains(name)) r.nodes_removed.insert(name);
    std::set<std::string> metric_names;
    for (const auto& [k, v] : va.run.metrics) metric_names.insert(k);
    for (const auto& [k, v] : vb.run.metrics) metric_names.insert(k);
    for (const auto& name : metric_names) {
      MetricDelta d{name, std::nullopt, std::nullopt};
      if (auto it = va.run.metrics.find(name); it != va.run.metrics.end()) d.a = it->second;
      if (auto it = vb.run.metrics.find(name); it != vb.run.metrics.end()) d.b = it->second;
      r.metrics.push_back(d);
    }
    return r;
  }

 private:
  explicit Workspace(fs::path root) : root_(std::move(root)) {}

  fs::path ArtifactPath(const Digest& d) const { return root_ / "artifacts" / d.hex(); }

  fs::path root_;
};

}  // namespace iterflow
