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

// Per-iteration execution record and its structured-text (JSON) encoding.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iterflow/dsl.hpp"
#include "iterflow/materialize.hpp"
#include "iterflow/recompute.hpp"

namespace iterflow {

using Json = nlohmann::json;

struct NodeInfo {
  std::string name;
  std::string kind;
  std::string func;
  std::vector<std::string> parents;
  std::string signature;  // hex

  bool operator==(const NodeInfo&) const = default;
};

struct NodeEvent {
  std::string name;
  NodeState state = NodeState::Prune;
  std::int64_t start_us = 0;
  std::int64_t duration_us = 0;  // compute or load time
  std::int64_t write_us = 0;     // time spent persisting the output
  std::uint64_t bytes = 0;
  bool materialized = false;
  std::optional<SkipReason> skip;        // set for computed nodes not persisted
  std::optional<std::int64_t> benefit;  // r_i, for computed nodes

  bool operator==(const NodeEvent&) const = default;
};

struct RunRecord {
  int version = 0;
  std::string workflow;
  std::vector<NodeInfo> graph;  // every declared node, in file order
  std::map<std::string, NodeState> plan;  // live nodes only
  std::set<std::string> static_pruned;
  std::vector<NodeEvent> events;  // one per live node, topological order
  std::map<std::string, double> metrics;
  std::int64_t planned_objective = 0;
  std::int64_t wall_clock_us = 0;
  std::uint64_t seed = 0;
  bool no_reuse = false;
  bool sim_clock = false;

  bool operator==(const RunRecord&) const = default;

  const NodeEvent* Event(std::string_view name) const {
    for (const auto& e : events)
      if (e.name == name) return &e;
    return nullptr;
  }

  /// Node state including "StaticPrune" for sliced-away nodes.
  std::string DisplayState(const std::string& name) const {
    if (static_pruned.contains(name)) return "StaticPrune";
    auto it = plan.find(name);
    return it == plan.end() ? "Unknown" : StateName(it->second);
  }
};

inline void to_json(Json& j, const DeclDiff& d) {
  j = Json{{"added", d.added}, {"removed", d.removed}, {"modified", d.modified}};
}
inline void from_json(const Json& j, DeclDiff& d) {
  j.at("added").get_to(d.added);
  j.at("removed").get_to(d.removed);
  j.at("modified").get_to(d.modified);
}

inline void to_json(Json& j, const NodeInfo& n) {
  j = Json{{"name", n.name}, {"kind", n.kind}, {"func", n.func}, {"parents", n.parents}, {"signature", n.signature}};
}
inline void from_json(const Json& j, NodeInfo& n) {
  j.at("name").get_to(n.name);
  j.at("kind").get_to(n.kind);
  j.at("func").get_to(n.func);
  j.at("parents").get_to(n.parents);
  j.at("signature").get_to(n.signature);
}

namespace detail {
inline NodeState StateFromJson(const Json& j) {
  auto s = StateFromName(j.get<std::string>());
  if (!s) throw Error("record: bad node state " + j.dump());
  return *s;
}
}  // namespace detail

inline void to_json(Json& j, const NodeEvent& e) {
  j = Json{{"name", e.name},         {"state", StateName(e.state)}, {"start_us", e.start_us},
           {"duration_us", e.duration_us}, {"write_us", e.write_us},    {"bytes", e.bytes},
           {"materialized", e.materialized}};
  j["skip"] = e.skip ? Json(SkipReasonName(*e.skip)) : Json(nullptr);
  j["benefit"] = e.benefit ? Json(*e.benefit) : Json(nullptr);
}
inline void from_json(const Json& j, NodeEvent& e) {
  j.at("name").get_to(e.name);
  e.state = detail::StateFromJson(j.at("state"));
  j.at("start_us").get_to(e.start_us);
  j.at("duration_us").get_to(e.duration_us);
  j.at("write_us").get_to(e.write_us);
  j.at("bytes").get_to(e.bytes);
  j.at("materialized").get_to(e.materialized);
  e.skip.reset();
  if (!j.at("skip").is_null()) e.skip = SkipReasonFromName(j.at("skip").get<std::string>());
  e.benefit.reset();
  if (!j.at("benefit").is_null()) e.benefit = j.at("benefit").get<std::int64_t>();
}

inline void to_json(Json& j, const RunRecord& r) {
  Json plan = Json::object();
  for (const auto& [name, s] : r.plan) plan[name] = StateName(s);
  j = Json{{"version", r.version},
           {"workflow", r.workflow},
           {"graph", r.graph},
           {"plan", plan},
           {"static_pruned", r.static_pruned},
           {"events", r.events},
           {"metrics", r.metrics},
           {"planned_objective_us", r.planned_objective},
           {"wall_clock_us", r.wall_clock_us},
           {"seed", r.seed},
           {"no_reuse", r.no_reuse},
           {"sim_clock", r.sim_clock}};
}
inline void from_json(const Json& j, RunRecord& r) {
  j.at("version").get_to(r.version);
  j.at("workflow").get_to(r.workflow);
  j.at("graph").get_to(r.graph);
  r.plan.clear();
  for (const auto& [name, s] : j.at("plan").items()) r.plan[name] = detail::StateFromJson(s);
  j.at("static_pruned").get_to(r.static_pruned);
  j.at("events").get_to(r.events);
  j.at("metrics").get_to(r.metrics);
  j.at("planned_objective_us").get_to(r.planned_objective);
  j.at("wall_clock_us").get_to(r.wall_clock_us);
  j.at("seed").get_to(r.seed);
  j.at("no_reuse").get_to(r.no_reuse);
  j.at("sim_clock").get_to(r.sim_clock);
}

}  // namespace iterflow
