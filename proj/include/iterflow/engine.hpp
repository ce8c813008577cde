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

// Iteration driver: parse -> compile -> slice -> plan -> execute -> record.

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "iterflow/dsl.hpp"
#include "iterflow/error.hpp"
#include "iterflow/graph.hpp"
#include "iterflow/materialize.hpp"
#include "iterflow/operators.hpp"
#include "iterflow/record.hpp"
#include "iterflow/recompute.hpp"
#include "iterflow/value.hpp"
#include "iterflow/workspace.hpp"

namespace iterflow {

struct RunOptions {
  std::uint64_t budget_bytes = std::uint64_t{1} << 30;
  std::uint64_t seed = 0;
  bool force_recompute = false;  // treat every load as infeasible
  bool sim_clock = false;        // sim operators and I/O advance a virtual clock
  std::int64_t default_compute_us = 1000;  // for nodes never executed
  LoadCostModel load_model;
  fs::path data_root = ".";  // base for relative csv paths

  // Instrumentation: called right before a node's operator runs.
  std::function<void(const std::string& node)> on_operator;
};

/// Everything decided before execution starts.
struct PlannedIteration {
  std::string source;
  WorkflowAst ast;
  WorkflowDag dag;
  SliceResult slice;
  CostAnnotatedDag costs;  // live nodes, topological order
  ExecutionPlan plan;
  ArtifactIndex index;
  StatsIndex stats;
};

/// Most recent measured compute time per node name, newest version first.
inline std::map<std::string, std::int64_t> ComputeHistoryByName(const Workspace& ws) {
  std::map<std::string, std::int64_t> out;
  auto ids = ws.VersionIds();
  for (auto it = ids.rbegin(); it != ids.rend(); ++it)
    for (const auto& e : ws.GetVersion(*it).run.events)
      if (e.state == NodeState::Compute && !out.contains(e.name)) out[e.name] = e.duration_us;
  return out;
}

inline CostAnnotatedDag AnnotateCosts(const WorkflowDag& dag, const SliceResult& slice, const ArtifactIndex& index,
                                      const StatsIndex& stats,
                                      const std::map<std::string, std::int64_t>& history,
                                      const RunOptions& opts) {
  CostAnnotatedDag out;
  std::map<std::string, std::size_t> position;
  for (const auto& name : dag.topo_order) {
    if (!slice.live.contains(name)) continue;
    const DagNode& node = dag.at(name);
    CostNode c;
    c.name = name;
    c.mandatory = dag.sinks.contains(name);
    const StatsEntry* st = nullptr;
    if (auto it = stats.find(node.signature); it != stats.end()) st = &it->second;
    if (st && st->compute_us > 0) c.compute_cost = st->compute_us;
    else if (auto h = history.find(name); h != history.end()) c.compute_cost = h->second;
    else c.compute_cost = opts.default_compute_us;
    const ArtifactEntry* art = index.find(node.signature);
    c.size = art ? art->bytes : st ? st->bytes : 0;
    if (art && !opts.force_recompute)
      c.load_cost = st && st->load_us > 0 ? st->load_us : opts.load_model.Estimate(art->bytes);
    for (const auto& p : node.parents) c.parents.push_back(position.at(p));
    position[name] = out.nodes.size();
    out.nodes.push_back(std::move(c));
  }
  return out;
}

inline PlannedIteration PlanIteration(const Workspace& ws, std::string source, const RunOptions& opts) {
  PlannedIteration p;
  p.source = std::move(source);
  p.ast = Parse(p.source);
  p.dag = Compile(p.ast, FileDigester(opts.data_root));
  p.slice = Slice(p.dag);
  p.index = ws.LoadArtifactIndex();
  p.stats = ws.LoadStats();
  p.costs = AnnotateCosts(p.dag, p.slice, p.index, p.stats, ComputeHistoryByName(ws), opts);
  p.plan = OptimalPlan(p.costs);
  return p;
}

struct ExecutionResult {
  RunRecord record;
  std::vector<std::pair<Digest, StatsEntry>> stats;  // to append on commit
};

namespace detail {

inline std::int64_t ElapsedUs(std::chrono::steady_clock::time_point start) {
  auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return std::max<std::int64_t>(1, (ns + 999) / 1000);
}

inline double MetricValue(const Value& v, const std::string& node) {
  if (const auto* s = std::get_if<Scalar>(&v)) return s->value;
  if (const auto* b = std::get_if<SimBlob>(&v)) return b->value;
  throw OperatorError(node, std::string("metric produced a ") + ValueTypeName(v));
}

}  // namespace detail

/// Runs a planned iteration against the store. Artifacts are written as
/// nodes complete; no version or statistics are committed here.
inline ExecutionResult Execute(const Workspace& ws, const PlannedIteration& p, const RunOptions& opts,
                               int version_id) {
  using Clock = std::chrono::steady_clock;
  const auto wall_start = Clock::now();
  ExecutionResult result;
  RunRecord& rec = result.record;
  rec.version = version_id;
  rec.workflow = p.dag.workflow_name;
  rec.static_pruned = p.slice.pruned_static;
  rec.planned_objective = p.plan.objective;
  rec.seed = opts.seed;
  rec.no_reuse = opts.force_recompute;
  rec.sim_clock = opts.sim_clock;
  for (const auto& name : p.dag.topo_order) {
    const DagNode& n = p.dag.at(name);
    rec.graph.push_back({name, KindName(n.kind), n.func, n.parents, n.signature.hex()});
  }

  OperatorContext ctx{opts.data_root, opts.sim_clock};
  MaterializationBudget budget(opts.budget_bytes, std::min(p.index.total_bytes(), opts.budget_bytes));
  std::map<std::string, Value> values;
  std::map<std::string, std::int64_t> actual_compute;  // measured this run
  std::int64_t clock_us = 0;

  for (std::size_t i = 0; i < p.costs.size(); ++i) {
    const CostNode& cn = p.costs.nodes[i];
    const DagNode& node = p.dag.at(cn.name);
    const NodeState state = p.plan.states[i];
    rec.plan[cn.name] = state;
    NodeEvent ev;
    ev.name = cn.name;
    ev.state = state;
    ev.start_us = clock_us;
    const StatsEntry* prior = nullptr;
    if (auto it = p.stats.find(node.signature); it != p.stats.end()) prior = &it->second;

    if (state == NodeState::Load) {
      const ArtifactEntry* art = p.index.find(node.signature);
      if (!art || !ws.HasArtifact(node.signature)) throw MissingArtifact(cn.name);
      auto t0 = Clock::now();
      Value v = DecodeValue(ws.ReadArtifact(node.signature));
      std::int64_t measured = detail::ElapsedUs(t0);
      ev.duration_us = opts.sim_clock ? opts.load_model.Estimate(art->bytes) : measured;
      ev.bytes = art->bytes;
      result.stats.push_back({node.signature, {prior ? prior->compute_us : 0, ev.duration_us, art->bytes}});
      values.emplace(cn.name, std::move(v));
    } else if (state == NodeState::Compute) {
      std::vector<const Value*> parents;
      for (const auto& parent : node.parents) {
        auto it = values.find(parent);
        if (it == values.end()) throw InfeasiblePlan(cn.name, "parent '" + parent + "' unavailable");
        parents.push_back(&it->second);
      }
      if (opts.on_operator) opts.on_operator(cn.name);
      auto t0 = Clock::now();
      Value v;
      try {
        v = InvokeOperator(node, parents, ctx);
      } catch (const DataError& e) {
        throw OperatorError(cn.name, e.what());
      }
      std::int64_t measured = detail::ElapsedUs(t0);
      if (opts.sim_clock && node.func == "sim")
        ev.duration_us = std::llround(ops::NumberOpt(node, "cost_ms", 0) * 1000);
      else
        ev.duration_us = measured;
      actual_compute[cn.name] = ev.duration_us;

      std::string encoded = EncodeValue(v);
      const std::uint64_t footprint = Footprint(v, encoded.size());
      ev.bytes = footprint;
      NodeRuntimeStats rs{cn.name, ev.duration_us,
                          prior && prior->load_us > 0 ? prior->load_us : opts.load_model.Estimate(footprint),
                          footprint, 0};
      for (const auto& a : p.dag.Ancestors(cn.name)) {
        auto it = actual_compute.find(a);
        rs.ancestor_compute_sum += it != actual_compute.end() ? it->second : p.costs.nodes[*p.costs.IndexOf(a)].compute_cost;
      }
      ev.benefit = ReuseBenefit(rs);
      MaterializationDecision d = Decide(rs, budget);
      ev.skip = d.skip;
      if (d.materialize()) {
        ev.materialized = true;
        if (p.index.contains(node.signature) && ws.HasArtifact(node.signature)) {
          budget.Refund(footprint);  // already stored and counted
        } else {
          auto w0 = Clock::now();
          ws.WriteArtifact(node.signature, encoded, footprint, version_id);
          std::int64_t write_measured = detail::ElapsedUs(w0);
          ev.write_us = opts.sim_clock ? opts.load_model.Estimate(footprint) : write_measured;
        }
      }
      result.stats.push_back({node.signature, {ev.duration_us, rs.load_cost, footprint}});
      values.emplace(cn.name, std::move(v));
    }

    if (node.kind == DeclKind::Metric) {
      auto it = values.find(cn.name);
      if (it != values.end()) rec.metrics[cn.name] = detail::MetricValue(it->second, cn.name);
    }
    clock_us += ev.duration_us + ev.write_us;
    rec.events.push_back(std::move(ev));
  }
  rec.wall_clock_us = opts.sim_clock ? clock_us : detail::ElapsedUs(wall_start);
  return result;
}

/// One full iteration under the workspace lock. A failure leaves the
/// version history untouched; artifacts already written remain.
inline RunRecord RunIteration(const Workspace& ws, const std::string& source, const RunOptions& opts) {
  WorkspaceLock lock = ws.Lock();
  PlannedIteration planned = PlanIteration(ws, source, opts);
  ExecutionResult result = Execute(ws, planned, opts, ws.NextVersionId());
  ws.AppendStats(result.stats);
  return ws.RecordVersion(std::move(result.record), source).run;
}

}  // namespace iterflow
