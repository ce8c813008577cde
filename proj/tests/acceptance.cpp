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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>

#include "iterflow/iterflow.hpp"
#include "test_util.hpp"

namespace iterflow {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void Report(const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  " << o.detail << std::endl;
  failures += !o.pass;
}

template <typename Fn>
void Check(const std::string& name, Fn fn) {
  try {
    Report(name, fn());
  } catch (const std::exception& e) {
    Report(name, {false, std::string("exception: ") + e.what()});
  }
}

// Costs 0-100, load infeasible w.p. 1/3, sinks mandatory.
CostAnnotatedDag Instance(std::mt19937_64& rng, std::size_t max_nodes) {
  return testing::RandomCostDag(rng, {.max_nodes = max_nodes, .max_cost = 100, .infeasible_prob = 1.0 / 3.0});
}

Outcome RecomputationOptimality() {
  const auto start = Clock::now();
  std::mt19937_64 rng(20260101);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    CostAnnotatedDag dag = Instance(rng, 8);
    if (PlanCost(dag, OptimalPlan(dag)) != PlanCost(dag, BruteForcePlan(dag))) ++mismatches;
  }
  const double s = Seconds(start);
  std::ostringstream os;
  os << "1000 DAGs (<=8 nodes), mismatches=" << mismatches << " (tol 0), " << s << "s (limit 60s)";
  return {mismatches == 0 && s < 60, os.str()};
}

Outcome PlanFeasibility() {
  std::mt19937_64 rng(20260102);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    CostAnnotatedDag dag = Instance(rng, 16);
    if (FindViolation(dag, OptimalPlan(dag).states)) ++violations;
  }
  return {violations == 0, "10000 instances (<=16 nodes), violations=" + std::to_string(violations)};
}

// Replays one iteration's decisions against an independently tracked budget.
struct RuleAudit {
  int decisions = 0;
  int materialized = 0;
  int budget_skips = 0;
  std::vector<std::string> errors;

  void Run(const Workspace& ws, const std::string& source, const RunOptions& opts) {
    const ArtifactIndex before = ws.LoadArtifactIndex();
    const int log_lines_before = CountLines(ws.root() / "artifacts.log");
    RunRecord r = RunIteration(ws, source, opts);
    std::map<std::string, std::string> signature;
    std::map<std::string, std::size_t> topo;
    for (const auto& n : r.graph) {
      signature[n.name] = n.signature;
      topo.emplace(n.name, topo.size());
    }
    std::uint64_t used = std::min(before.total_bytes(), opts.budget_bytes);
    std::vector<std::string> written;
    std::int64_t last_start = -1;
    std::size_t last_topo = 0;
    bool first = true;
    for (const auto& e : r.events) {
      if (e.start_us < last_start) Fail(r, e.name, "event out of completion order");
      if (!first && topo.at(e.name) <= last_topo) Fail(r, e.name, "event out of topological order");
      last_start = e.start_us;
      last_topo = topo.at(e.name);
      first = false;
      if (e.state != NodeState::Compute) continue;
      ++decisions;
      const std::uint64_t remaining = opts.budget_bytes - used;
      if (!e.benefit) Fail(r, e.name, "computed node without a benefit");
      const std::int64_t benefit = e.benefit.value_or(0);
      if (e.materialized) {
        ++materialized;
        if (benefit >= 0) Fail(r, e.name, "materialized with r >= 0");
        if (e.bytes > remaining) Fail(r, e.name, "materialized without fitting");
        if (!before.contains(*Digest::FromHex(signature.at(e.name)))) {
          used += e.bytes;
          written.push_back(signature.at(e.name));
        }
      } else if (e.skip == SkipReason::BudgetExceeded) {
        ++budget_skips;
        if (benefit >= 0 || e.bytes <= remaining) Fail(r, e.name, "wrong BudgetExceeded");
      } else if (e.skip == SkipReason::NonNegativeBenefit) {
        if (benefit < 0) Fail(r, e.name, "wrong NonNegativeBenefit");
      } else {
        Fail(r, e.name, "computed node without a decision");
      }
      if (used > opts.budget_bytes) Fail(r, e.name, "budget exceeded");
    }
    if (ws.LoadArtifactIndex().total_bytes() > std::max(opts.budget_bytes, before.total_bytes()))
      Fail(r, "-", "store larger than budget");
    // Artifacts are appended in the order the decisions were made.
    std::vector<std::string> logged;
    std::ifstream log(ws.root() / "artifacts.log");
    int line_no = 0;
    for (std::string line; std::getline(log, line); ++line_no)
      if (line_no >= log_lines_before) logged.push_back(detail::SplitTabs(line)[0]);
    if (logged != written) Fail(r, "-", "artifact log order differs from decision order");
  }

  static int CountLines(const fs::path& p) {
    std::ifstream in(p);
    int n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
  }

  void Fail(const RunRecord& r, const std::string& node, const std::string& what) {
    errors.push_back("v" + std::to_string(r.version) + "/" + node + ": " + what);
  }
};

RunOptions CensusOptions() {
  RunOptions o;
  o.data_root = testing::SourceDir() + "/samples";
  o.load_model.overhead_us = 0;
  o.load_model.throughput_bytes_per_sec = 1e15;
  return o;
}

std::string CensusSource() { return testing::ReadAll(testing::SourceDir() + "/samples/census.wf"); }

// Ten iterations with edits at pre-processing (p), learning (l) and
// post-processing (q) depth.
const std::vector<std::array<int, 3>> kTrace = {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {0, 1, 2}, {1, 1, 2},
                                                {1, 1, 3}, {1, 2, 3}, {1, 2, 4}, {2, 2, 4}, {2, 2, 5}};

bool PostOnly(std::size_t i) {
  return i > 0 && kTrace[i][0] == kTrace[i - 1][0] && kTrace[i][1] == kTrace[i - 1][1];
}

Outcome MaterializationFidelity() {
  RuleAudit audit;
  {
    testing::TempDir dir;
    Workspace ws = Workspace::Init(dir.path());
    RunOptions opts = CensusOptions();
    audit.Run(ws, CensusSource(), opts);
    audit.Run(ws, CensusSource(), opts);
  }
  for (std::uint64_t budget : {std::uint64_t{1} << 30, std::uint64_t{40} << 20, std::uint64_t{12} << 20}) {
    testing::TempDir dir;
    Workspace ws = Workspace::Init(dir.path());
    RunOptions opts;
    opts.sim_clock = true;
    opts.budget_bytes = budget;
    for (const auto& [p, l, q] : kTrace) audit.Run(ws, testing::SimWorkflow(p, l, q), opts);
  }
  std::ostringstream os;
  os << audit.decisions << " decisions, " << audit.materialized << " materialized, " << audit.budget_skips
     << " budget skips, violations=" << audit.errors.size();
  if (!audit.errors.empty()) os << " first: " << audit.errors.front();
  return {audit.errors.empty() && audit.budget_skips > 0, os.str()};
}

Outcome KnapsackGap() {
  std::mt19937_64 rng(20260104);
  int within = 0, total = 0;
  double worst = 0;
  for (; total < 200; ++total) {
    CostAnnotatedDag dag = Instance(rng, 12);
    std::uint64_t candidate_bytes = 0;
    for (const auto& n : dag.nodes)
      if (n.load_cost) candidate_bytes += n.size;
    const std::uint64_t budget = std::uniform_int_distribution<std::uint64_t>(0, candidate_bytes)(rng);
    SubsetChoice online = OnlineSubset(dag, budget), oracle = OfflineOracle(dag, budget);
    const bool ok = online.next_cost <= 2 * oracle.next_cost;
    within += ok;
    if (oracle.next_cost > 0) worst = std::max(worst, double(online.next_cost) / double(oracle.next_cost));
    else if (online.next_cost > 0) worst = std::numeric_limits<double>::infinity();
  }

  // Pinned fixture where the online rule is strictly worse.
  auto node = [](std::string name, std::int64_t c, std::int64_t l, std::uint64_t size, bool mandatory,
                 std::vector<std::size_t> parents) {
    return CostNode{std::move(name), c, l, size, mandatory, std::move(parents)};
  };
  CostAnnotatedDag fixture{{node("n0", 9, 14, 15, false, {}), node("n1", 20, 17, 3, false, {0}),
                            node("n2", 5, 6, 17, false, {0, 1}), node("n3", 12, 18, 17, false, {}),
                            node("n4", 18, 9, 0, false, {}), node("n5", 2, 13, 17, true, {0, 2, 3, 4})}};
  SubsetChoice on = OnlineSubset(fixture, 21), off = OfflineOracle(fixture, 21);
  const bool pinned = on.names == std::vector<std::string>{"n2"} && on.next_cost == 47 &&
                      off.names == std::vector<std::string>{"n4", "n5"} && off.next_cost == 13;

  std::ostringstream os;
  os << within << "/" << total << " instances within 2.0x of oracle (worst " << worst << "x); pinned fixture "
     << (pinned ? "reproduced" : "NOT reproduced") << " (online " << on.next_cost << " vs oracle " << off.next_cost
     << ")";
  return {within == total && pinned, os.str()};
}

Outcome CumulativeRuntimeReuse() {
  const auto start = Clock::now();
  testing::TempDir opt_dir, base_dir;
  Workspace opt_ws = Workspace::Init(opt_dir.path()), base_ws = Workspace::Init(base_dir.path());
  RunOptions opt;
  opt.sim_clock = true;
  RunOptions base = opt;
  base.force_recompute = true;
  std::int64_t opt_total = 0, base_total = 0;
  double worst_post = 0;
  std::vector<std::int64_t> series;
  for (std::size_t i = 0; i < kTrace.size(); ++i) {
    const std::string src = testing::SimWorkflow(kTrace[i][0], kTrace[i][1], kTrace[i][2]);
    RunRecord o = RunIteration(opt_ws, src, opt);
    RunRecord b = RunIteration(base_ws, src, base);
    std::int64_t full = 0;  // pure compute time of a full rerun, writes excluded
    for (const auto& e : b.events) full += e.duration_us;
    opt_total += o.wall_clock_us;  // includes load and write time
    base_total += full;
    series.push_back(o.wall_clock_us);
    if (PostOnly(i)) worst_post = std::max(worst_post, double(o.wall_clock_us) / double(full));
  }
  // Determinism: a second optimized trace reproduces the same virtual times.
  testing::TempDir again_dir;
  Workspace again = Workspace::Init(again_dir.path());
  std::vector<std::int64_t> replay;
  for (const auto& [p, l, q] : kTrace) replay.push_back(RunIteration(again, testing::SimWorkflow(p, l, q), opt).wall_clock_us);
  const double s = Seconds(start);
  const double ratio = double(opt_total) / double(base_total);
  std::ostringstream os;
  os << "cumulative optimized/baseline=" << ratio << " (limit 0.5), worst post-processing iteration=" << worst_post
     << " of full rerun (limit 0.1), deterministic=" << (replay == series ? "yes" : "no") << ", " << s
     << "s (limit 5s)";
  return {ratio <= 0.5 && worst_post <= 0.1 && replay == series && s < 5, os.str()};
}

Outcome ChangeTracking() {
  const WorkflowAst base = Parse(testing::SimWorkflow(0, 0, 0));
  int edits = 0, mismatches = 0;
  auto signatures = [](const WorkflowAst& ast) {
    std::map<std::string, std::string> out;
    WorkflowDag dag = Compile(ast);
    for (const auto& [name, node] : dag.nodes) out[name] = node.signature.hex();
    return out;
  };
  const auto before = signatures(base);
  if (before != testing::MerkleOracle(base)) ++mismatches;
  for (std::size_t i = 0; i < base.decls.size(); ++i) {
    WorkflowAst edited = base;
    edited.decls[i].options["edit"] = 1.0;
    edited = Parse(Normalize(edited));
    const auto after = signatures(edited);
    if (after != testing::MerkleOracle(edited)) ++mismatches;
    // Expected: the edited decl and everything downstream of it.
    std::set<std::string> expected{base.decls[i].name};
    for (const auto& d : base.decls)
      for (const auto& p : d.Parents())
        if (expected.contains(p)) expected.insert(d.name);
    std::set<std::string> changed;
    for (const auto& [name, sig] : after)
      if (before.at(name) != sig) changed.insert(name);
    if (changed != expected) ++mismatches;
    ++edits;
  }

  // Unchanged reruns never compute a node whose artifact was materialized.
  int recomputed = 0, stored = 0;
  auto rerun = [&](const std::string& source, const RunOptions& opts) {
    testing::TempDir dir;
    Workspace ws = Workspace::Init(dir.path());
    RunRecord first = RunIteration(ws, source, opts);
    PlannedIteration plan = PlanIteration(ws, source, opts);
    for (std::size_t i = 0; i < plan.costs.size(); ++i) {
      const NodeEvent* e = first.Event(plan.costs.nodes[i].name);
      if (e && e->materialized) {
        ++stored;
        recomputed += plan.plan.states[i] == NodeState::Compute;
      }
    }
  };
  RunOptions sim;
  sim.sim_clock = true;
  rerun(testing::SimWorkflow(0, 0, 0), sim);
  rerun(CensusSource(), CensusOptions());

  std::ostringstream os;
  os << edits << " single-decl edits, signature mismatches vs oracle=" << mismatches << "; unchanged rerun computes "
     << recomputed << " of " << stored << " materialized nodes";
  return {mismatches == 0 && recomputed == 0 && stored > 0, os.str()};
}

Outcome CensusEndToEnd() {
  // Majority-class baseline straight from the CSV text.
  std::istringstream csv(testing::ReadAll(testing::SourceDir() + "/data/census_mini.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0, positive = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    ++rows;
    positive += line.substr(line.rfind(',') + 1) == ">50K";
  }
  const double majority = double(std::max(positive, rows - positive)) / rows;

  RunOptions opts = CensusOptions();
  testing::TempDir a_dir, b_dir;
  Workspace a = Workspace::Init(a_dir.path()), b = Workspace::Init(b_dir.path());
  RunRecord ra1 = RunIteration(a, CensusSource(), opts);
  RunRecord ra2 = RunIteration(a, CensusSource(), opts);
  RunRecord rb1 = RunIteration(b, CensusSource(), opts);
  auto artifacts = [](const Workspace& ws) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(ws.root() / "artifacts"))
      out[e.path().filename().string()] = testing::ReadAll(e.path());
    return out;
  };
  const bool identical = artifacts(a) == artifacts(b) && !artifacts(a).empty() && ra1.metrics == rb1.metrics &&
                         ra1.metrics == ra2.metrics;

  testing::TempDir c_dir;
  Workspace c = Workspace::Init(c_dir.path());
  RunIteration(c, CensusSource(), opts);
  std::string edited = CensusSource();
  const std::string from = "f1(model, feats)";
  edited.replace(edited.find(from), from.size(), "f1(model, feats, label=\"income=>50K\")");
  int computed = 0;
  opts.on_operator = [&](const std::string&) { ++computed; };
  RunIteration(c, edited, opts);

  const double acc = ra1.metrics.at("acc");
  std::ostringstream os;
  os << "accuracy=" << acc << " vs majority " << majority << ", identical reruns=" << (identical ? "yes" : "no")
     << ", metric-only edit computed " << computed << " node(s) (expect 1)";
  return {acc >= majority && identical && computed == 1, os.str()};
}

Outcome Numerics() {
  std::mt19937_64 rng(20260108);
  std::normal_distribution<double> normal(0, 1);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    LogisticData d = testing::RandomLogisticData(rng, 10, 4);
    std::vector<double> w(d.cols);
    for (auto& x : w) x = normal(rng);
    const double b = normal(rng), reg = std::abs(normal(rng));
    auto analytic = LogisticLossGradient(d, w, b, reg);
    auto numeric = testing::CentralDifferenceGradient(d, w, b, reg);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); };
    for (std::size_t j = 0; j < w.size(); ++j) worst = std::max(worst, rel(analytic.weights[j], numeric.weights[j]));
    worst = std::max(worst, rel(analytic.bias, numeric.bias));
  }

  int networks = 0, flow_mismatches = 0;
  std::uniform_int_distribution<std::size_t> vertices(2, 9);
  std::uniform_int_distribution<std::int64_t> cap(0, 50);
  std::bernoulli_distribution arc(0.35);
  for (int i = 0; i < 500; ++i, ++networks) {
    FlowNetwork<std::int64_t> net(vertices(rng), 0, 1);
    for (std::size_t u = 0; u < net.vertex_count(); ++u)
      for (std::size_t v = 0; v < net.vertex_count(); ++v)
        if (u != v && arc(rng)) net.AddArc(u, v, cap(rng));
    MinCut<std::int64_t> cut = ComputeMinCut(net);
    if (cut.value != testing::EdmondsKarpMaxFlow(net) || cut.value != CutCapacity(net, cut.source_side))
      ++flow_mismatches;
  }
  for (int i = 0; i < 500; ++i, ++networks) {
    ReductionNetwork r = BuildNetwork(Instance(rng, 8));
    if (ComputeMinCut(r.network).value != testing::EdmondsKarpMaxFlow(r.network)) ++flow_mismatches;
  }
  std::ostringstream os;
  os << "gradient worst relative error=" << worst << " (limit 1e-6) over 50 instances; min cut vs max flow mismatches="
     << flow_mismatches << " over " << networks << " networks";
  return {worst <= 1e-6 && flow_mismatches == 0, os.str()};
}

}  // namespace
}  // namespace iterflow

int main() {
  using namespace iterflow;
  Check("recomputation-optimality", RecomputationOptimality);
  Check("plan-feasibility", PlanFeasibility);
  Check("materialization-rule-fidelity", MaterializationFidelity);
  Check("knapsack-oracle-gap", KnapsackGap);
  Check("cumulative-runtime-reuse", CumulativeRuntimeReuse);
  Check("change-tracking", ChangeTracking);
  Check("census-end-to-end", CensusEndToEnd);
  Check("numerics", Numerics);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
