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

// Load/compute/prune planning. Each node of a cost-annotated DAG is assigned
// a state minimising
//
//   sum_i [state_i = Compute] * c_i + [state_i = Load] * l_i
//
// subject to: a computed node's parents are not pruned, mandatory nodes are
// not pruned, and only nodes with a stored artifact may be loaded.
//
// The optimum is found as a project-selection (maximum-weight closure)
// problem with two projects per node:
//   avail_i  profit -l_i (+M if mandatory)
//   comp_i   profit  l_i - c_i, requires avail_i and avail_p for each parent p
// avail_i & comp_i => Compute, avail_i only => Load, neither => Prune.
// An infeasible load is priced at M, which forces comp_i whenever avail_i is
// chosen. The closure is solved with one minimum cut.

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "iterflow/error.hpp"
#include "iterflow/flow.hpp"

namespace iterflow {

enum class NodeState { Load, Compute, Prune };

inline const char* StateName(NodeState s) {
  switch (s) {
    case NodeState::Load: return "Load";
    case NodeState::Compute: return "Compute";
    case NodeState::Prune: return "Prune";
  }
  return "?";
}

inline std::optional<NodeState> StateFromName(std::string_view name) {
  if (name == "Load") return NodeState::Load;
  if (name == "Compute") return NodeState::Compute;
  if (name == "Prune") return NodeState::Prune;
  return std::nullopt;
}

/// Costs are integer microseconds.
struct CostNode {
  std::string name;
  std::int64_t compute_cost = 0;
  std::optional<std::int64_t> load_cost;  // nullopt: no stored artifact
  std::uint64_t size = 0;
  bool mandatory = false;
  std::vector<std::size_t> parents;  // indices of earlier nodes
};

/// Nodes are stored in a topological order: parents precede children.
struct CostAnnotatedDag {
  std::vector<CostNode> nodes;

  std::size_t size() const noexcept { return nodes.size(); }

  std::optional<std::size_t> IndexOf(std::string_view name) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].name == name) return i;
    return std::nullopt;
  }

  void Validate() const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (n.compute_cost < 0) throw Error("node '" + n.name + "': negative compute cost");
      if (n.load_cost && *n.load_cost < 0) throw Error("node '" + n.name + "': negative load cost");
      for (std::size_t p : n.parents)
        if (p >= i) throw Error("node '" + n.name + "': parent index out of topological order");
    }
  }
};

struct ExecutionPlan {
  std::vector<NodeState> states;  // aligned with CostAnnotatedDag::nodes
  std::int64_t objective = 0;

  bool operator==(const ExecutionPlan&) const = default;
};

/// First violated plan constraint, as (node index, description).
inline std::optional<std::pair<std::size_t, std::string>> FindViolation(
    const CostAnnotatedDag& dag, const std::vector<NodeState>& states) {
  if (states.size() != dag.size())
    return std::pair<std::size_t, std::string>{0, "plan size does not match DAG"};
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const auto& n = dag.nodes[i];
    if (n.mandatory && states[i] == NodeState::Prune) return std::pair{i, std::string("mandatory node pruned")};
    if (states[i] == NodeState::Load && !n.load_cost)
      return std::pair{i, std::string("load without stored artifact")};
    if (states[i] == NodeState::Compute)
      for (std::size_t p : n.parents)
        if (states[p] == NodeState::Prune)
          return std::pair{i, "computed with pruned parent '" + dag.nodes[p].name + "'"};
  }
  return std::nullopt;
}

/// Evaluates the plan objective. Throws InfeasiblePlan on any violated constraint.
inline std::int64_t PlanCost(const CostAnnotatedDag& dag, const std::vector<NodeState>& states) {
  if (auto v = FindViolation(dag, states)) {
    std::string node = v->first < dag.size() ? dag.nodes[v->first].name : std::string("?");
    throw InfeasiblePlan(node, v->second);
  }
  std::int64_t total = 0;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (states[i] == NodeState::Compute) total += dag.nodes[i].compute_cost;
    else if (states[i] == NodeState::Load) total += *dag.nodes[i].load_cost;
  }
  return total;
}

inline std::int64_t PlanCost(const CostAnnotatedDag& dag, const ExecutionPlan& plan) {
  return PlanCost(dag, plan.states);
}

namespace detail {

inline std::int64_t CheckedAdd(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw Error("cost instance exceeds 64-bit range");
  return out;
}

inline std::int64_t CheckedMul(std::int64_t a, std::int64_t b) {
  std::int64_t out;
  if (__builtin_mul_overflow(a, b, &out)) throw Error("cost instance exceeds 64-bit range");
  return out;
}

}  // namespace detail

struct ReductionNetwork {
  FlowNetwork<std::int64_t> network;
  std::int64_t sentinel = 0;         // M: exceeds the sum of all finite costs
  std::int64_t prerequisite_cap = 0;  // stands in for infinite capacity
  std::int64_t positive_profit = 0;  // sum of positive project profits
  std::size_t mandatory_count = 0;

  static constexpr std::size_t Avail(std::size_t i) { return 2 + 2 * i; }
  static constexpr std::size_t Comp(std::size_t i) { return 3 + 2 * i; }

  /// Minimum plan cost implied by a cut value (infeasible loads priced at M).
  std::int64_t ObjectiveFromCut(std::int64_t cut) const {
    return static_cast<std::int64_t>(mandatory_count) * sentinel - (positive_profit - cut);
  }
};

/// Builds the project-selection network. Vertex 0 is the source, 1 the sink.
inline ReductionNetwork BuildNetwork(const CostAnnotatedDag& dag) {
  using detail::CheckedAdd;
  dag.Validate();
  const std::size_t n = dag.size();
  ReductionNetwork out;
  out.network = FlowNetwork<std::int64_t>(2 * n + 2, 0, 1);

  std::int64_t finite = 0;
  for (const auto& node : dag.nodes) {
    finite = CheckedAdd(finite, node.compute_cost);
    if (node.load_cost) finite = CheckedAdd(finite, *node.load_cost);
  }
  const std::int64_t M = CheckedAdd(finite, 1);
  out.sentinel = M;

  std::vector<std::int64_t> profit(2 * n + 2, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = dag.nodes[i];
    const std::int64_t load = node.load_cost.value_or(M);
    profit[ReductionNetwork::Avail(i)] = node.mandatory ? M - load : -load;
    profit[ReductionNetwork::Comp(i)] = load - node.compute_cost;
    if (node.mandatory) ++out.mandatory_count;
  }
  for (std::int64_t p : profit)
    if (p > 0) out.positive_profit = CheckedAdd(out.positive_profit, p);
  // Any cut through a prerequisite arc costs more than cutting every source arc.
  out.prerequisite_cap = CheckedAdd(out.positive_profit, 1);
  detail::CheckedMul(static_cast<std::int64_t>(out.mandatory_count) + 1, M);

  for (std::size_t v = 2; v < profit.size(); ++v) {
    if (profit[v] > 0) out.network.AddArc(0, v, profit[v]);
    else if (profit[v] < 0) out.network.AddArc(v, 1, -profit[v]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto comp = ReductionNetwork::Comp(i);
    out.network.AddArc(comp, ReductionNetwork::Avail(i), out.prerequisite_cap);
    for (std::size_t p : dag.nodes[i].parents)
      out.network.AddArc(comp, ReductionNetwork::Avail(p), out.prerequisite_cap);
  }
  return out;
}

inline std::vector<NodeState> DecodeCut(std::size_t node_count, const std::vector<bool>& source_side) {
  std::vector<NodeState> states(node_count, NodeState::Prune);
  for (std::size_t i = 0; i < node_count; ++i) {
    if (!source_side[ReductionNetwork::Avail(i)]) continue;
    states[i] = source_side[ReductionNetwork::Comp(i)] ? NodeState::Compute : NodeState::Load;
  }
  return states;
}

/// Secondary objective used to break ties between equal-cost plans:
/// fewer computed nodes first, then fewer loaded nodes.
inline std::int64_t TieBreakWeight(const std::vector<NodeState>& states) {
  std::int64_t w = 0;
  for (auto s : states) w += s == NodeState::Compute ? 2 : s == NodeState::Load ? 1 : 0;
  return w;
}

/// Globally optimal plan via one minimum cut.
///
/// Ties are resolved by pricing Compute at K*c + 2 and Load at K*l + 1 with
/// K = 2n + 1. The perturbation totals at most 2n < K, so it can only order
/// plans whose true costs are equal; among those it minimises TieBreakWeight.
inline ExecutionPlan OptimalPlan(const CostAnnotatedDag& dag) {
  using detail::CheckedAdd;
  using detail::CheckedMul;
  dag.Validate();
  ExecutionPlan plan;
  if (dag.size() == 0) return plan;

  const auto K = static_cast<std::int64_t>(2 * dag.size() + 1);
  CostAnnotatedDag perturbed = dag;
  for (auto& node : perturbed.nodes) {
    node.compute_cost = CheckedAdd(CheckedMul(node.compute_cost, K), 2);
    if (node.load_cost) node.load_cost = CheckedAdd(CheckedMul(*node.load_cost, K), 1);
  }
  const ReductionNetwork reduction = BuildNetwork(perturbed);
  const auto cut = ComputeMinCut(reduction.network);
  plan.states = DecodeCut(dag.size(), cut.source_side);
  plan.objective = PlanCost(dag, plan.states);
  return plan;
}

inline constexpr std::size_t kBruteForceLimit = 12;

/// Exhaustive minimum over all 3^n assignments. Test oracle; n <= 12.
/// Among equal costs prefers the smaller TieBreakWeight, then the
/// lexicographically smallest state vector (Load < Compute < Prune).
inline ExecutionPlan BruteForcePlan(const CostAnnotatedDag& dag) {
  dag.Validate();
  const std::size_t n = dag.size();
  if (n > kBruteForceLimit)
    throw TooLarge("brute force planning limited to " + std::to_string(kBruteForceLimit) + " nodes");
  std::vector<NodeState> states(n, NodeState::Load);
  std::optional<ExecutionPlan> best;
  std::int64_t best_weight = 0;
  while (true) {
    if (!FindViolation(dag, states)) {
      std::int64_t cost = PlanCost(dag, states);
      std::int64_t weight = TieBreakWeight(states);
      // Enumeration is in lexicographic order, so strict comparison keeps the first.
      if (!best || cost < best->objective || (cost == best->objective && weight < best_weight)) {
        best = ExecutionPlan{states, cost};
        best_weight = weight;
      }
    }
    // Odometer increment over Load < Compute < Prune, last node fastest.
    std::size_t i = n;
    while (i > 0 && states[i - 1] == NodeState::Prune) states[--i] = NodeState::Load;
    if (i == 0) break;
    states[i - 1] = static_cast<NodeState>(static_cast<int>(states[i - 1]) + 1);
  }
  if (!best) throw Error("no feasible plan exists");
  return *best;
}

/// Line-delimited debug records: name, c, l|inf, size, mandatory, state.
inline void WritePlanRecords(std::ostream& os, const CostAnnotatedDag& dag, const ExecutionPlan& plan) {
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const auto& n = dag.nodes[i];
    os << n.name << '\t' << n.compute_cost << '\t'
       << (n.load_cost ? std::to_string(*n.load_cost) : std::string("inf")) << '\t' << n.size << '\t'
       << (n.mandatory ? 1 : 0) << '\t'
       << (i < plan.states.size() ? StateName(plan.states[i]) : "-") << '\n';
  }
}

}  // namespace iterflow
