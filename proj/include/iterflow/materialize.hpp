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

// Online materialization under a storage budget.
//
// When a computed node finishes, its reuse benefit
//
//   r_i = 2 * l_i - (c_i + sum of c_j over all ancestors j)
//
// estimates what persisting it now (one write ~ l_i, one later read l_i)
// costs relative to recomputing it and its lineage next iteration. The node
// is persisted iff r_i < 0 and its output fits in the remaining budget.
// Decisions are final; there is no eviction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "iterflow/error.hpp"
#include "iterflow/recompute.hpp"

namespace iterflow {

struct NodeRuntimeStats {
  std::string name;
  std::int64_t compute_cost = 0;  // µs
  std::int64_t load_cost = 0;     // µs, estimated until observed
  std::uint64_t size = 0;         // bytes
  std::int64_t ancestor_compute_sum = 0;
};

inline std::int64_t ReuseBenefit(const NodeRuntimeStats& s) {
  return 2 * s.load_cost - (s.compute_cost + s.ancestor_compute_sum);
}

class MaterializationBudget {
 public:
  explicit MaterializationBudget(std::uint64_t total_bytes, std::uint64_t used_bytes = 0)
      : total_(total_bytes), used_(used_bytes) {
    if (used_ > total_) throw Error("materialization budget already exceeded");
  }

  std::uint64_t total_bytes() const noexcept { return total_; }
  std::uint64_t used_bytes() const noexcept { return used_; }
  std::uint64_t remaining() const noexcept { return total_ - used_; }

  bool Fits(std::uint64_t bytes) const noexcept { return bytes <= remaining(); }

  void Charge(std::uint64_t bytes) {
    if (!Fits(bytes)) throw Error("materialization budget overrun");
    used_ += bytes;
  }

  void Refund(std::uint64_t bytes) { used_ -= std::min(bytes, used_); }

 private:
  std::uint64_t total_;
  std::uint64_t used_;
};

enum class SkipReason { NonNegativeBenefit, BudgetExceeded };

inline const char* SkipReasonName(SkipReason r) {
  return r == SkipReason::NonNegativeBenefit ? "NonNegativeBenefit" : "BudgetExceeded";
}

inline std::optional<SkipReason> SkipReasonFromName(std::string_view name) {
  if (name == "NonNegativeBenefit") return SkipReason::NonNegativeBenefit;
  if (name == "BudgetExceeded") return SkipReason::BudgetExceeded;
  return std::nullopt;
}

struct MaterializationDecision {
  std::optional<SkipReason> skip;  // empty: materialize

  bool materialize() const noexcept { return !skip.has_value(); }

  static MaterializationDecision Materialize() { return {}; }
  static MaterializationDecision Skip(SkipReason r) { return {r}; }

  bool operator==(const MaterializationDecision&) const = default;
};

/// Applies the online rule and charges the budget on Materialize.
inline MaterializationDecision Decide(const NodeRuntimeStats& stats, MaterializationBudget& budget) {
  if (ReuseBenefit(stats) >= 0) return MaterializationDecision::Skip(SkipReason::NonNegativeBenefit);
  if (!budget.Fits(stats.size)) return MaterializationDecision::Skip(SkipReason::BudgetExceeded);
  budget.Charge(stats.size);
  return MaterializationDecision::Materialize();
}

/// Load-time estimate for an artifact that has never been read back.
struct LoadCostModel {
  double throughput_bytes_per_sec = 500e6;
  double overhead_us = 2000;

  std::int64_t Estimate(std::uint64_t bytes) const {
    return static_cast<std::int64_t>(
        std::ceil(overhead_us + static_cast<double>(bytes) * 1e6 / throughput_bytes_per_sec));
  }
};

// --- Next-iteration analysis ------------------------------------------------
//
// For the following helpers the CostAnnotatedDag describes the current
// iteration as if it will be rerun unchanged: load_cost is the estimated
// read cost of each candidate (nodes without one cannot be stored) and
// size its output bytes.

struct SubsetChoice {
  std::vector<std::string> names;  // sorted
  std::uint64_t bytes = 0;
  std::int64_t next_cost = 0;
};

/// Planned cost of the next iteration if exactly `stored` nodes are loadable.
inline std::int64_t NextIterationCost(const CostAnnotatedDag& dag, const std::vector<bool>& stored) {
  CostAnnotatedDag next = dag;
  for (std::size_t i = 0; i < next.size(); ++i)
    if (!stored[i]) next.nodes[i].load_cost.reset();
  return OptimalPlan(next).objective;
}

namespace detail {

inline SubsetChoice MakeChoice(const CostAnnotatedDag& dag, const std::vector<bool>& stored) {
  SubsetChoice c;
  for (std::size_t i = 0; i < dag.size(); ++i)
    if (stored[i]) {
      c.names.push_back(dag.nodes[i].name);
      c.bytes += dag.nodes[i].size;
    }
  std::sort(c.names.begin(), c.names.end());
  c.next_cost = NextIterationCost(dag, stored);
  return c;
}

}  // namespace detail

/// Subset chosen by the online rule when every node is computed once in
/// topological order.
inline SubsetChoice OnlineSubset(const CostAnnotatedDag& dag, std::uint64_t budget_bytes) {
  MaterializationBudget budget(budget_bytes);
  std::vector<bool> stored(dag.size(), false);
  std::vector<std::set<std::size_t>> ancestors(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) {
    for (std::size_t p : dag.nodes[i].parents) {
      ancestors[i].insert(p);
      ancestors[i].insert(ancestors[p].begin(), ancestors[p].end());
    }
    const auto& node = dag.nodes[i];
    if (!node.load_cost) continue;
    NodeRuntimeStats s{node.name, node.compute_cost, *node.load_cost, node.size, 0};
    for (std::size_t a : ancestors[i]) s.ancestor_compute_sum += dag.nodes[a].compute_cost;
    stored[i] = Decide(s, budget).materialize();
  }
  return detail::MakeChoice(dag, stored);
}

inline constexpr std::size_t kOracleCandidateLimit = 20;

/// Exact offline choice: enumerates every candidate subset within budget
/// and keeps the one with the cheapest next iteration (ties: fewer bytes,
/// then lexicographically smaller name list).
inline SubsetChoice OfflineOracle(const CostAnnotatedDag& dag, std::uint64_t budget_bytes) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < dag.size(); ++i)
    if (dag.nodes[i].load_cost) candidates.push_back(i);
  if (candidates.size() > kOracleCandidateLimit)
    throw TooLarge("offline oracle limited to " + std::to_string(kOracleCandidateLimit) + " candidates");

  std::optional<SubsetChoice> best;
  const std::uint64_t subsets = std::uint64_t{1} << candidates.size();
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    std::vector<bool> stored(dag.size(), false);
    std::uint64_t bytes = 0;
    for (std::size_t k = 0; k < candidates.size(); ++k)
      if (mask >> k & 1) {
        stored[candidates[k]] = true;
        bytes += dag.nodes[candidates[k]].size;
      }
    if (bytes > budget_bytes) continue;
    SubsetChoice c = detail::MakeChoice(dag, stored);
    if (!best || std::tie(c.next_cost, c.bytes, c.names) < std::tie(best->next_cost, best->bytes, best->names))
      best = std::move(c);
  }
  return *best;
}

}  // namespace iterflow
