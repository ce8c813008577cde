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

// Line-oriented text renderings shared by the CLI and tests.

#include <ostream>
#include <string>

#include "iterflow/engine.hpp"
#include "iterflow/workspace.hpp"

namespace iterflow {

inline std::string JoinNames(const std::set<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ",") + n;
  return out;
}

inline std::string FormatMetric(double v) { return FormatNumber(v); }

/// `plan`: one record per live node, then statically pruned nodes, then the objective.
inline void RenderPlan(std::ostream& os, const PlannedIteration& p) {
  os << "# node\tc_us\tl_us\tsize\tmandatory\tstate\n";
  WritePlanRecords(os, p.costs, p.plan);
  for (const auto& name : p.slice.pruned_static) os << name << "\t-\t-\t-\t0\tStaticPrune\n";
  os << "objective_us\t" << p.plan.objective << "\n";
}

inline void RenderRecord(std::ostream& os, const VersionEntry& v) {
  const RunRecord& r = v.run;
  os << "version\t" << v.id << "\n";
  os << "parent\t" << (v.parent_id ? std::to_string(*v.parent_id) : "-") << "\n";
  os << "workflow\t" << r.workflow << "\n";
  os << "# node\tstate\tduration_us\twrite_us\tbytes\tmaterialized\n";
  for (const auto& n : r.graph) {
    const NodeEvent* e = r.Event(n.name);
    os << n.name << '\t' << r.DisplayState(n.name);
    if (e) {
      os << '\t' << e->duration_us << '\t' << e->write_us << '\t' << e->bytes << '\t'
         << (e->materialized ? "yes" : e->skip ? SkipReasonName(*e->skip) : "-");
    } else {
      os << "\t-\t-\t-\t-";
    }
    os << '\n';
  }
  for (const auto& [name, value] : r.metrics) os << "metric\t" << name << '\t' << FormatMetric(value) << '\n';
  os << "planned_objective_us\t" << r.planned_objective << "\n";
  os << "wall_clock_us\t" << r.wall_clock_us << "\n";
}

inline void RenderVersions(std::ostream& os, const std::vector<VersionEntry>& versions) {
  os << "# id\tparent\ttimestamp\twall_clock_us\tmetrics\n";
  for (const auto& v : versions) {
    os << v.id << '\t' << (v.parent_id ? std::to_string(*v.parent_id) : "-") << '\t' << v.timestamp << '\t'
       << v.run.wall_clock_us << '\t';
    bool first = true;
    for (const auto& [k, val] : v.run.metrics) {
      os << (first ? "" : ",") << k << '=' << FormatMetric(val);
      first = false;
    }
    os << '\n';
  }
}

inline void RenderComparison(std::ostream& os, const ComparisonReport& r) {
  os << "compare\t" << r.a << '\t' << r.b << '\n';
  os << "decls_added\t" << JoinNames(r.decls.added) << '\n';
  os << "decls_removed\t" << JoinNames(r.decls.removed) << '\n';
  os << "decls_modified\t" << JoinNames(r.decls.modified) << '\n';
  os << "dag_added\t" << JoinNames(r.nodes_added) << '\n';
  os << "dag_removed\t" << JoinNames(r.nodes_removed) << '\n';
  for (const auto& c : r.state_changed) os << "state\t" << c.name << '\t' << c.from << "\t->\t" << c.to << '\n';
  for (const auto& m : r.metrics) {
    os << "metric\t" << m.name << '\t' << (m.a ? FormatMetric(*m.a) : "-") << "\t->\t"
       << (m.b ? FormatMetric(*m.b) : "-");
    if (auto d = m.delta()) os << '\t' << (*d >= 0 ? "+" : "") << FormatMetric(*d);
    os << '\n';
  }
  os << "--- source\n";
  for (const auto& l : r.source_diff) os << l.op << l.text << '\n';
}

}  // namespace iterflow
