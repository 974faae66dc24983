// Copyright 2026 The cachepart Authors
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

// Partition sizing: minimum total misses as a multiple-choice knapsack over
// set counts, and the static-assignment throughput model.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "cachepart/cache.hpp"
#include "cachepart/profiler.hpp"
#include "cachepart/workload.hpp"

namespace cachepart {

struct PartitionAssignment {
  std::map<EntityId, std::uint32_t> sizes;     // every partitioned entity
  std::set<EntityId> optimized;                // entities chosen from a curve
  std::map<EntityId, Partition> layout;
  double predicted_total_misses = 0.0;

  std::uint64_t total_sets() const;
  // Layout plus the graph's buffer intervals, ready for a partitioned cache.
  PartitionTable to_table(const TaskGraph& graph) const;
};

// Packs partitions by descending size (then EntityId) at aligned bases.
// Collision-free whenever the sizes are powers of two summing to at most
// `num_sets`; throws InfeasibleError otherwise.
std::map<EntityId, Partition> layout_partitions(const std::map<EntityId, std::uint32_t>& sizes,
                                                std::uint32_t num_sets);

// Exact minimum of the summed curve means over one ladder size per curve,
// subject to sum(sizes) + sum(fixed) <= total_sets. `pinned` restricts a
// curve's entity to one size. Ties go to fewer total sets, then to the
// lexicographically smallest size vector in EntityId order.
PartitionAssignment solve_min_misses(std::span<const MissCurve> curves,
                                     const std::map<EntityId, std::uint32_t>& fixed,
                                     std::uint32_t total_sets, const SizeLadder& ladder,
                                     const std::map<EntityId, std::uint32_t>& pinned = {});

// Sum over curves of the mean at the assigned size; entities without an
// assigned size are skipped.
double predict_total_misses(const PartitionAssignment& assignment,
                            std::span<const MissCurve> curves);

// e(t, p, c) for homogeneous processors: one table per task over the ladder.
struct ThroughputModel {
  std::vector<std::uint32_t> ladder;
  std::map<EntityId, std::vector<double>> exec_time;  // [task][ladder index]
  std::uint32_t processors = 1;
  std::vector<double> t_switch;  // per processor
  std::vector<double> t_idle;    // per processor

  double exec(EntityId task, std::uint32_t sets) const;
  double switch_time(std::uint32_t p) const { return p < t_switch.size() ? t_switch[p] : 0.0; }
  double idle_time(std::uint32_t p) const { return p < t_idle.size() ? t_idle[p] : 0.0; }
};

// E(p, T_p) = sum of e(t, p, c(t)) over T_p, plus t_switch and t_idle of p.
double processor_time(std::span<const EntityId> tasks_on_p, std::uint32_t processor,
                      const ThroughputModel& model, const PartitionAssignment& assignment);

struct ThroughputOptions {
  bool exact = true;
  std::uint64_t search_limit = 20'000'000;  // combinations R^N * K^N
};

struct ThroughputSolution {
  std::vector<EntityId> tasks;
  StaticAssignment placement;       // indexed like `tasks`
  PartitionAssignment partitions;   // task sizes only
  std::vector<double> processor_times;
  double makespan = 0.0;
  double total_misses = 0.0;
};

// Minimizes max_p E(p, T_p) over task placement and task sizes within
// `total_sets`. Exact mode enumerates everything (ties toward fewer misses);
// heuristic mode places tasks longest-first at miss-optimal sizes and then
// applies single-task moves and pairwise swaps while they help.
ThroughputSolution optimize_throughput(std::span<const EntityId> tasks,
                                       const ThroughputModel& model,
                                       std::span<const MissCurve> curves,
                                       std::uint32_t total_sets, const ThroughputOptions& options);

// Sum of e(t, c(t)) over the model's tasks that have an assigned size.
double power_objective(const PartitionAssignment& assignment, const ThroughputModel& model);
// With curves, the execution proxy degenerates to misses.
double power_objective(const PartitionAssignment& assignment, std::span<const MissCurve> curves);

}  // namespace cachepart
