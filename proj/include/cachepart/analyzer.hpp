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

// Experiment runner and compositionality checks: shared vs partitioned
// replays, expected vs simulated per-task misses, FIFO hit guarantees.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cachepart/cache.hpp"
#include "cachepart/optimizer.hpp"
#include "cachepart/profiler.hpp"
#include "cachepart/workload.hpp"

namespace cachepart {

struct ExperimentResult {
  CacheMode mode = CacheMode::shared;
  std::map<EntityId, EntityCounters> counters;  // every graph entity
  std::uint64_t total_accesses = 0;
  double miss_rate = 0.0;
  EvictionMatrix evictions;

  std::uint64_t total_misses() const;
  EntityCounters counters_for(EntityId e) const;
  // Evictions whose evictor differs from the victim.
  std::uint64_t off_diagonal_evictions() const;
};

// Replays a global trace. `partitions` is required in partitioned mode and
// ignored in shared mode.
ExperimentResult replay(const TaskGraph& graph, const Trace& trace, const CacheConfig& config,
                        CacheMode mode, const PartitionAssignment* partitions);

// Schedules the graph for `run_seed` and replays the result.
ExperimentResult run_experiment(const TaskGraph& graph, const StaticAssignment& placement,
                                const SchedulePolicy& policy, const CacheConfig& config,
                                CacheMode mode, const PartitionAssignment* partitions,
                                std::uint64_t run_seed);

enum class ExpectedSource : std::uint8_t { same_input, mean };

struct TaskComparison {
  EntityId task;
  std::string policy;
  std::uint32_t sets = 0;
  double expected = 0.0;
  std::uint64_t simulated = 0;
  double delta = 0.0;  // simulated - expected
};

struct CompositionalityReport {
  std::vector<TaskComparison> rows;  // policy-major, then task order
  // max over rows of |delta| / total simulated misses of that row's run
  double headline = 0.0;
};

// Runs the graph under every policy in `mode` and compares each task's misses
// with its solo curve at the assigned size.
CompositionalityReport verify_compositionality(const TaskGraph& graph,
                                               const StaticAssignment& placement,
                                               std::span<const MissCurve> curves,
                                               const PartitionAssignment& partitions,
                                               std::span<const SchedulePolicy> policies,
                                               const CacheConfig& config, std::uint64_t run_seed,
                                               CacheMode mode = CacheMode::partitioned,
                                               ExpectedSource source = ExpectedSource::same_input);

struct FifoCheck {
  EntityId fifo;
  bool pass = false;
  std::uint64_t cold_misses = 0;
  std::uint64_t replacement_misses = 0;
  std::uint64_t distinct_lines = 0;
};

// Pass iff the FIFO had no replacement misses and no more cold misses than
// lines in its address range.
std::vector<FifoCheck> fifo_hit_check(const TaskGraph& graph, const CacheConfig& config,
                                      const ExperimentResult& result);

struct ModeComparison {
  std::uint64_t shared_misses = 0;
  std::uint64_t partitioned_misses = 0;
  std::optional<double> miss_ratio;             // shared / partitioned; none when 0
  std::map<EntityId, std::int64_t> deltas;      // shared - partitioned
};

ModeComparison compare_modes(const ExperimentResult& shared, const ExperimentResult& partitioned);

}  // namespace cachepart
