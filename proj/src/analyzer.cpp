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

#include "cachepart/analyzer.hpp"

#include <algorithm>
#include <cmath>

#include "cachepart/errors.hpp"

namespace cachepart {

std::uint64_t ExperimentResult::total_misses() const {
  std::uint64_t m = 0;
  for (const auto& [_, c] : counters) m += c.misses();
  return m;
}

EntityCounters ExperimentResult::counters_for(EntityId e) const {
  auto it = counters.find(e);
  return it == counters.end() ? EntityCounters{} : it->second;
}

std::uint64_t ExperimentResult::off_diagonal_evictions() const {
  std::uint64_t n = 0;
  for (const auto& [pair, count] : evictions) {
    if (pair.first != pair.second) n += count;
  }
  return n;
}

ExperimentResult replay(const TaskGraph& graph, const Trace& trace, const CacheConfig& config,
                        CacheMode mode, const PartitionAssignment* partitions) {
  PartitionTable table;
  if (mode == CacheMode::partitioned) {
    if (partitions == nullptr) throw ConfigError("partitioned mode requires a partition assignment");
    table = partitions->to_table(graph);
  } else {
    table = graph.address_table();
  }
  SharedCache cache(config, mode, std::move(table));
  for (const auto& r : trace.records) {
    if (r.task >= graph.tasks.size()) {
      throw ConfigError("trace record " + std::to_string(r.seq) + " names unknown task #" +
                        std::to_string(r.task));
    }
    cache.access(r.addr, EntityId::task(r.task));
  }

  ExperimentResult out;
  out.mode = mode;
  for (auto e : graph.entities()) out.counters[e] = cache.counters_for(e);
  for (const auto& [e, c] : cache.counters()) out.counters[e] = c;
  out.total_accesses = cache.totals().accesses();
  out.miss_rate = out.total_accesses == 0
                      ? 0.0
                      : static_cast<double>(out.total_misses()) /
                            static_cast<double>(out.total_accesses);
  out.evictions = cache.evictions();
  return out;
}

ExperimentResult run_experiment(const TaskGraph& graph, const StaticAssignment& placement,
                                const SchedulePolicy& policy, const CacheConfig& config,
                                CacheMode mode, const PartitionAssignment* partitions,
                                std::uint64_t run_seed) {
  const auto sched = schedule(graph, placement, policy, config.line_size_bytes, run_seed);
  return replay(graph, sched.trace, config, mode, partitions);
}

CompositionalityReport verify_compositionality(const TaskGraph& graph,
                                               const StaticAssignment& placement,
                                               std::span<const MissCurve> curves,
                                               const PartitionAssignment& partitions,
                                               std::span<const SchedulePolicy> policies,
                                               const CacheConfig& config, std::uint64_t run_seed,
                                               CacheMode mode, ExpectedSource source) {
  CompositionalityReport report;
  for (const auto& policy : policies) {
    const auto result =
        run_experiment(graph, placement, policy, config, mode, &partitions, run_seed);
    const double total = static_cast<double>(result.total_misses());
    for (std::uint32_t t = 0; t < graph.tasks.size(); ++t) {
      const EntityId task = EntityId::task(t);
      const auto size_it = partitions.sizes.find(task);
      if (size_it == partitions.sizes.end()) {
        throw ConfigError(to_string(task) + " has no partition size");
      }
      const MissCurve* curve = nullptr;
      for (const auto& c : curves) {
        if (c.entity == task) curve = &c;
      }
      if (curve == nullptr) throw CurveGapError("no miss curve for " + to_string(task));

      TaskComparison row;
      row.task = task;
      row.policy = policy.to_string();
      row.sets = size_it->second;
      row.expected = source == ExpectedSource::mean
                         ? curve->mean_at(row.sets)
                         : static_cast<double>(curve->sample_at(row.sets, run_seed));
      row.simulated = result.counters_for(task).misses();
      row.delta = static_cast<double>(row.simulated) - row.expected;
      if (row.delta != 0.0) {
        const double rel = total > 0 ? std::abs(row.delta) / total
                                     : std::numeric_limits<double>::infinity();
        report.headline = std::max(report.headline, rel);
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

std::vector<FifoCheck> fifo_hit_check(const TaskGraph& graph, const CacheConfig& config,
                                      const ExperimentResult& result) {
  std::vector<FifoCheck> out;
  for (std::uint32_t f = 0; f < graph.fifos.size(); ++f) {
    const auto& fifo = graph.fifos[f];
    FifoCheck check;
    check.fifo = EntityId::fifo(f);
    const auto c = result.counters_for(check.fifo);
    check.cold_misses = c.cold_misses;
    check.replacement_misses = c.replacement_misses;
    check.distinct_lines =
        lines_covering(fifo.base, fifo.capacity_bytes, config.line_size_bytes).size();
    check.pass = check.replacement_misses == 0 && check.cold_misses <= check.distinct_lines;
    out.push_back(check);
  }
  return out;
}

ModeComparison compare_modes(const ExperimentResult& shared, const ExperimentResult& partitioned) {
  ModeComparison out;
  out.shared_misses = shared.total_misses();
  out.partitioned_misses = partitioned.total_misses();
  if (out.partitioned_misses > 0) {
    out.miss_ratio = static_cast<double>(out.shared_misses) /
                     static_cast<double>(out.partitioned_misses);
  }
  std::map<EntityId, bool> keys;
  for (const auto& [e, _] : shared.counters) keys[e] = true;
  for (const auto& [e, _] : partitioned.counters) keys[e] = true;
  for (const auto& [e, _] : keys) {
    out.deltas[e] = static_cast<std::int64_t>(shared.counters_for(e).misses()) -
                    static_cast<std::int64_t>(partitioned.counters_for(e).misses());
  }
  return out;
}

}  // namespace cachepart
