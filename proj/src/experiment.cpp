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

#include "cachepart/experiment.hpp"

#include <algorithm>

#include "cachepart/errors.hpp"

namespace cachepart {

std::vector<MissCurve> profile_experiment(const ExperimentConfig& cfg, unsigned jobs) {
  return profile_graph(cfg.graph, cfg.ladder, cfg.cache, cfg.run_seeds, jobs);
}

std::map<EntityId, std::uint32_t> fifo_reservations(const ExperimentConfig& cfg) {
  std::map<EntityId, std::uint32_t> out;
  for (std::uint32_t f = 0; f < cfg.graph.fifos.size(); ++f) {
    const auto& fifo = cfg.graph.fifos[f];
    out[EntityId::fifo(f)] = fifo.pinned_sets ? *fifo.pinned_sets
                                              : fifo_partition_size(fifo, cfg.cache);
  }
  return out;
}

PartitionAssignment optimize_experiment(const ExperimentConfig& cfg,
                                        std::span<const MissCurve> curves) {
  auto fixed = fifo_reservations(cfg);
  std::map<EntityId, std::uint32_t> pinned;
  std::vector<MissCurve> free_curves;
  for (auto e : cfg.graph.entities()) {
    if (e.kind == EntityKind::fifo) continue;
    const MissCurve* curve = nullptr;
    for (const auto& c : curves) {
      if (c.entity == e) curve = &c;
    }
    const auto pin = cfg.graph.pinned_sets(e);
    if (curve == nullptr) {
      if (!pin) throw CurveGapError("no miss curve for " + cfg.graph.entity_name(e));
      fixed[e] = *pin;
      continue;
    }
    if (pin) pinned[e] = *pin;
    free_curves.push_back(*curve);
  }
  auto result = solve_min_misses(free_curves, fixed, cfg.budget_sets, cfg.ladder, pinned);
  result.layout = layout_partitions(result.sizes, cfg.cache.num_sets);
  return result;
}

ThroughputModel throughput_model(const ExperimentConfig& cfg, unsigned jobs) {
  ThroughputModel model;
  model.ladder = cfg.ladder.sizes;
  model.processors = cfg.placement.num_processors;
  model.t_switch = cfg.t_switch;
  model.t_idle = cfg.t_idle;

  std::vector<EntityStreams> runs(cfg.run_seeds.size());
  parallel_for(runs.size(), jobs, [&](std::size_t s) {
    runs[s] = canonical_streams(cfg.graph, cfg.cache, cfg.run_seeds[s]);
  });

  const std::size_t N = cfg.graph.tasks.size();
  const std::size_t K = cfg.ladder.sizes.size();
  std::vector<std::vector<double>> table(N, std::vector<double>(K, 0.0));
  parallel_for(N * K, jobs, [&](std::size_t cell) {
    const std::size_t t = cell / K;
    const std::size_t k = cell % K;
    double sum = 0.0;
    for (const auto& run : runs) {
      sum += measure_execution_proxy(run.at(EntityId::task(static_cast<std::uint32_t>(t))),
                                     cfg.ladder.sizes[k], cfg.cache, cfg.cost);
    }
    table[t][k] = sum / static_cast<double>(runs.size());
  });
  for (std::uint32_t t = 0; t < N; ++t) model.exec_time[EntityId::task(t)] = std::move(table[t]);
  return model;
}

std::vector<std::string> trace_header(const ExperimentConfig& cfg, const SchedulePolicy& policy,
                                      std::uint64_t run_seed) {
  std::vector<std::string> h;
  h.push_back(" cachepart trace v1");
  h.push_back(" config " + cfg.name);
  h.push_back(" schedule " + policy.to_string());
  h.push_back(" run_seed " + std::to_string(run_seed));
  std::string tasks = " tasks";
  for (std::uint32_t t = 0; t < cfg.graph.tasks.size(); ++t) {
    tasks += " " + std::to_string(t) + "=" + cfg.graph.tasks[t].name;
  }
  h.push_back(tasks);
  return h;
}

RunOutputs run_configured(const ExperimentConfig& cfg, const PartitionAssignment* partitions,
                          std::span<const MissCurve> curves, const RunOptions& opts) {
  const bool want_shared = opts.mode != RunMode::partitioned;
  const bool want_partitioned = opts.mode != RunMode::shared;
  if (want_partitioned && partitions == nullptr) {
    throw ConfigError("mode '" + std::string(to_string(opts.mode)) +
                      "' needs a partition assignment");
  }
  if (partitions != nullptr) {
    const auto violations = validate_partition_table(partitions->to_table(cfg.graph), cfg.cache);
    if (!violations.empty()) {
      throw InfeasibleError("assignment violates the partition table: " +
                            violations.front().message);
    }
  }

  RunOutputs out;
  out.run_seed = opts.run_seed;
  out.primary = cfg.schedules.front();
  if (opts.trace != nullptr) {
    out.trace = *opts.trace;
  } else {
    out.trace = schedule(cfg.graph, cfg.placement, out.primary, cfg.cache.line_size_bytes,
                         opts.run_seed)
                    .trace;
    out.trace.header = trace_header(cfg, out.primary, opts.run_seed);
  }

  if (want_shared) out.shared = replay(cfg.graph, out.trace, cfg.cache, CacheMode::shared, nullptr);
  if (want_partitioned) {
    out.partitioned = replay(cfg.graph, out.trace, cfg.cache, CacheMode::partitioned, partitions);
    if (out.partitioned->off_diagonal_evictions() != 0) {
      out.violations.push_back("partitioned run has cross-entity evictions");
    }
  }
  if (out.shared && out.partitioned) out.comparison = compare_modes(*out.shared, *out.partitioned);

  if (partitions != nullptr && !curves.empty()) {
    const CacheMode mode = want_partitioned ? CacheMode::partitioned : CacheMode::shared;
    out.compositionality = verify_compositionality(cfg.graph, cfg.placement, curves, *partitions,
                                                   cfg.schedules, cfg.cache, opts.run_seed, mode,
                                                   cfg.expected);
    if (want_partitioned && out.compositionality->headline != 0.0) {
      out.violations.push_back("partitioned per-task misses differ from solo profiles");
    }
  }

  if (out.partitioned) {
    out.fifo_checks = fifo_hit_check(cfg.graph, cfg.cache, *out.partitioned);
    for (const auto& check : out.fifo_checks) {
      const auto& fifo = cfg.graph.fifos[check.fifo.index];
      const bool rule_sized = partitions->sizes.at(check.fifo) >= fifo_partition_size(fifo, cfg.cache);
      if (rule_sized && !check.pass) {
        out.violations.push_back("fifo '" + fifo.name + "' missed despite hit-only sizing");
      }
    }
  }
  return out;
}

}  // namespace cachepart
