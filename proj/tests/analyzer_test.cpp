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

#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cachepart/analyzer.hpp"
#include "cachepart/config.hpp"
#include "cachepart/errors.hpp"
#include "cachepart/optimizer.hpp"
#include "cachepart/profiler.hpp"
#include "oracles.hpp"

using namespace cachepart;

namespace {

TaskSpec task(std::string name, std::uint64_t base, std::uint64_t ws, std::uint64_t n) {
  TaskSpec t;
  t.name = std::move(name);
  t.base = base;
  t.working_set_bytes = ws;
  t.stride_bytes = 64;
  t.period_accesses = n;
  return t;
}

PartitionAssignment assign(const std::map<EntityId, std::uint32_t>& sizes, std::uint32_t sets) {
  PartitionAssignment a;
  a.sizes = sizes;
  a.layout = layout_partitions(sizes, sets);
  return a;
}

// Streaming producer and consumer around one FIFO of `lines` lines.
TaskGraph fifo_graph(std::uint64_t lines, std::uint64_t tokens_per_period) {
  TaskGraph g;
  g.periods = 2;
  g.tasks = {task("p", 0x100000, 4096, 64), task("c", 0x200000, 4096, 64)};
  FifoSpec f;
  f.name = "q";
  f.producer = 0;
  f.consumer = 1;
  f.token_bytes = 64;
  f.capacity_bytes = 64 * lines;
  f.base = 0x300000;
  f.tokens_per_period = tokens_per_period;
  g.fifos = {f};
  return g;
}

const std::vector<SchedulePolicy> kPolicies = {SchedulePolicy::round_robin(1),
                                               SchedulePolicy::round_robin(5),
                                               SchedulePolicy::round_robin(64),
                                               SchedulePolicy::run_to_completion()};

}  // namespace

TEST(Replay, SingleTaskModesCoincide) {
  const CacheConfig cfg{64, 32, 2};
  TaskGraph g;
  g.tasks = {task("a", 0, 8192, 2000)};
  g.tasks[0].mix = {1, 1, 1};
  const auto whole = assign({{EntityId::task(0), 32}}, 32);
  const StaticAssignment one{1, {0}};
  const auto s = run_experiment(g, one, SchedulePolicy::round_robin(1), cfg, CacheMode::shared,
                                nullptr, 1);
  const auto p = run_experiment(g, one, SchedulePolicy::round_robin(1), cfg,
                                CacheMode::partitioned, &whole, 1);
  EXPECT_EQ(s.counters, p.counters);
  const auto cmp = compare_modes(s, p);
  ASSERT_TRUE(cmp.miss_ratio.has_value());
  EXPECT_EQ(*cmp.miss_ratio, 1.0);
  for (const auto& [_, d] : cmp.deltas) EXPECT_EQ(d, 0);
}

TEST(Replay, StreamingTaskGainsNothing) {
  const CacheConfig cfg{64, 16, 2};
  TaskGraph g;
  g.tasks = {task("s", 0, 64 * 4096, 3000)};
  g.tasks[0].mix = {0, 1, 0};
  const auto half = assign({{EntityId::task(0), 8}}, 16);
  const StaticAssignment one{1, {0}};
  const auto s = run_experiment(g, one, SchedulePolicy::run_to_completion(), cfg,
                                CacheMode::shared, nullptr, 1);
  const auto p = run_experiment(g, one, SchedulePolicy::run_to_completion(), cfg,
                                CacheMode::partitioned, &half, 1);
  EXPECT_EQ(*compare_modes(s, p).miss_ratio, 1.0);
}

TEST(Replay, DisjointFittingTasksOnlyColdMiss) {
  const CacheConfig cfg{64, 32, 2};
  TaskGraph g;
  g.tasks = {task("a", 0x10000, 1024, 500), task("b", 0x20000, 2048, 500)};
  const auto a = assign({{EntityId::task(0), 8}, {EntityId::task(1), 16}}, 32);
  const auto r = run_experiment(g, StaticAssignment{2, {0, 1}}, SchedulePolicy::round_robin(1),
                                cfg, CacheMode::partitioned, &a, 1);
  EXPECT_EQ(r.counters_for(EntityId::task(0)).replacement_misses, 0u);
  EXPECT_EQ(r.counters_for(EntityId::task(0)).cold_misses, 16u);
  EXPECT_EQ(r.counters_for(EntityId::task(1)).cold_misses, 32u);
  EXPECT_EQ(r.off_diagonal_evictions(), 0u);
}

TEST(Replay, ThrashingPairConflictsWhenShared) {
  const auto cfg = load_config(CACHEPART_CONFIG_DIR "/thrash_pair.yaml");
  // With a quantum of one, each set cycles A0 B0 A1 B1 and every victim is
  // the evictor's own older line; longer slices evict the other task.
  const auto fine = run_experiment(cfg.graph, cfg.placement, SchedulePolicy::round_robin(1),
                                   cfg.cache, CacheMode::shared, nullptr, 1);
  EXPECT_GT(fine.counters_for(EntityId::task(0)).replacement_misses, 0u);
  const auto s = run_experiment(cfg.graph, cfg.placement, SchedulePolicy::round_robin(64),
                                cfg.cache, CacheMode::shared, nullptr, 1);
  EXPECT_GT(s.counters_for(EntityId::task(0)).replacement_misses, 0u);
  EXPECT_GT(s.evictions.at({EntityId::task(1), EntityId::task(0)}), 0u);
  EXPECT_GT(s.off_diagonal_evictions(), 0u);
}

TEST(Replay, PartitionedRequiresAssignment) {
  TaskGraph g;
  g.tasks = {task("a", 0, 1024, 10)};
  EXPECT_THROW(run_experiment(g, StaticAssignment{1, {0}}, SchedulePolicy::round_robin(1),
                              CacheConfig{64, 8, 1}, CacheMode::partitioned, nullptr, 1),
               ConfigError);
}

TEST(Compositionality, RandomGraphsAreExact) {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 15; ++trial) {
    const CacheConfig cfg{64, 32, 1 + static_cast<std::uint32_t>(rng() % 4)};
    const auto g = oracle::random_graph(rng, cfg);
    const auto sizes = oracle::random_sizes(rng, g, cfg.num_sets);
    const auto a = assign(sizes, cfg.num_sets);
    const std::uint64_t seed = 1 + rng() % 100;
    const std::vector<std::uint64_t> seeds = {seed};
    const auto curves = profile_graph(g, SizeLadder::powers_of_two(cfg.num_sets), cfg, seeds);
    const auto procs = 1 + static_cast<std::uint32_t>(rng() % 3);
    StaticAssignment place{procs, {}};
    for (std::size_t t = 0; t < g.tasks.size(); ++t) place.processor_of.push_back(rng() % procs);
    const auto report =
        verify_compositionality(g, place, curves, a, kPolicies, cfg, seed);
    EXPECT_EQ(report.headline, 0.0) << "trial " << trial;
    for (const auto& row : report.rows) EXPECT_EQ(row.delta, 0.0);
  }
}

TEST(Compositionality, SharedThrashingDeviates) {
  const auto cfg = load_config(CACHEPART_CONFIG_DIR "/thrash_pair.yaml");
  const std::vector<std::uint64_t> seeds = {1};
  const auto curves = profile_graph(cfg.graph, cfg.ladder, cfg.cache, seeds);
  const auto a = assign({{EntityId::task(0), 32}, {EntityId::task(1), 32}}, 64);
  const std::vector<SchedulePolicy> fine = {SchedulePolicy::round_robin(1)};
  const auto r = verify_compositionality(cfg.graph, cfg.placement, curves, a, fine, cfg.cache, 1,
                                         CacheMode::shared);
  EXPECT_GT(r.headline, 0.0);
  for (const auto& row : r.rows) EXPECT_LT(row.expected, static_cast<double>(row.simulated));
}

TEST(FifoCheck, RuleSizedFifoOnlyColdMisses) {
  const CacheConfig cfg{64, 64, 2};
  const auto g = fifo_graph(32, 80);
  const auto rule = fifo_partition_size(g.fifos[0], cfg);
  EXPECT_EQ(rule, 16u);
  const auto a = assign({{EntityId::task(0), 16}, {EntityId::task(1), 16}, {EntityId::fifo(0), rule}}, 64);
  for (const auto& policy : kPolicies) {
    for (std::uint32_t procs : {1u, 2u}) {
      const auto r = run_experiment(g, StaticAssignment{procs, {0, procs - 1}}, policy, cfg,
                                    CacheMode::partitioned, &a, 1);
      const auto checks = fifo_hit_check(g, cfg, r);
      ASSERT_EQ(checks.size(), 1u);
      EXPECT_TRUE(checks[0].pass) << policy.to_string();
      EXPECT_EQ(checks[0].replacement_misses, 0u);
      EXPECT_EQ(checks[0].cold_misses, 32u);
    }
  }
}

TEST(FifoCheck, HalvedFifoThrashes) {
  const CacheConfig cfg{64, 64, 2};
  const auto g = fifo_graph(32, 80);
  const auto a = assign({{EntityId::task(0), 16}, {EntityId::task(1), 16}, {EntityId::fifo(0), 8}}, 64);
  const auto r = run_experiment(g, StaticAssignment{1, {0, 0}}, SchedulePolicy::run_to_completion(),
                                cfg, CacheMode::partitioned, &a, 1);
  const auto checks = fifo_hit_check(g, cfg, r);
  EXPECT_FALSE(checks[0].pass);
  EXPECT_GT(checks[0].replacement_misses, 0u);
}

TEST(FifoCheck, IdleFifoPasses) {
  const CacheConfig cfg{64, 64, 2};
  const auto g = fifo_graph(8, 0);
  const auto a = assign({{EntityId::task(0), 16}, {EntityId::task(1), 16}, {EntityId::fifo(0), 4}}, 64);
  const auto r = run_experiment(g, StaticAssignment{2, {0, 1}}, SchedulePolicy::round_robin(1), cfg,
                                CacheMode::partitioned, &a, 1);
  const auto checks = fifo_hit_check(g, cfg, r);
  EXPECT_TRUE(checks[0].pass);
  EXPECT_EQ(checks[0].cold_misses, 0u);
}

TEST(CompareModes, ZeroPartitionedMissesLeavesRatioUndefined) {
  ExperimentResult s, p;
  s.counters[EntityId::task(0)] = {.hits = 1, .cold_misses = 2, .replacement_misses = 0};
  p.counters[EntityId::task(0)] = {.hits = 3, .cold_misses = 0, .replacement_misses = 0};
  const auto cmp = compare_modes(s, p);
  EXPECT_FALSE(cmp.miss_ratio.has_value());
  EXPECT_EQ(cmp.deltas.at(EntityId::task(0)), 2);
}
