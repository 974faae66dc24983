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

#include "cachepart/cache.hpp"
#include "cachepart/errors.hpp"
#include "cachepart/optimizer.hpp"
#include "oracles.hpp"

using namespace cachepart;

namespace {

MissCurve curve(EntityId e, std::vector<std::uint32_t> sizes, std::vector<double> mean) {
  MissCurve c;
  c.entity = e;
  c.sizes = std::move(sizes);
  c.seeds = {1};
  for (double m : mean) c.samples.push_back({static_cast<std::uint64_t>(m)});
  c.mean = std::move(mean);
  return c;
}

const EntityId A = EntityId::task(0);
const EntityId B = EntityId::task(1);

std::vector<MissCurve> ab_curves() {
  return {curve(A, {1, 2, 4}, {100, 60, 50}), curve(B, {1, 2, 4}, {80, 30, 25})};
}

ThroughputModel model_from(const std::vector<MissCurve>& curves, std::uint32_t processors,
                           double t_switch, double t_idle) {
  ThroughputModel m;
  m.ladder = curves.front().sizes;
  for (const auto& c : curves) m.exec_time[c.entity] = c.mean;
  m.processors = processors;
  m.t_switch.assign(processors, t_switch);
  m.t_idle.assign(processors, t_idle);
  return m;
}

}  // namespace

TEST(Mckp, TwoTaskExample) {
  const auto curves = ab_curves();
  const auto a = solve_min_misses(curves, {}, 4, SizeLadder{{1, 2, 4}});
  EXPECT_EQ(a.sizes.at(A), 2u);
  EXPECT_EQ(a.sizes.at(B), 2u);
  EXPECT_EQ(a.predicted_total_misses, 90.0);
  EXPECT_EQ(predict_total_misses(a, curves), 90.0);
  EXPECT_EQ(power_objective(a, curves), 90.0);
}

TEST(Mckp, SingleTaskTakesLargest) {
  const std::vector<MissCurve> c = {curve(A, {1, 2, 4, 8}, {40, 30, 20, 10})};
  EXPECT_EQ(solve_min_misses(c, {}, 64, SizeLadder{{1, 2, 4, 8}}).sizes.at(A), 8u);
}

TEST(Mckp, FlatCurvePrefersFewerSets) {
  const std::vector<MissCurve> c = {curve(A, {1, 2, 4}, {5, 5, 5})};
  EXPECT_EQ(solve_min_misses(c, {}, 4, SizeLadder{{1, 2, 4}}).sizes.at(A), 1u);
}

TEST(Mckp, MinimalBudget) {
  const auto curves = ab_curves();
  const auto a = solve_min_misses(curves, {}, 2, SizeLadder{{1, 2, 4}});
  EXPECT_EQ(a.sizes.at(A), 1u);
  EXPECT_EQ(a.sizes.at(B), 1u);
  EXPECT_THROW(solve_min_misses(curves, {}, 1, SizeLadder{{1, 2, 4}}), InfeasibleError);
}

TEST(Mckp, FixedReservationsReduceBudget) {
  const auto curves = ab_curves();
  const std::map<EntityId, std::uint32_t> fifo = {{EntityId::fifo(0), 4}};
  const auto a = solve_min_misses(curves, fifo, 8, SizeLadder{{1, 2, 4}});
  EXPECT_EQ(a.sizes.at(EntityId::fifo(0)), 4u);
  EXPECT_EQ(a.sizes.at(A) + a.sizes.at(B), 4u);
  EXPECT_FALSE(a.optimized.contains(EntityId::fifo(0)));
  EXPECT_THROW(solve_min_misses(curves, fifo, 5, SizeLadder{{1, 2, 4}}), InfeasibleError);
}

TEST(Mckp, PinnedEverywhereDegeneratesToPrediction) {
  const auto curves = ab_curves();
  const std::map<EntityId, std::uint32_t> pins = {{A, 4}, {B, 1}};
  const auto a = solve_min_misses(curves, {}, 8, SizeLadder{{1, 2, 4}}, pins);
  EXPECT_EQ(a.sizes.at(A), 4u);
  EXPECT_EQ(a.sizes.at(B), 1u);
  EXPECT_EQ(a.predicted_total_misses, predict_total_misses(a, curves));
  EXPECT_EQ(a.predicted_total_misses, 130.0);
}

TEST(Mckp, PredictEdgeCases) {
  EXPECT_EQ(predict_total_misses(PartitionAssignment{}, {}), 0.0);
  const std::vector<MissCurve> c = {curve(A, {1, 2}, {50, 42})};
  PartitionAssignment a;
  a.sizes[A] = 2;
  EXPECT_EQ(predict_total_misses(a, c), 42.0);
}

TEST(Mckp, MatchesEnumeration) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    const std::size_t k = 1 + rng() % 4;
    std::vector<std::uint32_t> sizes;
    for (std::size_t i = 0; i < k; ++i) sizes.push_back(1u << i);
    std::vector<MissCurve> curves;
    std::vector<std::vector<double>> cost(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) cost[i].push_back(static_cast<double>(rng() % 20));
      curves.push_back(curve(EntityId::task(static_cast<std::uint32_t>(i)), sizes, cost[i]));
    }
    const std::uint32_t budget = static_cast<std::uint32_t>(n + rng() % (n * sizes.back()));
    const auto want = oracle::mckp_enumerate(cost, sizes, budget);
    ASSERT_TRUE(want.has_value());
    const auto got = solve_min_misses(curves, {}, budget, SizeLadder{sizes});
    EXPECT_EQ(got.predicted_total_misses, want->cost);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(got.sizes.at(EntityId::task(static_cast<std::uint32_t>(i))), want->sizes[i])
          << "trial " << trial << " item " << i;
    }
  }
}

TEST(Layout, AlignedDisjointDescending) {
  const std::map<EntityId, std::uint32_t> sizes = {
      {EntityId::task(0), 2}, {EntityId::task(1), 8}, {EntityId::fifo(0), 1}, {EntityId::task(2), 4}};
  const auto layout = layout_partitions(sizes, 16);
  PartitionTable t;
  for (const auto& [e, p] : layout) t.assign(e, p);
  EXPECT_TRUE(validate_partition_table(t, CacheConfig{64, 16, 1}).empty());
  EXPECT_EQ(layout.at(EntityId::task(1)).base_set, 0u);
  EXPECT_THROW(layout_partitions(sizes, 8), InfeasibleError);
}

TEST(Throughput, ProcessorTime) {
  ThroughputModel m;
  m.ladder = {1};
  m.exec_time = {{A, {10}}, {B, {20}}};
  m.processors = 1;
  m.t_switch = {1};
  m.t_idle = {2};
  PartitionAssignment a;
  a.sizes = {{A, 1}, {B, 1}};
  const std::vector<EntityId> both = {A, B};
  EXPECT_EQ(processor_time(both, 0, m, a), 33.0);
  EXPECT_EQ(processor_time({}, 0, m, a), 3.0);
  m.exec_time = {{A, {7}}};
  m.t_switch = {0};
  m.t_idle = {0};
  const std::vector<EntityId> one = {A};
  EXPECT_EQ(processor_time(one, 0, m, a), 7.0);
}

TEST(Throughput, ThreeTasksTwoProcessors) {
  const std::vector<MissCurve> c = {curve(EntityId::task(0), {1}, {5}),
                                    curve(EntityId::task(1), {1}, {4}),
                                    curve(EntityId::task(2), {1}, {3})};
  const auto m = model_from(c, 2, 0, 0);
  const std::vector<EntityId> tasks = {EntityId::task(0), EntityId::task(1), EntityId::task(2)};
  for (bool exact : {true, false}) {
    const auto s = optimize_throughput(tasks, m, c, 3, {.exact = exact});
    EXPECT_EQ(s.makespan, 7.0);
    EXPECT_NE(s.placement.processor_of[1], s.placement.processor_of[0]);
    EXPECT_EQ(s.placement.processor_of[1], s.placement.processor_of[2]);
  }
}

TEST(Throughput, SymmetricAndSingleProcessor) {
  const std::vector<MissCurve> c = {curve(A, {1}, {6}), curve(B, {1}, {6})};
  const std::vector<EntityId> tasks = {A, B};
  const auto two = optimize_throughput(tasks, model_from(c, 2, 0, 0), c, 2, {});
  EXPECT_EQ(two.makespan, 6.0);
  EXPECT_NE(two.placement.processor_of[0], two.placement.processor_of[1]);
  const auto one = optimize_throughput(tasks, model_from(c, 1, 2, 3), c, 2, {});
  EXPECT_EQ(one.makespan, 17.0);
}

TEST(Throughput, ExactSearchGuard) {
  std::vector<MissCurve> c;
  std::vector<EntityId> tasks;
  for (std::uint32_t i = 0; i < 12; ++i) {
    c.push_back(curve(EntityId::task(i), {1, 2, 4}, {3, 2, 1}));
    tasks.push_back(EntityId::task(i));
  }
  EXPECT_THROW(optimize_throughput(tasks, model_from(c, 4, 0, 0), c, 64, {}),
               SearchSpaceExceededError);
  EXPECT_NO_THROW(optimize_throughput(tasks, model_from(c, 4, 0, 0), c, 64, {.exact = false}));
}

TEST(Throughput, ExactMatchesEnumeration) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const std::uint32_t r = 1 + rng() % 3;
    const std::vector<std::uint32_t> sizes = {1, 2, 4};
    std::vector<MissCurve> c;
    std::vector<EntityId> tasks;
    std::vector<std::vector<double>> miss(n), exec(n);
    for (std::size_t i = 0; i < n; ++i) {
      double m = 30 + rng() % 30;
      for (std::size_t k = 0; k < sizes.size(); ++k) {
        miss[i].push_back(m);
        m -= rng() % 10;
      }
      exec[i] = miss[i];
      tasks.push_back(EntityId::task(static_cast<std::uint32_t>(i)));
      c.push_back(curve(tasks.back(), sizes, miss[i]));
    }
    const double ts = rng() % 3, ti = rng() % 3;
    const std::uint32_t budget = static_cast<std::uint32_t>(n + rng() % (3 * n));
    const auto got = optimize_throughput(tasks, model_from(c, r, ts, ti), c, budget, {});
    const auto want = oracle::makespan_enumerate(exec, miss, sizes, budget, r,
                                                 std::vector<double>(r, ts + ti));
    EXPECT_EQ(got.makespan, want.makespan) << "trial " << trial;
    EXPECT_EQ(got.total_misses, want.misses) << "trial " << trial;
  }
}

TEST(Power, Objective) {
  const auto curves = ab_curves();
  const auto m = model_from(curves, 1, 0, 0);
  PartitionAssignment a;
  a.sizes = {{A, 2}, {B, 2}};
  EXPECT_EQ(power_objective(a, m), 90.0);
  PartitionAssignment single;
  single.sizes = {{A, 4}};
  EXPECT_EQ(power_objective(single, m), 50.0);
}
