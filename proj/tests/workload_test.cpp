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

#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "cachepart/errors.hpp"
#include "cachepart/profiler.hpp"
#include "cachepart/workload.hpp"

using namespace cachepart;

namespace {

TaskSpec loop_task(std::string name, std::uint64_t base, std::uint64_t accesses) {
  TaskSpec t;
  t.name = std::move(name);
  t.base = base;
  t.working_set_bytes = 4096;
  t.stride_bytes = 64;
  t.period_accesses = accesses;
  return t;
}

// Producer (task 0) and consumer (task 1) joined by one FIFO.
TaskGraph pipe(std::uint64_t capacity_tokens, std::uint64_t tokens, std::uint32_t periods = 1) {
  TaskGraph g;
  g.periods = periods;
  g.tasks = {loop_task("src", 0x10000, 16), loop_task("dst", 0x20000, 16)};
  FifoSpec f;
  f.name = "q";
  f.producer = 0;
  f.consumer = 1;
  f.token_bytes = 64;
  f.capacity_bytes = 64 * capacity_tokens;
  f.base = 0x40000;
  f.tokens_per_period = tokens;
  g.fifos = {f};
  return g;
}

}  // namespace

TEST(Generate, LoopWrapsAtWorkingSet) {
  const auto t = loop_task("a", 0x1000, 128);
  const auto s = generate_task_stream(t, 64, 128, 1);
  ASSERT_EQ(s.size(), 128u);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i].addr, 0x1000 + (i % 64) * 64);
}

TEST(Generate, SameSeedSameStream) {
  auto t = loop_task("a", 0, 500);
  t.mix = {1, 1, 1};
  t.write_fraction = 0.4;
  EXPECT_EQ(generate_task_stream(t, 64, 500, 9), generate_task_stream(t, 64, 500, 9));
  EXPECT_NE(generate_task_stream(t, 64, 500, 9), generate_task_stream(t, 64, 500, 10));
}

TEST(Generate, SingleLineRandomIsOneColdMiss) {
  TaskSpec t = loop_task("a", 0x2000, 300);
  t.working_set_bytes = 64;
  t.mix = {0, 0, 1};
  const auto s = generate_task_stream(t, 64, 300, 3);
  std::vector<std::uint64_t> addrs;
  for (const auto& a : s) {
    EXPECT_EQ(a.addr, 0x2000u);
    addrs.push_back(a.addr);
  }
  EXPECT_EQ(replay_solo(addrs, 1, CacheConfig{64, 8, 1}).misses, 1u);
}

TEST(Generate, ArraysInterleave) {
  TaskSpec t = loop_task("a", 0, 8);
  t.working_set_bytes = 256;
  t.array_count = 2;
  t.array_pitch_bytes = 4096;
  const auto s = generate_task_stream(t, 64, 8, 1);
  const std::uint64_t want[] = {0, 4096, 64, 4160, 128, 4224, 192, 4288};
  for (int i = 0; i < 8; ++i) EXPECT_EQ(s[i].addr, want[i]);
}

TEST(Fifo, LegalOrderings) {
  using E = ChannelEvent;
  const std::vector<E> ok = {{true, 0}, {true, 1}, {false, 0}, {true, 2}, {false, 1}, {false, 2}};
  EXPECT_TRUE(channel_order_is_legal(2, ok));
  const std::vector<E> overfull = {{true, 0}, {true, 1}, {true, 2}, {false, 0}, {false, 1},
                                   {false, 2}};
  EXPECT_FALSE(channel_order_is_legal(2, overfull));
  const std::vector<E> early = {{false, 0}, {true, 0}};
  EXPECT_FALSE(channel_order_is_legal(1, early));
  EXPECT_TRUE(channel_order_is_legal(1, std::vector<E>{}));
}

TEST(Fifo, TrafficReusesSlots) {
  FifoSpec f;
  f.name = "q";
  f.token_bytes = 64;
  f.capacity_bytes = 128;
  f.base = 0x1000;
  const auto tr = generate_fifo_traffic(f, 3, 64);
  ASSERT_EQ(tr.writes.size(), 3u);
  EXPECT_EQ(tr.writes[2].addrs, tr.writes[0].addrs);
  EXPECT_EQ(tr.reads[1].addrs, std::vector<std::uint64_t>{0x1040});
  EXPECT_TRUE(generate_fifo_traffic(f, 0, 64).writes.empty());
}

TEST(Fifo, PartitionSizeRule) {
  const CacheConfig cfg{64, 1024, 4};
  FifoSpec f;
  f.name = "q";
  f.token_bytes = 1;
  f.capacity_bytes = 16384;
  EXPECT_EQ(fifo_partition_size(f, cfg), 64u);
  f.capacity_bytes = 1;
  EXPECT_EQ(fifo_partition_size(f, cfg), 1u);
  f.capacity_bytes = 100 * 1024;
  EXPECT_EQ(fifo_partition_size(f, cfg), 512u);
  EXPECT_THROW(fifo_partition_size(f, CacheConfig{64, 256, 4}), InfeasibleError);
}

TEST(Schedule, RunToCompletionIsSequential) {
  TaskGraph g;
  g.tasks = {loop_task("a", 0x10000, 5), loop_task("b", 0x20000, 5)};
  const StaticAssignment one{1, {0, 0}};
  const auto r = schedule(g, one, SchedulePolicy::run_to_completion(), 64, 1);
  ASSERT_EQ(r.trace.records.size(), 10u);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(r.trace.records[i].task, i < 5 ? 0u : 1u);
    EXPECT_EQ(r.trace.records[i].seq, i);
  }
}

TEST(Schedule, TwoProcessorsAlternate) {
  TaskGraph g;
  g.tasks = {loop_task("a", 0x10000, 6), loop_task("b", 0x20000, 6)};
  const StaticAssignment two{2, {0, 1}};
  const auto r = schedule(g, two, SchedulePolicy::round_robin(1), 64, 1);
  for (std::size_t i = 0; i < r.trace.records.size(); ++i) {
    EXPECT_EQ(r.trace.records[i].task, i % 2);
  }
}

TEST(Schedule, QuantumSlicesOneProcessor) {
  TaskGraph g;
  g.tasks = {loop_task("a", 0x10000, 6), loop_task("b", 0x20000, 6)};
  const auto r = schedule(g, StaticAssignment{1, {0, 0}}, SchedulePolicy::round_robin(3), 64, 1);
  const std::uint32_t want[] = {0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1};
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(r.trace.records[i].task, want[i]);
  ASSERT_EQ(r.slices[0].size(), 2u);
  EXPECT_EQ(r.slices[0][1].first_seq, 6u);
  EXPECT_EQ(r.slices[0][1].length, 3u);
}

TEST(Schedule, ConsumerReadsAfterProducerWrites) {
  const auto g = pipe(1, 6, 2);
  for (auto policy : {SchedulePolicy::round_robin(1), SchedulePolicy::round_robin(7),
                      SchedulePolicy::run_to_completion()}) {
    for (std::uint32_t procs : {1u, 2u}) {
      const StaticAssignment a{procs, {0, procs - 1}};
      const auto r = schedule(g, a, policy, 64, 3);
      EXPECT_EQ(check_fifo_safety(g, r.trace, 64), "");
      // One-token FIFO: channel accesses strictly alternate write, read.
      bool expect_write = true;
      std::size_t n = 0;
      for (const auto& rec : r.trace.records) {
        if (rec.addr != 0x40000) continue;
        EXPECT_EQ(rec.type == AccessType::write, expect_write) << policy.to_string();
        EXPECT_EQ(rec.task, expect_write ? 0u : 1u);
        expect_write = !expect_write;
        ++n;
      }
      EXPECT_EQ(n, 24u);
    }
  }
}

TEST(Schedule, FrameReadAfterWholeFrameWritten) {
  TaskGraph g;
  g.periods = 3;
  g.tasks = {loop_task("a", 0x10000, 10), loop_task("b", 0x20000, 10)};
  FrameBufferSpec fb;
  fb.name = "frame";
  fb.producer = 0;
  fb.consumer = 1;
  fb.base = 0x80000;
  fb.size_bytes = 256;
  g.frame_buffers = {fb};
  const auto r = schedule(g, StaticAssignment{2, {0, 1}}, SchedulePolicy::round_robin(1), 64, 1);
  EXPECT_EQ(check_frame_phases(g, r.trace, 64), "");
}

TEST(Schedule, CyclicWaitDeadlocks) {
  auto g = pipe(1, 1);
  FifoSpec back = g.fifos[0];
  back.name = "back";
  back.producer = 1;
  back.consumer = 0;
  back.base = 0x50000;
  g.fifos.push_back(back);
  EXPECT_THROW(schedule(g, StaticAssignment{2, {0, 1}}, SchedulePolicy::round_robin(1), 64, 1),
               DeadlockError);
}

TEST(Schedule, PolicyParse) {
  EXPECT_EQ(SchedulePolicy::parse("rr:4"), SchedulePolicy::round_robin(4));
  EXPECT_EQ(SchedulePolicy::parse("rtc"), SchedulePolicy::run_to_completion());
  EXPECT_EQ(SchedulePolicy::round_robin(16).to_string(), "rr:16");
  EXPECT_THROW(SchedulePolicy::parse("rr:0"), ConfigError);
  EXPECT_THROW(SchedulePolicy::parse("fifo"), ConfigError);
}

TEST(Graph, Validation) {
  auto g = pipe(2, 2);
  EXPECT_NO_THROW(g.validate(CacheConfig{64, 64, 2}));
  g.fifos[0].consumer = 5;
  EXPECT_THROW(g.validate(CacheConfig{64, 64, 2}), ConfigError);
  g = pipe(2, 2);
  g.fifos[0].base = 0x10040;  // inside task src
  EXPECT_THROW(g.validate(CacheConfig{64, 64, 2}), ConfigError);
  g = pipe(2, 2);
  g.fifos[0].base = 0x40010;
  EXPECT_THROW(g.validate(CacheConfig{64, 64, 2}), ConfigError);
}

TEST(Trace, RoundTrip) {
  auto g = pipe(2, 5, 2);
  g.tasks[0].write_fraction = 0.5;
  g.tasks[1].mix = {1, 1, 1};
  auto r = schedule(g, StaticAssignment{2, {0, 1}}, SchedulePolicy::round_robin(2), 64, 17);
  r.trace.header = {"config demo", "seed 17"};
  std::stringstream ss;
  write_trace(ss, r.trace);
  const auto back = read_trace(ss);
  EXPECT_EQ(back.header, r.trace.header);
  EXPECT_EQ(back.records, r.trace.records);
  std::stringstream again;
  write_trace(again, back);
  std::stringstream first;
  write_trace(first, r.trace);
  EXPECT_EQ(again.str(), first.str());
}

TEST(Trace, CorruptLineReportsLineNumber) {
  std::istringstream in("# header\n0 0 R 0x40\n1 0 X 0x80\n");
  try {
    read_trace(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream order("0 0 R 0x40\n0 0 R 0x80\n");
  EXPECT_THROW(read_trace(order), ParseError);
}
