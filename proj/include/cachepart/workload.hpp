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

// Application model (tasks, FIFO channels, frame buffers, static data
// segments), synthetic trace generation, and the static-assignment scheduler
// that merges per-task programs into one global access trace.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cachepart/cache.hpp"

namespace cachepart {

enum class AccessType : std::uint8_t { read, write };

struct MemoryAccess {
  std::uint64_t addr = 0;
  AccessType type = AccessType::read;

  friend bool operator==(const MemoryAccess&, const MemoryAccess&) = default;
};

struct TraceRecord {
  std::uint64_t seq = 0;
  std::uint32_t task = 0;
  AccessType type = AccessType::read;
  std::uint64_t addr = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct Trace {
  std::vector<std::string> header;  // metadata lines, without the leading '#'
  std::vector<TraceRecord> records;

  // Addresses issued by one task, in trace order.
  std::vector<std::uint64_t> addresses_of(std::uint32_t task) const;
};

// `<seq> <task_id> <R|W> <hex address>` per line, '#'-prefixed header lines.
void write_trace(std::ostream& out, const Trace& trace);
// Throws ParseError naming the offending line.
Trace read_trace(std::istream& in);

struct PatternMix {
  double loop = 1.0;
  double scan = 0.0;
  double random = 0.0;
};

// A task's private data: `array_count` arrays of `working_set_bytes`, each
// starting `array_pitch_bytes` after the previous one, accessed element-wise
// interleaved (a[i], b[i], a[i+1], ...).
struct TaskSpec {
  std::string name;
  std::uint64_t base = 0;
  std::uint64_t working_set_bytes = 0;
  std::uint64_t stride_bytes = 0;
  std::uint32_t array_count = 1;
  std::uint64_t array_pitch_bytes = 0;
  PatternMix mix;
  double write_fraction = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t period_accesses = 0;
  std::optional<std::uint32_t> pinned_sets;

  // Half-open byte ranges of the private arrays.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges() const;
};

struct FifoSpec {
  std::string name;
  std::uint32_t producer = 0;
  std::uint32_t consumer = 0;
  std::uint64_t capacity_bytes = 0;
  std::uint64_t token_bytes = 0;
  std::uint64_t base = 0;
  std::uint64_t tokens_per_period = 0;
  std::optional<std::uint32_t> pinned_sets;

  std::uint64_t capacity_tokens() const { return capacity_bytes / token_bytes; }
  std::uint64_t token_address(std::uint64_t token) const {
    return base + (token % capacity_tokens()) * token_bytes;
  }
};

// Written completely by the producer each period, then read completely by
// the consumer; the next period's writes wait for that read.
struct FrameBufferSpec {
  std::string name;
  std::uint64_t size_bytes = 0;
  std::uint64_t base = 0;
  std::uint32_t producer = 0;
  std::uint32_t consumer = 0;
  std::optional<std::uint32_t> pinned_sets;
};

// Shared static data (appl_data, rt_bss, ...). Each user task makes
// `accesses_per_period` seeded-random accesses into it per period.
struct StaticSegmentSpec {
  std::string name;
  std::uint64_t base = 0;
  std::uint64_t size_bytes = 0;
  std::vector<std::uint32_t> users;
  std::uint64_t accesses_per_period = 0;
  std::optional<std::uint32_t> pinned_sets;
};

struct TaskGraph {
  std::vector<TaskSpec> tasks;
  std::vector<FifoSpec> fifos;
  std::vector<FrameBufferSpec> frame_buffers;
  std::vector<StaticSegmentSpec> static_segments;
  std::uint32_t periods = 1;

  // Throws ConfigError on dangling endpoints, malformed sizes, or
  // overlapping address ranges.
  void validate(const CacheConfig& cache) const;

  // Address intervals of every buffer and segment entity (no partitions).
  PartitionTable address_table() const;
  // All entities in EntityId order.
  std::vector<EntityId> entities() const;
  std::string entity_name(EntityId id) const;
  std::optional<EntityId> find_entity(EntityKind kind, std::string_view name) const;
  std::optional<std::uint32_t> pinned_sets(EntityId id) const;
  // Byte range of a buffer/segment entity.
  std::pair<std::uint64_t, std::uint64_t> buffer_range(EntityId id) const;
};

// Mixes a task seed with a run seed.
std::uint64_t derive_seed(std::uint64_t task_seed, std::uint64_t run_seed);

// The first `count` private accesses of a task, deterministic in `seed`.
std::vector<MemoryAccess> generate_task_stream(const TaskSpec& spec, std::uint64_t line_size,
                                               std::uint64_t count, std::uint64_t seed);

// One period of private accesses as a trace for `task_id`.
Trace generate_task_trace(const TaskSpec& spec, std::uint32_t task_id, std::uint64_t line_size);

// Line-granular addresses covering [addr, addr + bytes).
std::vector<std::uint64_t> lines_covering(std::uint64_t addr, std::uint64_t bytes,
                                          std::uint64_t line_size);

struct TokenBurst {
  std::uint64_t token = 0;
  std::vector<std::uint64_t> addrs;
};

struct FifoTraffic {
  std::vector<TokenBurst> writes;  // producer, token order
  std::vector<TokenBurst> reads;   // consumer, token order
};

FifoTraffic generate_fifo_traffic(const FifoSpec& fifo, std::uint64_t tokens,
                                  std::uint64_t line_size);

// A completed token operation on one channel.
struct ChannelEvent {
  bool is_write = true;
  std::uint64_t token = 0;
};

// Checks a sequence of token operations against bounded-FIFO semantics:
// token n is read only after it is written, and token n + capacity is written
// only after token n is read; tokens are produced and consumed in order.
bool channel_order_is_legal(std::uint64_t capacity_tokens, std::span<const ChannelEvent> events);

// Gate at the start of a channel operation inside a task program.
struct ChannelGate {
  std::size_t start = 0;   // first access of the operation
  std::size_t length = 0;  // accesses in the operation
  std::uint32_t channel = 0;
  std::uint64_t token = 0;
  bool is_write = true;
};

struct TaskProgram {
  std::vector<MemoryAccess> accesses;
  std::vector<ChannelGate> gates;  // ordered by start
};

// Channels are the FIFOs followed by the frame buffers (capacity 1 frame).
std::uint64_t channel_capacity(const TaskGraph& graph, std::uint32_t channel);

// The full per-task programs over `graph.periods` periods for one run seed.
std::vector<TaskProgram> build_programs(const TaskGraph& graph, std::uint64_t line_size,
                                        std::uint64_t run_seed);

struct SchedulePolicy {
  enum class Kind : std::uint8_t { round_robin, run_to_completion };
  Kind kind = Kind::round_robin;
  std::uint64_t quantum = 1;

  static SchedulePolicy round_robin(std::uint64_t q) { return {Kind::round_robin, q}; }
  static SchedulePolicy run_to_completion() { return {Kind::run_to_completion, 0}; }
  // "rr:<q>" or "rtc".
  static SchedulePolicy parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const SchedulePolicy&, const SchedulePolicy&) = default;
};

struct StaticAssignment {
  std::uint32_t num_processors = 1;
  std::vector<std::uint32_t> processor_of;  // indexed by task

  void validate(std::size_t num_tasks) const;
  std::vector<std::uint32_t> tasks_on(std::uint32_t processor) const;
};

// Maximal run of consecutive accesses by one task on its processor.
struct Slice {
  std::uint32_t processor = 0;
  std::uint64_t first_seq = 0;
  std::uint64_t length = 0;
};

struct ScheduleResult {
  Trace trace;
  std::vector<std::vector<Slice>> slices;  // per task
};

// Deterministic interleaving: each step, processors 0..R-1 in order each
// issue at most one access of their current task. Throws DeadlockError when
// no processor can make progress before all programs finish.
ScheduleResult schedule(const TaskGraph& graph, std::span<const TaskProgram> programs,
                        const StaticAssignment& assignment, const SchedulePolicy& policy);

ScheduleResult schedule(const TaskGraph& graph, const StaticAssignment& assignment,
                        const SchedulePolicy& policy, std::uint64_t line_size,
                        std::uint64_t run_seed);

// Access-level checks on a global trace. Each returns an empty string when the
// property holds, else a description of the first violation.
std::string check_fifo_safety(const TaskGraph& graph, const Trace& trace,
                              std::uint64_t line_size);
std::string check_frame_phases(const TaskGraph& graph, const Trace& trace,
                               std::uint64_t line_size);

// Smallest power-of-two set count whose capacity holds the FIFO. Throws
// InfeasibleError when it exceeds the cache.
std::uint32_t fifo_partition_size(const FifoSpec& fifo, const CacheConfig& config);
std::uint32_t sets_to_hold(std::uint64_t bytes, const CacheConfig& config);

}  // namespace cachepart
