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

// Set-associative LRU cache shared by several entities, with an optional
// index-translation layer that confines each entity to an exclusive,
// contiguous range of sets.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace cachepart {

struct CacheConfig {
  std::uint64_t line_size_bytes = 64;
  std::uint32_t num_sets = 1;
  std::uint32_t associativity = 1;

  // Throws ConfigError unless line size and set count are powers of two and
  // associativity is at least one.
  void validate() const;
  std::uint64_t capacity_bytes() const {
    return line_size_bytes * num_sets * associativity;
  }
};

constexpr bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

enum class EntityKind : std::uint8_t { task, fifo, frame_buffer, static_segment, os };

std::string_view to_string(EntityKind kind);
std::optional<EntityKind> parse_entity_kind(std::string_view text);

// Owner of a cache partition. Ordered by kind, then index.
struct EntityId {
  EntityKind kind = EntityKind::task;
  std::uint32_t index = 0;

  static constexpr EntityId task(std::uint32_t i) { return {EntityKind::task, i}; }
  static constexpr EntityId fifo(std::uint32_t i) { return {EntityKind::fifo, i}; }
  static constexpr EntityId frame_buffer(std::uint32_t i) {
    return {EntityKind::frame_buffer, i};
  }
  static constexpr EntityId static_segment(std::uint32_t i) {
    return {EntityKind::static_segment, i};
  }

  friend constexpr auto operator<=>(const EntityId&, const EntityId&) = default;
};

// "task:3", "fifo:0", ...
std::string to_string(EntityId id);

struct AddressParts {
  std::uint64_t tag = 0;
  std::uint32_t index = 0;  // conventional set index
  std::uint64_t offset = 0;

  friend bool operator==(const AddressParts&, const AddressParts&) = default;
};

AddressParts decompose_address(std::uint64_t addr, const CacheConfig& config);

struct Partition {
  std::uint32_t base_set = 0;
  std::uint32_t size_sets = 1;

  std::uint32_t end_set() const { return base_set + size_sets; }
  friend bool operator==(const Partition&, const Partition&) = default;
};

// Maps a conventional index into the partition: base + (index mod size).
inline std::uint32_t translate_index(std::uint32_t conventional_index, Partition partition) {
  return partition.base_set + (conventional_index & (partition.size_sets - 1));
}

// Half-open byte range [begin, end) owned by a buffer or segment entity.
struct AddressInterval {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;
  EntityId owner;
};

class PartitionTable {
 public:
  void assign(EntityId entity, Partition partition) { entries_[entity] = partition; }
  void add_interval(std::uint64_t begin, std::uint64_t end, EntityId owner);

  const Partition* find(EntityId entity) const;
  std::optional<EntityId> interval_owner(std::uint64_t addr) const;

  const std::map<EntityId, Partition>& entries() const { return entries_; }
  const std::vector<AddressInterval>& intervals() const { return intervals_; }

 private:
  std::map<EntityId, Partition> entries_;
  std::vector<AddressInterval> intervals_;  // sorted by begin
};

// Interval lookup with fallthrough to the issuing task; no partition check.
EntityId resolve_entity(std::uint64_t addr, EntityId issuing_task, const PartitionTable& table);

// As resolve_entity, but throws UnpartitionedEntityError when the resolved
// entity has no partition entry.
EntityId classify_access(std::uint64_t addr, EntityId issuing_task, const PartitionTable& table);

struct Violation {
  enum class Kind {
    size_not_power_of_two,
    misaligned_base,
    out_of_range,
    overlap,
    over_budget,
    interval_overlap,
    empty_interval,
  };
  Kind kind;
  std::string message;
};

std::string_view to_string(Violation::Kind kind);

// Every violated table invariant, in a deterministic order; empty means ok.
std::vector<Violation> validate_partition_table(const PartitionTable& table,
                                                const CacheConfig& config);

enum class AccessKind : std::uint8_t { hit, cold_miss, replacement_miss };

struct CachedLine {
  std::uint64_t block = 0;  // addr / line_size_bytes
  EntityId owner;

  friend bool operator==(const CachedLine&, const CachedLine&) = default;
};

struct AccessOutcome {
  AccessKind kind = AccessKind::hit;
  EntityId entity;
  std::uint32_t set = 0;  // physical set probed
  std::optional<CachedLine> evicted;

  bool is_miss() const { return kind != AccessKind::hit; }
};

struct EntityCounters {
  std::uint64_t hits = 0;
  std::uint64_t cold_misses = 0;
  std::uint64_t replacement_misses = 0;

  std::uint64_t misses() const { return cold_misses + replacement_misses; }
  std::uint64_t accesses() const { return hits + misses(); }
  EntityCounters& operator+=(const EntityCounters& o) {
    hits += o.hits;
    cold_misses += o.cold_misses;
    replacement_misses += o.replacement_misses;
    return *this;
  }
  friend bool operator==(const EntityCounters&, const EntityCounters&) = default;
};

enum class CacheMode : std::uint8_t { shared, partitioned };

std::string_view to_string(CacheMode mode);

// (evictor, victim) -> count
using EvictionMatrix = std::map<std::pair<EntityId, EntityId>, std::uint64_t>;

// Single-threaded, deterministic cache state. In shared mode the table is
// consulted only to attribute accesses to buffer entities; in partitioned
// mode it also supplies each entity's set range.
class SharedCache {
 public:
  SharedCache(CacheConfig config, CacheMode mode, PartitionTable table = {});

  AccessOutcome access(std::uint64_t addr, EntityId issuing_task);
  // Skips interval classification; the caller already knows the owner.
  AccessOutcome access_as(std::uint64_t addr, EntityId entity);

  const CacheConfig& config() const { return config_; }
  CacheMode mode() const { return mode_; }
  const PartitionTable& table() const { return table_; }

  const std::map<EntityId, EntityCounters>& counters() const { return counters_; }
  EntityCounters counters_for(EntityId entity) const;
  EntityCounters totals() const;
  const EvictionMatrix& evictions() const { return evictions_; }

  // MRU first.
  std::span<const CachedLine> set_contents(std::uint32_t physical_set) const {
    return sets_.at(physical_set);
  }
  // True when every resident line sits inside its owner's partition (always
  // true in shared mode).
  bool lines_within_partitions() const;

 private:
  struct SeenKey {
    EntityId entity;
    std::uint64_t block;
    friend bool operator==(const SeenKey&, const SeenKey&) = default;
  };
  struct SeenKeyHash {
    std::size_t operator()(const SeenKey& k) const {
      auto h = std::hash<std::uint64_t>{}(k.block);
      auto e = (static_cast<std::uint64_t>(k.entity.kind) << 32) | k.entity.index;
      return h ^ (std::hash<std::uint64_t>{}(e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    }
  };

  CacheConfig config_;
  CacheMode mode_;
  PartitionTable table_;
  std::vector<std::vector<CachedLine>> sets_;
  std::unordered_set<SeenKey, SeenKeyHash> seen_;
  std::map<EntityId, EntityCounters> counters_;
  EvictionMatrix evictions_;
};

}  // namespace cachepart
