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

#include "cachepart/cache.hpp"

#include <algorithm>
#include <sstream>

#include "cachepart/errors.hpp"

namespace cachepart {

void CacheConfig::validate() const {
  if (!is_power_of_two(line_size_bytes)) {
    throw ConfigError("line_size_bytes must be a power of two, got " +
                      std::to_string(line_size_bytes));
  }
  if (!is_power_of_two(num_sets)) {
    throw ConfigError("num_sets must be a power of two, got " + std::to_string(num_sets));
  }
  if (associativity < 1) throw ConfigError("associativity must be at least 1");
}

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::task: return "task";
    case EntityKind::fifo: return "fifo";
    case EntityKind::frame_buffer: return "frame_buffer";
    case EntityKind::static_segment: return "static_segment";
    case EntityKind::os: return "os";
  }
  return "unknown";
}

std::optional<EntityKind> parse_entity_kind(std::string_view text) {
  for (auto k : {EntityKind::task, EntityKind::fifo, EntityKind::frame_buffer,
                 EntityKind::static_segment, EntityKind::os}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::string to_string(EntityId id) {
  return std::string(to_string(id.kind)) + ":" + std::to_string(id.index);
}

std::string_view to_string(CacheMode mode) {
  return mode == CacheMode::shared ? "shared" : "partitioned";
}

AddressParts decompose_address(std::uint64_t addr, const CacheConfig& config) {
  const std::uint64_t block = addr / config.line_size_bytes;
  return {.tag = block / config.num_sets,
          .index = static_cast<std::uint32_t>(block % config.num_sets),
          .offset = addr % config.line_size_bytes};
}

void PartitionTable::add_interval(std::uint64_t begin, std::uint64_t end, EntityId owner) {
  AddressInterval iv{begin, end, owner};
  auto pos = std::upper_bound(intervals_.begin(), intervals_.end(), begin,
                              [](std::uint64_t b, const AddressInterval& x) { return b < x.begin; });
  intervals_.insert(pos, iv);
}

const Partition* PartitionTable::find(EntityId entity) const {
  auto it = entries_.find(entity);
  return it == entries_.end() ? nullptr : &it->second;
}

std::optional<EntityId> PartitionTable::interval_owner(std::uint64_t addr) const {
  // Last interval starting at or before addr; intervals are disjoint when valid.
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), addr,
                             [](std::uint64_t a, const AddressInterval& x) { return a < x.begin; });
  if (it == intervals_.begin()) return std::nullopt;
  --it;
  if (addr < it->end) return it->owner;
  return std::nullopt;
}

EntityId resolve_entity(std::uint64_t addr, EntityId issuing_task, const PartitionTable& table) {
  return table.interval_owner(addr).value_or(issuing_task);
}

EntityId classify_access(std::uint64_t addr, EntityId issuing_task, const PartitionTable& table) {
  const EntityId entity = resolve_entity(addr, issuing_task, table);
  if (table.find(entity) == nullptr) {
    std::ostringstream os;
    os << "access to 0x" << std::hex << addr << " resolves to " << to_string(entity)
       << ", which has no partition";
    throw UnpartitionedEntityError(os.str());
  }
  return entity;
}

std::string_view to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::size_not_power_of_two: return "size_not_power_of_two";
    case Violation::Kind::misaligned_base: return "misaligned_base";
    case Violation::Kind::out_of_range: return "out_of_range";
    case Violation::Kind::overlap: return "overlap";
    case Violation::Kind::over_budget: return "over_budget";
    case Violation::Kind::interval_overlap: return "interval_overlap";
    case Violation::Kind::empty_interval: return "empty_interval";
  }
  return "unknown";
}

std::vector<Violation> validate_partition_table(const PartitionTable& table,
                                                const CacheConfig& config) {
  std::vector<Violation> out;
  auto add = [&](Violation::Kind k, std::string msg) { out.push_back({k, std::move(msg)}); };

  std::uint64_t total = 0;
  for (const auto& [entity, p] : table.entries()) {
    const std::string name = to_string(entity);
    total += p.size_sets;
    if (!is_power_of_two(p.size_sets)) {
      add(Violation::Kind::size_not_power_of_two,
          name + ": size " + std::to_string(p.size_sets) + " is not a power of two");
    } else if (p.base_set % p.size_sets != 0) {
      add(Violation::Kind::misaligned_base, name + ": base " + std::to_string(p.base_set) +
                                                " is not a multiple of size " +
                                                std::to_string(p.size_sets));
    }
    if (static_cast<std::uint64_t>(p.base_set) + p.size_sets > config.num_sets) {
      add(Violation::Kind::out_of_range,
          name + ": range [" + std::to_string(p.base_set) + ", " +
              std::to_string(static_cast<std::uint64_t>(p.base_set) + p.size_sets) +
              ") exceeds " + std::to_string(config.num_sets) + " sets");
    }
  }

  const auto& entries = table.entries();
  for (auto a = entries.begin(); a != entries.end(); ++a) {
    for (auto b = std::next(a); b != entries.end(); ++b) {
      const auto& pa = a->second;
      const auto& pb = b->second;
      const std::uint64_t a_end = static_cast<std::uint64_t>(pa.base_set) + pa.size_sets;
      const std::uint64_t b_end = static_cast<std::uint64_t>(pb.base_set) + pb.size_sets;
      if (pa.base_set < b_end && pb.base_set < a_end) {
        add(Violation::Kind::overlap,
            to_string(a->first) + " and " + to_string(b->first) + " share sets");
      }
    }
  }

  if (total > config.num_sets) {
    add(Violation::Kind::over_budget, "partitions use " + std::to_string(total) +
                                          " sets, cache has " + std::to_string(config.num_sets));
  }

  const auto& ivs = table.intervals();
  for (const auto& iv : ivs) {
    if (iv.end <= iv.begin) {
      add(Violation::Kind::empty_interval, to_string(iv.owner) + ": empty address interval");
    }
  }
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    for (std::size_t j = i + 1; j < ivs.size(); ++j) {
      if (ivs[i].begin < ivs[j].end && ivs[j].begin < ivs[i].end) {
        add(Violation::Kind::interval_overlap, "address intervals of " + to_string(ivs[i].owner) +
                                                   " and " + to_string(ivs[j].owner) +
                                                   " overlap");
      }
    }
  }
  return out;
}

SharedCache::SharedCache(CacheConfig config, CacheMode mode, PartitionTable table)
    : config_(config), mode_(mode), table_(std::move(table)) {
  config_.validate();
  if (mode_ == CacheMode::partitioned) {
    auto violations = validate_partition_table(table_, config_);
    if (!violations.empty()) throw ConfigError("invalid partition table: " + violations.front().message);
  }
  sets_.resize(config_.num_sets);
  for (auto& s : sets_) s.reserve(config_.associativity);
}

AccessOutcome SharedCache::access(std::uint64_t addr, EntityId issuing_task) {
  const EntityId entity = mode_ == CacheMode::partitioned
                              ? classify_access(addr, issuing_task, table_)
                              : resolve_entity(addr, issuing_task, table_);
  return access_as(addr, entity);
}

AccessOutcome SharedCache::access_as(std::uint64_t addr, EntityId entity) {
  const AddressParts parts = decompose_address(addr, config_);
  std::uint32_t set = parts.index;
  if (mode_ == CacheMode::partitioned) {
    const Partition* p = table_.find(entity);
    if (p == nullptr) {
      throw UnpartitionedEntityError(to_string(entity) + " has no partition");
    }
    set = translate_index(parts.index, *p);
  }

  const std::uint64_t block = addr / config_.line_size_bytes;
  auto& lines = sets_[set];
  AccessOutcome out{.kind = AccessKind::hit, .entity = entity, .set = set, .evicted = {}};
  EntityCounters& ctr = counters_[entity];

  auto hit = std::find_if(lines.begin(), lines.end(),
                          [block](const CachedLine& l) { return l.block == block; });
  if (hit != lines.end()) {
    std::rotate(lines.begin(), hit, std::next(hit));
    ++ctr.hits;
    return out;
  }

  const bool first_touch = seen_.insert(SeenKey{entity, block}).second;
  out.kind = first_touch ? AccessKind::cold_miss : AccessKind::replacement_miss;
  if (first_touch) {
    ++ctr.cold_misses;
  } else {
    ++ctr.replacement_misses;
  }

  if (lines.size() == config_.associativity) {
    out.evicted = lines.back();
    ++evictions_[{entity, lines.back().owner}];
    lines.pop_back();
  }
  lines.insert(lines.begin(), CachedLine{block, entity});
  return out;
}

EntityCounters SharedCache::counters_for(EntityId entity) const {
  auto it = counters_.find(entity);
  return it == counters_.end() ? EntityCounters{} : it->second;
}

EntityCounters SharedCache::totals() const {
  EntityCounters t;
  for (const auto& [_, c] : counters_) t += c;
  return t;
}

bool SharedCache::lines_within_partitions() const {
  if (mode_ == CacheMode::shared) return true;
  for (std::uint32_t s = 0; s < sets_.size(); ++s) {
    for (const auto& line : sets_[s]) {
      const Partition* p = table_.find(line.owner);
      if (p == nullptr || s < p->base_set || s >= p->end_set()) return false;
    }
  }
  return true;
}

}  // namespace cachepart
