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

// Solo-run miss curves: each entity's access stream replayed alone in a
// partition of each candidate size.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cachepart/cache.hpp"
#include "cachepart/workload.hpp"

namespace cachepart {

// Candidate partition sizes, strictly increasing powers of two.
struct SizeLadder {
  std::vector<std::uint32_t> sizes;

  // Throws ConfigError when the ladder is empty, unordered, not powers of two,
  // or exceeds the cache.
  void validate(const CacheConfig& config) const;
  std::optional<std::size_t> index_of(std::uint32_t size) const;

  static SizeLadder powers_of_two(std::uint32_t max_sets);
};

struct MissCurve {
  EntityId entity;
  std::vector<std::uint32_t> sizes;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<std::uint64_t>> samples;  // [size][seed]
  std::vector<double> mean;                         // [size]

  std::optional<std::size_t> index_of(std::uint32_t size) const;
  // Throws CurveGapError when the curve has no point at `size`.
  double mean_at(std::uint32_t size) const;
  std::uint64_t sample_at(std::uint32_t size, std::uint64_t seed) const;
};

// Per-entity address streams of one run, in canonical-schedule order.
using EntityStreams = std::map<EntityId, std::vector<std::uint64_t>>;

struct CostModel {
  double hit_cost = 0.0;
  double miss_cost = 1.0;
};

struct ReplayCounts {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
};

// Replays `addrs` alone in partition {0, sets}.
ReplayCounts replay_solo(std::span<const std::uint64_t> addrs, std::uint32_t sets,
                         const CacheConfig& config);

using StreamSource = std::function<std::vector<std::uint64_t>(std::uint64_t seed)>;

// One simulation per (size, seed) cell; cells run on up to `jobs` threads and
// are reduced in (size, seed) order.
MissCurve measure_miss_curve(EntityId entity, const StreamSource& source,
                             const SizeLadder& ladder, const CacheConfig& config,
                             std::span<const std::uint64_t> seeds, unsigned jobs = 1);

// Single-sample curve of a fixed stream (seed recorded as 0).
MissCurve measure_miss_curve(EntityId entity, std::span<const std::uint64_t> addrs,
                             const SizeLadder& ladder, const CacheConfig& config);

// hits * hit_cost + misses * miss_cost for a solo replay at `sets`.
double measure_execution_proxy(std::span<const std::uint64_t> addrs, std::uint32_t sets,
                               const CacheConfig& config, const CostModel& cost);

// Splits a run into per-entity streams. Tasks keep only accesses that
// classify to themselves; buffer entities collect everyone's accesses to
// their interval.
EntityStreams split_by_entity(const TaskGraph& graph, const Trace& trace);

// Streams of the canonical schedule (one processor, run to completion).
EntityStreams canonical_streams(const TaskGraph& graph, const CacheConfig& config,
                                std::uint64_t run_seed);

// Miss curves of every entity in the graph, in EntityId order.
std::vector<MissCurve> profile_graph(const TaskGraph& graph, const SizeLadder& ladder,
                                     const CacheConfig& config,
                                     std::span<const std::uint64_t> seeds, unsigned jobs = 1);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

}  // namespace cachepart
