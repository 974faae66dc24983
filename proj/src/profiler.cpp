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

#include "cachepart/profiler.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "cachepart/errors.hpp"

namespace cachepart {

void SizeLadder::validate(const CacheConfig& config) const {
  if (sizes.empty()) throw ConfigError("size ladder is empty");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (!is_power_of_two(sizes[k])) {
      throw ConfigError("ladder size " + std::to_string(sizes[k]) + " is not a power of two");
    }
    if (k > 0 && sizes[k] <= sizes[k - 1]) throw ConfigError("ladder sizes must strictly increase");
    if (sizes[k] > config.num_sets) {
      throw ConfigError("ladder size " + std::to_string(sizes[k]) + " exceeds the cache's " +
                        std::to_string(config.num_sets) + " sets");
    }
  }
}

std::optional<std::size_t> SizeLadder::index_of(std::uint32_t size) const {
  auto it = std::find(sizes.begin(), sizes.end(), size);
  if (it == sizes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - sizes.begin());
}

SizeLadder SizeLadder::powers_of_two(std::uint32_t max_sets) {
  SizeLadder l;
  for (std::uint32_t s = 1; s <= max_sets && s != 0; s <<= 1) l.sizes.push_back(s);
  return l;
}

std::optional<std::size_t> MissCurve::index_of(std::uint32_t size) const {
  auto it = std::find(sizes.begin(), sizes.end(), size);
  if (it == sizes.end()) return std::nullopt;
  return static_cast<std::size_t>(it - sizes.begin());
}

double MissCurve::mean_at(std::uint32_t size) const {
  auto k = index_of(size);
  if (!k) {
    throw CurveGapError("curve of " + to_string(entity) + " has no point at " +
                        std::to_string(size) + " sets");
  }
  return mean[*k];
}

std::uint64_t MissCurve::sample_at(std::uint32_t size, std::uint64_t seed) const {
  auto k = index_of(size);
  auto s = std::find(seeds.begin(), seeds.end(), seed);
  if (!k || s == seeds.end()) {
    throw CurveGapError("curve of " + to_string(entity) + " has no sample at " +
                        std::to_string(size) + " sets, seed " + std::to_string(seed));
  }
  return samples[*k][static_cast<std::size_t>(s - seeds.begin())];
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  const unsigned threads = std::min<std::size_t>(jobs, n);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

ReplayCounts replay_solo(std::span<const std::uint64_t> addrs, std::uint32_t sets,
                         const CacheConfig& config) {
  if (sets > config.num_sets) {
    throw ConfigError("partition of " + std::to_string(sets) + " sets exceeds the cache's " +
                      std::to_string(config.num_sets));
  }
  const EntityId solo = EntityId::task(0);
  PartitionTable table;
  table.assign(solo, {0, sets});
  SharedCache cache(config, CacheMode::partitioned, std::move(table));
  for (auto a : addrs) cache.access_as(a, solo);
  const auto c = cache.counters_for(solo);
  return {c.hits, c.misses()};
}

MissCurve measure_miss_curve(EntityId entity, const StreamSource& source,
                             const SizeLadder& ladder, const CacheConfig& config,
                             std::span<const std::uint64_t> seeds, unsigned jobs) {
  ladder.validate(config);
  if (seeds.empty()) throw ConfigError("at least one run seed is required");

  std::vector<std::vector<std::uint64_t>> streams(seeds.size());
  parallel_for(seeds.size(), jobs, [&](std::size_t s) { streams[s] = source(seeds[s]); });

  const std::size_t K = ladder.sizes.size();
  MissCurve curve;
  curve.entity = entity;
  curve.sizes = ladder.sizes;
  curve.seeds.assign(seeds.begin(), seeds.end());
  curve.samples.assign(K, std::vector<std::uint64_t>(seeds.size(), 0));
  parallel_for(K * seeds.size(), jobs, [&](std::size_t cell) {
    const std::size_t k = cell / seeds.size();
    const std::size_t s = cell % seeds.size();
    curve.samples[k][s] = replay_solo(streams[s], ladder.sizes[k], config).misses;
  });
  curve.mean.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::uint64_t sum = 0;
    for (auto m : curve.samples[k]) sum += m;
    curve.mean[k] = static_cast<double>(sum) / static_cast<double>(seeds.size());
  }
  return curve;
}

MissCurve measure_miss_curve(EntityId entity, std::span<const std::uint64_t> addrs,
                             const SizeLadder& ladder, const CacheConfig& config) {
  std::vector<std::uint64_t> copy(addrs.begin(), addrs.end());
  const std::uint64_t seed = 0;
  return measure_miss_curve(
      entity, [&copy](std::uint64_t) { return copy; }, ladder, config,
      std::span<const std::uint64_t>(&seed, 1));
}

double measure_execution_proxy(std::span<const std::uint64_t> addrs, std::uint32_t sets,
                               const CacheConfig& config, const CostModel& cost) {
  const auto counts = replay_solo(addrs, sets, config);
  return static_cast<double>(counts.hits) * cost.hit_cost +
         static_cast<double>(counts.misses) * cost.miss_cost;
}

EntityStreams split_by_entity(const TaskGraph& graph, const Trace& trace) {
  const PartitionTable table = graph.address_table();
  EntityStreams out;
  for (auto e : graph.entities()) out[e];
  for (const auto& r : trace.records) {
    out[resolve_entity(r.addr, EntityId::task(r.task), table)].push_back(r.addr);
  }
  return out;
}

EntityStreams canonical_streams(const TaskGraph& graph, const CacheConfig& config,
                                std::uint64_t run_seed) {
  StaticAssignment one{.num_processors = 1,
                       .processor_of = std::vector<std::uint32_t>(graph.tasks.size(), 0)};
  const auto result = schedule(graph, one, SchedulePolicy::run_to_completion(),
                               config.line_size_bytes, run_seed);
  return split_by_entity(graph, result.trace);
}

std::vector<MissCurve> profile_graph(const TaskGraph& graph, const SizeLadder& ladder,
                                     const CacheConfig& config,
                                     std::span<const std::uint64_t> seeds, unsigned jobs) {
  ladder.validate(config);
  if (seeds.empty()) throw ConfigError("at least one run seed is required");

  std::vector<EntityStreams> runs(seeds.size());
  parallel_for(seeds.size(), jobs,
               [&](std::size_t s) { runs[s] = canonical_streams(graph, config, seeds[s]); });

  const auto entities = graph.entities();
  std::vector<MissCurve> curves(entities.size());
  for (std::size_t e = 0; e < entities.size(); ++e) {
    auto& c = curves[e];
    c.entity = entities[e];
    c.sizes = ladder.sizes;
    c.seeds.assign(seeds.begin(), seeds.end());
    c.samples.assign(ladder.sizes.size(), std::vector<std::uint64_t>(seeds.size(), 0));
  }

  const std::size_t K = ladder.sizes.size();
  const std::size_t cells = entities.size() * K * seeds.size();
  parallel_for(cells, jobs, [&](std::size_t cell) {
    const std::size_t e = cell / (K * seeds.size());
    const std::size_t k = (cell / seeds.size()) % K;
    const std::size_t s = cell % seeds.size();
    const auto& stream = runs[s].at(entities[e]);
    curves[e].samples[k][s] = replay_solo(stream, ladder.sizes[k], config).misses;
  });

  for (auto& c : curves) {
    c.mean.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
      std::uint64_t sum = 0;
      for (auto m : c.samples[k]) sum += m;
      c.mean[k] = static_cast<double>(sum) / static_cast<double>(seeds.size());
    }
  }
  return curves;
}

}  // namespace cachepart
