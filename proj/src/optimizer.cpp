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

#include "cachepart/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cachepart/errors.hpp"

namespace cachepart {
namespace {

// Relative tolerance for comparing summed mean miss counts.
bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

// -1, 0, +1
int compare_cost(double a, double b) {
  if (nearly_equal(a, b)) return 0;
  return a < b ? -1 : 1;
}

const MissCurve& curve_for(std::span<const MissCurve> curves, EntityId e) {
  for (const auto& c : curves) {
    if (c.entity == e) return c;
  }
  throw CurveGapError("no miss curve for " + to_string(e));
}

}  // namespace

std::uint64_t PartitionAssignment::total_sets() const {
  std::uint64_t t = 0;
  for (const auto& [_, s] : sizes) t += s;
  return t;
}

PartitionTable PartitionAssignment::to_table(const TaskGraph& graph) const {
  PartitionTable table = graph.address_table();
  for (const auto& [e, p] : layout) table.assign(e, p);
  return table;
}

std::map<EntityId, Partition> layout_partitions(const std::map<EntityId, std::uint32_t>& sizes,
                                                std::uint32_t num_sets) {
  std::vector<std::pair<EntityId, std::uint32_t>> order(sizes.begin(), sizes.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<EntityId, Partition> out;
  std::uint64_t base = 0;
  for (const auto& [e, s] : order) {
    if (!is_power_of_two(s)) {
      throw InfeasibleError(to_string(e) + ": partition size " + std::to_string(s) +
                            " is not a power of two");
    }
    if (base + s > num_sets) {
      throw InfeasibleError("partitions need more than the " + std::to_string(num_sets) +
                            " available sets");
    }
    out[e] = {static_cast<std::uint32_t>(base), s};
    base += s;
  }
  return out;
}

PartitionAssignment solve_min_misses(std::span<const MissCurve> curves,
                                     const std::map<EntityId, std::uint32_t>& fixed,
                                     std::uint32_t total_sets, const SizeLadder& ladder,
                                     const std::map<EntityId, std::uint32_t>& pinned) {
  struct Option {
    std::uint32_t size;
    double cost;
  };
  struct Item {
    EntityId entity;
    std::vector<Option> options;
  };

  std::vector<Item> items;
  for (const auto& c : curves) {
    if (fixed.contains(c.entity)) {
      throw ConfigError(to_string(c.entity) + " is both fixed and optimized");
    }
    Item item{c.entity, {}};
    if (auto pin = pinned.find(c.entity); pin != pinned.end()) {
      item.options.push_back({pin->second, c.mean_at(pin->second)});
    } else {
      for (auto s : ladder.sizes) item.options.push_back({s, c.mean_at(s)});
    }
    items.push_back(std::move(item));
  }
  std::sort(items.begin(), items.end(),
            [](const Item& a, const Item& b) { return a.entity < b.entity; });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].entity == items[i - 1].entity) {
      throw ConfigError("duplicate miss curve for " + to_string(items[i].entity));
    }
  }

  std::uint64_t reserved = 0;
  for (const auto& [_, s] : fixed) reserved += s;
  std::uint64_t minimal = reserved;
  for (const auto& it : items) {
    std::uint32_t m = std::numeric_limits<std::uint32_t>::max();
    for (const auto& o : it.options) m = std::min(m, o.size);
    minimal += m;
  }
  if (minimal > total_sets) {
    throw InfeasibleError("minimal allocation needs " + std::to_string(minimal) +
                          " sets (" + std::to_string(reserved) + " reserved), budget is " +
                          std::to_string(total_sets));
  }
  const std::uint32_t budget = static_cast<std::uint32_t>(total_sets - reserved);

  // best[i][b]: optimum over items i..N-1 with at most b sets.
  struct Cell {
    bool feasible = false;
    double cost = 0.0;
    std::uint64_t sets = 0;
    int choice = -1;
  };
  const std::size_t N = items.size();
  std::vector<std::vector<Cell>> best(N + 1, std::vector<Cell>(budget + 1));
  for (auto& c : best[N]) c = {true, 0.0, 0, -1};

  // Lexicographic comparison of the size vectors reached from (i, a) and (i, b).
  auto lex_compare = [&](std::size_t i, std::uint32_t a, std::uint32_t b) {
    for (; i < N; ++i) {
      const auto sa = items[i].options[best[i][a].choice].size;
      const auto sb = items[i].options[best[i][b].choice].size;
      if (sa != sb) return sa < sb ? -1 : 1;
      a -= sa;
      b -= sb;
    }
    return 0;
  };

  for (std::size_t i = N; i-- > 0;) {
    for (std::uint32_t b = 0; b <= budget; ++b) {
      Cell& cell = best[i][b];
      for (int k = 0; k < static_cast<int>(items[i].options.size()); ++k) {
        const auto& opt = items[i].options[k];
        if (opt.size > b) continue;
        const Cell& rest = best[i + 1][b - opt.size];
        if (!rest.feasible) continue;
        const Cell cand{true, opt.cost + rest.cost, opt.size + rest.sets, k};
        bool better = !cell.feasible;
        if (!better) {
          int c = compare_cost(cand.cost, cell.cost);
          if (c == 0) c = cand.sets < cell.sets ? -1 : (cand.sets > cell.sets ? 1 : 0);
          if (c == 0) {
            const auto cur = items[i].options[cell.choice].size;
            c = opt.size < cur ? -1 : (opt.size > cur ? 1 : 0);
            if (c == 0) c = lex_compare(i + 1, b - opt.size, b - cur);
          }
          better = c < 0;
        }
        if (better) cell = cand;
      }
    }
  }
  if (!best[0][budget].feasible) {
    throw InfeasibleError("no size choice fits within " + std::to_string(total_sets) + " sets");
  }

  PartitionAssignment out;
  out.sizes = fixed;
  std::uint32_t b = budget;
  for (std::size_t i = 0; i < N; ++i) {
    const auto& opt = items[i].options[best[i][b].choice];
    out.sizes[items[i].entity] = opt.size;
    out.optimized.insert(items[i].entity);
    out.predicted_total_misses += opt.cost;
    b -= opt.size;
  }
  out.layout = layout_partitions(out.sizes, total_sets);
  return out;
}

double predict_total_misses(const PartitionAssignment& assignment,
                            std::span<const MissCurve> curves) {
  double total = 0.0;
  for (const auto& c : curves) {
    auto it = assignment.sizes.find(c.entity);
    if (it != assignment.sizes.end()) total += c.mean_at(it->second);
  }
  return total;
}

double ThroughputModel::exec(EntityId task, std::uint32_t sets) const {
  auto it = exec_time.find(task);
  auto k = std::find(ladder.begin(), ladder.end(), sets);
  if (it == exec_time.end() || k == ladder.end()) {
    throw CurveGapError("no execution time for " + to_string(task) + " at " +
                        std::to_string(sets) + " sets");
  }
  return it->second.at(static_cast<std::size_t>(k - ladder.begin()));
}

double processor_time(std::span<const EntityId> tasks_on_p, std::uint32_t processor,
                      const ThroughputModel& model, const PartitionAssignment& assignment) {
  double total = model.switch_time(processor) + model.idle_time(processor);
  for (auto t : tasks_on_p) {
    auto it = assignment.sizes.find(t);
    if (it == assignment.sizes.end()) throw Error(to_string(t) + " has no assigned size");
    total += model.exec(t, it->second);
  }
  return total;
}

namespace {

std::vector<double> loads_of(const std::vector<double>& exec, const std::vector<std::uint32_t>& place,
                             const ThroughputModel& model) {
  std::vector<double> load(model.processors, 0.0);
  for (std::uint32_t p = 0; p < model.processors; ++p) {
    load[p] = model.switch_time(p) + model.idle_time(p);
  }
  for (std::size_t i = 0; i < exec.size(); ++i) load[place[i]] += exec[i];
  return load;
}

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

// Strict lexicographic "less" on descending load profiles.
bool profile_less(const std::vector<double>& a, const std::vector<double>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const int c = compare_cost(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return false;
}

ThroughputSolution finish(std::span<const EntityId> tasks, const ThroughputModel& model,
                          std::span<const MissCurve> curves, const std::vector<std::uint32_t>& sizes,
                          const std::vector<std::uint32_t>& place, std::uint32_t total_sets) {
  ThroughputSolution sol;
  sol.tasks.assign(tasks.begin(), tasks.end());
  sol.placement.num_processors = model.processors;
  sol.placement.processor_of = place;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    sol.partitions.sizes[tasks[i]] = sizes[i];
    sol.partitions.optimized.insert(tasks[i]);
  }
  sol.partitions.layout = layout_partitions(sol.partitions.sizes, total_sets);
  sol.partitions.predicted_total_misses = predict_total_misses(sol.partitions, curves);
  sol.total_misses = sol.partitions.predicted_total_misses;
  for (std::uint32_t p = 0; p < model.processors; ++p) {
    std::vector<EntityId> on_p;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (place[i] == p) on_p.push_back(tasks[i]);
    }
    sol.processor_times.push_back(processor_time(on_p, p, model, sol.partitions));
  }
  sol.makespan = *std::max_element(sol.processor_times.begin(), sol.processor_times.end());
  return sol;
}

}  // namespace

ThroughputSolution optimize_throughput(std::span<const EntityId> tasks,
                                       const ThroughputModel& model,
                                       std::span<const MissCurve> curves,
                                       std::uint32_t total_sets, const ThroughputOptions& options) {
  if (model.processors < 1) throw ConfigError("processor count must be at least 1");
  const std::size_t N = tasks.size();
  const std::size_t K = model.ladder.size();
  const std::uint32_t R = model.processors;
  if (N == 0) {
    return finish(tasks, model, curves, {}, {}, total_sets);
  }
  std::vector<const MissCurve*> task_curves;
  for (auto t : tasks) task_curves.push_back(&curve_for(curves, t));

  if (!options.exact) {
    std::vector<MissCurve> own;
    for (auto* c : task_curves) own.push_back(*c);
    SizeLadder ladder{model.ladder};
    const auto sized = solve_min_misses(own, {}, total_sets, ladder);
    std::vector<std::uint32_t> sizes(N);
    std::vector<double> exec(N);
    for (std::size_t i = 0; i < N; ++i) {
      sizes[i] = sized.sizes.at(tasks[i]);
      exec[i] = model.exec(tasks[i], sizes[i]);
    }

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return exec[a] > exec[b]; });
    std::vector<std::uint32_t> place(N, 0);
    std::vector<double> load(R);
    for (std::uint32_t p = 0; p < R; ++p) load[p] = model.switch_time(p) + model.idle_time(p);
    for (auto i : order) {
      const auto p = static_cast<std::uint32_t>(std::min_element(load.begin(), load.end()) - load.begin());
      place[i] = p;
      load[p] += exec[i];
    }

    auto profile = sorted_desc(loads_of(exec, place, model));
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t i = 0; i < N && !improved; ++i) {
        for (std::uint32_t q = 0; q < R && !improved; ++q) {
          if (q == place[i]) continue;
          auto trial = place;
          trial[i] = q;
          auto prof = sorted_desc(loads_of(exec, trial, model));
          if (profile_less(prof, profile)) {
            place = std::move(trial);
            profile = std::move(prof);
            improved = true;
          }
        }
      }
      for (std::size_t i = 0; i < N && !improved; ++i) {
        for (std::size_t j = i + 1; j < N && !improved; ++j) {
          if (place[i] == place[j]) continue;
          auto trial = place;
          std::swap(trial[i], trial[j]);
          auto prof = sorted_desc(loads_of(exec, trial, model));
          if (profile_less(prof, profile)) {
            place = std::move(trial);
            profile = std::move(prof);
            improved = true;
          }
        }
      }
    }
    return finish(tasks, model, curves, sizes, place, total_sets);
  }

  // Exact: guard R^N * K^N.
  double combos = std::pow(static_cast<double>(R), static_cast<double>(N)) *
                  std::pow(static_cast<double>(K), static_cast<double>(N));
  if (combos > static_cast<double>(options.search_limit)) {
    throw SearchSpaceExceededError("exact throughput search needs " +
                                   std::to_string(static_cast<std::uint64_t>(combos)) +
                                   " combinations, limit is " +
                                   std::to_string(options.search_limit));
  }

  std::vector<std::vector<double>> exec_table(N, std::vector<double>(K));
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t k = 0; k < K; ++k) exec_table[i][k] = model.exec(tasks[i], model.ladder[k]);
  }

  bool found = false;
  double best_span = 0.0;
  double best_misses = 0.0;
  std::vector<std::uint32_t> best_sizes, best_place;

  std::vector<std::size_t> k_idx(N, 0);
  std::vector<std::uint32_t> place(N, 0);
  std::vector<double> exec(N);
  std::vector<std::uint32_t> sizes(N);
  while (true) {
    std::uint64_t used = 0;
    double misses = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      sizes[i] = model.ladder[k_idx[i]];
      exec[i] = exec_table[i][k_idx[i]];
      used += sizes[i];
      misses += task_curves[i]->mean_at(sizes[i]);
    }
    if (used <= total_sets) {
      std::fill(place.begin(), place.end(), 0);
      while (true) {
        const auto load = loads_of(exec, place, model);
        const double span = *std::max_element(load.begin(), load.end());
        int c = found ? compare_cost(span, best_span) : -1;
        if (c == 0) c = compare_cost(misses, best_misses);
        if (c < 0) {
          found = true;
          best_span = span;
          best_misses = misses;
          best_sizes = sizes;
          best_place = place;
        }
        std::size_t d = 0;
        while (d < N && ++place[d] == R) place[d++] = 0;
        if (d == N) break;
      }
    }
    std::size_t d = 0;
    while (d < N && ++k_idx[d] == K) k_idx[d++] = 0;
    if (d == N) break;
  }
  if (!found) {
    throw InfeasibleError("no task sizes fit within " + std::to_string(total_sets) + " sets");
  }
  return finish(tasks, model, curves, best_sizes, best_place, total_sets);
}

double power_objective(const PartitionAssignment& assignment, const ThroughputModel& model) {
  double total = 0.0;
  for (const auto& [task, _] : model.exec_time) {
    auto it = assignment.sizes.find(task);
    if (it != assignment.sizes.end()) total += model.exec(task, it->second);
  }
  return total;
}

double power_objective(const PartitionAssignment& assignment, std::span<const MissCurve> curves) {
  return predict_total_misses(assignment, curves);
}

}  // namespace cachepart
