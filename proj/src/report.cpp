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

#include "cachepart/report.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include "cachepart/errors.hpp"

namespace cachepart {
namespace {

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, end) : std::to_string(v);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || p != s.data() + s.size()) {
    throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
  }
  return v;
}

Json counters_json(const TaskGraph& graph, const ExperimentResult& r) {
  Json j;
  j["total_accesses"] = r.total_accesses;
  j["total_misses"] = r.total_misses();
  j["miss_rate"] = r.miss_rate;
  Json entities = Json::array();
  for (const auto& [e, c] : r.counters) {
    entities.push_back({{"entity", graph.entity_name(e)},
                        {"hits", c.hits},
                        {"cold_misses", c.cold_misses},
                        {"replacement_misses", c.replacement_misses},
                        {"misses", c.misses()}});
  }
  j["entities"] = std::move(entities);
  Json ev = Json::array();
  for (const auto& [pair, count] : r.evictions) {
    ev.push_back({{"evictor", graph.entity_name(pair.first)},
                  {"victim", graph.entity_name(pair.second)},
                  {"count", count}});
  }
  j["evictions"] = std::move(ev);
  j["off_diagonal_evictions"] = r.off_diagonal_evictions();
  return j;
}

}  // namespace

EntityId parse_entity_ref(const TaskGraph& graph, std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("entity reference '" + std::string(text) + "' lacks a kind prefix");
  }
  const auto kind = parse_entity_kind(text.substr(0, colon));
  if (!kind) throw ConfigError("unknown entity kind in '" + std::string(text) + "'");
  const auto id = graph.find_entity(*kind, text.substr(colon + 1));
  if (!id) throw ConfigError("no entity named '" + std::string(text) + "'");
  return *id;
}

void write_curve_samples_csv(std::ostream& out, const TaskGraph& graph,
                             std::span<const MissCurve> curves) {
  out << "entity,sigma,run_seed,misses\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.sizes.size(); ++k) {
      for (std::size_t s = 0; s < c.seeds.size(); ++s) {
        out << graph.entity_name(c.entity) << ',' << c.sizes[k] << ',' << c.seeds[s] << ','
            << c.samples[k][s] << '\n';
      }
    }
  }
}

void write_curve_means_csv(std::ostream& out, const TaskGraph& graph,
                           std::span<const MissCurve> curves) {
  out << "entity,sigma,mean_misses\n";
  for (const auto& c : curves) {
    for (std::size_t k = 0; k < c.sizes.size(); ++k) {
      out << graph.entity_name(c.entity) << ',' << c.sizes[k] << ',' << format_number(c.mean[k])
          << '\n';
    }
  }
}

std::vector<MissCurve> read_curves_csv(std::istream& in, const TaskGraph& graph) {
  std::string line;
  std::size_t lineno = 0;
  bool samples_format = false;
  bool have_header = false;

  // entity -> sigma -> (seed -> misses) or mean
  std::map<EntityId, std::map<std::uint32_t, std::map<std::uint64_t, std::uint64_t>>> samples;
  std::map<EntityId, std::map<std::uint32_t, double>> means;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (!have_header) {
      if (line == "entity,sigma,run_seed,misses") {
        samples_format = true;
      } else if (line != "entity,sigma,mean_misses") {
        throw ParseError(lineno, "unrecognised miss-curve header '" + line + "'");
      }
      have_header = true;
      continue;
    }
    if (cells.size() != (samples_format ? 4u : 3u)) throw ParseError(lineno, "wrong number of columns");
    EntityId e;
    try {
      e = parse_entity_ref(graph, cells[0]);
    } catch (const ConfigError& err) {
      throw ParseError(lineno, err.what());
    }
    const auto sigma = parse_number<std::uint32_t>(cells[1], lineno, "sigma");
    if (samples_format) {
      const auto seed = parse_number<std::uint64_t>(cells[2], lineno, "run_seed");
      const auto m = parse_number<std::uint64_t>(cells[3], lineno, "misses");
      if (!samples[e][sigma].emplace(seed, m).second) throw ParseError(lineno, "duplicate row");
    } else {
      const auto m = parse_number<double>(cells[2], lineno, "mean_misses");
      if (m < 0) throw ParseError(lineno, "negative miss count");
      if (!means[e].emplace(sigma, m).second) throw ParseError(lineno, "duplicate row");
    }
  }
  if (!have_header) throw ParseError(lineno, "empty miss-curve file");

  std::vector<MissCurve> out;
  if (samples_format) {
    for (const auto& [e, by_sigma] : samples) {
      MissCurve c;
      c.entity = e;
      for (const auto& [sigma, by_seed] : by_sigma) {
        std::vector<std::uint64_t> seeds, vals;
        std::uint64_t sum = 0;
        for (const auto& [seed, m] : by_seed) {
          seeds.push_back(seed);
          vals.push_back(m);
          sum += m;
        }
        if (c.seeds.empty()) c.seeds = seeds;
        if (seeds != c.seeds) {
          throw ParseError(lineno, graph.entity_name(e) + ": run seeds differ between sizes");
        }
        c.sizes.push_back(sigma);
        c.samples.push_back(std::move(vals));
        c.mean.push_back(static_cast<double>(sum) / static_cast<double>(seeds.size()));
      }
      out.push_back(std::move(c));
    }
  } else {
    for (const auto& [e, by_sigma] : means) {
      MissCurve c;
      c.entity = e;
      for (const auto& [sigma, m] : by_sigma) {
        c.sizes.push_back(sigma);
        c.mean.push_back(m);
        c.samples.emplace_back();
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

Json assignment_report(const ExperimentConfig& cfg, const PartitionAssignment& assignment,
                       std::span<const MissCurve> curves, const ThroughputModel* model) {
  Json j;
  j["config"] = cfg.name;
  j["cache"] = {{"line_size", cfg.cache.line_size_bytes},
                {"sets", cfg.cache.num_sets},
                {"ways", cfg.cache.associativity}};
  j["budget_sets"] = cfg.budget_sets;
  j["ladder"] = cfg.ladder.sizes;

  auto curve_of = [&](EntityId e) -> const MissCurve* {
    for (const auto& c : curves) {
      if (c.entity == e) return &c;
    }
    return nullptr;
  };

  Json entities = Json::array();
  Json rows = Json::array();
  for (const auto& [e, size] : assignment.sizes) {
    Json row;
    row["entity"] = cfg.graph.entity_name(e);
    row["sets"] = size;
    row["base_set"] = assignment.layout.at(e).base_set;
    std::string source = "fixed";
    if (assignment.optimized.contains(e)) source = cfg.graph.pinned_sets(e) ? "pinned" : "optimized";
    if (e.kind == EntityKind::fifo && !cfg.graph.fifos[e.index].pinned_sets) source = "fifo_rule";
    row["source"] = source;
    if (const auto* c = curve_of(e); c != nullptr && assignment.optimized.contains(e)) {
      row["predicted_misses"] = c->mean_at(size);
    }
    entities.push_back(std::move(row));

    if (assignment.optimized.contains(e)) {
      Json x = Json::array();
      for (auto s : cfg.ladder.sizes) x.push_back(s == size ? 1 : 0);
      rows.push_back({{"entity", cfg.graph.entity_name(e)}, {"x", std::move(x)}});
    }
  }
  j["entities"] = std::move(entities);
  j["x_matrix"] = {{"sizes", cfg.ladder.sizes}, {"rows", std::move(rows)}};
  j["total_sets"] = assignment.total_sets();
  j["predicted_total_misses"] = assignment.predicted_total_misses;

  if (model != nullptr) {
    Json procs = Json::array();
    double makespan = 0.0;
    for (std::uint32_t p = 0; p < cfg.placement.num_processors; ++p) {
      std::vector<EntityId> on_p;
      Json names = Json::array();
      for (auto t : cfg.placement.tasks_on(p)) {
        on_p.push_back(EntityId::task(t));
        names.push_back(cfg.graph.tasks[t].name);
      }
      const double e = processor_time(on_p, p, *model, assignment);
      makespan = std::max(makespan, e);
      procs.push_back({{"processor", p}, {"tasks", std::move(names)}, {"time", e}});
    }
    j["processors"] = std::move(procs);
    j["makespan"] = makespan;
    j["power_objective"] = power_objective(assignment, *model);
  }
  return j;
}

PartitionAssignment read_assignment(const Json& report, const ExperimentConfig& cfg) {
  PartitionAssignment a;
  try {
    for (const auto& row : report.at("entities")) {
      const EntityId e = parse_entity_ref(cfg.graph, row.at("entity").get<std::string>());
      const auto size = row.at("sets").get<std::uint32_t>();
      a.sizes[e] = size;
      a.layout[e] = {row.at("base_set").get<std::uint32_t>(), size};
      const auto source = row.value("source", std::string("fixed"));
      if (source == "optimized" || source == "pinned") a.optimized.insert(e);
    }
    a.predicted_total_misses = report.value("predicted_total_misses", 0.0);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed assignment report: ") + e.what());
  }
  for (auto e : cfg.graph.entities()) {
    if (!a.sizes.contains(e)) throw ConfigError("assignment lacks " + cfg.graph.entity_name(e));
  }
  return a;
}

Json run_report(const ExperimentConfig& cfg, const RunOutputs& outputs) {
  const auto& g = cfg.graph;
  Json j;
  j["config"] = cfg.name;
  j["run_seed"] = outputs.run_seed;
  j["schedule"] = outputs.primary.to_string();
  j["trace_records"] = outputs.trace.records.size();
  Json results;
  if (outputs.shared) results["shared"] = counters_json(g, *outputs.shared);
  if (outputs.partitioned) results["partitioned"] = counters_json(g, *outputs.partitioned);
  j["results"] = std::move(results);

  if (outputs.comparison) {
    const auto& c = *outputs.comparison;
    Json cmp;
    cmp["shared_misses"] = c.shared_misses;
    cmp["partitioned_misses"] = c.partitioned_misses;
    cmp["miss_ratio"] = c.miss_ratio ? Json(*c.miss_ratio) : Json(nullptr);
    Json deltas = Json::array();
    for (const auto& [e, d] : c.deltas) deltas.push_back({{"entity", g.entity_name(e)}, {"delta", d}});
    cmp["deltas"] = std::move(deltas);
    j["comparison"] = std::move(cmp);
  }
  if (outputs.compositionality) {
    Json comp;
    comp["headline"] = outputs.compositionality->headline;
    Json rows = Json::array();
    for (const auto& r : outputs.compositionality->rows) {
      rows.push_back({{"task", g.entity_name(r.task)},
                      {"schedule", r.policy},
                      {"sets", r.sets},
                      {"expected", r.expected},
                      {"simulated", r.simulated},
                      {"delta", r.delta}});
    }
    comp["rows"] = std::move(rows);
    j["compositionality"] = std::move(comp);
  }
  Json fifos = Json::array();
  for (const auto& f : outputs.fifo_checks) {
    fifos.push_back({{"fifo", g.entity_name(f.fifo)},
                     {"pass", f.pass},
                     {"cold_misses", f.cold_misses},
                     {"replacement_misses", f.replacement_misses},
                     {"distinct_lines", f.distinct_lines}});
  }
  j["fifo_checks"] = std::move(fifos);
  j["violations"] = outputs.violations;
  return j;
}

std::string shared_vs_partitioned_csv(const TaskGraph& graph, const RunOutputs& outputs) {
  std::ostringstream os;
  os << "entity,shared_misses,partitioned_misses\n";
  for (auto e : graph.entities()) {
    os << graph.entity_name(e) << ','
       << (outputs.shared ? std::to_string(outputs.shared->counters_for(e).misses()) : "") << ','
       << (outputs.partitioned ? std::to_string(outputs.partitioned->counters_for(e).misses()) : "")
       << '\n';
  }
  return os.str();
}

std::string expected_vs_simulated_csv(const TaskGraph& graph, const CompositionalityReport& r,
                                      const std::string& schedule) {
  std::ostringstream os;
  os << "task,expected,simulated,delta\n";
  for (const auto& row : r.rows) {
    if (row.policy != schedule) continue;
    os << graph.entity_name(row.task) << ',' << format_number(row.expected) << ','
       << row.simulated << ',' << format_number(row.delta) << '\n';
  }
  return os.str();
}

std::string compositionality_csv(const TaskGraph& graph, const CompositionalityReport& r) {
  std::ostringstream os;
  os << "task,schedule,sets,expected,simulated,delta\n";
  for (const auto& row : r.rows) {
    os << graph.entity_name(row.task) << ',' << row.policy << ',' << row.sets << ','
       << format_number(row.expected) << ',' << row.simulated << ','
       << format_number(row.delta) << '\n';
  }
  return os.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace cachepart
