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

// cachepart: profile, optimize and run partitioned shared-cache experiments.
//
// Exit status: 0 success, 2 configuration or input error, 3 infeasible
// allocation, 4 invariant violation, 5 simulation error (deadlock,
// unpartitioned access), 1 anything else.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "cachepart/config.hpp"
#include "cachepart/errors.hpp"
#include "cachepart/experiment.hpp"
#include "cachepart/report.hpp"

namespace fs = std::filesystem;
using namespace cachepart;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitViolation = 4;
constexpr int kExitSimulation = 5;

struct Common {
  std::string config;
  std::string out;
  unsigned jobs = 1;
  std::vector<std::uint64_t> seeds;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config, "experiment YAML")->required()->check(CLI::ExistingFile);
  if (with_out) cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--jobs", c.jobs, "worker threads (0 = all cores)")->capture_default_str();
  cmd->add_option("--seed-list", c.seeds, "run seeds, overriding the config")->delimiter(',');
}

ExperimentConfig load(const Common& c) {
  auto cfg = load_config(c.config);
  if (!c.seeds.empty()) cfg.run_seeds = c.seeds;
  return cfg;
}

unsigned jobs_of(const Common& c) {
  return c.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : c.jobs;
}

fs::path out_dir(const Common& c, const ExperimentConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return fs::path("out") / cfg.name;
}

std::string file_stem(const TaskGraph& g, EntityId e) {
  std::string s = g.entity_name(e);
  for (auto& ch : s) {
    if (ch == ':' || ch == '/' || ch == ' ') ch = '_';
  }
  return s;
}

std::vector<MissCurve> load_curves(const std::string& path, const ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open curves '" + path + "'");
  try {
    return read_curves_csv(in, cfg.graph);
  } catch (const ParseError& e) {
    throw ConfigError(path + ":" + e.what());
  }
}

int cmd_check(const Common& c) {
  const auto cfg = load(c);
  const auto fifos = fifo_reservations(cfg);
  std::uint64_t reserved = 0;
  for (const auto& [_, s] : fifos) reserved += s;
  std::uint64_t pinned = 0;
  for (auto e : cfg.graph.entities()) {
    if (e.kind != EntityKind::fifo) {
      if (auto p = cfg.graph.pinned_sets(e)) pinned += *p;
    }
  }
  std::cout << cfg.name << ": " << cfg.graph.tasks.size() << " tasks, " << cfg.graph.fifos.size()
            << " fifos, " << cfg.graph.frame_buffers.size() << " frame buffers, "
            << cfg.graph.static_segments.size() << " static segments\n"
            << "cache: " << cfg.cache.num_sets << " sets x " << cfg.cache.associativity
            << " ways x " << cfg.cache.line_size_bytes << " B, budget " << cfg.budget_sets
            << " sets\n"
            << "fifo reservations: " << reserved << " sets, pinned: " << pinned << " sets\n";
  if (reserved + pinned > cfg.budget_sets) {
    throw InfeasibleError("fixed reservations exceed the budget");
  }
  std::cout << "ok\n";
  return 0;
}

int cmd_profile(const Common& c) {
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  const auto curves = profile_experiment(cfg, jobs_of(c));

  std::ostringstream samples, means;
  write_curve_samples_csv(samples, cfg.graph, curves);
  write_curve_means_csv(means, cfg.graph, curves);
  write_file_atomic(dir / "miss_samples.csv", samples.str());
  write_file_atomic(dir / "miss_curves.csv", means.str());
  for (const auto& curve : curves) {
    std::ostringstream one;
    write_curve_means_csv(one, cfg.graph, std::span<const MissCurve>(&curve, 1));
    write_file_atomic(dir / "curves" / (file_stem(cfg.graph, curve.entity) + ".csv"), one.str());
  }
  std::cout << "profiled " << curves.size() << " entities over " << cfg.ladder.sizes.size()
            << " sizes and " << cfg.run_seeds.size() << " seeds -> " << dir.string() << "\n";
  return 0;
}

int cmd_optimize(const Common& c, const std::string& curves_path, const std::string& throughput) {
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  const auto curves = curves_path.empty() ? profile_experiment(cfg, jobs_of(c))
                                          : load_curves(curves_path, cfg);
  const auto assignment = optimize_experiment(cfg, curves);
  const auto model = throughput_model(cfg, jobs_of(c));
  auto report = assignment_report(cfg, assignment, curves, &model);

  if (throughput != "none") {
    std::vector<EntityId> tasks;
    for (std::uint32_t t = 0; t < cfg.graph.tasks.size(); ++t) tasks.push_back(EntityId::task(t));
    std::uint64_t others = 0;
    for (const auto& [e, s] : assignment.sizes) {
      if (e.kind != EntityKind::task) others += s;
    }
    if (others > cfg.budget_sets) throw InfeasibleError("non-task partitions exceed the budget");
    ThroughputOptions opts;
    opts.exact = throughput == "exact";
    const auto sol = optimize_throughput(tasks, model, curves,
                                         static_cast<std::uint32_t>(cfg.budget_sets - others), opts);
    Json t;
    t["mode"] = throughput;
    Json placement = Json::array();
    for (std::size_t i = 0; i < sol.tasks.size(); ++i) {
      placement.push_back({{"task", cfg.graph.entity_name(sol.tasks[i])},
                           {"processor", sol.placement.processor_of[i]},
                           {"sets", sol.partitions.sizes.at(sol.tasks[i])}});
    }
    t["placement"] = std::move(placement);
    t["processor_times"] = sol.processor_times;
    t["makespan"] = sol.makespan;
    t["total_misses"] = sol.total_misses;
    report["throughput"] = std::move(t);
  }

  write_file_atomic(dir / "assignment.json", report.dump(2) + "\n");
  std::cout << "predicted total misses: " << report["predicted_total_misses"].dump() << "\n";
  for (const auto& row : report["entities"]) {
    std::cout << "  " << row["entity"].get<std::string>() << " = " << row["sets"].get<std::uint32_t>()
              << " sets @ " << row["base_set"].get<std::uint32_t>() << "\n";
  }
  std::cout << "-> " << (dir / "assignment.json").string() << "\n";
  return 0;
}

struct RunArgs {
  std::string assignment;
  std::string curves;
  std::string mode;
  std::string trace;
  std::string emit_trace;
};

int cmd_run(const Common& c, const RunArgs& a) {
  const auto cfg = load(c);
  const auto dir = out_dir(c, cfg);
  const RunMode mode = a.mode.empty() ? cfg.mode : parse_run_mode(a.mode);
  const std::uint64_t run_seed = cfg.run_seeds.front();

  std::optional<PartitionAssignment> partitions;
  if (!a.assignment.empty()) {
    std::ifstream in(a.assignment);
    if (!in) throw ConfigError("cannot open assignment '" + a.assignment + "'");
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& e) {
      throw ConfigError(a.assignment + ": " + e.what());
    }
    partitions = read_assignment(j, cfg);
  } else if (mode != RunMode::shared) {
    throw ConfigError("--assignment is required in " + std::string(to_string(mode)) + " mode");
  }

  std::vector<MissCurve> curves;
  if (partitions) {
    if (!a.curves.empty()) {
      curves = load_curves(a.curves, cfg);
    } else {
      auto profile_cfg = cfg;
      if (cfg.expected == ExpectedSource::same_input) profile_cfg.run_seeds = {run_seed};
      curves = profile_experiment(profile_cfg, jobs_of(c));
    }
  }

  std::optional<Trace> ingested;
  if (!a.trace.empty()) {
    std::ifstream in(a.trace);
    if (!in) throw ConfigError("cannot open trace '" + a.trace + "'");
    try {
      ingested = read_trace(in);
    } catch (const ParseError& e) {
      throw ConfigError(a.trace + ":" + e.what());
    }
  }

  RunOptions opts{.mode = mode, .run_seed = run_seed, .trace = ingested ? &*ingested : nullptr};
  const auto outputs = run_configured(cfg, partitions ? &*partitions : nullptr, curves, opts);

  if (!a.emit_trace.empty()) {
    std::ostringstream os;
    write_trace(os, outputs.trace);
    write_file_atomic(a.emit_trace, os.str());
  }
  write_file_atomic(dir / "report.json", run_report(cfg, outputs).dump(2) + "\n");
  write_file_atomic(dir / "shared_vs_partitioned.csv", shared_vs_partitioned_csv(cfg.graph, outputs));
  if (outputs.compositionality) {
    write_file_atomic(dir / "expected_vs_simulated.csv",
                      expected_vs_simulated_csv(cfg.graph, *outputs.compositionality,
                                                outputs.primary.to_string()));
    write_file_atomic(dir / "compositionality.csv",
                      compositionality_csv(cfg.graph, *outputs.compositionality));
  }

  std::cout << cfg.name << " (" << to_string(mode) << ", seed " << run_seed << ", "
            << outputs.primary.to_string() << ")\n";
  if (outputs.shared) {
    std::cout << "  shared misses:      " << outputs.shared->total_misses() << " (miss rate "
              << outputs.shared->miss_rate << ")\n";
  }
  if (outputs.partitioned) {
    std::cout << "  partitioned misses: " << outputs.partitioned->total_misses() << " (miss rate "
              << outputs.partitioned->miss_rate << ")\n";
  }
  if (outputs.comparison) {
    std::cout << "  miss ratio shared/partitioned: "
              << (outputs.comparison->miss_ratio ? std::to_string(*outputs.comparison->miss_ratio)
                                                 : std::string("undefined"))
              << "\n";
  }
  if (outputs.compositionality) {
    std::cout << "  compositionality headline: " << outputs.compositionality->headline << "\n";
  }
  for (const auto& v : outputs.violations) std::cout << "  VIOLATION: " << v << "\n";
  std::cout << "-> " << (dir / "report.json").string() << "\n";
  return outputs.violations.empty() ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set-partitioned shared cache simulator and partition optimizer"};
  app.require_subcommand(1);

  Common check_args, profile_args, optimize_args, run_args;
  auto* check = app.add_subcommand("check", "validate a config");
  add_common(check, check_args, false);

  auto* profile = app.add_subcommand("profile", "measure per-entity miss curves");
  add_common(profile, profile_args);

  std::string curves_path;
  std::string throughput = "none";
  auto* optimize = app.add_subcommand("optimize", "choose partition sizes");
  add_common(optimize, optimize_args);
  optimize->add_option("--curves", curves_path, "miss-curve CSV (profiled inline when absent)");
  optimize->add_option("--throughput", throughput, "also place tasks: none, exact or heuristic")
      ->check(CLI::IsMember({"none", "exact", "heuristic"}));

  RunArgs ra;
  auto* run = app.add_subcommand("run", "simulate and verify");
  add_common(run, run_args);
  run->add_option("--assignment", ra.assignment, "assignment.json from optimize");
  run->add_option("--curves", ra.curves, "miss-curve CSV for expected misses");
  run->add_option("--mode", ra.mode, "shared, partitioned or both")
      ->check(CLI::IsMember({"shared", "partitioned", "both"}));
  run->add_option("--trace", ra.trace, "replay this trace instead of scheduling");
  run->add_option("--emit-trace", ra.emit_trace, "write the simulated global trace");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return cmd_check(check_args);
    if (profile->parsed()) return cmd_profile(profile_args);
    if (optimize->parsed()) return cmd_optimize(optimize_args, curves_path, throughput);
    if (run->parsed()) return cmd_run(run_args, ra);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CurveGapError& e) {
    std::cerr << "curve error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const SearchSpaceExceededError& e) {
    std::cerr << "search space exceeded: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const DeadlockError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const UnpartitionedEntityError& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return kExitSimulation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
