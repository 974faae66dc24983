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

// Experiment configuration: one YAML file per experiment.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cachepart/analyzer.hpp"
#include "cachepart/cache.hpp"
#include "cachepart/profiler.hpp"
#include "cachepart/workload.hpp"

namespace cachepart {

enum class RunMode : std::uint8_t { shared, partitioned, both };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view text);

struct ExperimentConfig {
  std::string name;
  CacheConfig cache;
  SizeLadder ladder;
  std::uint32_t budget_sets = 0;  // C, defaults to cache.num_sets
  TaskGraph graph;
  StaticAssignment placement;
  std::vector<SchedulePolicy> schedules;
  CostModel cost;
  std::vector<double> t_switch;  // per processor
  std::vector<double> t_idle;
  std::vector<std::uint64_t> run_seeds;
  RunMode mode = RunMode::both;
  ExpectedSource expected = ExpectedSource::same_input;
  std::string output_dir;
};

// Throws ConfigError("<source>:<line>: <field>: <problem>") on any problem,
// including cross-checks of the graph against the cache geometry.
ExperimentConfig parse_config(std::string_view yaml_text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cachepart
