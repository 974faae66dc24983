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

// End-to-end steps over an ExperimentConfig: profile, optimize, run.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "cachepart/analyzer.hpp"
#include "cachepart/config.hpp"
#include "cachepart/optimizer.hpp"

namespace cachepart {

std::vector<MissCurve> profile_experiment(const ExperimentConfig& cfg, unsigned jobs = 1);

// FIFO partitions: pinned size, else the hit-only sizing rule.
std::map<EntityId, std::uint32_t> fifo_reservations(const ExperimentConfig& cfg);

// Sizes every non-FIFO entity from its curve (honoring pins) after the FIFO
// reservations, within cfg.budget_sets.
PartitionAssignment optimize_experiment(const ExperimentConfig& cfg,
                                        std::span<const MissCurve> curves);

// e(t, c) tables from solo replays, averaged over the run seeds.
ThroughputModel throughput_model(const ExperimentConfig& cfg, unsigned jobs = 1);

struct RunOptions {
  RunMode mode = RunMode::both;
  std::uint64_t run_seed = 1;
  // Replayed instead of the first schedule when set.
  const Trace* trace = nullptr;
};

struct RunOutputs {
  std::uint64_t run_seed = 1;
  SchedulePolicy primary;
  Trace trace;  // primary schedule
  std::optional<ExperimentResult> shared;
  std::optional<ExperimentResult> partitioned;
  std::optional<ModeComparison> comparison;
  std::optional<CompositionalityReport> compositionality;
  std::vector<FifoCheck> fifo_checks;
  std::vector<std::string> violations;
};

// `partitions` is required unless opts.mode is shared. `curves` feed the
// expected side of the compositionality report; they need samples for
// opts.run_seed unless cfg.expected is mean.
RunOutputs run_configured(const ExperimentConfig& cfg, const PartitionAssignment* partitions,
                          std::span<const MissCurve> curves, const RunOptions& opts);

// Trace header lines identifying the experiment.
std::vector<std::string> trace_header(const ExperimentConfig& cfg, const SchedulePolicy& policy,
                                      std::uint64_t run_seed);

}  // namespace cachepart
