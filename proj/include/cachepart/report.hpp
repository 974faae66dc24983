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

// File formats: miss-curve CSVs, assignment and run reports (JSON), plot-data
// CSVs, and atomic file output.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cachepart/config.hpp"
#include "cachepart/experiment.hpp"

namespace cachepart {

using Json = nlohmann::ordered_json;

// entity,sigma,run_seed,misses
void write_curve_samples_csv(std::ostream& out, const TaskGraph& graph,
                             std::span<const MissCurve> curves);
// entity,sigma,mean_misses
void write_curve_means_csv(std::ostream& out, const TaskGraph& graph,
                           std::span<const MissCurve> curves);
// Reads either CSV flavour; a means file yields curves without samples.
// Throws ParseError with the line number.
std::vector<MissCurve> read_curves_csv(std::istream& in, const TaskGraph& graph);

Json assignment_report(const ExperimentConfig& cfg, const PartitionAssignment& assignment,
                       std::span<const MissCurve> curves, const ThroughputModel* model);
// Reads the "entities" section back; base sets come from the file.
PartitionAssignment read_assignment(const Json& report, const ExperimentConfig& cfg);

Json run_report(const ExperimentConfig& cfg, const RunOutputs& outputs);

// entity,shared_misses,partitioned_misses
std::string shared_vs_partitioned_csv(const TaskGraph& graph, const RunOutputs& outputs);
// task,expected,simulated,delta for one schedule
std::string expected_vs_simulated_csv(const TaskGraph& graph, const CompositionalityReport& r,
                                      const std::string& schedule);
// Every schedule: task,schedule,sets,expected,simulated,delta
std::string compositionality_csv(const TaskGraph& graph, const CompositionalityReport& r);

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Entity reference as it appears in files: "<kind>:<name>".
EntityId parse_entity_ref(const TaskGraph& graph, std::string_view text);

}  // namespace cachepart
