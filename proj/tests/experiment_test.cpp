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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "cachepart/config.hpp"
#include "cachepart/errors.hpp"
#include "cachepart/experiment.hpp"
#include "cachepart/report.hpp"

using namespace cachepart;

namespace {

const char* kMinimal = R"(
name: mini
cache: {line_size: 64, sets: 16, ways: 2}
tasks:
  - {name: a, base: 0x1000, working_set: 512, accesses: 50}
  - {name: b, base: 0x9000, working_set: 512, accesses: 50}
fifos:
  - {name: q, producer: a, consumer: b, base: 0x20000, capacity: 256, token: 64, tokens_per_period: 4}
)";

std::string error_of(const std::string& yaml) {
  try {
    parse_config(yaml, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string bundled(const char* name) { return std::string(CACHEPART_CONFIG_DIR) + "/" + name; }

}  // namespace

TEST(Config, Defaults) {
  const auto cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.name, "mini");
  EXPECT_EQ(cfg.budget_sets, 16u);
  EXPECT_EQ(cfg.ladder.sizes, (std::vector<std::uint32_t>{1, 2, 4, 8, 16}));
  EXPECT_EQ(cfg.schedules, std::vector<SchedulePolicy>{SchedulePolicy::round_robin(1)});
  EXPECT_EQ(cfg.run_seeds, std::vector<std::uint64_t>{1});
  EXPECT_EQ(cfg.graph.fifos[0].consumer, 1u);
  EXPECT_EQ(cfg.graph.tasks[0].base, 0x1000u);
}

TEST(Config, UnknownKeyIsLocated) {
  const auto err = error_of(std::string(kMinimal) + "colour: blue\n");
  EXPECT_NE(err.find("cfg.yaml:9"), std::string::npos) << err;
  EXPECT_NE(err.find("colour"), std::string::npos) << err;
}

TEST(Config, DanglingEdgeNamesTheFifo) {
  std::string y = kMinimal;
  y.replace(y.find("consumer: b"), 11, "consumer: z");
  const auto err = error_of(y);
  EXPECT_NE(err.find("'q'"), std::string::npos) << err;
  EXPECT_NE(err.find("no task named 'z'"), std::string::npos) << err;
}

TEST(Config, BadValues) {
  std::string y = kMinimal;
  y.replace(y.find("sets: 16"), 8, "sets: 12");
  EXPECT_NE(error_of(y).find("cache"), std::string::npos);
  EXPECT_NE(error_of(std::string(kMinimal) + "schedules: [rr:0]\n").find("schedules[0]"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kMinimal) + "budget_sets: 64\n").find("exceeds"),
            std::string::npos);
  EXPECT_NE(error_of(std::string(kMinimal) + "mode: sideways\n").find("mode"), std::string::npos);
}

TEST(Config, BundledConfigsLoad) {
  for (const char* name : {"two_task_demo.yaml", "thrash_pair.yaml", "kpn_pipeline.yaml",
                           "ab_example.yaml"}) {
    EXPECT_NO_THROW(load_config(bundled(name))) << name;
  }
  EXPECT_THROW(load_config(bundled("missing.yaml")), ConfigError);
}

TEST(Curves, CsvRoundTrip) {
  auto cfg = parse_config(kMinimal);
  cfg.run_seeds = {3, 4};
  const auto curves = profile_experiment(cfg);
  std::stringstream samples;
  write_curve_samples_csv(samples, cfg.graph, curves);
  const auto back = read_curves_csv(samples, cfg.graph);
  ASSERT_EQ(back.size(), curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    EXPECT_EQ(back[i].entity, curves[i].entity);
    EXPECT_EQ(back[i].samples, curves[i].samples);
    EXPECT_EQ(back[i].mean, curves[i].mean);
  }
  std::stringstream means;
  write_curve_means_csv(means, cfg.graph, curves);
  const auto m = read_curves_csv(means, cfg.graph);
  for (std::size_t i = 0; i < curves.size(); ++i) EXPECT_EQ(m[i].mean, curves[i].mean);
}

TEST(Curves, OneRowPerLadderSize) {
  const auto cfg = load_config(bundled("two_task_demo.yaml"));
  const auto curves = profile_experiment(cfg, 2);
  EXPECT_EQ(curves.size(), 3u);
  for (const auto& c : curves) {
    std::ostringstream os;
    write_curve_means_csv(os, cfg.graph, std::span<const MissCurve>(&c, 1));
    const auto text = os.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1 + 7);
  }
  auto single = parse_config(std::string(kMinimal) + "ladder: [4]\n");
  for (const auto& c : profile_experiment(single)) EXPECT_EQ(c.sizes.size(), 1u);
}

TEST(Curves, MalformedCsv) {
  const auto cfg = parse_config(kMinimal);
  std::istringstream bad_header("who,what\n");
  EXPECT_THROW(read_curves_csv(bad_header, cfg.graph), ParseError);
  std::istringstream bad_entity("entity,sigma,mean_misses\ntask:a,1,5\ntask:zz,1,5\n");
  try {
    read_curves_csv(bad_entity, cfg.graph);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Optimize, TwoTaskExampleFromFiles) {
  const auto cfg = load_config(bundled("ab_example.yaml"));
  std::ifstream in(bundled("ab_curves.csv"));
  const auto curves = read_curves_csv(in, cfg.graph);
  const auto a = optimize_experiment(cfg, curves);
  const auto report = assignment_report(cfg, a, curves, nullptr);
  EXPECT_EQ(report["predicted_total_misses"].get<double>(), 90.0);
  for (const auto& row : report["entities"]) EXPECT_EQ(row["sets"].get<int>(), 2);
  const auto back = read_assignment(report, cfg);
  EXPECT_EQ(back.sizes, a.sizes);
  EXPECT_EQ(back.layout, a.layout);
}

TEST(Optimize, BudgetBelowMinimumIsInfeasible) {
  const auto cfg = parse_config(std::string(kMinimal) + "budget_sets: 2\n");
  const auto curves = profile_experiment(cfg);
  EXPECT_THROW(optimize_experiment(cfg, curves), InfeasibleError);
}

TEST(Optimize, FifoReservationFollowsRule) {
  const auto cfg = parse_config(kMinimal);
  const auto r = fifo_reservations(cfg);
  EXPECT_EQ(r.at(EntityId::fifo(0)), 2u);  // 256 B over 2 ways x 64 B
}

TEST(Run, BundledConfigsAreExactAndDeterministic) {
  for (const char* name : {"two_task_demo.yaml", "thrash_pair.yaml", "kpn_pipeline.yaml"}) {
    const auto cfg = load_config(bundled(name));
    const auto curves = profile_experiment(cfg, 2);
    const auto a = optimize_experiment(cfg, curves);
    const RunOptions opts{.mode = RunMode::both, .run_seed = cfg.run_seeds.front()};
    const auto first = run_configured(cfg, &a, curves, opts);
    EXPECT_TRUE(first.violations.empty()) << name;
    ASSERT_TRUE(first.compositionality.has_value());
    EXPECT_EQ(first.compositionality->headline, 0.0);
    EXPECT_EQ(first.partitioned->off_diagonal_evictions(), 0u);
    const auto second = run_configured(cfg, &a, curves, opts);
    EXPECT_EQ(run_report(cfg, first).dump(), run_report(cfg, second).dump());

    const RunOptions replayed{.mode = RunMode::both, .run_seed = opts.run_seed, .trace = &first.trace};
    const auto third = run_configured(cfg, &a, curves, replayed);
    EXPECT_EQ(run_report(cfg, first).dump(), run_report(cfg, third).dump());
  }
}

TEST(Run, SharedOnlyNeedsNoAssignment) {
  const auto cfg = load_config(bundled("thrash_pair.yaml"));
  const auto out = run_configured(cfg, nullptr, {}, {.mode = RunMode::shared, .run_seed = 1});
  EXPECT_TRUE(out.shared.has_value());
  EXPECT_FALSE(out.partitioned.has_value());
  EXPECT_THROW(run_configured(cfg, nullptr, {}, {.mode = RunMode::partitioned, .run_seed = 1}),
               ConfigError);
}

TEST(Files, AtomicWriteCreatesDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "cachepart_test_atomic";
  std::filesystem::remove_all(dir);
  write_file_atomic(dir / "a" / "b.txt", "hello\n");
  std::ifstream in(dir / "a" / "b.txt");
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "hello");
  write_file_atomic(dir / "a" / "b.txt", "again\n");
  std::ifstream in2(dir / "a" / "b.txt");
  std::getline(in2, s);
  EXPECT_EQ(s, "again");
  std::filesystem::remove_all(dir);
}
