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

#include "cachepart/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "cachepart/errors.hpp"

namespace cachepart {

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::shared: return "shared";
    case RunMode::partitioned: return "partitioned";
    case RunMode::both: return "both";
  }
  return "both";
}

RunMode parse_run_mode(std::string_view text) {
  if (text == "shared") return RunMode::shared;
  if (text == "partitioned") return RunMode::partitioned;
  if (text == "both") return RunMode::both;
  throw ConfigError("mode must be shared, partitioned or both, got '" + std::string(text) + "'");
}

namespace {

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& at, const std::string& field,
                         const std::string& what) const {
    std::ostringstream os;
    os << source_;
    if (at.IsDefined() && at.Mark().line >= 0) os << ':' << (at.Mark().line + 1);
    os << ": " << field << ": " << what;
    throw ConfigError(os.str());
  }

  void only_keys(const YAML::Node& map, const std::string& field,
                 std::initializer_list<std::string_view> allowed) const {
    if (!map.IsMap()) fail(map, field, "expected a mapping");
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      bool ok = false;
      for (auto a : allowed) ok = ok || a == key;
      if (!ok) fail(kv.first, field.empty() ? key : field + "." + key, "unknown key");
    }
  }

  YAML::Node required(const YAML::Node& map, const char* key, const std::string& field) const {
    YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) fail(map, join(field, key), "missing required key");
    return n;
  }

  std::uint64_t u64(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected an unsigned integer");
    const std::string s = n.Scalar();
    try {
      std::size_t used = 0;
      if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
      const auto v = std::stoull(s, &used, 0);
      if (used != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(n, field, "expected an unsigned integer, got '" + s + "'");
    }
  }

  std::uint32_t u32(const YAML::Node& n, const std::string& field) const {
    const auto v = u64(n, field);
    if (v > UINT32_MAX) fail(n, field, "value out of range");
    return static_cast<std::uint32_t>(v);
  }

  double number(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a number");
    const std::string s = n.Scalar();
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(n, field, "expected a number, got '" + s + "'");
    }
  }

  std::string text(const YAML::Node& n, const std::string& field) const {
    if (!n.IsScalar()) fail(n, field, "expected a string");
    return n.Scalar();
  }

  template <typename F>
  auto optional(const YAML::Node& map, const char* key, F&& parse) const
      -> std::optional<decltype(parse(YAML::Node{}))> {
    YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) return std::nullopt;
    return parse(n);
  }

  static std::string join(const std::string& a, const std::string& b) {
    return a.empty() ? b : a + "." + b;
  }

 private:
  std::string source_;
};

}  // namespace

ExperimentConfig parse_config(std::string_view yaml_text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  Reader rd(source);
  if (!root.IsMap()) rd.fail(root, "<root>", "expected a mapping");
  rd.only_keys(root, "",
               {"name", "cache", "ladder", "budget_sets", "periods", "processors", "schedules",
                "cost", "t_switch", "t_idle", "run_seeds", "mode", "expected", "output", "tasks",
                "fifos", "frame_buffers", "static_segments"});

  ExperimentConfig cfg;
  cfg.name = rd.optional(root, "name", [&](auto n) { return rd.text(n, "name"); }).value_or("experiment");

  const auto cache = rd.required(root, "cache", "");
  rd.only_keys(cache, "cache", {"line_size", "sets", "ways"});
  cfg.cache.line_size_bytes = rd.u64(rd.required(cache, "line_size", "cache"), "cache.line_size");
  cfg.cache.num_sets = rd.u32(rd.required(cache, "sets", "cache"), "cache.sets");
  cfg.cache.associativity = rd.u32(rd.required(cache, "ways", "cache"), "cache.ways");
  try {
    cfg.cache.validate();
  } catch (const ConfigError& e) {
    rd.fail(cache, "cache", e.what());
  }

  if (auto ladder = root["ladder"]; ladder.IsDefined()) {
    if (!ladder.IsSequence()) rd.fail(ladder, "ladder", "expected a list of set counts");
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      cfg.ladder.sizes.push_back(rd.u32(ladder[i], "ladder[" + std::to_string(i) + "]"));
    }
    try {
      cfg.ladder.validate(cfg.cache);
    } catch (const ConfigError& e) {
      rd.fail(ladder, "ladder", e.what());
    }
  } else {
    cfg.ladder = SizeLadder::powers_of_two(cfg.cache.num_sets);
  }

  cfg.budget_sets = cfg.cache.num_sets;
  if (auto b = root["budget_sets"]; b.IsDefined()) {
    cfg.budget_sets = rd.u32(b, "budget_sets");
    if (cfg.budget_sets > cfg.cache.num_sets) rd.fail(b, "budget_sets", "exceeds cache.sets");
  }

  cfg.graph.periods = rd.optional(root, "periods", [&](auto n) { return rd.u32(n, "periods"); }).value_or(1);
  if (cfg.graph.periods < 1) rd.fail(root["periods"], "periods", "must be at least 1");
  const std::uint32_t processors =
      rd.optional(root, "processors", [&](auto n) { return rd.u32(n, "processors"); }).value_or(1);
  if (processors < 1) rd.fail(root["processors"], "processors", "must be at least 1");
  cfg.placement.num_processors = processors;

  if (auto s = root["schedules"]; s.IsDefined()) {
    if (!s.IsSequence() || s.size() == 0) rd.fail(s, "schedules", "expected a non-empty list");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string field = "schedules[" + std::to_string(i) + "]";
      try {
        cfg.schedules.push_back(SchedulePolicy::parse(rd.text(s[i], field)));
      } catch (const ConfigError& e) {
        rd.fail(s[i], field, e.what());
      }
    }
  } else {
    cfg.schedules.push_back(SchedulePolicy::round_robin(1));
  }

  if (auto c = root["cost"]; c.IsDefined()) {
    rd.only_keys(c, "cost", {"hit", "miss"});
    cfg.cost.hit_cost = rd.optional(c, "hit", [&](auto n) { return rd.number(n, "cost.hit"); }).value_or(0.0);
    cfg.cost.miss_cost = rd.optional(c, "miss", [&](auto n) { return rd.number(n, "cost.miss"); }).value_or(1.0);
    if (cfg.cost.hit_cost < 0 || cfg.cost.miss_cost < 0) rd.fail(c, "cost", "costs must be non-negative");
  }

  auto per_processor = [&](const char* key) {
    std::vector<double> out(processors, 0.0);
    YAML::Node n = root[key];
    if (!n.IsDefined()) return out;
    if (n.IsSequence()) {
      if (n.size() != processors) rd.fail(n, key, "expected one value per processor");
      for (std::size_t i = 0; i < n.size(); ++i) out[i] = rd.number(n[i], key);
    } else {
      std::fill(out.begin(), out.end(), rd.number(n, key));
    }
    for (double v : out) {
      if (v < 0) rd.fail(n, key, "must be non-negative");
    }
    return out;
  };
  cfg.t_switch = per_processor("t_switch");
  cfg.t_idle = per_processor("t_idle");

  if (auto s = root["run_seeds"]; s.IsDefined()) {
    if (!s.IsSequence() || s.size() == 0) rd.fail(s, "run_seeds", "expected a non-empty list");
    for (std::size_t i = 0; i < s.size(); ++i) cfg.run_seeds.push_back(rd.u64(s[i], "run_seeds"));
  } else {
    cfg.run_seeds = {1};
  }

  if (auto m = root["mode"]; m.IsDefined()) {
    try {
      cfg.mode = parse_run_mode(rd.text(m, "mode"));
    } catch (const ConfigError& e) {
      rd.fail(m, "mode", e.what());
    }
  }
  if (auto e = root["expected"]; e.IsDefined()) {
    const auto v = rd.text(e, "expected");
    if (v == "same_input") {
      cfg.expected = ExpectedSource::same_input;
    } else if (v == "mean") {
      cfg.expected = ExpectedSource::mean;
    } else {
      rd.fail(e, "expected", "must be same_input or mean");
    }
  }
  cfg.output_dir = rd.optional(root, "output", [&](auto n) { return rd.text(n, "output"); }).value_or("");

  auto pin = [&](const YAML::Node& n, const std::string& field) -> std::optional<std::uint32_t> {
    auto v = rd.optional(n, "sets", [&](auto x) { return rd.u32(x, field + ".sets"); });
    if (v && !is_power_of_two(*v)) rd.fail(n["sets"], field + ".sets", "must be a power of two");
    if (v && *v > cfg.cache.num_sets) rd.fail(n["sets"], field + ".sets", "exceeds cache.sets");
    return v;
  };

  const auto tasks = rd.required(root, "tasks", "");
  if (!tasks.IsSequence() || tasks.size() == 0) rd.fail(tasks, "tasks", "expected a non-empty list");
  std::map<std::string, std::uint32_t> task_index;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& n = tasks[i];
    const std::string field = "tasks[" + std::to_string(i) + "]";
    rd.only_keys(n, field,
                 {"name", "processor", "base", "working_set", "stride", "arrays", "array_pitch",
                  "mix", "write_fraction", "seed", "accesses", "sets"});
    TaskSpec t;
    t.name = rd.text(rd.required(n, "name", field), field + ".name");
    if (task_index.contains(t.name)) rd.fail(n["name"], field + ".name", "duplicate task name '" + t.name + "'");
    task_index[t.name] = static_cast<std::uint32_t>(i);
    const std::uint32_t proc =
        rd.optional(n, "processor", [&](auto x) { return rd.u32(x, field + ".processor"); }).value_or(0);
    if (proc >= processors) rd.fail(n["processor"], field + ".processor", "exceeds processor count");
    cfg.placement.processor_of.push_back(proc);
    t.base = rd.u64(rd.required(n, "base", field), field + ".base");
    t.working_set_bytes = rd.u64(rd.required(n, "working_set", field), field + ".working_set");
    t.stride_bytes = rd.optional(n, "stride", [&](auto x) { return rd.u64(x, field + ".stride"); })
                         .value_or(cfg.cache.line_size_bytes);
    t.array_count = rd.optional(n, "arrays", [&](auto x) { return rd.u32(x, field + ".arrays"); }).value_or(1);
    t.array_pitch_bytes =
        rd.optional(n, "array_pitch", [&](auto x) { return rd.u64(x, field + ".array_pitch"); }).value_or(0);
    if (auto mix = n["mix"]; mix.IsDefined()) {
      rd.only_keys(mix, field + ".mix", {"loop", "scan", "random"});
      t.mix.loop = rd.optional(mix, "loop", [&](auto x) { return rd.number(x, field + ".mix.loop"); }).value_or(0.0);
      t.mix.scan = rd.optional(mix, "scan", [&](auto x) { return rd.number(x, field + ".mix.scan"); }).value_or(0.0);
      t.mix.random = rd.optional(mix, "random", [&](auto x) { return rd.number(x, field + ".mix.random"); }).value_or(0.0);
    }
    t.write_fraction = rd.optional(n, "write_fraction", [&](auto x) {
                            return rd.number(x, field + ".write_fraction");
                          }).value_or(0.0);
    t.seed = rd.optional(n, "seed", [&](auto x) { return rd.u64(x, field + ".seed"); }).value_or(i + 1);
    t.period_accesses = rd.u64(rd.required(n, "accesses", field), field + ".accesses");
    t.pinned_sets = pin(n, field);
    cfg.graph.tasks.push_back(std::move(t));
  }

  auto task_ref = [&](const YAML::Node& n, const char* key, const std::string& field) {
    const auto node = rd.required(n, key, field);
    const auto name = rd.text(node, field + "." + key);
    auto it = task_index.find(name);
    if (it == task_index.end()) rd.fail(node, field + "." + key, "no task named '" + name + "'");
    return it->second;
  };

  if (auto fifos = root["fifos"]; fifos.IsDefined()) {
    if (!fifos.IsSequence()) rd.fail(fifos, "fifos", "expected a list");
    for (std::size_t i = 0; i < fifos.size(); ++i) {
      const auto& n = fifos[i];
      const std::string field = "fifos[" + std::to_string(i) + "]";
      rd.only_keys(n, field, {"name", "producer", "consumer", "base", "capacity", "token",
                              "tokens_per_period", "sets"});
      FifoSpec f;
      f.name = rd.text(rd.required(n, "name", field), field + ".name");
      f.producer = task_ref(n, "producer", field + " ('" + f.name + "')");
      f.consumer = task_ref(n, "consumer", field + " ('" + f.name + "')");
      f.base = rd.u64(rd.required(n, "base", field), field + ".base");
      f.capacity_bytes = rd.u64(rd.required(n, "capacity", field), field + ".capacity");
      f.token_bytes = rd.u64(rd.required(n, "token", field), field + ".token");
      f.tokens_per_period = rd.u64(rd.required(n, "tokens_per_period", field), field + ".tokens_per_period");
      f.pinned_sets = pin(n, field);
      cfg.graph.fifos.push_back(std::move(f));
    }
  }

  if (auto fbs = root["frame_buffers"]; fbs.IsDefined()) {
    if (!fbs.IsSequence()) rd.fail(fbs, "frame_buffers", "expected a list");
    for (std::size_t i = 0; i < fbs.size(); ++i) {
      const auto& n = fbs[i];
      const std::string field = "frame_buffers[" + std::to_string(i) + "]";
      rd.only_keys(n, field, {"name", "producer", "consumer", "base", "size", "sets"});
      FrameBufferSpec fb;
      fb.name = rd.text(rd.required(n, "name", field), field + ".name");
      fb.producer = task_ref(n, "producer", field + " ('" + fb.name + "')");
      fb.consumer = task_ref(n, "consumer", field + " ('" + fb.name + "')");
      fb.base = rd.u64(rd.required(n, "base", field), field + ".base");
      fb.size_bytes = rd.u64(rd.required(n, "size", field), field + ".size");
      fb.pinned_sets = pin(n, field);
      cfg.graph.frame_buffers.push_back(std::move(fb));
    }
  }

  if (auto segs = root["static_segments"]; segs.IsDefined()) {
    if (!segs.IsSequence()) rd.fail(segs, "static_segments", "expected a list");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& n = segs[i];
      const std::string field = "static_segments[" + std::to_string(i) + "]";
      rd.only_keys(n, field, {"name", "base", "size", "users", "accesses", "sets"});
      StaticSegmentSpec s;
      s.name = rd.text(rd.required(n, "name", field), field + ".name");
      s.base = rd.u64(rd.required(n, "base", field), field + ".base");
      s.size_bytes = rd.u64(rd.required(n, "size", field), field + ".size");
      if (auto users = n["users"]; users.IsDefined()) {
        if (!users.IsSequence()) rd.fail(users, field + ".users", "expected a list of task names");
        for (std::size_t u = 0; u < users.size(); ++u) {
          const auto name = rd.text(users[u], field + ".users");
          auto it = task_index.find(name);
          if (it == task_index.end()) rd.fail(users[u], field + ".users", "no task named '" + name + "'");
          s.users.push_back(it->second);
        }
      }
      s.accesses_per_period =
          rd.optional(n, "accesses", [&](auto x) { return rd.u64(x, field + ".accesses"); }).value_or(0);
      s.pinned_sets = pin(n, field);
      cfg.graph.static_segments.push_back(std::move(s));
    }
  }

  try {
    cfg.graph.validate(cfg.cache);
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  auto cfg = parse_config(buf.str(), path.string());
  if (cfg.name == "experiment") cfg.name = path.stem().string();
  return cfg;
}

}  // namespace cachepart
