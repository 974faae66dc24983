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

#include "cachepart/workload.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "cachepart/errors.hpp"

namespace cachepart {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double unit_interval(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Share `j` of `total` split as evenly as possible into `parts`.
std::uint64_t split_share(std::uint64_t total, std::uint64_t parts, std::uint64_t j) {
  return (total * (j + 1)) / parts - (total * j) / parts;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

std::vector<std::uint64_t> Trace::addresses_of(std::uint32_t task) const {
  std::vector<std::uint64_t> out;
  for (const auto& r : records) {
    if (r.task == task) out.push_back(r.addr);
  }
  return out;
}

void write_trace(std::ostream& out, const Trace& trace) {
  for (const auto& h : trace.header) out << '#' << h << '\n';
  for (const auto& r : trace.records) {
    out << r.seq << ' ' << r.task << ' ' << (r.type == AccessType::write ? 'W' : 'R') << ' '
        << hex(r.addr) << '\n';
  }
}

Trace read_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t lineno = 0;
  bool have_prev = false;
  std::uint64_t prev_seq = 0;

  auto parse_u64 = [&](std::string_view tok, int base, const char* what) {
    if (base == 16 && (tok.starts_with("0x") || tok.starts_with("0X"))) tok.remove_prefix(2);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v, base);
    if (tok.empty() || ec != std::errc{} || p != tok.data() + tok.size()) {
      throw ParseError(lineno, std::string("bad ") + what + " '" + std::string(tok) + "'");
    }
    return v;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      trace.header.push_back(line.substr(1));
      continue;
    }
    std::istringstream fields(line);
    std::string seq, task, type, addr, extra;
    if (!(fields >> seq >> task >> type >> addr) || (fields >> extra)) {
      throw ParseError(lineno, "expected '<seq> <task_id> <R|W> <hex address>'");
    }
    TraceRecord r;
    r.seq = parse_u64(seq, 10, "sequence number");
    const auto t = parse_u64(task, 10, "task id");
    if (t > UINT32_MAX) throw ParseError(lineno, "task id out of range");
    r.task = static_cast<std::uint32_t>(t);
    if (type == "R") {
      r.type = AccessType::read;
    } else if (type == "W") {
      r.type = AccessType::write;
    } else {
      throw ParseError(lineno, "access type must be R or W, got '" + type + "'");
    }
    r.addr = parse_u64(addr, 16, "address");
    if (have_prev && r.seq <= prev_seq) {
      throw ParseError(lineno, "sequence numbers must strictly increase");
    }
    have_prev = true;
    prev_seq = r.seq;
    trace.records.push_back(r);
  }
  return trace;
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> TaskSpec::ranges() const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  for (std::uint32_t a = 0; a < array_count; ++a) {
    const std::uint64_t b = base + a * array_pitch_bytes;
    out.emplace_back(b, b + working_set_bytes);
  }
  return out;
}

void TaskGraph::validate(const CacheConfig& cache) const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (periods < 1) fail("periods must be at least 1");
  if (tasks.empty()) fail("at least one task is required");

  std::set<std::string> names;
  for (const auto& t : tasks) {
    const std::string where = "task '" + t.name + "'";
    if (!names.insert(t.name).second) fail("duplicate task name '" + t.name + "'");
    if (t.working_set_bytes == 0) fail(where + ": working_set must be positive");
    if (t.stride_bytes == 0) fail(where + ": stride must be positive");
    if (t.stride_bytes > t.working_set_bytes) fail(where + ": stride exceeds working_set");
    if (t.working_set_bytes < cache.line_size_bytes && t.mix.scan + t.mix.random > 0) {
      fail(where + ": scan/random patterns need a working_set of at least one line");
    }
    if (t.array_count < 1) fail(where + ": arrays must be at least 1");
    if (t.array_count > 1 && t.array_pitch_bytes < t.working_set_bytes) {
      fail(where + ": array_pitch must be at least working_set");
    }
    if (t.mix.loop < 0 || t.mix.scan < 0 || t.mix.random < 0 ||
        t.mix.loop + t.mix.scan + t.mix.random <= 0) {
      fail(where + ": pattern mix weights must be non-negative with a positive sum");
    }
    if (t.write_fraction < 0 || t.write_fraction > 1) {
      fail(where + ": write_fraction must be in [0, 1]");
    }
  }

  auto check_task = [&](std::uint32_t id, const std::string& where) {
    if (id >= tasks.size()) fail(where + " references missing task #" + std::to_string(id));
  };

  names.clear();
  for (const auto& f : fifos) {
    const std::string where = "fifo '" + f.name + "'";
    if (!names.insert(f.name).second) fail("duplicate fifo name '" + f.name + "'");
    check_task(f.producer, where);
    check_task(f.consumer, where);
    if (f.producer == f.consumer) fail(where + ": producer and consumer must differ");
    if (f.token_bytes == 0) fail(where + ": token size must be positive");
    if (f.capacity_bytes < f.token_bytes) fail(where + ": capacity smaller than one token");
    if (f.capacity_bytes % f.token_bytes != 0) {
      fail(where + ": capacity must be a multiple of the token size");
    }
    if (f.base % cache.line_size_bytes != 0) fail(where + ": base must be line aligned");
  }
  names.clear();
  for (const auto& fb : frame_buffers) {
    const std::string where = "frame buffer '" + fb.name + "'";
    if (!names.insert(fb.name).second) fail("duplicate frame buffer name '" + fb.name + "'");
    check_task(fb.producer, where);
    check_task(fb.consumer, where);
    if (fb.producer == fb.consumer) fail(where + ": producer and consumer must differ");
    if (fb.size_bytes == 0) fail(where + ": size must be positive");
  }
  names.clear();
  for (const auto& s : static_segments) {
    const std::string where = "static segment '" + s.name + "'";
    if (!names.insert(s.name).second) fail("duplicate static segment name '" + s.name + "'");
    if (s.size_bytes == 0) fail(where + ": size must be positive");
    for (auto u : s.users) check_task(u, where);
  }

  struct Range {
    std::uint64_t begin, end;
    std::string owner;
  };
  std::vector<Range> all;
  for (const auto& t : tasks) {
    for (auto [b, e] : t.ranges()) all.push_back({b, e, "task '" + t.name + "'"});
  }
  for (const auto& f : fifos) all.push_back({f.base, f.base + f.capacity_bytes, "fifo '" + f.name + "'"});
  for (const auto& fb : frame_buffers) {
    all.push_back({fb.base, fb.base + fb.size_bytes, "frame buffer '" + fb.name + "'"});
  }
  for (const auto& s : static_segments) {
    all.push_back({s.base, s.base + s.size_bytes, "static segment '" + s.name + "'"});
  }
  std::sort(all.begin(), all.end(), [](const Range& a, const Range& b) { return a.begin < b.begin; });
  for (std::size_t i = 1; i < all.size(); ++i) {
    if (all[i].begin < all[i - 1].end) {
      fail("address ranges of " + all[i - 1].owner + " and " + all[i].owner + " overlap");
    }
  }
}

PartitionTable TaskGraph::address_table() const {
  PartitionTable table;
  for (std::uint32_t i = 0; i < fifos.size(); ++i) {
    table.add_interval(fifos[i].base, fifos[i].base + fifos[i].capacity_bytes, EntityId::fifo(i));
  }
  for (std::uint32_t i = 0; i < frame_buffers.size(); ++i) {
    table.add_interval(frame_buffers[i].base, frame_buffers[i].base + frame_buffers[i].size_bytes,
                       EntityId::frame_buffer(i));
  }
  for (std::uint32_t i = 0; i < static_segments.size(); ++i) {
    table.add_interval(static_segments[i].base,
                       static_segments[i].base + static_segments[i].size_bytes,
                       EntityId::static_segment(i));
  }
  return table;
}

std::vector<EntityId> TaskGraph::entities() const {
  std::vector<EntityId> out;
  for (std::uint32_t i = 0; i < tasks.size(); ++i) out.push_back(EntityId::task(i));
  for (std::uint32_t i = 0; i < fifos.size(); ++i) out.push_back(EntityId::fifo(i));
  for (std::uint32_t i = 0; i < frame_buffers.size(); ++i) out.push_back(EntityId::frame_buffer(i));
  for (std::uint32_t i = 0; i < static_segments.size(); ++i) {
    out.push_back(EntityId::static_segment(i));
  }
  return out;
}

std::string TaskGraph::entity_name(EntityId id) const {
  std::string name;
  switch (id.kind) {
    case EntityKind::task: name = tasks.at(id.index).name; break;
    case EntityKind::fifo: name = fifos.at(id.index).name; break;
    case EntityKind::frame_buffer: name = frame_buffers.at(id.index).name; break;
    case EntityKind::static_segment: name = static_segments.at(id.index).name; break;
    case EntityKind::os: name = "os" + std::to_string(id.index); break;
  }
  return std::string(to_string(id.kind)) + ":" + name;
}

std::optional<EntityId> TaskGraph::find_entity(EntityKind kind, std::string_view name) const {
  auto search = [&](const auto& list) -> std::optional<EntityId> {
    for (std::uint32_t i = 0; i < list.size(); ++i) {
      if (list[i].name == name) return EntityId{kind, i};
    }
    return std::nullopt;
  };
  switch (kind) {
    case EntityKind::task: return search(tasks);
    case EntityKind::fifo: return search(fifos);
    case EntityKind::frame_buffer: return search(frame_buffers);
    case EntityKind::static_segment: return search(static_segments);
    case EntityKind::os: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::uint32_t> TaskGraph::pinned_sets(EntityId id) const {
  switch (id.kind) {
    case EntityKind::task: return tasks.at(id.index).pinned_sets;
    case EntityKind::fifo: return fifos.at(id.index).pinned_sets;
    case EntityKind::frame_buffer: return frame_buffers.at(id.index).pinned_sets;
    case EntityKind::static_segment: return static_segments.at(id.index).pinned_sets;
    case EntityKind::os: return std::nullopt;
  }
  return std::nullopt;
}

std::pair<std::uint64_t, std::uint64_t> TaskGraph::buffer_range(EntityId id) const {
  switch (id.kind) {
    case EntityKind::fifo: {
      const auto& f = fifos.at(id.index);
      return {f.base, f.base + f.capacity_bytes};
    }
    case EntityKind::frame_buffer: {
      const auto& fb = frame_buffers.at(id.index);
      return {fb.base, fb.base + fb.size_bytes};
    }
    case EntityKind::static_segment: {
      const auto& s = static_segments.at(id.index);
      return {s.base, s.base + s.size_bytes};
    }
    default: throw Error(to_string(id) + " is not a buffer entity");
  }
}

std::uint64_t derive_seed(std::uint64_t task_seed, std::uint64_t run_seed) {
  return splitmix64(task_seed ^ splitmix64(run_seed));
}

std::vector<MemoryAccess> generate_task_stream(const TaskSpec& spec, std::uint64_t line_size,
                                               std::uint64_t count, std::uint64_t seed) {
  std::vector<MemoryAccess> out;
  out.reserve(count);
  std::mt19937_64 rng(seed);

  const double total = spec.mix.loop + spec.mix.scan + spec.mix.random;
  const bool single_pattern = (spec.mix.loop == total) || (spec.mix.scan == total) ||
                              (spec.mix.random == total);
  const std::uint64_t arrays = spec.array_count;
  const std::uint64_t loop_elems = std::max<std::uint64_t>(1, spec.working_set_bytes / spec.stride_bytes);
  const std::uint64_t lines = std::max<std::uint64_t>(1, spec.working_set_bytes / line_size);
  std::uint64_t loop_k = 0;
  std::uint64_t scan_k = 0;

  auto array_base = [&](std::uint64_t a) { return spec.base + a * spec.array_pitch_bytes; };

  for (std::uint64_t n = 0; n < count; ++n) {
    enum { kLoop, kScan, kRandom } pattern;
    if (single_pattern) {
      pattern = spec.mix.loop == total ? kLoop : (spec.mix.scan == total ? kScan : kRandom);
    } else {
      const double u = unit_interval(rng) * total;
      pattern = u < spec.mix.loop ? kLoop : (u < spec.mix.loop + spec.mix.scan ? kScan : kRandom);
    }

    std::uint64_t addr = 0;
    switch (pattern) {
      case kLoop:
        addr = array_base(loop_k % arrays) + ((loop_k / arrays) % loop_elems) * spec.stride_bytes;
        ++loop_k;
        break;
      case kScan:
        addr = array_base(scan_k % arrays) + ((scan_k / arrays) % lines) * line_size;
        ++scan_k;
        break;
      case kRandom: {
        const std::uint64_t a = arrays == 1 ? 0 : rng() % arrays;
        addr = array_base(a) + (rng() % lines) * line_size;
        break;
      }
    }

    AccessType type = AccessType::read;
    if (spec.write_fraction >= 1.0) {
      type = AccessType::write;
    } else if (spec.write_fraction > 0.0 && unit_interval(rng) < spec.write_fraction) {
      type = AccessType::write;
    }
    out.push_back({addr, type});
  }
  return out;
}

Trace generate_task_trace(const TaskSpec& spec, std::uint32_t task_id, std::uint64_t line_size) {
  Trace trace;
  const auto stream = generate_task_stream(spec, line_size, spec.period_accesses, spec.seed);
  trace.records.reserve(stream.size());
  for (std::uint64_t i = 0; i < stream.size(); ++i) {
    trace.records.push_back({i, task_id, stream[i].type, stream[i].addr});
  }
  return trace;
}

std::vector<std::uint64_t> lines_covering(std::uint64_t addr, std::uint64_t bytes,
                                          std::uint64_t line_size) {
  std::vector<std::uint64_t> out;
  if (bytes == 0) return out;
  const std::uint64_t first = addr / line_size;
  const std::uint64_t last = (addr + bytes - 1) / line_size;
  for (std::uint64_t l = first; l <= last; ++l) out.push_back(l * line_size);
  return out;
}

FifoTraffic generate_fifo_traffic(const FifoSpec& fifo, std::uint64_t tokens,
                                  std::uint64_t line_size) {
  FifoTraffic traffic;
  for (std::uint64_t n = 0; n < tokens; ++n) {
    auto addrs = lines_covering(fifo.token_address(n), fifo.token_bytes, line_size);
    traffic.writes.push_back({n, addrs});
    traffic.reads.push_back({n, std::move(addrs)});
  }
  return traffic;
}

bool channel_order_is_legal(std::uint64_t capacity_tokens, std::span<const ChannelEvent> events) {
  std::uint64_t written = 0;
  std::uint64_t read = 0;
  for (const auto& e : events) {
    if (e.is_write) {
      if (e.token != written || written >= read + capacity_tokens) return false;
      ++written;
    } else {
      if (e.token != read || read >= written) return false;
      ++read;
    }
  }
  return true;
}

std::uint64_t channel_capacity(const TaskGraph& graph, std::uint32_t channel) {
  if (channel < graph.fifos.size()) return graph.fifos[channel].capacity_tokens();
  return 1;
}

std::vector<TaskProgram> build_programs(const TaskGraph& graph, std::uint64_t line_size,
                                        std::uint64_t run_seed) {
  const auto num_fifos = static_cast<std::uint32_t>(graph.fifos.size());
  std::vector<TaskProgram> programs(graph.tasks.size());

  for (std::uint32_t t = 0; t < graph.tasks.size(); ++t) {
    const TaskSpec& spec = graph.tasks[t];
    TaskProgram& prog = programs[t];

    const std::uint64_t private_seed = derive_seed(spec.seed, run_seed);
    const auto stream = generate_task_stream(spec, line_size, spec.period_accesses * graph.periods,
                                             private_seed);
    std::size_t stream_pos = 0;

    std::vector<std::uint32_t> in_fifos, out_fifos, in_frames, out_frames, segments;
    std::uint64_t steps = 1;
    for (std::uint32_t f = 0; f < num_fifos; ++f) {
      const auto& fifo = graph.fifos[f];
      if (fifo.consumer == t) in_fifos.push_back(f);
      if (fifo.producer == t) out_fifos.push_back(f);
      if (fifo.consumer == t || fifo.producer == t) steps = std::max(steps, fifo.tokens_per_period);
    }
    for (std::uint32_t b = 0; b < graph.frame_buffers.size(); ++b) {
      if (graph.frame_buffers[b].consumer == t) in_frames.push_back(b);
      if (graph.frame_buffers[b].producer == t) out_frames.push_back(b);
    }
    std::vector<std::mt19937_64> segment_rngs;
    for (std::uint32_t s = 0; s < graph.static_segments.size(); ++s) {
      const auto& users = graph.static_segments[s].users;
      if (std::find(users.begin(), users.end(), t) != users.end()) {
        segments.push_back(s);
        segment_rngs.emplace_back(derive_seed(spec.seed ^ splitmix64(0x5e9ULL + s), run_seed));
      }
    }

    auto emit_channel = [&](std::uint32_t channel, std::uint64_t token, bool is_write,
                            const std::vector<std::uint64_t>& addrs) {
      prog.gates.push_back({.start = prog.accesses.size(),
                            .length = addrs.size(),
                            .channel = channel,
                            .token = token,
                            .is_write = is_write});
      for (auto a : addrs) {
        prog.accesses.push_back({a, is_write ? AccessType::write : AccessType::read});
      }
    };

    std::vector<std::uint64_t> fifo_tokens(num_fifos, 0);
    for (std::uint64_t p = 0; p < graph.periods; ++p) {
      for (auto b : in_frames) {
        const auto& fb = graph.frame_buffers[b];
        emit_channel(num_fifos + b, p, false, lines_covering(fb.base, fb.size_bytes, line_size));
      }
      for (std::uint64_t j = 0; j < steps; ++j) {
        for (auto f : in_fifos) {
          const auto& fifo = graph.fifos[f];
          for (std::uint64_t k = 0; k < split_share(fifo.tokens_per_period, steps, j); ++k) {
            const std::uint64_t token = fifo_tokens[f]++;
            emit_channel(f, token, false,
                         lines_covering(fifo.token_address(token), fifo.token_bytes, line_size));
          }
        }
        for (std::size_t si = 0; si < segments.size(); ++si) {
          const auto& seg = graph.static_segments[segments[si]];
          const std::uint64_t seg_lines = std::max<std::uint64_t>(1, seg.size_bytes / line_size);
          const std::uint64_t seg_base = seg.base - seg.base % line_size;
          auto& rng = segment_rngs[si];
          for (std::uint64_t k = 0; k < split_share(seg.accesses_per_period, steps, j); ++k) {
            std::uint64_t addr = seg_base + (rng() % seg_lines) * line_size;
            if (addr < seg.base) addr = seg.base;
            AccessType type = AccessType::read;
            if (spec.write_fraction >= 1.0 ||
                (spec.write_fraction > 0.0 && unit_interval(rng) < spec.write_fraction)) {
              type = AccessType::write;
            }
            prog.accesses.push_back({addr, type});
          }
        }
        const std::uint64_t chunk = split_share(spec.period_accesses, steps, j);
        for (std::uint64_t k = 0; k < chunk; ++k) prog.accesses.push_back(stream[stream_pos++]);
        for (auto f : out_fifos) {
          const auto& fifo = graph.fifos[f];
          for (std::uint64_t k = 0; k < split_share(fifo.tokens_per_period, steps, j); ++k) {
            const std::uint64_t token = fifo_tokens[f]++;
            emit_channel(f, token, true,
                         lines_covering(fifo.token_address(token), fifo.token_bytes, line_size));
          }
        }
      }
      for (auto b : out_frames) {
        const auto& fb = graph.frame_buffers[b];
        emit_channel(num_fifos + b, p, true, lines_covering(fb.base, fb.size_bytes, line_size));
      }
    }
  }
  return programs;
}

SchedulePolicy SchedulePolicy::parse(std::string_view text) {
  if (text == "rtc" || text == "run_to_completion") return run_to_completion();
  for (std::string_view prefix : {"rr:", "round_robin:"}) {
    if (text.starts_with(prefix)) {
      auto num = text.substr(prefix.size());
      std::uint64_t q = 0;
      auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), q);
      if (ec != std::errc{} || p != num.data() + num.size() || q < 1) {
        throw ConfigError("bad scheduling quantum in '" + std::string(text) + "'");
      }
      return round_robin(q);
    }
  }
  throw ConfigError("unknown schedule policy '" + std::string(text) +
                    "' (expected rr:<quantum> or rtc)");
}

std::string SchedulePolicy::to_string() const {
  return kind == Kind::run_to_completion ? "rtc" : "rr:" + std::to_string(quantum);
}

void StaticAssignment::validate(std::size_t num_tasks) const {
  if (num_processors < 1) throw ConfigError("processor count must be at least 1");
  if (processor_of.size() != num_tasks) {
    throw ConfigError("static assignment covers " + std::to_string(processor_of.size()) +
                      " tasks, graph has " + std::to_string(num_tasks));
  }
  for (std::size_t t = 0; t < processor_of.size(); ++t) {
    if (processor_of[t] >= num_processors) {
      throw ConfigError("task #" + std::to_string(t) + " assigned to processor " +
                        std::to_string(processor_of[t]) + " of " + std::to_string(num_processors));
    }
  }
}

std::vector<std::uint32_t> StaticAssignment::tasks_on(std::uint32_t processor) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t t = 0; t < processor_of.size(); ++t) {
    if (processor_of[t] == processor) out.push_back(t);
  }
  return out;
}

ScheduleResult schedule(const TaskGraph& graph, std::span<const TaskProgram> programs,
                        const StaticAssignment& assignment, const SchedulePolicy& policy) {
  assignment.validate(programs.size());
  if (policy.kind == SchedulePolicy::Kind::round_robin && policy.quantum < 1) {
    throw ConfigError("scheduling quantum must be at least 1");
  }

  const std::size_t num_channels = graph.fifos.size() + graph.frame_buffers.size();
  struct ChannelState {
    std::uint64_t capacity = 1;
    std::uint64_t written = 0;
    std::uint64_t read = 0;
  };
  std::vector<ChannelState> channels(num_channels);
  for (std::uint32_t c = 0; c < num_channels; ++c) channels[c].capacity = channel_capacity(graph, c);

  struct TaskState {
    std::size_t pos = 0;
    std::size_t gate = 0;
  };
  std::vector<TaskState> tasks(programs.size());

  auto finished = [&](std::uint32_t t) { return tasks[t].pos >= programs[t].accesses.size(); };
  auto runnable = [&](std::uint32_t t) {
    if (finished(t)) return false;
    const auto& st = tasks[t];
    const auto& gates = programs[t].gates;
    if (st.gate < gates.size() && gates[st.gate].start == st.pos) {
      const auto& g = gates[st.gate];
      const auto& ch = channels.at(g.channel);
      return g.is_write ? g.token < ch.read + ch.capacity : g.token < ch.written;
    }
    return true;
  };

  struct ProcessorState {
    std::vector<std::uint32_t> queue;
    std::size_t current = 0;
    std::uint64_t used = 0;
    std::optional<std::uint32_t> last_task;
  };
  std::vector<ProcessorState> procs(assignment.num_processors);
  for (std::uint32_t p = 0; p < assignment.num_processors; ++p) procs[p].queue = assignment.tasks_on(p);

  ScheduleResult result;
  result.slices.resize(programs.size());
  std::size_t total = 0;
  for (const auto& prog : programs) total += prog.accesses.size();
  result.trace.records.reserve(total);

  const bool rtc = policy.kind == SchedulePolicy::Kind::run_to_completion;
  std::uint64_t seq = 0;
  std::size_t done = 0;

  while (done < total) {
    bool progressed = false;
    for (std::uint32_t p = 0; p < procs.size(); ++p) {
      auto& proc = procs[p];
      const std::size_t n = proc.queue.size();
      if (n == 0) continue;

      std::optional<std::size_t> pick;
      if (runnable(proc.queue[proc.current]) && (rtc || proc.used < policy.quantum)) {
        pick = proc.current;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          const std::size_t cand = (proc.current + k) % n;
          if (runnable(proc.queue[cand])) {
            pick = cand;
            proc.used = 0;
            break;
          }
        }
      }
      if (!pick) continue;

      proc.current = *pick;
      const std::uint32_t t = proc.queue[*pick];
      auto& st = tasks[t];
      const auto& prog = programs[t];
      const MemoryAccess& acc = prog.accesses[st.pos];
      result.trace.records.push_back({seq, t, acc.type, acc.addr});

      auto& slices = result.slices[t];
      if (proc.last_task == t && !slices.empty()) {
        ++slices.back().length;
      } else {
        slices.push_back({p, seq, 1});
      }
      proc.last_task = t;

      ++st.pos;
      if (st.gate < prog.gates.size()) {
        const auto& g = prog.gates[st.gate];
        if (st.pos == g.start + g.length) {
          auto& ch = channels[g.channel];
          if (g.is_write) {
            ++ch.written;
          } else {
            ++ch.read;
          }
          ++st.gate;
        }
      }
      ++proc.used;
      ++seq;
      ++done;
      progressed = true;
    }
    if (!progressed) {
      std::ostringstream os;
      os << "deadlock: no runnable task; blocked:";
      for (std::uint32_t t = 0; t < programs.size(); ++t) {
        if (!finished(t)) os << ' ' << graph.tasks.at(t).name << "@" << tasks[t].pos;
      }
      throw DeadlockError(os.str());
    }
  }
  return result;
}

ScheduleResult schedule(const TaskGraph& graph, const StaticAssignment& assignment,
                        const SchedulePolicy& policy, std::uint64_t line_size,
                        std::uint64_t run_seed) {
  const auto programs = build_programs(graph, line_size, run_seed);
  return schedule(graph, programs, assignment, policy);
}

namespace {

// First/last sequence number of every token operation on a channel region.
struct TokenSpan {
  std::uint64_t first = UINT64_MAX;
  std::uint64_t last = 0;
  std::uint64_t count = 0;
};

// Groups `who`'s accesses to [begin, end) into consecutive tokens whose
// access counts are given by `lines_of(token)`.
std::vector<TokenSpan> token_spans(const Trace& trace, std::uint32_t who, std::uint64_t begin,
                                   std::uint64_t end,
                                   const std::function<std::size_t(std::uint64_t)>& lines_of) {
  std::vector<TokenSpan> spans;
  std::uint64_t token = 0;
  for (const auto& r : trace.records) {
    if (r.task != who || r.addr < begin || r.addr >= end) continue;
    if (spans.size() <= token) spans.emplace_back();
    auto& s = spans[token];
    s.first = std::min(s.first, r.seq);
    s.last = r.seq;
    if (++s.count == lines_of(token)) ++token;
  }
  return spans;
}

std::string check_channel(const Trace& trace, std::uint32_t producer, std::uint32_t consumer,
                          std::uint64_t begin, std::uint64_t end, std::uint64_t capacity,
                          const std::function<std::size_t(std::uint64_t)>& lines_of,
                          const std::string& name) {
  const auto writes = token_spans(trace, producer, begin, end, lines_of);
  const auto reads = token_spans(trace, consumer, begin, end, lines_of);
  if (reads.size() > writes.size()) return name + ": more tokens read than written";
  for (std::size_t n = 0; n < reads.size(); ++n) {
    if (reads[n].first <= writes[n].last) {
      return name + ": token " + std::to_string(n) + " read at seq " +
             std::to_string(reads[n].first) + " before its last write at seq " +
             std::to_string(writes[n].last);
    }
  }
  for (std::size_t n = capacity; n < writes.size(); ++n) {
    const std::size_t freed = n - capacity;
    if (freed >= reads.size() || writes[n].first <= reads[freed].last) {
      return name + ": token " + std::to_string(n) + " overwrites unread token " +
             std::to_string(freed);
    }
  }
  return {};
}

}  // namespace

std::string check_fifo_safety(const TaskGraph& graph, const Trace& trace,
                              std::uint64_t line_size) {
  for (const auto& f : graph.fifos) {
    auto lines_of = [&](std::uint64_t token) {
      return lines_covering(f.token_address(token), f.token_bytes, line_size).size();
    };
    auto err = check_channel(trace, f.producer, f.consumer, f.base, f.base + f.capacity_bytes,
                             f.capacity_tokens(), lines_of, "fifo '" + f.name + "'");
    if (!err.empty()) return err;
  }
  return {};
}

std::string check_frame_phases(const TaskGraph& graph, const Trace& trace,
                               std::uint64_t line_size) {
  for (const auto& fb : graph.frame_buffers) {
    const std::size_t lines = lines_covering(fb.base, fb.size_bytes, line_size).size();
    auto err = check_channel(trace, fb.producer, fb.consumer, fb.base, fb.base + fb.size_bytes, 1,
                             [lines](std::uint64_t) { return lines; },
                             "frame buffer '" + fb.name + "'");
    if (!err.empty()) return err;
  }
  return {};
}

std::uint32_t sets_to_hold(std::uint64_t bytes, const CacheConfig& config) {
  const std::uint64_t per_set = config.associativity * config.line_size_bytes;
  const std::uint64_t raw = std::max<std::uint64_t>(1, (bytes + per_set - 1) / per_set);
  std::uint64_t sets = 1;
  while (sets < raw) sets <<= 1;
  if (sets > config.num_sets) {
    throw InfeasibleError(std::to_string(bytes) + " bytes need " + std::to_string(sets) +
                          " sets, cache has " + std::to_string(config.num_sets));
  }
  return static_cast<std::uint32_t>(sets);
}

std::uint32_t fifo_partition_size(const FifoSpec& fifo, const CacheConfig& config) {
  try {
    return sets_to_hold(fifo.capacity_bytes, config);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError("fifo '" + fifo.name + "': " + e.what());
  }
}

}  // namespace cachepart
