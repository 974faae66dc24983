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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cachepart/cache.hpp"
#include "cachepart/config.hpp"
#include "cachepart/errors.hpp"
#include "cachepart/experiment.hpp"
#include "cachepart/optimizer.hpp"
#include "cachepart/report.hpp"

namespace py = pybind11;
using namespace cachepart;

namespace {

std::string curves_csv(const ExperimentConfig& cfg, const std::vector<MissCurve>& curves) {
  std::ostringstream os;
  write_curve_samples_csv(os, cfg.graph, curves);
  return os.str();
}

std::vector<MissCurve> curves_from(const ExperimentConfig& cfg, const std::string& csv) {
  std::istringstream in(csv);
  return read_curves_csv(in, cfg.graph);
}

}  // namespace

PYBIND11_MODULE(_cachepart, m) {
  m.doc() = "Set-partitioned shared cache simulator and partition optimizer.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", PyExc_RuntimeError);
  py::register_exception<DeadlockError>(m, "DeadlockError", PyExc_RuntimeError);

  py::class_<CacheConfig>(m, "CacheConfig")
      .def(py::init([](std::uint64_t line, std::uint32_t sets, std::uint32_t ways) {
             CacheConfig c{line, sets, ways};
             c.validate();
             return c;
           }),
           py::arg("line_size"), py::arg("sets"), py::arg("ways"))
      .def_readonly("line_size", &CacheConfig::line_size_bytes)
      .def_readonly("sets", &CacheConfig::num_sets)
      .def_readonly("ways", &CacheConfig::associativity);

  m.def("decompose_address", [](std::uint64_t addr, const CacheConfig& c) {
    const auto p = decompose_address(addr, c);
    return py::make_tuple(p.tag, p.index, p.offset);
  });

  py::class_<SharedCache>(m, "Cache")
      .def(py::init([](const CacheConfig& c) { return SharedCache(c, CacheMode::shared); }))
      .def("access",
           [](SharedCache& c, std::uint64_t addr, std::uint32_t task) {
             const auto o = c.access(addr, EntityId::task(task));
             switch (o.kind) {
               case AccessKind::hit: return "hit";
               case AccessKind::cold_miss: return "cold_miss";
               case AccessKind::replacement_miss: return "replacement_miss";
             }
             return "hit";
           },
           py::arg("addr"), py::arg("task") = 0)
      .def("misses", [](const SharedCache& c) { return c.totals().misses(); })
      .def("hits", [](const SharedCache& c) { return c.totals().hits; });

  py::class_<ExperimentConfig>(m, "Experiment")
      .def_readonly("name", &ExperimentConfig::name)
      .def_readonly("budget_sets", &ExperimentConfig::budget_sets)
      .def_property_readonly("cache", [](const ExperimentConfig& c) { return c.cache; })
      .def_property_readonly("run_seeds", [](const ExperimentConfig& c) { return c.run_seeds; })
      .def_property_readonly("entities", [](const ExperimentConfig& c) {
        std::vector<std::string> out;
        for (auto e : c.graph.entities()) out.push_back(c.graph.entity_name(e));
        return out;
      });

  m.def("load_config", [](const std::string& path) { return load_config(path); }, py::arg("path"));
  m.def("parse_config", [](const std::string& text) { return parse_config(text); }, py::arg("text"));

  m.def(
      "profile",
      [](const ExperimentConfig& cfg, unsigned jobs) {
        py::gil_scoped_release release;
        return curves_csv(cfg, profile_experiment(cfg, jobs));
      },
      py::arg("config"), py::arg("jobs") = 1,
      "Miss-curve samples as CSV text (entity,sigma,run_seed,misses).");

  m.def(
      "optimize",
      [](const ExperimentConfig& cfg, const std::string& curves) {
        const auto c = curves_from(cfg, curves);
        const auto a = optimize_experiment(cfg, c);
        const auto model = throughput_model(cfg);
        return assignment_report(cfg, a, c, &model).dump();
      },
      py::arg("config"), py::arg("curves"), "Assignment report as JSON text.");

  m.def(
      "run",
      [](const ExperimentConfig& cfg, const std::string& assignment, const std::string& curves,
         const std::string& mode, std::optional<std::uint64_t> seed) {
        const auto c = curves_from(cfg, curves);
        const auto a = read_assignment(Json::parse(assignment), cfg);
        RunOptions opts{.mode = parse_run_mode(mode), .run_seed = seed.value_or(cfg.run_seeds.front())};
        py::gil_scoped_release release;
        const auto out = run_configured(cfg, &a, c, opts);
        return run_report(cfg, out).dump();
      },
      py::arg("config"), py::arg("assignment"), py::arg("curves"), py::arg("mode") = "both",
      py::arg("seed") = py::none(), "Run report as JSON text.");

  m.def(
      "solve_min_misses",
      [](const std::map<std::string, std::vector<double>>& curves,
         const std::vector<std::uint32_t>& ladder, std::uint32_t budget) {
        std::vector<MissCurve> cs;
        std::vector<std::string> names;
        for (const auto& [name, mean] : curves) {
          if (mean.size() != ladder.size()) throw ConfigError(name + ": curve length differs from ladder");
          MissCurve c;
          c.entity = EntityId::task(static_cast<std::uint32_t>(names.size()));
          c.sizes = ladder;
          c.mean = mean;
          c.samples.assign(mean.size(), {});
          cs.push_back(std::move(c));
          names.push_back(name);
        }
        const auto a = solve_min_misses(cs, {}, budget, SizeLadder{ladder});
        std::map<std::string, std::uint32_t> sizes;
        for (std::size_t i = 0; i < names.size(); ++i) {
          sizes[names[i]] = a.sizes.at(EntityId::task(static_cast<std::uint32_t>(i)));
        }
        return py::make_tuple(sizes, a.predicted_total_misses);
      },
      py::arg("curves"), py::arg("ladder"), py::arg("budget"));
}
