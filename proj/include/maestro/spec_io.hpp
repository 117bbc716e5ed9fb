/* Copyright 2026 The Maestro Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MAESTRO_SPEC_IO_HPP_
#define MAESTRO_SPEC_IO_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maestro/cost_model.hpp"
#include "maestro/optimizer.hpp"
#include "maestro/scheduler.hpp"
#include "maestro/simulator.hpp"
#include "maestro/workload.hpp"

namespace maestro {

inline constexpr std::string_view kSpecSchema = "maestro-spec v1";

// Random batch: `count` samples; each auxiliary section is activated with its
// probability (default 1). Members of a merged exclusive group are drawn
// jointly so at most one of them fires.
struct BatchGenerator {
  int count = 0;
  std::map<SectionId, double> activation;  // original (pre-merge) names
};

struct WorkloadSpec {
  std::optional<SectionGraph> graph;  // after transforms
  ClusterSpec cluster;
  std::map<SectionId, CostParams> params;
  std::map<SectionId, std::int64_t> tokens_per_sample;
  std::map<SectionId, SectionConfig> pinned;
  SearchOptions options;
  std::optional<std::vector<SampleTiming>> samples;  // resolved
  std::optional<BatchGenerator> generate;

  const SectionGraph& Graph() const { return *graph; }
};

// Parses and checks a spec document. Throws ParseError (with line or field
// path) for malformed input and the graph/config error codes for invalid
// content, including FanoutViolation for pinned configs that break an edge.
WorkloadSpec ParseSpec(std::string_view text);
WorkloadSpec LoadSpec(const std::string& path);

std::string ReadFile(const std::string& path);
// Writes atomically enough for tests: truncate then write. Throws IoError.
void WriteFile(const std::string& path, std::string_view contents);

// Machine-readable artifacts. All writers are byte-stable.
std::string PlanToJson(const AllocationPlan& plan);
AllocationPlan PlanFromJson(std::string_view text);

std::string ScheduleToJson(const Schedule& schedule, std::uint64_t seed);
Schedule ScheduleFromJson(std::string_view text, std::uint64_t* seed = nullptr);

std::string ReportToJson(const IterationReport& report);

std::string TraceToJson(const std::vector<StageEvent>& events);

}  // namespace maestro

#endif  // MAESTRO_SPEC_IO_HPP_
