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

#ifndef MAESTRO_PIPELINE_HPP_
#define MAESTRO_PIPELINE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "maestro/optimizer.hpp"
#include "maestro/scheduler.hpp"
#include "maestro/simulator.hpp"
#include "maestro/spec_io.hpp"

namespace maestro {

struct RunOptions {
  ExecPolicy policy = ExecPolicy::kInterleaved;
  SimulationOptions simulation;
  std::uint64_t seed = 0;
  std::optional<int> cp_cap;  // overrides the spec's optimizer.cp_cap
};

std::map<SectionId, SectionConfig> ConfigsOf(const AllocationPlan& plan);

// Expected activation counts and token lengths of the spec's batch.
BatchProfile ProfileOf(const WorkloadSpec& spec);

// The spec's explicit samples, or `generate.count` samples drawn with `seed`
// whose per-section times come from the cost model under `configs`
// (step / (mbs * pp) per sample). Always resolved against the graph.
std::vector<SampleTiming> MaterializeBatch(
    const WorkloadSpec& spec, const std::map<SectionId, SectionConfig>& configs,
    std::uint64_t seed);

// Two-stage search; predicted_iteration_time is the simulated makespan.
AllocationPlan OptimizePlan(const WorkloadSpec& spec, const RunOptions& options = {});

Schedule MakeSchedule(const WorkloadSpec& spec, const AllocationPlan& plan,
                      const RunOptions& options = {});

// `plan` must satisfy CheckPlan for the spec's graph and cluster.
SimulationResult RunSimulation(const WorkloadSpec& spec, const AllocationPlan& plan,
                               const Schedule& schedule, const RunOptions& options = {});

struct Bundle {
  AllocationPlan plan;
  Schedule schedule;
  SimulationResult simulation;
};

Bundle RunEnd2End(const WorkloadSpec& spec, const RunOptions& options = {});

}  // namespace maestro

#endif  // MAESTRO_PIPELINE_HPP_
