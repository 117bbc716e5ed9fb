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

#ifndef MAESTRO_SIMULATOR_HPP_
#define MAESTRO_SIMULATOR_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maestro/scheduler.hpp"
#include "maestro/workload.hpp"

namespace maestro {

// Edge transfer time = bytes / bandwidth. Absent means transfers are free.
struct CommModel {
  double bytes_per_time_unit = 0.0;

  double TransferTime(double bytes) const { return bytes / bytes_per_time_unit; }
};

// "zero" -> nullopt, "linear:<GBps>" -> bandwidth of GBps * 1e9 bytes per time
// unit. Throws InvalidArgument.
std::optional<CommModel> ParseCommModel(std::string_view text);

// How auxiliary sections pick their next stage.
enum class AuxDispatch {
  kMergedOrder,    // fixed sequence from the merged schedule
  kEarliestReady,  // whichever pending stage became ready first
};

struct SimulationOptions {
  std::optional<CommModel> comm;
  AuxDispatch aux_dispatch = AuxDispatch::kMergedOrder;
};

struct StageEvent {
  SectionId section;
  int dp_rank = 0;
  std::uint64_t sample_id = 0;
  Phase phase = Phase::kFwdC;
  double start = 0.0;
  double end = 0.0;
};

struct CommEvent {
  SectionId from;
  SectionId to;
  std::uint64_t sample_id = 0;
  double bytes = 0.0;
  double start = 0.0;
  double end = 0.0;
};

struct IterationReport {
  double makespan = 0.0;
  std::map<RankKey, double> busy_time;
  std::map<RankKey, double> idle_time;  // makespan - busy, per resource
  double critical_idle = 0.0;           // summed over critical ranks
  std::map<int, double> critical_idle_per_rank;
  // Pipeline fill/drain added on top of the event makespan.
  double fill_drain = 0.0;
  std::vector<CommEvent> comm_events;
};

struct SimulationResult {
  IterationReport report;
  std::vector<StageEvent> events;  // by start time
};

// Event-driven run of one iteration. `batch` must be resolved against the
// graph. `configs` must hold every section. Throws InconsistentSchedule when
// the schedule does not match the batch or configs, DependencyDeadlock if the
// realized event graph cannot make progress.
SimulationResult Simulate(const SectionGraph& graph,
                          const std::map<SectionId, SectionConfig>& configs,
                          const Schedule& schedule,
                          std::span<const SampleTiming> batch,
                          const SimulationOptions& options = {});

// Chrome trace event JSON: one track per (section, rank), one complete ("X")
// event per stage with sample_id and phase args. One time unit is rendered as
// one millisecond.
void WriteTrace(const std::vector<StageEvent>& events, std::ostream& out);
// Throws IoError.
void ExportTrace(const std::vector<StageEvent>& events, const std::string& path);

}  // namespace maestro

#endif  // MAESTRO_SIMULATOR_HPP_
