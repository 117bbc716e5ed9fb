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

#ifndef MAESTRO_SCHEDULER_HPP_
#define MAESTRO_SCHEDULER_HPP_

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "maestro/workload.hpp"

namespace maestro {

// Stage order on the critical and downstream resources of one DP rank.
//  kInterleaved: f(k), b(k), f(k+1), b(k+1), ...
//  kAllForwardThenBackward: f(1..N), then b(1..N) in the same order.
// The upstream resource always runs its forwards first (they have no
// dependencies), then its backwards, both in schedule order.
enum class ExecPolicy { kInterleaved, kAllForwardThenBackward };

std::string_view ExecPolicyName(ExecPolicy policy);
// Accepts "interleaved" and "all-fwd-then-bwd". Throws InvalidArgument.
ExecPolicy ParseExecPolicy(std::string_view name);

struct MakespanBreakdown {
  double makespan = 0.0;
  double critical_busy = 0.0;
  // Idle time on the critical resource between its first start and last end.
  double critical_idle = 0.0;
  double critical_first_start = 0.0;
};

// Three serial resources per rank (upstream, critical, downstream), per-sample
// chain f_bc -> f_c -> f_ac -> b_bc -> b_c -> b_ac, zero-length phases skipped.
// A stage starts at max(resource free, predecessor finish). Throws
// NegativeTime and InvalidArgument for an empty order.
MakespanBreakdown EvaluateOrder(std::span<const SampleTiming> order,
                                ExecPolicy policy);

double CalculateMakespan(std::span<const SampleTiming> order, ExecPolicy policy);

// Makespan of `order` with `sample` inserted before index `position`.
double CalculateMakespan(std::span<const SampleTiming> order,
                         std::size_t position, const SampleTiming& sample,
                         ExecPolicy policy);

// Stable ascending sort on t_f_bc.
std::vector<SampleTiming> SortInitial(std::vector<SampleTiming> samples);

// Greedy insertion: seed with the first sorted sample, then insert each
// remaining sample once at the position with the smallest makespan. Ties go
// to the append position when it is tied, else to the lowest index. The input
// order is returned instead if it beats the greedy result. `evaluations`,
// when given, is incremented per makespan evaluation.
std::vector<SampleTiming> ScheduleRank(std::vector<SampleTiming> samples,
                                       ExecPolicy policy,
                                       std::size_t* evaluations = nullptr);

// Splits a global batch over `dp` ranks: equal counts (ranks differ by at
// most one), longest-processing-time on critical load, then per-auxiliary
// load, then activation counts. Each rank keeps batch order. Throws
// EmptyBatch and InvalidArgument.
std::vector<std::vector<SampleTiming>> PartitionBatch(
    std::span<const SampleTiming> batch, int dp);

struct MergedEntry {
  std::uint64_t sample_id = 0;
  int source = 0;  // index of the downstream rank it came from

  friend bool operator==(const MergedEntry&, const MergedEntry&) = default;
};

// Round-robin interleave of `fanout` per-rank orders. Throws FanoutMismatch
// unless lists.size() == fanout.
std::vector<MergedEntry> MergeFanout(
    const std::vector<std::vector<std::uint64_t>>& lists, int fanout);
std::vector<std::uint64_t> MergeFanoutIds(
    const std::vector<std::vector<std::uint64_t>>& lists, int fanout);

struct RankKey {
  SectionId section;
  int rank = 0;

  friend auto operator<=>(const RankKey&, const RankKey&) = default;
};

struct RankSummary {
  double makespan = 0.0;
  double critical_idle = 0.0;
};

struct Schedule {
  ExecPolicy policy = ExecPolicy::kInterleaved;
  std::map<RankKey, std::vector<std::uint64_t>> per_rank_orders;
  // Critical ranks only; from the 3-resource model.
  std::map<int, RankSummary> critical_summary;
};

// Partitions the batch over the critical DP ranks, runs ScheduleRank on each
// and merges the orders outward through every auxiliary section by fanout.
// `configs` must hold a config for every section. The batch must already be
// resolved against the graph. Throws FanoutMismatch/InconsistentSchedule when
// the configs break dp * fanout = partner dp.
Schedule BuildSchedule(const SectionGraph& graph,
                       const std::map<SectionId, SectionConfig>& configs,
                       std::span<const SampleTiming> batch, ExecPolicy policy);

// For each critical rank r, result[r] is the rank of `section` that serves it.
std::vector<int> RankMapping(const SectionGraph& graph,
                             const std::map<SectionId, SectionConfig>& configs,
                             const SectionId& section);

}  // namespace maestro

#endif  // MAESTRO_SCHEDULER_HPP_
