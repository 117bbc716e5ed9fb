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

#ifndef MAESTRO_OPTIMIZER_HPP_
#define MAESTRO_OPTIMIZER_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "maestro/cost_model.hpp"
#include "maestro/error.hpp"
#include "maestro/workload.hpp"

namespace maestro {

struct SearchOptions {
  int cp_cap = 16;
  std::vector<int> mbs_candidates = {1, 2, 4, 8};
  // GPUs the critical section may use; unset means the whole cluster.
  std::optional<std::int64_t> critical_gpu_budget;
};

// What one iteration asks of each section.
struct BatchProfile {
  double batch_size = 0.0;
  // Number of samples in the batch that activate each section. The critical
  // section is always activated by every sample.
  std::map<SectionId, double> activating;
  std::map<SectionId, std::int64_t> tokens_per_sample;

  double Activating(const SectionGraph& graph, const SectionId& id) const;
  std::int64_t Tokens(const SectionGraph& graph, const SectionId& id) const;
};

struct CandidateConfig {
  SectionConfig config;
  StepTime step;
  MemoryEstimate memory;
};

// Every (dp, tp, pp, cp, mbs) with tp | num_heads, pp | num_layers,
// cp | max_seq_len (cp <= cp_cap), gpu_count <= total_gpus and memory within
// mem_per_gpu. fanout is 1. Sorted by step time, then config. Throws
// NoFeasibleConfig when nothing fits.
std::vector<CandidateConfig> EnumerateConfigs(const SectionSpec& section,
                                              const ClusterSpec& cluster,
                                              const CostParams& params,
                                              std::int64_t tokens_per_sample,
                                              const SearchOptions& options = {});

struct CriticalChoice {
  CandidateConfig candidate;
  double iteration_time = 0.0;
};

// Iteration time of the critical section alone for each enumerated config
// within the GPU budget, fastest first (ties by config).
std::vector<CriticalChoice> RankCriticalConfigs(const SectionSpec& critical,
                                                const ClusterSpec& cluster,
                                                const CostParams& params,
                                                const BatchProfile& profile,
                                                const SearchOptions& options,
                                                std::int64_t tokens_per_sample);

// Stage 1. Throws NoFeasibleConfig.
CriticalChoice OptimizeCritical(const SectionSpec& critical,
                                const ClusterSpec& cluster,
                                const CostParams& params,
                                const BatchProfile& profile,
                                const SearchOptions& options,
                                std::int64_t tokens_per_sample);

struct AuxiliaryDemand {
  double critical_time_per_iter = 0.0;
  double activating_samples = 0.0;  // samples per iteration that touch it
  std::int64_t tokens_per_sample = 1;
  std::int64_t gpus_remaining = 0;
  double mem_per_gpu = 0.0;
  int partner_dp = 1;  // DP of the neighbor toward the critical section
};

struct AuxiliaryFit {
  CandidateConfig candidate;
  double iteration_time = 0.0;
  double slack = 0.0;  // critical_time_per_iter - iteration_time
};

// Stage 2. Smallest GPU count whose iteration time does not exceed the
// critical section's, with dp * fanout = partner_dp; ties go to the largest
// slack, then the smallest config. Throws NoFeasibleConfig when nothing fits
// in memory/GPUs and CannotAvoidStall when everything that fits is too slow.
AuxiliaryFit FitAuxiliary(const SectionSpec& aux, const CostParams& params,
                          const AuxiliaryDemand& demand,
                          const SearchOptions& options = {});

struct SectionPlan {
  SectionConfig config;
  std::int64_t gpus = 0;
  MemoryEstimate memory;
  StepTime step;
  double iteration_time = 0.0;
};

struct AllocationPlan {
  std::map<SectionId, SectionPlan> per_section;
  std::int64_t total_gpus_used = 0;
  double predicted_iteration_time = 0.0;
  bool feasible = false;
  std::vector<std::string> violations;
};

struct PlanViolation {
  ErrorCode code;
  std::string message;
};

// One entry per violated constraint, config checks first, then fanout, then
// resource and memory; empty means the plan satisfies all of them.
std::vector<PlanViolation> PlanViolations(const SectionGraph& graph,
                                        const ClusterSpec& cluster,
                                        const AllocationPlan& plan);

// Throws the first violation: FanoutViolation (naming the edge),
// InvalidConfig, NoFeasibleConfig for resource/memory overruns.
void CheckPlan(const SectionGraph& graph, const ClusterSpec& cluster,
               const AllocationPlan& plan);

struct OptimizerInput {
  const SectionGraph* graph = nullptr;
  ClusterSpec cluster;
  std::map<SectionId, CostParams> params;
  BatchProfile profile;
  SearchOptions options;
  // User-fixed configs; pinned sections skip the search.
  std::map<SectionId, SectionConfig> pinned;
};

// Scores a complete plan; Solve uses it for predicted_iteration_time.
using PlanEvaluator = std::function<double(const AllocationPlan&)>;

// Auxiliaries in the order Stage 2 fits them: by distance from the critical
// section, then topological position.
std::vector<SectionId> AuxiliaryFitOrder(const SectionGraph& graph);

// Stage 1 then Stage 2. Critical candidates are tried fastest first until all
// auxiliaries fit. Without an evaluator the prediction is the slowest
// section's iteration time.
AllocationPlan Solve(const OptimizerInput& input,
                     const PlanEvaluator& evaluator = nullptr);

// Builds the plan entry for a given config (memory, step and iteration time).
SectionPlan MakeSectionPlan(const SectionSpec& section, const SectionConfig& config,
                            const CostParams& params, const BatchProfile& profile,
                            const SectionGraph& graph);

}  // namespace maestro

#endif  // MAESTRO_OPTIMIZER_HPP_
