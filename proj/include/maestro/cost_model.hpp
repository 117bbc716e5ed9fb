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

#ifndef MAESTRO_COST_MODEL_HPP_
#define MAESTRO_COST_MODEL_HPP_

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "maestro/workload.hpp"

namespace maestro {

// Roofline-style parameters for one section. Calibrate against real hardware
// by overriding the fields, or start from one of the named presets.
struct CostParams {
  double flops_per_token_fwd = 1.0;
  double bwd_fwd_ratio = 2.0;
  double peak_flops_per_gpu = 1.0;
  // Keyed by (tp, pp, cp). Entries must lie in (0, 1]; (1,1,1) is always 1.
  std::map<std::array<int, 3>, double> parallel_efficiency;
  // Fallback for (tp, pp, cp) missing from the map: this factor is applied
  // once per doubling of tp and of cp.
  double efficiency_per_doubling = 1.0;
  // Step function over micro-batch size: the entry with the largest key not
  // above mbs applies. Empty means 1.
  std::map<int, double> mbs_efficiency;
  double bytes_per_param_weights = 2.0;
  double bytes_per_param_optimizer = 12.0;  // ignored for forward_only sections
  double activation_bytes_per_token = 0.0;

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

// Throws InvalidArgument on non-positive rates or efficiencies outside (0, 1].
void ValidateCostParams(const CostParams& params);

// "vit-encoder", "moe-backbone" or "frozen-teacher"; throws InvalidArgument
// for anything else.
CostParams CostPreset(std::string_view name);
std::vector<std::string> CostPresetNames();

double ParallelEfficiency(const CostParams& params, int tp, int pp, int cp);
double MicroBatchEfficiency(const CostParams& params, int mbs);

// Time of one micro-batch through the whole section (all pipeline stages).
struct StepTime {
  double forward = 0.0;
  double backward = 0.0;

  double total() const { return forward + backward; }
};

struct MemoryEstimate {
  double weights = 0.0;
  double optimizer_state = 0.0;
  double gradients = 0.0;
  double activations = 0.0;
  double total = 0.0;
};

StepTime EstimateStepTime(const SectionSpec& section, const SectionConfig& config,
                          const CostParams& params, std::int64_t tokens_per_sample);

// Peak per-GPU bytes. Forward-only sections keep a single layer's activations
// of one micro-batch live; training sections keep the full micro-batch.
MemoryEstimate EstimateMemory(const SectionSpec& section,
                              const SectionConfig& config,
                              const CostParams& params,
                              std::int64_t tokens_per_sample);

// Wall time of one iteration for a section whose DP ranks each process
// `samples_per_rank` samples: (samples/mbs + pp - 1) pipeline slots of
// step/pp each. A partial tail micro-batch costs its share, as in the
// simulator's per-sample times.
double SectionIterationTime(const StepTime& step, const SectionConfig& config,
                            double samples_per_rank);

}  // namespace maestro

#endif  // MAESTRO_COST_MODEL_HPP_
