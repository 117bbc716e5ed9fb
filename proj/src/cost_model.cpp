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

#include "maestro/cost_model.hpp"

#include <cmath>

#include "maestro/error.hpp"

namespace maestro {

void ValidateCostParams(const CostParams& p) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, "cost params: " + what);
  };
  if (!positive(p.flops_per_token_fwd)) fail("flops_per_token_fwd must be > 0");
  if (!positive(p.bwd_fwd_ratio)) fail("bwd_fwd_ratio must be > 0");
  if (!positive(p.peak_flops_per_gpu)) fail("peak_flops_per_gpu must be > 0");
  if (!positive(p.bytes_per_param_weights)) fail("bytes_per_param_weights must be > 0");
  if (!nonneg(p.bytes_per_param_optimizer)) fail("bytes_per_param_optimizer must be >= 0");
  if (!nonneg(p.activation_bytes_per_token)) fail("activation_bytes_per_token must be >= 0");
  if (!(p.efficiency_per_doubling > 0.0 && p.efficiency_per_doubling <= 1.0)) {
    fail("efficiency_per_doubling must lie in (0, 1]");
  }
  for (const auto& [key, eff] : p.parallel_efficiency) {
    if (key[0] < 1 || key[1] < 1 || key[2] < 1) fail("parallel_efficiency key degrees must be >= 1");
    if (!(eff > 0.0 && eff <= 1.0)) fail("parallel_efficiency factors must lie in (0, 1]");
    if (key == std::array<int, 3>{1, 1, 1} && eff != 1.0) {
      fail("parallel_efficiency(1,1,1) must be 1");
    }
  }
  for (const auto& [mbs, eff] : p.mbs_efficiency) {
    if (mbs < 1) fail("mbs_efficiency keys must be >= 1");
    if (!(eff > 0.0 && eff <= 1.0)) fail("mbs_efficiency factors must lie in (0, 1]");
  }
}

CostParams CostPreset(std::string_view name) {
  CostParams p;
  p.peak_flops_per_gpu = 989e12;  // dense BF16, H100 SXM
  if (name == "vit-encoder") {
    // ~0.6B-parameter vision encoder, hidden 1280 x 32 layers.
    p.flops_per_token_fwd = 1.2e9;
    p.efficiency_per_doubling = 0.92;
    p.bytes_per_param_weights = 2.0;
    p.bytes_per_param_optimizer = 12.0;
    p.activation_bytes_per_token = 34.0 * 1280 * 32;
    p.mbs_efficiency = {{1, 0.55}, {2, 0.7}, {4, 0.8}, {8, 0.85}};
    return p;
  }
  if (name == "moe-backbone") {
    // 235B total / 22B active MoE, hidden 4096 x 94 layers.
    p.flops_per_token_fwd = 2.0 * 22e9;
    p.efficiency_per_doubling = 0.9;
    p.bytes_per_param_weights = 2.0;
    p.bytes_per_param_optimizer = 12.0;
    p.activation_bytes_per_token = 34.0 * 4096 * 94;
    p.mbs_efficiency = {{1, 0.8}, {2, 0.9}};
    return p;
  }
  if (name == "frozen-teacher") {
    // ~8B dense teacher, forward only. Small micro-batches leave the GPU
    // badly underused; the mbs ramp is what makes larger batches pay off.
    p.flops_per_token_fwd = 2.0 * 8e9;
    p.efficiency_per_doubling = 0.9;
    p.bytes_per_param_weights = 2.0;
    p.bytes_per_param_optimizer = 0.0;
    p.activation_bytes_per_token = 16.0 * 4096 * 32;
    p.mbs_efficiency = {{1, 0.35}, {2, 0.6}, {4, 0.91}, {8, 0.95}};
    return p;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown cost preset '" + std::string(name) + "'");
}

std::vector<std::string> CostPresetNames() {
  return {"vit-encoder", "moe-backbone", "frozen-teacher"};
}

double ParallelEfficiency(const CostParams& params, int tp, int pp, int cp) {
  if (auto it = params.parallel_efficiency.find({tp, pp, cp});
      it != params.parallel_efficiency.end()) {
    return it->second;
  }
  if (tp == 1 && cp == 1) return 1.0;
  const double doublings = std::log2(static_cast<double>(tp)) +
                           std::log2(static_cast<double>(cp));
  return std::pow(params.efficiency_per_doubling, doublings);
}

double MicroBatchEfficiency(const CostParams& params, int mbs) {
  if (params.mbs_efficiency.empty()) return 1.0;
  auto it = params.mbs_efficiency.upper_bound(mbs);
  if (it == params.mbs_efficiency.begin()) return it->second;
  return std::prev(it)->second;
}

StepTime EstimateStepTime(const SectionSpec& section, const SectionConfig& config,
                          const CostParams& params, std::int64_t tokens_per_sample) {
  ValidateConfig(section, config);
  if (tokens_per_sample < 1) {
    throw Error(ErrorCode::kInvalidArgument, "tokens_per_sample must be >= 1");
  }
  const double efficiency =
      ParallelEfficiency(params, config.tp, config.pp, config.cp) *
      MicroBatchEfficiency(params, config.mbs);
  StepTime t;
  t.forward = static_cast<double>(config.mbs) *
              static_cast<double>(tokens_per_sample) * params.flops_per_token_fwd /
              (params.peak_flops_per_gpu * config.tp * config.cp * efficiency);
  t.backward = section.exec_mode == ExecMode::kForwardOnly
                   ? 0.0
                   : t.forward * params.bwd_fwd_ratio;
  return t;
}

MemoryEstimate EstimateMemory(const SectionSpec& section,
                              const SectionConfig& config,
                              const CostParams& params,
                              std::int64_t tokens_per_sample) {
  ValidateConfig(section, config);
  if (tokens_per_sample < 1) {
    throw Error(ErrorCode::kInvalidArgument, "tokens_per_sample must be >= 1");
  }
  const auto& s = section.structural;
  const double params_per_gpu =
      static_cast<double>(s.param_count) / (config.tp * config.pp);
  const double batch_activations = static_cast<double>(config.mbs) *
                                   static_cast<double>(tokens_per_sample) *
                                   params.activation_bytes_per_token /
                                   (config.tp * config.cp);
  MemoryEstimate m;
  m.weights = params_per_gpu * params.bytes_per_param_weights;
  if (section.exec_mode == ExecMode::kForwardBackward) {
    m.optimizer_state = params_per_gpu * params.bytes_per_param_optimizer;
    m.gradients = params_per_gpu * params.bytes_per_param_weights;
    m.activations = batch_activations;
  } else {
    const double layers_per_stage =
        static_cast<double>(s.num_layers) / config.pp;
    m.activations = batch_activations / layers_per_stage;
  }
  m.total = m.weights + m.optimizer_state + m.gradients + m.activations;
  return m;
}

double SectionIterationTime(const StepTime& step, const SectionConfig& config,
                            double samples_per_rank) {
  if (samples_per_rank <= 0.0) return 0.0;
  const double micro_batches = samples_per_rank / config.mbs;
  return (micro_batches + config.pp - 1) * step.total() / config.pp;
}

}  // namespace maestro
