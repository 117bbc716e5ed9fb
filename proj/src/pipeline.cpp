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

#include "maestro/pipeline.hpp"

#include <algorithm>
#include <random>

#include "maestro/cost_model.hpp"
#include "maestro/error.hpp"

namespace maestro {
namespace {

double Uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double Probability(const BatchGenerator& gen, const SectionId& id) {
  auto it = gen.activation.find(id);
  return it == gen.activation.end() ? 1.0 : it->second;
}

}  // namespace

std::map<SectionId, SectionConfig> ConfigsOf(const AllocationPlan& plan) {
  std::map<SectionId, SectionConfig> configs;
  for (const auto& [id, sp] : plan.per_section) configs[id] = sp.config;
  return configs;
}

BatchProfile ProfileOf(const WorkloadSpec& spec) {
  const SectionGraph& graph = spec.Graph();
  BatchProfile profile;
  profile.tokens_per_sample = spec.tokens_per_sample;
  if (spec.samples) {
    profile.batch_size = static_cast<double>(spec.samples->size());
    for (const auto& s : *spec.samples) {
      for (const auto& id : s.activated) profile.activating[id] += 1.0;
    }
    return profile;
  }
  const BatchGenerator& gen = *spec.generate;
  profile.batch_size = gen.count;
  for (const auto& s : graph.sections()) {
    if (s.role == Role::kCritical) continue;
    double p = 0.0;
    if (auto g = graph.exclusive_groups().find(s.id); g != graph.exclusive_groups().end()) {
      for (const auto& m : g->second) p += Probability(gen, m);
    } else {
      p = Probability(gen, s.id);
    }
    profile.activating[s.id] = gen.count * std::min(1.0, p);
  }
  return profile;
}

std::vector<SampleTiming> MaterializeBatch(
    const WorkloadSpec& spec, const std::map<SectionId, SectionConfig>& configs,
    std::uint64_t seed) {
  if (spec.samples) return *spec.samples;
  const SectionGraph& graph = spec.Graph();
  const BatchGenerator& gen = *spec.generate;

  std::map<SectionId, StageTimes> per_sample;
  for (const auto& s : graph.sections()) {
    auto it = configs.find(s.id);
    if (it == configs.end()) {
      throw Error(ErrorCode::kInconsistentSchedule, "no config for '" + s.id.str() + "'");
    }
    const SectionConfig& c = it->second;
    const StepTime step =
        EstimateStepTime(s, c, spec.params.at(s.id), spec.tokens_per_sample.at(s.id));
    const double per = static_cast<double>(c.mbs) * c.pp;
    per_sample[s.id] = {step.forward / per, step.backward / per};
  }

  std::mt19937_64 rng(seed);
  std::vector<SampleTiming> batch;
  for (int k = 0; k < gen.count; ++k) {
    SampleTiming sample;
    sample.sample_id = static_cast<std::uint64_t>(k);
    std::set<SectionId> hit;  // final-graph ids
    for (const auto& s : graph.sections()) {
      if (s.role == Role::kCritical) {
        hit.insert(s.id);
        continue;
      }
      const double u = Uniform(rng);
      if (auto g = graph.exclusive_groups().find(s.id); g != graph.exclusive_groups().end()) {
        double cumulative = 0.0;
        for (const auto& m : g->second) {
          cumulative += Probability(gen, m);
          if (u < cumulative) {
            sample.activated.insert(m);
            hit.insert(s.id);
            break;
          }
        }
      } else if (u < Probability(gen, s.id)) {
        sample.activated.insert(s.id);
        hit.insert(s.id);
      }
    }
    for (const auto& id : hit) {
      const StageTimes& t = per_sample.at(id);
      sample.section_times[id] = t;
      Phase fwd = Phase::kFwdC, bwd = Phase::kBwdC;
      switch (graph.PlacementOf(id)) {
        case Placement::kUpstream:
          fwd = Phase::kFwdBc;
          bwd = Phase::kBwdAc;
          break;
        case Placement::kDownstream:
          fwd = Phase::kFwdAc;
          bwd = Phase::kBwdBc;
          break;
        case Placement::kCritical:
          break;
      }
      sample.at(fwd) = std::max(sample.at(fwd), t.forward);
      sample.at(bwd) = std::max(sample.at(bwd), t.backward);
    }
    batch.push_back(std::move(sample));
  }
  return ResolveBatch(graph, std::move(batch));
}

AllocationPlan OptimizePlan(const WorkloadSpec& spec, const RunOptions& options) {
  OptimizerInput input;
  input.graph = &spec.Graph();
  input.cluster = spec.cluster;
  input.params = spec.params;
  input.profile = ProfileOf(spec);
  input.options = spec.options;
  if (options.cp_cap) input.options.cp_cap = *options.cp_cap;
  input.pinned = spec.pinned;
  auto evaluate = [&](const AllocationPlan& plan) {
    const Schedule schedule = MakeSchedule(spec, plan, options);
    return RunSimulation(spec, plan, schedule, options).report.makespan;
  };
  return Solve(input, evaluate);
}

Schedule MakeSchedule(const WorkloadSpec& spec, const AllocationPlan& plan,
                      const RunOptions& options) {
  const auto configs = ConfigsOf(plan);
  const auto batch = MaterializeBatch(spec, configs, options.seed);
  return BuildSchedule(spec.Graph(), configs, batch, options.policy);
}

SimulationResult RunSimulation(const WorkloadSpec& spec, const AllocationPlan& plan,
                               const Schedule& schedule, const RunOptions& options) {
  CheckPlan(spec.Graph(), spec.cluster, plan);
  const auto configs = ConfigsOf(plan);
  const auto batch = MaterializeBatch(spec, configs, options.seed);
  return Simulate(spec.Graph(), configs, schedule, batch, options.simulation);
}

Bundle RunEnd2End(const WorkloadSpec& spec, const RunOptions& options) {
  Bundle bundle;
  const char* stage = "optimize";
  try {
    bundle.plan = OptimizePlan(spec, options);
    stage = "schedule";
    bundle.schedule = MakeSchedule(spec, bundle.plan, options);
    stage = "simulate";
    bundle.simulation = RunSimulation(spec, bundle.plan, bundle.schedule, options);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(stage) + ": " + e.detail());
  }
  return bundle;
}

}  // namespace maestro
