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

#include "maestro/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "maestro/error.hpp"

namespace maestro {
namespace {

std::vector<int> Divisors(std::int64_t n, std::int64_t cap) {
  std::vector<int> out;
  for (std::int64_t d = 1; d <= n && d <= cap; ++d) {
    if (n % d == 0) out.push_back(static_cast<int>(d));
  }
  return out;
}

double SamplesPerRank(double activating, int dp) {
  if (activating <= 0.0) return 0.0;
  // Expected counts may be fractional; round up to whole samples per rank.
  return std::ceil(activating / dp - 1e-9);
}

bool ByStepThenConfig(const CandidateConfig& a, const CandidateConfig& b) {
  if (a.step.total() != b.step.total()) return a.step.total() < b.step.total();
  return a.config < b.config;
}

}  // namespace

double BatchProfile::Activating(const SectionGraph& graph,
                                const SectionId& id) const {
  if (id == graph.Critical().id) return batch_size;
  auto it = activating.find(id);
  return it == activating.end() ? 0.0 : it->second;
}

std::int64_t BatchProfile::Tokens(const SectionGraph& graph,
                                  const SectionId& id) const {
  auto it = tokens_per_sample.find(id);
  return it == tokens_per_sample.end() ? graph.Section(id).structural.max_seq_len
                                       : it->second;
}

std::vector<CandidateConfig> EnumerateConfigs(const SectionSpec& section,
                                              const ClusterSpec& cluster,
                                              const CostParams& params,
                                              std::int64_t tokens_per_sample,
                                              const SearchOptions& options) {
  const auto& s = section.structural;
  std::vector<CandidateConfig> out;
  for (int tp : Divisors(s.num_heads, cluster.total_gpus)) {
    for (int pp : Divisors(s.num_layers, cluster.total_gpus)) {
      for (int cp : Divisors(s.max_seq_len, options.cp_cap)) {
        const std::int64_t shape = std::int64_t{tp} * pp * cp;
        if (shape > cluster.total_gpus) continue;
        for (int mbs : options.mbs_candidates) {
          SectionConfig c{1, tp, pp, cp, mbs, 1};
          MemoryEstimate mem = EstimateMemory(section, c, params, tokens_per_sample);
          if (mem.total > cluster.mem_per_gpu) continue;
          StepTime step = EstimateStepTime(section, c, params, tokens_per_sample);
          for (std::int64_t dp = 1; dp * shape <= cluster.total_gpus; ++dp) {
            c.dp = static_cast<int>(dp);
            out.push_back({c, step, mem});
          }
        }
      }
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::kNoFeasibleConfig,
                "section '" + section.id.str() + "': no config fits " +
                    std::to_string(cluster.total_gpus) + " GPUs with " +
                    std::to_string(cluster.mem_per_gpu) + " bytes each");
  }
  std::sort(out.begin(), out.end(), ByStepThenConfig);
  return out;
}

std::vector<CriticalChoice> RankCriticalConfigs(const SectionSpec& critical,
                                                const ClusterSpec& cluster,
                                                const CostParams& params,
                                                const BatchProfile& profile,
                                                const SearchOptions& options,
                                                std::int64_t tokens_per_sample) {
  const std::int64_t budget =
      std::min(cluster.total_gpus,
               options.critical_gpu_budget.value_or(cluster.total_gpus));
  ClusterSpec capped = cluster;
  capped.total_gpus = budget;
  if (budget < 1) {
    throw Error(ErrorCode::kNoFeasibleConfig,
                "critical section '" + critical.id.str() + "': GPU budget is 0");
  }
  auto candidates =
      EnumerateConfigs(critical, capped, params, tokens_per_sample, options);
  std::vector<CriticalChoice> ranked;
  ranked.reserve(candidates.size());
  for (auto& c : candidates) {
    const double t = SectionIterationTime(
        c.step, c.config, SamplesPerRank(profile.batch_size, c.config.dp));
    ranked.push_back({std::move(c), t});
  }
  std::sort(ranked.begin(), ranked.end(),
            [](const CriticalChoice& a, const CriticalChoice& b) {
              if (a.iteration_time != b.iteration_time) {
                return a.iteration_time < b.iteration_time;
              }
              return a.candidate.config < b.candidate.config;
            });
  return ranked;
}

CriticalChoice OptimizeCritical(const SectionSpec& critical,
                                const ClusterSpec& cluster,
                                const CostParams& params,
                                const BatchProfile& profile,
                                const SearchOptions& options,
                                std::int64_t tokens_per_sample) {
  return RankCriticalConfigs(critical, cluster, params, profile, options,
                             tokens_per_sample)
      .front();
}

namespace {

// Stage 2 over a pre-enumerated candidate list (any dp, fanout 1).
AuxiliaryFit FitFromCandidates(const SectionSpec& aux,
                               const std::vector<CandidateConfig>& candidates,
                               const AuxiliaryDemand& demand) {
  std::optional<AuxiliaryFit> best;
  bool any_fits = false;
  double fastest = std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) {
    if (demand.partner_dp % c.config.dp != 0) continue;
    if (c.config.gpu_count() > demand.gpus_remaining) continue;
    any_fits = true;
    AuxiliaryFit fit;
    fit.candidate = c;
    fit.candidate.config.fanout = demand.partner_dp / c.config.dp;
    fit.iteration_time = SectionIterationTime(
        c.step, c.config, SamplesPerRank(demand.activating_samples, c.config.dp));
    fastest = std::min(fastest, fit.iteration_time);
    if (fit.iteration_time > demand.critical_time_per_iter) continue;
    fit.slack = demand.critical_time_per_iter - fit.iteration_time;
    if (!best) {
      best = fit;
      continue;
    }
    const auto key = [](const AuxiliaryFit& f) {
      return std::make_tuple(f.candidate.config.gpu_count(), -f.slack,
                             f.candidate.config);
    };
    if (key(fit) < key(*best)) best = fit;
  }
  if (!any_fits) {
    throw Error(ErrorCode::kNoFeasibleConfig,
                "section '" + aux.id.str() + "': no config with dp dividing " +
                    std::to_string(demand.partner_dp) + " fits in " +
                    std::to_string(demand.gpus_remaining) + " remaining GPUs");
  }
  if (!best) {
    throw Error(ErrorCode::kCannotAvoidStall,
                "section '" + aux.id.str() + "': fastest fitting config needs " +
                    std::to_string(fastest) + " per iteration against the "
                    "critical section's " +
                    std::to_string(demand.critical_time_per_iter) + " with " +
                    std::to_string(demand.gpus_remaining) + " GPUs remaining");
  }
  return *best;
}

}  // namespace

AuxiliaryFit FitAuxiliary(const SectionSpec& aux, const CostParams& params,
                          const AuxiliaryDemand& demand,
                          const SearchOptions& options) {
  if (demand.gpus_remaining < 1) {
    throw Error(ErrorCode::kNoFeasibleConfig,
                "section '" + aux.id.str() + "': no GPUs remaining");
  }
  if (demand.partner_dp < 1) {
    throw Error(ErrorCode::kInvalidArgument, "partner_dp must be >= 1");
  }
  ClusterSpec cluster{demand.gpus_remaining, demand.mem_per_gpu};
  auto candidates =
      EnumerateConfigs(aux, cluster, params, demand.tokens_per_sample, options);
  return FitFromCandidates(aux, candidates, demand);
}

SectionPlan MakeSectionPlan(const SectionSpec& section, const SectionConfig& config,
                            const CostParams& params, const BatchProfile& profile,
                            const SectionGraph& graph) {
  const auto tokens = profile.Tokens(graph, section.id);
  SectionPlan sp;
  sp.config = config;
  sp.gpus = config.gpu_count();
  sp.step = EstimateStepTime(section, config, params, tokens);
  sp.memory = EstimateMemory(section, config, params, tokens);
  sp.iteration_time = SectionIterationTime(
      sp.step, config,
      SamplesPerRank(profile.Activating(graph, section.id), config.dp));
  return sp;
}

std::vector<PlanViolation> PlanViolations(const SectionGraph& graph,
                                          const ClusterSpec& cluster,
                                          const AllocationPlan& plan) {
  std::vector<PlanViolation> config_issues, fanout_issues, resource_issues;
  std::int64_t total = 0;
  for (const auto& section : graph.sections()) {
    auto it = plan.per_section.find(section.id);
    if (it == plan.per_section.end()) {
      config_issues.push_back({ErrorCode::kInvalidConfig,
                               "section '" + section.id.str() + "' has no config"});
      continue;
    }
    const auto& sp = it->second;
    try {
      ValidateConfig(section, sp.config);
    } catch (const Error& e) {
      config_issues.push_back({e.code(), e.detail()});
    }
    if (section.role == Role::kCritical && sp.config.fanout != 1) {
      config_issues.push_back(
          {ErrorCode::kInvalidConfig,
           "critical section '" + section.id.str() + "' must have fanout 1"});
    }
    if (sp.gpus != sp.config.gpu_count()) {
      config_issues.push_back(
          {ErrorCode::kInvalidConfig,
           "section '" + section.id.str() + "': gpus=" + std::to_string(sp.gpus) +
               " but dp*tp*pp*cp=" + std::to_string(sp.config.gpu_count())});
    }
    if (sp.memory.total > cluster.mem_per_gpu) {
      resource_issues.push_back(
          {ErrorCode::kNoFeasibleConfig,
           "memory constraint: section '" + section.id.str() + "' needs " +
               std::to_string(sp.memory.total) + " bytes/GPU > " +
               std::to_string(cluster.mem_per_gpu)});
    }
    total += sp.gpus;
  }
  for (const auto& e : graph.edges()) {
    const SectionId fr = graph.FanoutSide(e);
    const SectionId other = graph.OtherSide(e);
    auto a = plan.per_section.find(fr);
    auto b = plan.per_section.find(other);
    if (a == plan.per_section.end() || b == plan.per_section.end()) continue;
    const auto& ca = a->second.config;
    const auto& cb = b->second.config;
    if (std::int64_t{ca.dp} * ca.fanout != cb.dp) {
      fanout_issues.push_back(
          {ErrorCode::kFanoutViolation,
           "edge " + e.from.str() + " -> " + e.to.str() + ": DP(" + fr.str() +
               ")=" + std::to_string(ca.dp) + " x fanout=" +
               std::to_string(ca.fanout) + " != DP(" + other.str() +
               ")=" + std::to_string(cb.dp)});
    }
  }
  if (total > cluster.total_gpus) {
    resource_issues.push_back(
        {ErrorCode::kNoFeasibleConfig,
         "resource constraint: plan uses " + std::to_string(total) +
             " GPUs > " + std::to_string(cluster.total_gpus)});
  }
  std::vector<PlanViolation> out = std::move(config_issues);
  out.insert(out.end(), fanout_issues.begin(), fanout_issues.end());
  out.insert(out.end(), resource_issues.begin(), resource_issues.end());
  return out;
}

void CheckPlan(const SectionGraph& graph, const ClusterSpec& cluster,
               const AllocationPlan& plan) {
  auto issues = PlanViolations(graph, cluster, plan);
  if (!issues.empty()) throw Error(issues.front().code, issues.front().message);
}

std::vector<SectionId> AuxiliaryFitOrder(const SectionGraph& graph) {
  return graph.OutwardOrder();
}

AllocationPlan Solve(const OptimizerInput& input, const PlanEvaluator& evaluator) {
  if (input.graph == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "optimizer input has no graph");
  }
  const SectionGraph& graph = *input.graph;
  const BatchProfile& profile = input.profile;
  for (const auto& s : graph.sections()) {
    if (!input.params.count(s.id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "section '" + s.id.str() + "' has no cost parameters");
    }
    ValidateCostParams(input.params.at(s.id));
  }
  if (profile.batch_size < 1) {
    throw Error(ErrorCode::kEmptyBatch, "batch profile has no samples");
  }

  const auto& critical = graph.Critical();
  const auto& crit_params = input.params.at(critical.id);
  const auto crit_tokens = profile.Tokens(graph, critical.id);

  std::vector<CriticalChoice> critical_candidates;
  if (auto pin = input.pinned.find(critical.id); pin != input.pinned.end()) {
    SectionPlan sp = MakeSectionPlan(critical, pin->second, crit_params, profile, graph);
    critical_candidates.push_back({{sp.config, sp.step, sp.memory}, sp.iteration_time});
  } else {
    critical_candidates = RankCriticalConfigs(critical, input.cluster, crit_params,
                                              profile, input.options, crit_tokens);
  }

  const auto order = AuxiliaryFitOrder(graph);
  // Auxiliary candidates by dp, enumerated once against the whole cluster.
  std::map<SectionId, std::vector<CandidateConfig>> aux_candidates;
  std::optional<Error> enumeration_error;
  for (const auto& id : order) {
    if (input.pinned.count(id)) continue;
    try {
      aux_candidates[id] = EnumerateConfigs(graph.Section(id), input.cluster,
                                            input.params.at(id),
                                            profile.Tokens(graph, id), input.options);
    } catch (const Error& e) {
      if (!enumeration_error) enumeration_error = e;
    }
  }
  if (enumeration_error) throw *enumeration_error;

  std::optional<Error> first_error;
  for (const auto& choice : critical_candidates) {
    AllocationPlan plan;
    SectionPlan crit_plan;
    crit_plan.config = choice.candidate.config;
    crit_plan.gpus = crit_plan.config.gpu_count();
    crit_plan.memory = choice.candidate.memory;
    crit_plan.step = choice.candidate.step;
    crit_plan.iteration_time = choice.iteration_time;
    plan.per_section[critical.id] = crit_plan;
    std::int64_t remaining = input.cluster.total_gpus - crit_plan.gpus;

    try {
      for (const auto& id : order) {
        const auto& section = graph.Section(id);
        const auto partner = graph.Partner(id);
        const int partner_dp = plan.per_section.at(*partner).config.dp;
        SectionPlan sp;
        if (auto pin = input.pinned.find(id); pin != input.pinned.end()) {
          sp = MakeSectionPlan(section, pin->second, input.params.at(id), profile, graph);
        } else {
          AuxiliaryDemand demand;
          demand.critical_time_per_iter = crit_plan.iteration_time;
          demand.activating_samples = profile.Activating(graph, id);
          demand.tokens_per_sample = profile.Tokens(graph, id);
          demand.gpus_remaining = remaining;
          demand.mem_per_gpu = input.cluster.mem_per_gpu;
          demand.partner_dp = partner_dp;
          if (remaining < 1) {
            throw Error(ErrorCode::kNoFeasibleConfig,
                        "section '" + id.str() + "': no GPUs remaining");
          }
          auto fit = FitFromCandidates(section, aux_candidates.at(id), demand);
          sp.config = fit.candidate.config;
          sp.gpus = sp.config.gpu_count();
          sp.memory = fit.candidate.memory;
          sp.step = fit.candidate.step;
          sp.iteration_time = fit.iteration_time;
        }
        remaining -= sp.gpus;
        plan.per_section[id] = sp;
      }
      CheckPlan(graph, input.cluster, plan);
    } catch (const Error& e) {
      if (!input.pinned.empty() &&
          (e.code() == ErrorCode::kFanoutViolation ||
           e.code() == ErrorCode::kInvalidConfig)) {
        throw;  // pinned configs are wrong regardless of the critical choice
      }
      if (!first_error) first_error = e;
      continue;
    }

    for (const auto& [id, sp] : plan.per_section) plan.total_gpus_used += sp.gpus;
    plan.feasible = true;
    if (evaluator) {
      plan.predicted_iteration_time = evaluator(plan);
    } else {
      for (const auto& [id, sp] : plan.per_section) {
        plan.predicted_iteration_time =
            std::max(plan.predicted_iteration_time, sp.iteration_time);
      }
    }
    return plan;
  }
  throw *first_error;
}

}  // namespace maestro
