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

#include "maestro/scheduler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "maestro/error.hpp"

namespace maestro {

std::string_view ExecPolicyName(ExecPolicy policy) {
  return policy == ExecPolicy::kInterleaved ? "interleaved" : "all-fwd-then-bwd";
}

ExecPolicy ParseExecPolicy(std::string_view name) {
  if (name == "interleaved") return ExecPolicy::kInterleaved;
  if (name == "all-fwd-then-bwd") return ExecPolicy::kAllForwardThenBackward;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown exec policy '" + std::string(name) +
                  "' (expected interleaved or all-fwd-then-bwd)");
}

namespace {

constexpr int kUpstream = 0;
constexpr int kCritical = 1;
constexpr int kDownstream = 2;

struct StageRef {
  int sample;
  int phase;
};

void AppendPair(std::vector<StageRef>& seq, std::span<const SampleTiming* const> order,
                Phase fwd, Phase bwd, bool interleaved) {
  const int n = static_cast<int>(order.size());
  auto push = [&](int k, Phase p) {
    if (order[k]->at(p) > 0.0) seq.push_back({k, static_cast<int>(p)});
  };
  if (interleaved) {
    for (int k = 0; k < n; ++k) {
      push(k, fwd);
      push(k, bwd);
    }
  } else {
    for (int k = 0; k < n; ++k) push(k, fwd);
    for (int k = 0; k < n; ++k) push(k, bwd);
  }
}

int NextPositivePhase(const SampleTiming& s, int from) {
  for (int p = from; p < 6; ++p) {
    if (s.times[p] > 0.0) return p;
  }
  return 6;
}

MakespanBreakdown Evaluate(std::span<const SampleTiming* const> order,
                           ExecPolicy policy) {
  if (order.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "makespan of an empty order");
  }
  for (const SampleTiming* s : order) {
    for (double t : s->times) {
      if (!std::isfinite(t) || t < 0.0) {
        throw Error(ErrorCode::kNegativeTime,
                    "sample " + std::to_string(s->sample_id) +
                        " has a negative or non-finite phase time");
      }
    }
  }
  const bool interleaved = policy == ExecPolicy::kInterleaved;
  std::array<std::vector<StageRef>, 3> seq;
  AppendPair(seq[kUpstream], order, Phase::kFwdBc, Phase::kBwdAc, false);
  AppendPair(seq[kCritical], order, Phase::kFwdC, Phase::kBwdC, interleaved);
  AppendPair(seq[kDownstream], order, Phase::kFwdAc, Phase::kBwdBc, interleaved);

  const int n = static_cast<int>(order.size());
  std::vector<int> next_phase(n);
  std::vector<double> ready(n, 0.0);
  for (int k = 0; k < n; ++k) next_phase[k] = NextPositivePhase(*order[k], 0);

  std::array<std::size_t, 3> cursor{};
  std::array<double, 3> free{};
  MakespanBreakdown out;
  bool critical_started = false;
  double critical_last_end = 0.0;
  std::size_t remaining = seq[0].size() + seq[1].size() + seq[2].size();

  while (remaining > 0) {
    bool progressed = false;
    for (int r = 0; r < 3; ++r) {
      while (cursor[r] < seq[r].size()) {
        const StageRef st = seq[r][cursor[r]];
        if (next_phase[st.sample] != st.phase) break;
        const double duration = order[st.sample]->times[st.phase];
        const double start = std::max(free[r], ready[st.sample]);
        const double end = start + duration;
        free[r] = end;
        ready[st.sample] = end;
        next_phase[st.sample] = NextPositivePhase(*order[st.sample], st.phase + 1);
        if (r == kCritical) {
          if (!critical_started) {
            critical_started = true;
            out.critical_first_start = start;
          }
          out.critical_busy += duration;
          critical_last_end = end;
        }
        out.makespan = std::max(out.makespan, end);
        ++cursor[r];
        --remaining;
        progressed = true;
      }
    }
    if (!progressed) {
      throw Error(ErrorCode::kDependencyDeadlock,
                  "stage sequences deadlocked in makespan evaluation");
    }
  }
  out.critical_idle =
      std::max(0.0, (critical_last_end - out.critical_first_start) - out.critical_busy);
  return out;
}

std::vector<const SampleTiming*> Pointers(std::span<const SampleTiming> order) {
  std::vector<const SampleTiming*> out;
  out.reserve(order.size() + 1);
  for (const auto& s : order) out.push_back(&s);
  return out;
}

}  // namespace

MakespanBreakdown EvaluateOrder(std::span<const SampleTiming> order,
                                ExecPolicy policy) {
  auto ptrs = Pointers(order);
  return Evaluate(ptrs, policy);
}

double CalculateMakespan(std::span<const SampleTiming> order, ExecPolicy policy) {
  return EvaluateOrder(order, policy).makespan;
}

double CalculateMakespan(std::span<const SampleTiming> order,
                         std::size_t position, const SampleTiming& sample,
                         ExecPolicy policy) {
  if (position > order.size()) {
    throw Error(ErrorCode::kInvalidArgument, "insertion position out of range");
  }
  auto ptrs = Pointers(order);
  ptrs.insert(ptrs.begin() + static_cast<std::ptrdiff_t>(position), &sample);
  return Evaluate(ptrs, policy).makespan;
}

std::vector<SampleTiming> SortInitial(std::vector<SampleTiming> samples) {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const SampleTiming& a, const SampleTiming& b) {
                     return a.at(Phase::kFwdBc) < b.at(Phase::kFwdBc);
                   });
  return samples;
}

std::vector<SampleTiming> ScheduleRank(std::vector<SampleTiming> samples,
                                       ExecPolicy policy,
                                       std::size_t* evaluations) {
  if (samples.size() <= 1) return samples;
  const std::vector<SampleTiming> input = samples;
  const auto sorted = SortInitial(std::move(samples));

  auto ties = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
  };

  double greedy = 0.0;
  std::vector<const SampleTiming*> result{&sorted.front()};
  result.reserve(sorted.size());
  std::vector<const SampleTiming*> trial;
  trial.reserve(sorted.size());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const SampleTiming* candidate = &sorted[i];
    std::size_t best_position = 0;
    double best_makespan = std::numeric_limits<double>::infinity();
    for (std::size_t position = 0; position <= result.size(); ++position) {
      trial.assign(result.begin(), result.end());
      trial.insert(trial.begin() + static_cast<std::ptrdiff_t>(position), candidate);
      const double makespan = Evaluate(trial, policy).makespan;
      if (evaluations) ++*evaluations;
      // Appending wins ties so equal-cost samples keep their sorted order.
      const bool append = position == result.size();
      if (position == 0 || (makespan < best_makespan && !ties(makespan, best_makespan))) {
        best_makespan = makespan;
        best_position = position;
      } else if (append && ties(makespan, best_makespan)) {
        best_makespan = makespan;
        best_position = position;
      }
    }
    result.insert(result.begin() + static_cast<std::ptrdiff_t>(best_position),
                  candidate);
    greedy = best_makespan;
  }

  // The one spare evaluation: never return something worse than the input.
  const double kept = Evaluate(Pointers(input), policy).makespan;
  if (evaluations) ++*evaluations;
  if (kept < greedy) return input;

  std::vector<SampleTiming> out;
  out.reserve(result.size());
  for (const SampleTiming* s : result) out.push_back(*s);
  return out;
}

std::vector<std::vector<SampleTiming>> PartitionBatch(
    std::span<const SampleTiming> batch, int dp) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "cannot partition an empty batch");
  if (dp < 1) throw Error(ErrorCode::kInvalidArgument, "dp must be >= 1");

  const std::size_t n = batch.size();
  const std::size_t ranks = static_cast<std::size_t>(dp);
  std::vector<std::size_t> capacity(ranks, n / ranks);
  for (std::size_t r = 0; r < n % ranks; ++r) ++capacity[r];

  auto aux_time = [](const SampleTiming& s) {
    return s.at(Phase::kFwdBc) + s.at(Phase::kFwdAc) + s.at(Phase::kBwdBc) +
           s.at(Phase::kBwdAc);
  };

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = batch[a];
    const auto& sb = batch[b];
    if (sa.CriticalLoad() != sb.CriticalLoad()) return sa.CriticalLoad() > sb.CriticalLoad();
    return aux_time(sa) > aux_time(sb);
  });

  std::vector<double> critical_load(ranks, 0.0);
  std::vector<std::map<SectionId, double>> section_load(ranks);
  std::vector<std::map<SectionId, int>> section_count(ranks);
  std::vector<std::vector<std::size_t>> assigned(ranks);

  for (std::size_t i : idx) {
    const auto& s = batch[i];
    const double at = aux_time(s);
    std::size_t best = ranks;
    std::tuple<double, double, int, std::size_t> best_key;
    for (std::size_t r = 0; r < ranks; ++r) {
      if (assigned[r].size() >= capacity[r]) continue;
      double load = 0.0;
      int count = 0;
      for (const auto& id : s.activated) {
        if (auto it = section_load[r].find(id); it != section_load[r].end()) load += it->second;
        if (auto it = section_count[r].find(id); it != section_count[r].end()) count += it->second;
      }
      auto key = std::make_tuple(critical_load[r], load, count, r);
      if (best == ranks || key < best_key) {
        best = r;
        best_key = key;
      }
    }
    critical_load[best] += s.CriticalLoad();
    for (const auto& id : s.activated) {
      section_load[best][id] += at;
      section_count[best][id] += 1;
    }
    assigned[best].push_back(i);
  }

  std::vector<std::vector<SampleTiming>> out(ranks);
  for (std::size_t r = 0; r < ranks; ++r) {
    std::sort(assigned[r].begin(), assigned[r].end());
    for (std::size_t i : assigned[r]) out[r].push_back(batch[i]);
  }
  return out;
}

std::vector<MergedEntry> MergeFanout(
    const std::vector<std::vector<std::uint64_t>>& lists, int fanout) {
  if (fanout < 1 || lists.size() != static_cast<std::size_t>(fanout)) {
    throw Error(ErrorCode::kFanoutMismatch,
                "expected " + std::to_string(fanout) + " downstream orders, got " +
                    std::to_string(lists.size()));
  }
  std::vector<MergedEntry> out;
  std::size_t longest = 0;
  for (const auto& l : lists) longest = std::max(longest, l.size());
  for (std::size_t i = 0; i < longest; ++i) {
    for (int r = 0; r < fanout; ++r) {
      if (i < lists[r].size()) out.push_back({lists[r][i], r});
    }
  }
  return out;
}

std::vector<std::uint64_t> MergeFanoutIds(
    const std::vector<std::vector<std::uint64_t>>& lists, int fanout) {
  std::vector<std::uint64_t> out;
  for (const auto& e : MergeFanout(lists, fanout)) out.push_back(e.sample_id);
  return out;
}

std::vector<int> RankMapping(const SectionGraph& graph,
                             const std::map<SectionId, SectionConfig>& configs,
                             const SectionId& section) {
  const auto& critical = graph.Critical().id;
  auto config_of = [&](const SectionId& id) -> const SectionConfig& {
    auto it = configs.find(id);
    if (it == configs.end()) {
      throw Error(ErrorCode::kInconsistentSchedule,
                  "no config for section '" + id.str() + "'");
    }
    return it->second;
  };
  const int dp_critical = config_of(critical).dp;
  std::vector<int> mapping(dp_critical);
  std::iota(mapping.begin(), mapping.end(), 0);
  if (section == critical) return mapping;

  // Walk from the section toward the critical one, then apply the divisions
  // outward.
  std::vector<SectionId> chain{section};
  while (auto partner = graph.Partner(chain.back())) chain.push_back(*partner);
  for (std::size_t i = chain.size() - 1; i-- > 0;) {
    const auto& cfg = config_of(chain[i]);
    const int partner_dp = config_of(chain[i + 1]).dp;
    if (std::int64_t{cfg.dp} * cfg.fanout != partner_dp) {
      throw Error(ErrorCode::kFanoutMismatch,
                  "section '" + chain[i].str() + "': dp " + std::to_string(cfg.dp) +
                      " x fanout " + std::to_string(cfg.fanout) + " != dp " +
                      std::to_string(partner_dp) + " of '" + chain[i + 1].str() + "'");
    }
    for (int& m : mapping) m /= cfg.fanout;
  }
  return mapping;
}

Schedule BuildSchedule(const SectionGraph& graph,
                       const std::map<SectionId, SectionConfig>& configs,
                       std::span<const SampleTiming> batch, ExecPolicy policy) {
  const auto& critical = graph.Critical().id;
  auto crit_it = configs.find(critical);
  if (crit_it == configs.end()) {
    throw Error(ErrorCode::kInconsistentSchedule,
                "no config for critical section '" + critical.str() + "'");
  }
  Schedule schedule;
  schedule.policy = policy;

  const auto parts = PartitionBatch(batch, crit_it->second.dp);
  std::map<std::uint64_t, const SampleTiming*> by_id;
  for (const auto& s : batch) by_id[s.sample_id] = &s;

  for (int r = 0; r < static_cast<int>(parts.size()); ++r) {
    auto& order = schedule.per_rank_orders[{critical, r}];
    if (parts[r].empty()) continue;
    const auto ordered = ScheduleRank(parts[r], policy);
    for (const auto& s : ordered) order.push_back(s.sample_id);
    const auto breakdown = EvaluateOrder(ordered, policy);
    schedule.critical_summary[r] = {breakdown.makespan, breakdown.critical_idle};
  }

  // Unfiltered merged orders, so samples that skip an intermediate section
  // still reach the sections beyond it.
  std::map<RankKey, std::vector<std::uint64_t>> full;
  for (int r = 0; r < static_cast<int>(parts.size()); ++r) {
    full[{critical, r}] = schedule.per_rank_orders[{critical, r}];
  }
  for (const auto& id : graph.OutwardOrder()) {
    const SectionId partner = *graph.Partner(id);
    auto cfg_it = configs.find(id);
    auto partner_it = configs.find(partner);
    if (cfg_it == configs.end() || partner_it == configs.end()) {
      throw Error(ErrorCode::kInconsistentSchedule,
                  "no config for section '" + id.str() + "'");
    }
    const auto& cfg = cfg_it->second;
    if (std::int64_t{cfg.dp} * cfg.fanout != partner_it->second.dp) {
      throw Error(ErrorCode::kFanoutMismatch,
                  "section '" + id.str() + "': dp " + std::to_string(cfg.dp) +
                      " x fanout " + std::to_string(cfg.fanout) + " != dp " +
                      std::to_string(partner_it->second.dp) + " of '" +
                      partner.str() + "'");
    }
    for (int a = 0; a < cfg.dp; ++a) {
      std::vector<std::vector<std::uint64_t>> lists(cfg.fanout);
      for (int j = 0; j < cfg.fanout; ++j) {
        lists[j] = full[{partner, a * cfg.fanout + j}];
      }
      auto merged = MergeFanoutIds(lists, cfg.fanout);
      auto& order = schedule.per_rank_orders[{id, a}];
      for (auto sid : merged) {
        if (by_id.at(sid)->activated.count(id)) order.push_back(sid);
      }
      full[{id, a}] = std::move(merged);
    }
  }
  return schedule;
}

}  // namespace maestro
