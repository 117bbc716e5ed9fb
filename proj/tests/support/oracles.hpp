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

// Reference implementations used only by tests. They are written from the
// definitions, deliberately without sharing code with the library.
#ifndef MAESTRO_TESTS_SUPPORT_ORACLES_HPP_
#define MAESTRO_TESTS_SUPPORT_ORACLES_HPP_

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "maestro/reshard.hpp"
#include "maestro/scheduler.hpp"
#include "maestro/workload.hpp"

namespace maestro::oracle {

// Makespan of one rank of the three-resource model by fixed-point relaxation
// over (resource order, phase chain) predecessors.
inline double ThreeResourceMakespan(const std::vector<SampleTiming>& order,
                                    ExecPolicy policy) {
  struct Stage {
    int resource_prev = -1;
    int chain_prev = -1;
    double duration = 0.0;
  };
  std::vector<Stage> stages;
  const int n = static_cast<int>(order.size());
  // index[k][phase] of the stage, -1 when the phase has zero length
  std::vector<std::array<int, 6>> index(n);
  for (int k = 0; k < n; ++k) {
    int prev = -1;
    for (int p = 0; p < 6; ++p) {
      index[k][p] = -1;
      if (order[k].times[p] > 0.0) {
        index[k][p] = static_cast<int>(stages.size());
        stages.push_back({-1, prev, order[k].times[p]});
        prev = index[k][p];
      }
    }
  }
  auto sequence = [&](std::vector<int>& seq, int fwd, int bwd, bool interleave) {
    if (interleave) {
      for (int k = 0; k < n; ++k) {
        if (index[k][fwd] >= 0) seq.push_back(index[k][fwd]);
        if (index[k][bwd] >= 0) seq.push_back(index[k][bwd]);
      }
    } else {
      for (int k = 0; k < n; ++k) {
        if (index[k][fwd] >= 0) seq.push_back(index[k][fwd]);
      }
      for (int k = 0; k < n; ++k) {
        if (index[k][bwd] >= 0) seq.push_back(index[k][bwd]);
      }
    }
  };
  const bool interleave = policy == ExecPolicy::kInterleaved;
  std::vector<std::vector<int>> resources(3);
  sequence(resources[0], 0, 5, false);
  sequence(resources[1], 1, 4, interleave);
  sequence(resources[2], 2, 3, interleave);
  for (const auto& seq : resources) {
    for (std::size_t i = 1; i < seq.size(); ++i) stages[seq[i]].resource_prev = seq[i - 1];
  }
  std::vector<double> finish(stages.size(), 0.0);
  for (std::size_t pass = 0; pass <= stages.size() + 1; ++pass) {
    bool changed = false;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      double start = 0.0;
      if (stages[s].resource_prev >= 0) start = std::max(start, finish[stages[s].resource_prev]);
      if (stages[s].chain_prev >= 0) start = std::max(start, finish[stages[s].chain_prev]);
      const double f = start + stages[s].duration;
      if (f != finish[s]) {
        finish[s] = f;
        changed = true;
      }
    }
    if (!changed) break;
  }
  double makespan = 0.0;
  for (double f : finish) makespan = std::max(makespan, f);
  return makespan;
}

// Minimum makespan over every permutation.
inline double BruteForceOptimum(std::vector<SampleTiming> samples, ExecPolicy policy) {
  std::vector<int> perm(samples.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  std::vector<SampleTiming> order(samples.size());
  do {
    for (std::size_t i = 0; i < perm.size(); ++i) order[i] = samples[perm[i]];
    best = std::min(best, ThreeResourceMakespan(order, policy));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Random VLM-style rank: critical times in (0, 3], upstream times in [0, 3]
// for "image" samples, zero for text.
inline std::vector<SampleTiming> RandomVlmRank(std::mt19937_64& rng, int n,
                                               double image_share = 0.3) {
  std::uniform_real_distribution<double> t(0.0, 3.0);
  std::bernoulli_distribution image(image_share);
  std::vector<SampleTiming> out;
  for (int k = 0; k < n; ++k) {
    SampleTiming s;
    s.sample_id = static_cast<std::uint64_t>(k);
    s.at(Phase::kFwdC) = 3.0 - t(rng);  // (0, 3]
    s.at(Phase::kBwdC) = t(rng);
    if (image(rng)) {
      s.at(Phase::kFwdBc) = t(rng);
      s.at(Phase::kBwdAc) = t(rng);
    }
    out.push_back(s);
  }
  return out;
}

// Random full 6-tuples, each auxiliary phase present with probability 1/2.
inline std::vector<SampleTiming> RandomSixTupleRank(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> t(0.0, 3.0);
  std::bernoulli_distribution on(0.5);
  std::vector<SampleTiming> out;
  for (int k = 0; k < n; ++k) {
    SampleTiming s;
    s.sample_id = static_cast<std::uint64_t>(k);
    s.at(Phase::kFwdC) = 3.0 - t(rng);
    s.at(Phase::kBwdC) = t(rng);
    if (on(rng)) {
      s.at(Phase::kFwdBc) = t(rng);
      s.at(Phase::kBwdAc) = t(rng);
    }
    if (on(rng)) {
      s.at(Phase::kFwdAc) = t(rng);
      s.at(Phase::kBwdBc) = t(rng);
    }
    out.push_back(s);
  }
  return out;
}

// Source rank that owns a global element index under `layout`.
inline int OwnerOf(const ShardLayout& layout, const std::vector<std::int64_t>& index) {
  const std::int64_t tp_block = layout.shape[layout.tp_axis] / layout.tp;
  const std::int64_t cp_block = layout.shape[layout.cp_axis] / layout.cp;
  const int tp_rank = static_cast<int>(index[layout.tp_axis] / tp_block);
  const int cp_rank = static_cast<int>(index[layout.cp_axis] / cp_block);
  return cp_rank * layout.tp + tp_rank;
}

// Checks that every destination element is covered exactly once by a
// transfer whose sender owns it in `src` and whose receiver owns it in `dst`.
inline bool PlanCoversExactly(const ReshardPlan& plan) {
  const auto& shape = plan.dst.shape;
  std::int64_t total = 1;
  for (auto e : shape) total *= e;
  std::vector<int> hits(static_cast<std::size_t>(total), 0);
  for (const auto& t : plan.transfers) {
    // Recover global coordinates of the receiver slice.
    const std::int64_t tpb = plan.dst.shape[plan.dst.tp_axis] / plan.dst.tp;
    const std::int64_t cpb = plan.dst.shape[plan.dst.cp_axis] / plan.dst.cp;
    std::vector<std::int64_t> origin(shape.size(), 0);
    origin[plan.dst.tp_axis] += tpb * (t.receiver % plan.dst.tp);
    origin[plan.dst.cp_axis] += cpb * (t.receiver / plan.dst.tp);
    std::vector<std::int64_t> idx(shape.size());
    std::int64_t volume = 1;
    for (const auto& r : t.receiver_slice) volume *= (r.end - r.begin);
    if (volume <= 0) return false;
    for (std::int64_t flat = 0; flat < volume; ++flat) {
      std::int64_t rem = flat;
      for (std::size_t d = shape.size(); d-- > 0;) {
        const std::int64_t extent = t.receiver_slice[d].end - t.receiver_slice[d].begin;
        idx[d] = origin[d] + t.receiver_slice[d].begin + rem % extent;
        rem /= extent;
      }
      if (OwnerOf(plan.src, idx) != t.sender || OwnerOf(plan.dst, idx) != t.receiver) {
        return false;
      }
      std::int64_t g = 0;
      for (std::size_t d = 0; d < shape.size(); ++d) g = g * shape[d] + idx[d];
      ++hits[static_cast<std::size_t>(g)];
    }
  }
  return std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; });
}

}  // namespace maestro::oracle

#endif  // MAESTRO_TESTS_SUPPORT_ORACLES_HPP_
