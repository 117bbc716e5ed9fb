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

#ifndef MAESTRO_WORKLOAD_HPP_
#define MAESTRO_WORKLOAD_HPP_

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace maestro {

// Name of a section. Sections are declared by the user; the graph enforces
// uniqueness.
class SectionId {
 public:
  SectionId() = default;
  explicit SectionId(std::string name) : name_(std::move(name)) {}

  const std::string& str() const noexcept { return name_; }
  bool empty() const noexcept { return name_.empty(); }

  friend auto operator<=>(const SectionId&, const SectionId&) = default;

 private:
  std::string name_;
};

enum class Role { kCritical, kAuxiliary };
enum class ExecMode { kForwardOnly, kForwardBackward };

// Where a section sits relative to the critical section in the data flow.
enum class Placement { kUpstream, kCritical, kDownstream };

std::string_view RoleName(Role role);
std::string_view ExecModeName(ExecMode mode);

struct StructuralParams {
  std::int64_t hidden_dim = 1;
  std::int64_t num_heads = 1;
  std::int64_t num_layers = 1;
  std::int64_t vocab_size = 1;
  std::int64_t max_seq_len = 1;  // tokens
  std::int64_t param_count = 0;

  friend bool operator==(const StructuralParams&, const StructuralParams&) = default;
};

struct SectionSpec {
  SectionId id;
  Role role = Role::kAuxiliary;
  ExecMode exec_mode = ExecMode::kForwardBackward;
  StructuralParams structural;
  std::vector<std::string> submodules;
};

// Per-section training configuration. Field order is the tie-breaking order
// used everywhere (lexicographic on dp, tp, pp, cp, mbs, fanout).
struct SectionConfig {
  int dp = 1;
  int tp = 1;
  int pp = 1;
  int cp = 1;
  int mbs = 1;
  int fanout = 1;

  std::int64_t gpu_count() const {
    return std::int64_t{dp} * tp * pp * cp;
  }

  friend auto operator<=>(const SectionConfig&, const SectionConfig&) = default;
};

// Throws InvalidConfig unless every degree is >= 1 and tp/cp/pp divide the
// matching structural parameter.
void ValidateConfig(const SectionSpec& section, const SectionConfig& config);

struct Edge {
  SectionId from;
  SectionId to;
  double payload_bytes_per_sample = 0.0;
};

struct ClusterSpec {
  std::int64_t total_gpus = 1;
  double mem_per_gpu = 0.0;  // bytes
};

// Validated, immutable section DAG with exactly one critical section.
class SectionGraph {
 public:
  // Throws DuplicateSection, UnknownSection, CycleDetected, NoCriticalSection,
  // MultipleCriticalSections or InvalidGraph.
  static SectionGraph Build(std::vector<SectionSpec> sections,
                            std::vector<Edge> edges);

  const std::vector<SectionSpec>& sections() const { return sections_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool Contains(const SectionId& id) const;
  const SectionSpec& Section(const SectionId& id) const;
  const SectionSpec& Critical() const { return sections_[critical_index_]; }

  // Kahn order; ties resolved by declaration order.
  const std::vector<SectionId>& TopologicalOrder() const { return topo_; }

  // Non-critical sections ordered by distance from the critical section,
  // ties by topological position.
  std::vector<SectionId> OutwardOrder() const;

  Placement PlacementOf(const SectionId& id) const;
  // Length of the shortest undirected path to the critical section.
  int DistanceToCritical(const SectionId& id) const;

  std::vector<SectionId> Predecessors(const SectionId& id) const;
  std::vector<SectionId> Successors(const SectionId& id) const;

  // Neighbor one step closer to the critical section. For an upstream section
  // this is a successor, for a downstream one a predecessor. The critical
  // section has no partner.
  std::optional<SectionId> Partner(const SectionId& id) const;

  // The endpoint of an edge that carries the fanout.
  SectionId FanoutSide(const Edge& edge) const;
  SectionId OtherSide(const Edge& edge) const;

  // Merged mutually-exclusive sections and the original ids they absorbed.
  const std::map<SectionId, std::vector<SectionId>>& exclusive_groups() const {
    return exclusive_groups_;
  }

  double TotalPayload() const;

 private:
  friend SectionGraph ColocateOutputLayer(const SectionGraph&,
                                          const SectionId&, const SectionId&,
                                          std::int64_t, std::int64_t);
  friend SectionGraph ColocateExclusiveEncoders(const SectionGraph&,
                                                const SectionId&,
                                                const SectionId&,
                                                std::optional<SectionId>);
  SectionGraph() = default;
  std::size_t IndexOf(const SectionId& id) const;

  std::vector<SectionSpec> sections_;
  std::vector<Edge> edges_;
  std::size_t critical_index_ = 0;
  std::vector<SectionId> topo_;
  std::vector<Placement> placement_;
  std::vector<int> distance_;
  std::map<SectionId, std::vector<SectionId>> exclusive_groups_;
};

// Moves the teacher's output layer into the student section; the edge now
// carries hidden states instead of logits.
SectionGraph ColocateOutputLayer(const SectionGraph& graph,
                                 const SectionId& teacher,
                                 const SectionId& student,
                                 std::int64_t hidden_dim,
                                 std::int64_t vocab_size);

// Merges two auxiliary sections that no sample activates together. The merged
// id defaults to "a+b".
SectionGraph ColocateExclusiveEncoders(
    const SectionGraph& graph, const SectionId& a, const SectionId& b,
    std::optional<SectionId> merged = std::nullopt);

// The six phases of one sample, in chain order. "bc"/"ac" are read in each
// pass's own temporal order: kFwdBc and kBwdAc run on upstream sections,
// kFwdAc and kBwdBc on downstream ones.
enum class Phase : int {
  kFwdBc = 0,
  kFwdC = 1,
  kFwdAc = 2,
  kBwdBc = 3,
  kBwdC = 4,
  kBwdAc = 5,
};

inline constexpr std::array<Phase, 6> kPhaseChain = {
    Phase::kFwdBc, Phase::kFwdC, Phase::kFwdAc,
    Phase::kBwdBc, Phase::kBwdC, Phase::kBwdAc};

std::string_view PhaseName(Phase phase);
bool IsForward(Phase phase);
// Placement of the sections that execute the phase.
Placement PhaseOwner(Phase phase);

struct StageTimes {
  double forward = 0.0;
  double backward = 0.0;

  friend bool operator==(const StageTimes&, const StageTimes&) = default;
};

struct SampleTiming {
  std::uint64_t sample_id = 0;
  std::array<double, 6> times{};  // indexed by Phase
  std::set<SectionId> activated;
  // Optional per-section overrides used by the DAG simulator; sections not
  // listed take the role slot of `times`.
  std::map<SectionId, StageTimes> section_times;

  double at(Phase phase) const { return times[static_cast<int>(phase)]; }
  double& at(Phase phase) { return times[static_cast<int>(phase)]; }
  double CriticalLoad() const { return at(Phase::kFwdC) + at(Phase::kBwdC); }
};

// Throws NegativeTime for negative or non-finite times and InvalidArgument
// when t_f_c is not positive.
void ValidateSample(const SampleTiming& sample);

// Forward/backward time of `section` for `sample`. Zero for sections the
// sample does not activate.
StageTimes SectionStageTimes(const SectionGraph& graph,
                             const SampleTiming& sample,
                             const SectionId& section);

// Maps activation sets onto the graph: names absorbed by a merged section are
// rewritten to the merged id and the critical section is always added.
// Throws BothActivated, UnknownSection, NegativeTime.
std::vector<SampleTiming> ResolveBatch(const SectionGraph& graph,
                                       std::vector<SampleTiming> batch);

}  // namespace maestro

#endif  // MAESTRO_WORKLOAD_HPP_
