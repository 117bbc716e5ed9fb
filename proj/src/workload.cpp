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

#include "maestro/workload.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "maestro/error.hpp"

namespace maestro {

std::string_view RoleName(Role role) {
  return role == Role::kCritical ? "critical" : "auxiliary";
}

std::string_view ExecModeName(ExecMode mode) {
  return mode == ExecMode::kForwardOnly ? "forward_only" : "forward_backward";
}

std::string_view PhaseName(Phase phase) {
  switch (phase) {
    case Phase::kFwdBc: return "f_bc";
    case Phase::kFwdC: return "f_c";
    case Phase::kFwdAc: return "f_ac";
    case Phase::kBwdBc: return "b_bc";
    case Phase::kBwdC: return "b_c";
    case Phase::kBwdAc: return "b_ac";
  }
  return "?";
}

bool IsForward(Phase phase) { return static_cast<int>(phase) < 3; }

Placement PhaseOwner(Phase phase) {
  switch (phase) {
    case Phase::kFwdBc:
    case Phase::kBwdAc:
      return Placement::kUpstream;
    case Phase::kFwdC:
    case Phase::kBwdC:
      return Placement::kCritical;
    case Phase::kFwdAc:
    case Phase::kBwdBc:
      return Placement::kDownstream;
  }
  return Placement::kCritical;
}

void ValidateConfig(const SectionSpec& section, const SectionConfig& config) {
  const auto& s = section.structural;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig,
                "section '" + section.id.str() + "': " + what);
  };
  if (config.dp < 1 || config.tp < 1 || config.pp < 1 || config.cp < 1 ||
      config.mbs < 1 || config.fanout < 1) {
    fail("all parallelism degrees, mbs and fanout must be >= 1");
  }
  if (s.num_heads % config.tp != 0) {
    fail("tp=" + std::to_string(config.tp) + " does not divide num_heads=" +
         std::to_string(s.num_heads));
  }
  if (s.max_seq_len % config.cp != 0) {
    fail("cp=" + std::to_string(config.cp) + " does not divide max_seq_len=" +
         std::to_string(s.max_seq_len));
  }
  if (s.num_layers % config.pp != 0) {
    fail("pp=" + std::to_string(config.pp) + " does not divide num_layers=" +
         std::to_string(s.num_layers));
  }
}

namespace {

void CheckStructural(const SectionSpec& spec) {
  const auto& s = spec.structural;
  if (s.hidden_dim < 1 || s.num_heads < 1 || s.num_layers < 1 ||
      s.vocab_size < 1 || s.max_seq_len < 1 || s.param_count < 0) {
    throw Error(ErrorCode::kInvalidGraph,
                "section '" + spec.id.str() +
                    "': structural params must be positive (param_count >= 0)");
  }
}

}  // namespace

SectionGraph SectionGraph::Build(std::vector<SectionSpec> sections,
                                 std::vector<Edge> edges) {
  SectionGraph g;
  g.sections_ = std::move(sections);
  g.edges_ = std::move(edges);

  std::set<SectionId> seen;
  std::size_t critical_count = 0;
  for (std::size_t i = 0; i < g.sections_.size(); ++i) {
    const auto& s = g.sections_[i];
    if (s.id.empty()) {
      throw Error(ErrorCode::kInvalidGraph, "section with empty name");
    }
    if (!seen.insert(s.id).second) {
      throw Error(ErrorCode::kDuplicateSection, "'" + s.id.str() + "'");
    }
    CheckStructural(s);
    if (s.role == Role::kCritical) {
      ++critical_count;
      g.critical_index_ = i;
    }
  }
  if (critical_count == 0) {
    throw Error(ErrorCode::kNoCriticalSection,
                "exactly one section must have role 'critical'");
  }
  if (critical_count > 1) {
    throw Error(ErrorCode::kMultipleCriticalSections,
                std::to_string(critical_count) + " critical sections declared");
  }

  const std::size_t n = g.sections_.size();
  std::vector<std::vector<std::size_t>> out(n), in(n);
  for (const auto& e : g.edges_) {
    for (const auto* end : {&e.from, &e.to}) {
      if (!seen.count(*end)) {
        throw Error(ErrorCode::kUnknownSection,
                    "edge " + e.from.str() + " -> " + e.to.str() +
                        " references undefined section '" + end->str() + "'");
      }
    }
    if (e.from == e.to) {
      throw Error(ErrorCode::kCycleDetected, "self-loop on '" + e.from.str() + "'");
    }
    if (!(e.payload_bytes_per_sample >= 0.0) ||
        !std::isfinite(e.payload_bytes_per_sample)) {
      throw Error(ErrorCode::kInvalidGraph,
                  "edge " + e.from.str() + " -> " + e.to.str() +
                      ": payload_bytes_per_sample must be finite and >= 0");
    }
    out[g.IndexOf(e.from)].push_back(g.IndexOf(e.to));
    in[g.IndexOf(e.to)].push_back(g.IndexOf(e.from));
  }

  // Kahn's algorithm, always taking the lowest declaration index.
  std::vector<int> indegree(n);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = static_cast<int>(in[i].size());
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  while (!ready.empty()) {
    std::size_t i = *ready.begin();
    ready.erase(ready.begin());
    g.topo_.push_back(g.sections_[i].id);
    for (std::size_t j : out[i]) {
      if (--indegree[j] == 0) ready.insert(j);
    }
  }
  if (g.topo_.size() != n) {
    std::string stuck;
    for (std::size_t i = 0; i < n; ++i) {
      if (indegree[i] > 0) stuck += (stuck.empty() ? "" : ", ") + g.sections_[i].id.str();
    }
    throw Error(ErrorCode::kCycleDetected, "cycle through {" + stuck + "}");
  }

  auto reach = [&](const std::vector<std::vector<std::size_t>>& adj) {
    std::vector<bool> hit(n, false);
    std::deque<std::size_t> queue{g.critical_index_};
    hit[g.critical_index_] = true;
    while (!queue.empty()) {
      auto i = queue.front();
      queue.pop_front();
      for (auto j : adj[i]) {
        if (!hit[j]) {
          hit[j] = true;
          queue.push_back(j);
        }
      }
    }
    return hit;
  };
  const auto downstream = reach(out);
  const auto upstream = reach(in);

  g.placement_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == g.critical_index_) {
      g.placement_[i] = Placement::kCritical;
    } else if (upstream[i]) {
      g.placement_[i] = Placement::kUpstream;
    } else if (downstream[i]) {
      g.placement_[i] = Placement::kDownstream;
    } else {
      throw Error(ErrorCode::kInvalidGraph,
                  "auxiliary section '" + g.sections_[i].id.str() +
                      "' is not on any path through the critical section");
    }
  }

  // Undirected BFS distance to the critical section.
  g.distance_.assign(n, -1);
  g.distance_[g.critical_index_] = 0;
  std::deque<std::size_t> queue{g.critical_index_};
  while (!queue.empty()) {
    auto i = queue.front();
    queue.pop_front();
    for (const auto* adj : {&out, &in}) {
      for (auto j : (*adj)[i]) {
        if (g.distance_[j] < 0) {
          g.distance_[j] = g.distance_[i] + 1;
          queue.push_back(j);
        }
      }
    }
  }
  return g;
}

std::size_t SectionGraph::IndexOf(const SectionId& id) const {
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    if (sections_[i].id == id) return i;
  }
  throw Error(ErrorCode::kUnknownSection, "'" + id.str() + "'");
}

bool SectionGraph::Contains(const SectionId& id) const {
  return std::any_of(sections_.begin(), sections_.end(),
                     [&](const SectionSpec& s) { return s.id == id; });
}

const SectionSpec& SectionGraph::Section(const SectionId& id) const {
  return sections_[IndexOf(id)];
}

Placement SectionGraph::PlacementOf(const SectionId& id) const {
  return placement_[IndexOf(id)];
}

std::vector<SectionId> SectionGraph::OutwardOrder() const {
  std::vector<SectionId> order;
  for (const auto& id : topo_) {
    if (id != Critical().id) order.push_back(id);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const SectionId& a, const SectionId& b) {
                     return DistanceToCritical(a) < DistanceToCritical(b);
                   });
  return order;
}

int SectionGraph::DistanceToCritical(const SectionId& id) const {
  return distance_[IndexOf(id)];
}

std::vector<SectionId> SectionGraph::Predecessors(const SectionId& id) const {
  std::set<SectionId> out;
  for (const auto& e : edges_) {
    if (e.to == id) out.insert(e.from);
  }
  std::vector<SectionId> ordered;
  for (const auto& t : topo_) {
    if (out.count(t)) ordered.push_back(t);
  }
  return ordered;
}

std::vector<SectionId> SectionGraph::Successors(const SectionId& id) const {
  std::set<SectionId> out;
  for (const auto& e : edges_) {
    if (e.from == id) out.insert(e.to);
  }
  std::vector<SectionId> ordered;
  for (const auto& t : topo_) {
    if (out.count(t)) ordered.push_back(t);
  }
  return ordered;
}

std::optional<SectionId> SectionGraph::Partner(const SectionId& id) const {
  switch (PlacementOf(id)) {
    case Placement::kCritical:
      return std::nullopt;
    case Placement::kUpstream: {
      // Successor closest to the critical section, then topological order.
      std::optional<SectionId> best;
      for (const auto& s : Successors(id)) {
        if (PlacementOf(s) == Placement::kDownstream) continue;
        if (!best || DistanceToCritical(s) < DistanceToCritical(*best)) best = s;
      }
      return best;
    }
    case Placement::kDownstream: {
      std::optional<SectionId> best;
      for (const auto& p : Predecessors(id)) {
        if (PlacementOf(p) == Placement::kUpstream) continue;
        if (!best || DistanceToCritical(p) < DistanceToCritical(*best)) best = p;
      }
      return best;
    }
  }
  return std::nullopt;
}

SectionId SectionGraph::FanoutSide(const Edge& edge) const {
  if (PlacementOf(edge.from) == Placement::kUpstream) return edge.from;
  if (PlacementOf(edge.to) == Placement::kDownstream) return edge.to;
  // Upstream -> downstream bypass edges cannot occur (the critical section
  // would have to be on the path); fall back to the source.
  return edge.from;
}

SectionId SectionGraph::OtherSide(const Edge& edge) const {
  return FanoutSide(edge) == edge.from ? edge.to : edge.from;
}

double SectionGraph::TotalPayload() const {
  double total = 0.0;
  for (const auto& e : edges_) total += e.payload_bytes_per_sample;
  return total;
}

SectionGraph ColocateOutputLayer(const SectionGraph& graph,
                                 const SectionId& teacher,
                                 const SectionId& student,
                                 std::int64_t hidden_dim,
                                 std::int64_t vocab_size) {
  auto edges = graph.edges();
  auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) {
    return e.from == teacher && e.to == student;
  });
  if (it == edges.end()) {
    throw Error(ErrorCode::kEdgeNotFound,
                "no edge " + teacher.str() + " -> " + student.str());
  }
  if (hidden_dim < 1 || vocab_size <= hidden_dim) {
    throw Error(ErrorCode::kInvalidDims,
                "vocab_size=" + std::to_string(vocab_size) +
                    " must exceed hidden_dim=" + std::to_string(hidden_dim) +
                    " for output-layer colocation to shrink the payload");
  }
  it->payload_bytes_per_sample *=
      static_cast<double>(hidden_dim) / static_cast<double>(vocab_size);

  auto sections = graph.sections();
  const std::string layer = teacher.str() + ".output_layer";
  for (auto& s : sections) {
    if (s.id == teacher) {
      std::erase_if(s.submodules, [&](const std::string& m) {
        return m == "output_layer" || m == layer;
      });
    }
  }
  for (auto& s : sections) {
    if (s.id == student) s.submodules.push_back(layer);
  }
  auto result = SectionGraph::Build(std::move(sections), std::move(edges));
  result.exclusive_groups_ = graph.exclusive_groups_;
  return result;
}

SectionGraph ColocateExclusiveEncoders(const SectionGraph& graph,
                                       const SectionId& a, const SectionId& b,
                                       std::optional<SectionId> merged) {
  if (a == b) {
    throw Error(ErrorCode::kDuplicateSection,
                "cannot colocate '" + a.str() + "' with itself");
  }
  const auto& sa = graph.Section(a);
  const auto& sb = graph.Section(b);
  if (sa.role != Role::kAuxiliary || sb.role != Role::kAuxiliary) {
    throw Error(ErrorCode::kInvalidArgument,
                "only auxiliary sections can be colocated as exclusive encoders");
  }
  if (graph.PlacementOf(a) != graph.PlacementOf(b)) {
    throw Error(ErrorCode::kInvalidArgument,
                "'" + a.str() + "' and '" + b.str() +
                    "' sit on different sides of the critical section");
  }
  const SectionId id = merged.value_or(SectionId(a.str() + "+" + b.str()));
  if (id != a && id != b && graph.Contains(id)) {
    throw Error(ErrorCode::kDuplicateSection, "'" + id.str() + "'");
  }

  SectionSpec combined;
  combined.id = id;
  combined.role = Role::kAuxiliary;
  combined.exec_mode = (sa.exec_mode == ExecMode::kForwardBackward ||
                        sb.exec_mode == ExecMode::kForwardBackward)
                           ? ExecMode::kForwardBackward
                           : ExecMode::kForwardOnly;
  const auto& pa = sa.structural;
  const auto& pb = sb.structural;
  combined.structural.hidden_dim = std::max(pa.hidden_dim, pb.hidden_dim);
  combined.structural.vocab_size = std::max(pa.vocab_size, pb.vocab_size);
  combined.structural.num_heads = std::gcd(pa.num_heads, pb.num_heads);
  combined.structural.num_layers = std::gcd(pa.num_layers, pb.num_layers);
  combined.structural.max_seq_len = std::gcd(pa.max_seq_len, pb.max_seq_len);
  combined.structural.param_count = pa.param_count + pb.param_count;
  combined.submodules = sa.submodules;
  combined.submodules.insert(combined.submodules.end(), sb.submodules.begin(),
                             sb.submodules.end());

  std::vector<SectionSpec> sections;
  for (const auto& s : graph.sections()) {
    if (s.id == a) {
      sections.push_back(combined);
    } else if (s.id != b) {
      sections.push_back(s);
    }
  }

  auto rehome = [&](const SectionId& x) { return (x == a || x == b) ? id : x; };
  std::vector<Edge> edges;
  for (const auto& e : graph.edges()) {
    Edge r{rehome(e.from), rehome(e.to), e.payload_bytes_per_sample};
    auto dup = std::find_if(edges.begin(), edges.end(), [&](const Edge& x) {
      return x.from == r.from && x.to == r.to;
    });
    if (dup != edges.end()) {
      dup->payload_bytes_per_sample =
          std::max(dup->payload_bytes_per_sample, r.payload_bytes_per_sample);
    } else {
      edges.push_back(std::move(r));
    }
  }

  auto result = SectionGraph::Build(std::move(sections), std::move(edges));
  result.exclusive_groups_ = graph.exclusive_groups_;
  std::vector<SectionId> members;
  for (const auto& src : {a, b}) {
    auto prior = graph.exclusive_groups_.find(src);
    if (prior != graph.exclusive_groups_.end()) {
      members.insert(members.end(), prior->second.begin(), prior->second.end());
      result.exclusive_groups_.erase(src);
    } else {
      members.push_back(src);
    }
  }
  result.exclusive_groups_[id] = std::move(members);
  return result;
}

void ValidateSample(const SampleTiming& sample) {
  for (Phase p : kPhaseChain) {
    double t = sample.at(p);
    if (!std::isfinite(t) || t < 0.0) {
      throw Error(ErrorCode::kNegativeTime,
                  "sample " + std::to_string(sample.sample_id) + " phase " +
                      std::string(PhaseName(p)) + " = " + std::to_string(t));
    }
  }
  for (const auto& [id, st] : sample.section_times) {
    if (!std::isfinite(st.forward) || st.forward < 0.0 ||
        !std::isfinite(st.backward) || st.backward < 0.0) {
      throw Error(ErrorCode::kNegativeTime,
                  "sample " + std::to_string(sample.sample_id) + " section '" +
                      id.str() + "' has a negative or non-finite time");
    }
  }
  if (!(sample.at(Phase::kFwdC) > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample " + std::to_string(sample.sample_id) +
                    ": t_f_c must be positive (every sample reaches the "
                    "critical section)");
  }
}

StageTimes SectionStageTimes(const SectionGraph& graph,
                             const SampleTiming& sample,
                             const SectionId& section) {
  const Placement placement = graph.PlacementOf(section);
  if (placement != Placement::kCritical && !sample.activated.count(section)) {
    return {};
  }
  StageTimes st;
  if (auto it = sample.section_times.find(section);
      it != sample.section_times.end()) {
    st = it->second;
  } else {
    switch (placement) {
      case Placement::kUpstream:
        st = {sample.at(Phase::kFwdBc), sample.at(Phase::kBwdAc)};
        break;
      case Placement::kCritical:
        st = {sample.at(Phase::kFwdC), sample.at(Phase::kBwdC)};
        break;
      case Placement::kDownstream:
        st = {sample.at(Phase::kFwdAc), sample.at(Phase::kBwdBc)};
        break;
    }
  }
  if (graph.Section(section).exec_mode == ExecMode::kForwardOnly) {
    st.backward = 0.0;
  }
  return st;
}

std::vector<SampleTiming> ResolveBatch(const SectionGraph& graph,
                                       std::vector<SampleTiming> batch) {
  std::map<SectionId, SectionId> absorbed;
  for (const auto& [merged, members] : graph.exclusive_groups()) {
    for (const auto& m : members) absorbed[m] = merged;
  }
  std::set<std::uint64_t> ids;
  for (auto& sample : batch) {
    ValidateSample(sample);
    if (!ids.insert(sample.sample_id).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "duplicate sample_id " + std::to_string(sample.sample_id));
    }
    std::set<SectionId> activated;
    std::map<SectionId, SectionId> hits;  // merged -> first member seen
    for (const auto& name : sample.activated) {
      auto it = absorbed.find(name);
      if (it != absorbed.end()) {
        auto [prev, fresh] = hits.emplace(it->second, name);
        if (!fresh && prev->second != name) {
          throw Error(ErrorCode::kBothActivated,
                      "sample " + std::to_string(sample.sample_id) +
                          " activates both '" + prev->second.str() + "' and '" +
                          name.str() + "' which share section '" +
                          it->second.str() + "'");
        }
        activated.insert(it->second);
      } else if (graph.Contains(name)) {
        activated.insert(name);
      } else {
        throw Error(ErrorCode::kUnknownSection,
                    "sample " + std::to_string(sample.sample_id) +
                        " activates undefined section '" + name.str() + "'");
      }
    }
    activated.insert(graph.Critical().id);
    std::map<SectionId, StageTimes> times;
    for (const auto& [name, st] : sample.section_times) {
      auto it = absorbed.find(name);
      const SectionId& key = it != absorbed.end() ? it->second : name;
      if (!graph.Contains(key)) {
        throw Error(ErrorCode::kUnknownSection,
                    "sample " + std::to_string(sample.sample_id) +
                        " has times for undefined section '" + name.str() + "'");
      }
      times[key] = st;
    }
    sample.activated = std::move(activated);
    sample.section_times = std::move(times);
  }
  return batch;
}

}  // namespace maestro
