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

#include "maestro/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <tuple>

#include "json.hpp"
#include "maestro/error.hpp"

namespace maestro {

std::optional<CommModel> ParseCommModel(std::string_view text) {
  if (text == "zero") return std::nullopt;
  constexpr std::string_view kLinear = "linear:";
  if (text.substr(0, kLinear.size()) == kLinear) {
    const std::string number(text.substr(kLinear.size()));
    try {
      std::size_t used = 0;
      const double gbps = std::stod(number, &used);
      if (used == number.size() && std::isfinite(gbps) && gbps > 0.0) {
        return CommModel{gbps * 1e9};
      }
    } catch (const std::exception&) {
    }
  }
  throw Error(ErrorCode::kInvalidArgument,
              "comm model must be 'zero' or 'linear:<GBps>' with GBps > 0, got '" +
                  std::string(text) + "'");
}

namespace {

struct Node {
  int section = 0;
  int rank = 0;
  int sample = 0;  // index into batch
  bool forward = true;
  Phase phase = Phase::kFwdC;
  double duration = 0.0;
  int pending = 0;
  double ready = 0.0;
  double finish = -1.0;
  std::vector<std::pair<int, double>> dependents;  // node, comm delay
  std::vector<std::pair<int, double>> comm_bytes;  // dependent node, bytes
};

struct Resource {
  int section = 0;
  int rank = 0;
  bool earliest_ready = false;
  std::vector<int> sequence;  // merged-order mode
  std::size_t cursor = 0;
  std::set<int> pool;  // earliest-ready mode
  bool busy = false;
  double busy_time = 0.0;
};

Phase PhaseFor(Placement placement, bool forward) {
  switch (placement) {
    case Placement::kUpstream:
      return forward ? Phase::kFwdBc : Phase::kBwdAc;
    case Placement::kCritical:
      return forward ? Phase::kFwdC : Phase::kBwdC;
    case Placement::kDownstream:
      return forward ? Phase::kFwdAc : Phase::kBwdBc;
  }
  return Phase::kFwdC;
}

}  // namespace

SimulationResult Simulate(const SectionGraph& graph,
                          const std::map<SectionId, SectionConfig>& configs,
                          const Schedule& schedule,
                          std::span<const SampleTiming> batch,
                          const SimulationOptions& options) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "nothing to simulate");
  const auto& sections = graph.TopologicalOrder();
  const int num_sections = static_cast<int>(sections.size());
  std::map<SectionId, int> sec_index;
  for (int i = 0; i < num_sections; ++i) sec_index[sections[i]] = i;
  const SectionId& critical = graph.Critical().id;
  const int crit = sec_index.at(critical);

  std::vector<SectionConfig> cfg(num_sections);
  std::vector<std::vector<int>> mapping(num_sections);
  std::vector<Placement> placement(num_sections);
  for (int i = 0; i < num_sections; ++i) {
    auto it = configs.find(sections[i]);
    if (it == configs.end()) {
      throw Error(ErrorCode::kInconsistentSchedule,
                  "no config for section '" + sections[i].str() + "'");
    }
    cfg[i] = it->second;
    placement[i] = graph.PlacementOf(sections[i]);
    try {
      mapping[i] = RankMapping(graph, configs, sections[i]);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInconsistentSchedule, e.detail());
    }
  }

  std::map<std::uint64_t, int> sample_index;
  for (int k = 0; k < static_cast<int>(batch.size()); ++k) {
    sample_index[batch[k].sample_id] = k;
  }
  auto lookup = [&](std::uint64_t id) {
    auto it = sample_index.find(id);
    if (it == sample_index.end()) {
      throw Error(ErrorCode::kInconsistentSchedule,
                  "schedule references unknown sample " + std::to_string(id));
    }
    return it->second;
  };

  // Critical rank of every sample.
  std::vector<int> crit_rank(batch.size(), -1);
  for (int r = 0; r < cfg[crit].dp; ++r) {
    auto it = schedule.per_rank_orders.find({critical, r});
    if (it == schedule.per_rank_orders.end()) continue;
    for (auto id : it->second) {
      const int k = lookup(id);
      if (crit_rank[k] >= 0) {
        throw Error(ErrorCode::kInconsistentSchedule,
                    "sample " + std::to_string(id) + " scheduled twice on '" +
                        critical.str() + "'");
      }
      crit_rank[k] = r;
    }
  }
  for (const auto& [key, order] : schedule.per_rank_orders) {
    if (!sec_index.count(key.section) || key.rank < 0 ||
        key.rank >= cfg[sec_index.at(key.section)].dp) {
      throw Error(ErrorCode::kInconsistentSchedule,
                  "schedule has rank " + std::to_string(key.rank) + " of '" +
                      key.section.str() + "' which the plan does not");
    }
  }
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (crit_rank[k] < 0) {
      throw Error(ErrorCode::kInconsistentSchedule,
                  "sample " + std::to_string(batch[k].sample_id) +
                      " is not scheduled on '" + critical.str() + "'");
    }
  }

  auto active = [&](int k, int s) {
    return s == crit || batch[k].activated.count(sections[s]) > 0;
  };

  // Logical nodes: (sample, section, direction) for active sections.
  std::vector<Node> nodes;
  std::vector<std::vector<std::array<int, 2>>> node_of(
      batch.size(), std::vector<std::array<int, 2>>(num_sections, {-1, -1}));
  for (int k = 0; k < static_cast<int>(batch.size()); ++k) {
    for (int s = 0; s < num_sections; ++s) {
      if (!active(k, s)) continue;
      const StageTimes st = SectionStageTimes(graph, batch[k], sections[s]);
      for (int dir = 0; dir < 2; ++dir) {
        Node n;
        n.section = s;
        n.rank = mapping[s][crit_rank[k]];
        n.sample = k;
        n.forward = dir == 0;
        n.phase = PhaseFor(placement[s], n.forward);
        n.duration = n.forward ? st.forward : st.backward;
        node_of[k][s][dir] = static_cast<int>(nodes.size());
        nodes.push_back(std::move(n));
      }
    }
  }

  std::map<std::pair<int, int>, double> edge_bytes;
  for (const auto& e : graph.edges()) {
    edge_bytes[{sec_index.at(e.from), sec_index.at(e.to)}] = e.payload_bytes_per_sample;
  }
  std::vector<std::vector<int>> preds(num_sections), succs(num_sections);
  for (int s = 0; s < num_sections; ++s) {
    for (const auto& p : graph.Predecessors(sections[s])) preds[s].push_back(sec_index.at(p));
    for (const auto& q : graph.Successors(sections[s])) succs[s].push_back(sec_index.at(q));
  }
  // Nearest active sections along `adj`, skipping inactive ones.
  std::function<void(int, int, const std::vector<std::vector<int>>&, std::set<int>&)>
      effective = [&](int k, int s, const std::vector<std::vector<int>>& adj,
                      std::set<int>& out) {
        for (int t : adj[s]) {
          if (active(k, t)) {
            out.insert(t);
          } else {
            effective(k, t, adj, out);
          }
        }
      };
  auto bytes_between = [&](int a, int b) {
    auto it = edge_bytes.find({a, b});
    if (it == edge_bytes.end()) it = edge_bytes.find({b, a});
    return it == edge_bytes.end() ? 0.0 : it->second;
  };
  auto link = [&](int from, int to, double bytes) {
    const double delay =
        options.comm && bytes > 0.0 ? options.comm->TransferTime(bytes) : 0.0;
    nodes[from].dependents.push_back({to, delay});
    if (options.comm && bytes > 0.0) nodes[from].comm_bytes.push_back({to, bytes});
    ++nodes[to].pending;
  };
  for (int k = 0; k < static_cast<int>(batch.size()); ++k) {
    for (int s = 0; s < num_sections; ++s) {
      if (!active(k, s)) continue;
      const int fwd = node_of[k][s][0];
      const int bwd = node_of[k][s][1];
      std::set<int> up, down;
      effective(k, s, preds, up);
      effective(k, s, succs, down);
      for (int p : up) link(node_of[k][p][0], fwd, bytes_between(p, s));
      link(fwd, bwd, 0.0);
      for (int q : down) link(node_of[k][q][1], bwd, bytes_between(s, q));
    }
  }

  // Resources and their stage sequences.
  std::vector<std::vector<int>> resource_of(num_sections);
  std::vector<Resource> resources;
  for (int s = 0; s < num_sections; ++s) {
    for (int a = 0; a < cfg[s].dp; ++a) {
      Resource res;
      res.section = s;
      res.rank = a;
      res.earliest_ready =
          s != crit && options.aux_dispatch == AuxDispatch::kEarliestReady;
      resource_of[s].push_back(static_cast<int>(resources.size()));
      resources.push_back(std::move(res));
    }
  }
  std::vector<int> node_resource(nodes.size(), -1);
  for (int s = 0; s < num_sections; ++s) {
    for (int a = 0; a < cfg[s].dp; ++a) {
      Resource& res = resources[resource_of[s][a]];
      std::vector<int> order;
      auto it = schedule.per_rank_orders.find({sections[s], a});
      if (it != schedule.per_rank_orders.end()) {
        std::set<int> seen;
        for (auto id : it->second) {
          const int k = lookup(id);
          if (!active(k, s) || mapping[s][crit_rank[k]] != a || !seen.insert(k).second) {
            throw Error(ErrorCode::kInconsistentSchedule,
                        "sample " + std::to_string(id) + " does not belong on '" +
                            sections[s].str() + "' rank " + std::to_string(a));
          }
          order.push_back(k);
        }
      }
      std::size_t expected = 0;
      for (int k = 0; k < static_cast<int>(batch.size()); ++k) {
        if (active(k, s) && mapping[s][crit_rank[k]] == a) ++expected;
      }
      if (expected != order.size()) {
        throw Error(ErrorCode::kInconsistentSchedule,
                    "'" + sections[s].str() + "' rank " + std::to_string(a) +
                        " schedules " + std::to_string(order.size()) + " of " +
                        std::to_string(expected) + " samples");
      }
      const bool interleaved =
          placement[s] != Placement::kUpstream &&
          schedule.policy == ExecPolicy::kInterleaved;
      auto push = [&](int k, int dir) {
        const int id = node_of[k][s][dir];
        if (nodes[id].duration > 0.0) {
          node_resource[id] = resource_of[s][a];
          if (res.earliest_ready) {
            res.pool.insert(id);
          } else {
            res.sequence.push_back(id);
          }
        }
      };
      if (interleaved) {
        for (int k : order) {
          push(k, 0);
          push(k, 1);
        }
      } else {
        for (int k : order) push(k, 0);
        for (int k : order) push(k, 1);
      }
    }
  }

  // Event loop.
  using Event = std::pair<double, int>;  // completion time, node
  std::priority_queue<Event, std::vector<Event>, std::greater<>> running;
  std::vector<StageEvent> events;
  std::vector<CommEvent> comm_events;
  std::size_t completed = 0;
  double t = 0.0;

  for (int id = 0; id < static_cast<int>(nodes.size()); ++id) {
    if (nodes[id].pending == 0 && node_resource[id] < 0) running.push({0.0, id});
  }

  auto complete = [&](int id, double when) {
    Node& n = nodes[id];
    n.finish = when;
    ++completed;
    if (node_resource[id] >= 0) resources[node_resource[id]].busy = false;
    for (const auto& [dep, delay] : n.dependents) {
      Node& d = nodes[dep];
      d.ready = std::max(d.ready, when + delay);
      if (--d.pending == 0 && node_resource[dep] < 0) running.push({d.ready, dep});
    }
    for (const auto& [dep, bytes] : n.comm_bytes) {
      comm_events.push_back({sections[n.section], sections[nodes[dep].section],
                             batch[n.sample].sample_id, bytes, when,
                             when + options.comm->TransferTime(bytes)});
    }
  };
  auto start = [&](Resource& res, int id) {
    Node& n = nodes[id];
    res.busy = true;
    res.busy_time += n.duration;
    const double end = t + n.duration;
    events.push_back({sections[n.section], n.rank, batch[n.sample].sample_id,
                      n.phase, t, end});
    running.push({end, id});
  };
  auto try_start = [&]() {
    for (auto& res : resources) {
      if (res.busy) continue;
      if (res.earliest_ready) {
        int pick = -1;
        for (int id : res.pool) {
          const Node& n = nodes[id];
          if (n.pending != 0 || n.ready > t) continue;
          if (pick < 0) {
            pick = id;
            continue;
          }
          const Node& p = nodes[pick];
          auto key = [&](const Node& x) {
            return std::make_tuple(x.ready, batch[x.sample].sample_id, !x.forward);
          };
          if (key(n) < key(p)) pick = id;
        }
        if (pick >= 0) {
          res.pool.erase(pick);
          start(res, pick);
        }
      } else if (res.cursor < res.sequence.size()) {
        const int id = res.sequence[res.cursor];
        if (nodes[id].pending == 0 && nodes[id].ready <= t) {
          ++res.cursor;
          start(res, id);
        }
      }
    }
  };
  auto next_ready_after = [&]() {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& res : resources) {
      if (res.busy) continue;
      if (res.earliest_ready) {
        for (int id : res.pool) {
          if (nodes[id].pending == 0 && nodes[id].ready > t) best = std::min(best, nodes[id].ready);
        }
      } else if (res.cursor < res.sequence.size()) {
        const Node& n = nodes[res.sequence[res.cursor]];
        if (n.pending == 0 && n.ready > t) best = std::min(best, n.ready);
      }
    }
    return best;
  };

  while (completed < nodes.size()) {
    while (!running.empty() && running.top().first <= t) {
      auto [when, id] = running.top();
      running.pop();
      complete(id, when);
    }
    try_start();
    // Zero-length completions or starts at t may have unlocked more work.
    if (!running.empty() && running.top().first <= t) continue;
    if (completed == nodes.size()) break;
    double next = next_ready_after();
    if (!running.empty()) next = std::min(next, running.top().first);
    if (!std::isfinite(next)) {
      throw Error(ErrorCode::kDependencyDeadlock,
                  std::to_string(nodes.size() - completed) +
                      " stages can never start; the schedule order conflicts "
                      "with sample dependencies");
    }
    t = next;
  }

  SimulationResult result;
  IterationReport& report = result.report;
  for (const auto& n : nodes) report.makespan = std::max(report.makespan, n.finish);
  for (const auto& ce : comm_events) report.makespan = std::max(report.makespan, ce.end);

  for (int s = 0; s < num_sections; ++s) {
    if (cfg[s].pp <= 1) continue;
    double sum = 0.0;
    int count = 0;
    for (int k = 0; k < static_cast<int>(batch.size()); ++k) {
      if (!active(k, s)) continue;
      sum += nodes[node_of[k][s][0]].duration + nodes[node_of[k][s][1]].duration;
      ++count;
    }
    if (count > 0) {
      report.fill_drain = std::max(report.fill_drain,
                                   (cfg[s].pp - 1) * cfg[s].mbs * (sum / count));
    }
  }
  report.makespan += report.fill_drain;

  for (const auto& res : resources) {
    RankKey key{sections[res.section], res.rank};
    report.busy_time[key] = res.busy_time;
    report.idle_time[key] = report.makespan - res.busy_time;
  }

  std::stable_sort(events.begin(), events.end(),
                   [&](const StageEvent& a, const StageEvent& b) {
                     return std::make_tuple(a.start, sec_index.at(a.section), a.dp_rank,
                                            a.sample_id, static_cast<int>(a.phase)) <
                            std::make_tuple(b.start, sec_index.at(b.section), b.dp_rank,
                                            b.sample_id, static_cast<int>(b.phase));
                   });
  std::map<int, std::tuple<double, double, double>> span;  // first, last, busy
  for (const auto& e : events) {
    if (e.section != critical) continue;
    auto [it, fresh] = span.try_emplace(e.dp_rank, e.start, e.end, 0.0);
    auto& [first, last, busy] = it->second;
    first = std::min(first, e.start);
    last = std::max(last, e.end);
    busy += e.end - e.start;
    (void)fresh;
  }
  for (const auto& [rank, s] : span) {
    const auto& [first, last, busy] = s;
    const double idle = std::max(0.0, (last - first) - busy);
    report.critical_idle_per_rank[rank] = idle;
    report.critical_idle += idle;
  }
  std::stable_sort(comm_events.begin(), comm_events.end(),
                   [](const CommEvent& a, const CommEvent& b) {
                     return std::tie(a.start, a.sample_id) < std::tie(b.start, b.sample_id);
                   });
  report.comm_events = std::move(comm_events);
  result.events = std::move(events);
  return result;
}

void WriteTrace(const std::vector<StageEvent>& events, std::ostream& out) {
  using nlohmann::ordered_json;
  constexpr double kMicrosPerUnit = 1000.0;
  std::map<SectionId, int> pid;
  std::set<std::pair<int, int>> tracks;
  ordered_json trace_events = ordered_json::array();
  for (const auto& e : events) {
    auto [it, fresh] = pid.try_emplace(e.section, static_cast<int>(pid.size()));
    if (fresh) {
      trace_events.push_back({{"name", "process_name"},
                              {"ph", "M"},
                              {"pid", it->second},
                              {"args", {{"name", e.section.str()}}}});
    }
    if (tracks.insert({it->second, e.dp_rank}).second) {
      trace_events.push_back({{"name", "thread_name"},
                              {"ph", "M"},
                              {"pid", it->second},
                              {"tid", e.dp_rank},
                              {"args", {{"name", "dp" + std::to_string(e.dp_rank)}}}});
    }
    trace_events.push_back(
        {{"name", "s" + std::to_string(e.sample_id) + " " + std::string(PhaseName(e.phase))},
         {"cat", IsForward(e.phase) ? "forward" : "backward"},
         {"ph", "X"},
         {"pid", it->second},
         {"tid", e.dp_rank},
         {"ts", e.start * kMicrosPerUnit},
         {"dur", (e.end - e.start) * kMicrosPerUnit},
         {"args", {{"sample_id", e.sample_id}, {"phase", PhaseName(e.phase)}}}});
  }
  ordered_json doc = {{"displayTimeUnit", "ms"}, {"traceEvents", trace_events}};
  out << doc.dump(1) << "\n";
}

void ExportTrace(const std::vector<StageEvent>& events, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  WriteTrace(events, out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path + "'");
}

}  // namespace maestro
