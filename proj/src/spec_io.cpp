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

#include "maestro/spec_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "maestro/error.hpp"

namespace maestro {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void Fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParseError, (path.empty() ? "<root>" : path) + ": " + what);
}

std::int64_t AsInt(const json& j, const std::string& path) {
  if (!j.is_number_integer()) Fail(path, "expected an integer");
  return j.get<std::int64_t>();
}

double AsDouble(const json& j, const std::string& path) {
  if (!j.is_number()) Fail(path, "expected a number");
  return j.get<double>();
}

std::string AsString(const json& j, const std::string& path) {
  if (!j.is_string()) Fail(path, "expected a string");
  return j.get<std::string>();
}

const json& AsArray(const json& j, const std::string& path) {
  if (!j.is_array()) Fail(path, "expected an array");
  return j;
}

// Object view that remembers which keys were read so leftovers can be
// rejected.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) Fail(path_, "expected an object");
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const json* Find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  const json& Need(const std::string& key) {
    const json* v = Find(key);
    if (!v) Fail(Path(key), "missing required field");
    return *v;
  }
  std::int64_t Int(const std::string& key) { return AsInt(Need(key), Path(key)); }
  std::int64_t Int(const std::string& key, std::int64_t fallback) {
    const json* v = Find(key);
    return v ? AsInt(*v, Path(key)) : fallback;
  }
  double Double(const std::string& key) { return AsDouble(Need(key), Path(key)); }
  double Double(const std::string& key, double fallback) {
    const json* v = Find(key);
    return v ? AsDouble(*v, Path(key)) : fallback;
  }
  std::string String(const std::string& key) { return AsString(Need(key), Path(key)); }
  void Done() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) Fail(Path(it.key()), "unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string Index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

int SmallInt(Fields& f, const std::string& key, int fallback) {
  const auto v = f.Int(key, fallback);
  if (v < 1 || v > (1 << 20)) Fail(f.Path(key), "must be between 1 and 2^20");
  return static_cast<int>(v);
}

SectionConfig ParseConfig(const json& j, const std::string& path) {
  Fields f(j, path);
  SectionConfig c;
  c.dp = SmallInt(f, "dp", 1);
  c.tp = SmallInt(f, "tp", 1);
  c.pp = SmallInt(f, "pp", 1);
  c.cp = SmallInt(f, "cp", 1);
  c.mbs = SmallInt(f, "mbs", 1);
  c.fanout = SmallInt(f, "fanout", 1);
  f.Done();
  return c;
}

CostParams ParseCost(const json& j, const std::string& path) {
  Fields f(j, path);
  CostParams p;
  if (const json* preset = f.Find("preset")) {
    try {
      p = CostPreset(AsString(*preset, f.Path("preset")));
    } catch (const Error& e) {
      Fail(f.Path("preset"), e.detail());
    }
  }
  p.flops_per_token_fwd = f.Double("flops_per_token_fwd", p.flops_per_token_fwd);
  p.bwd_fwd_ratio = f.Double("bwd_fwd_ratio", p.bwd_fwd_ratio);
  p.peak_flops_per_gpu = f.Double("peak_flops_per_gpu", p.peak_flops_per_gpu);
  p.efficiency_per_doubling = f.Double("efficiency_per_doubling", p.efficiency_per_doubling);
  p.bytes_per_param_weights = f.Double("bytes_per_param_weights", p.bytes_per_param_weights);
  p.bytes_per_param_optimizer =
      f.Double("bytes_per_param_optimizer", p.bytes_per_param_optimizer);
  p.activation_bytes_per_token =
      f.Double("activation_bytes_per_token", p.activation_bytes_per_token);
  if (const json* m = f.Find("mbs_efficiency")) {
    const std::string mp = f.Path("mbs_efficiency");
    if (!m->is_object()) Fail(mp, "expected an object of mbs -> factor");
    p.mbs_efficiency.clear();
    for (auto it = m->begin(); it != m->end(); ++it) {
      int key = 0;
      try {
        std::size_t used = 0;
        key = std::stoi(it.key(), &used);
        if (used != it.key().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        Fail(mp + "." + it.key(), "key must be an integer micro-batch size");
      }
      p.mbs_efficiency[key] = AsDouble(*it, mp + "." + it.key());
    }
  }
  if (const json* pe = f.Find("parallel_efficiency")) {
    const std::string pp = f.Path("parallel_efficiency");
    AsArray(*pe, pp);
    p.parallel_efficiency.clear();
    for (std::size_t i = 0; i < pe->size(); ++i) {
      Fields e((*pe)[i], Index(pp, i));
      const int tp = SmallInt(e, "tp", 1), ppd = SmallInt(e, "pp", 1), cp = SmallInt(e, "cp", 1);
      p.parallel_efficiency[{tp, ppd, cp}] = e.Double("value");
      e.Done();
    }
  }
  f.Done();
  try {
    ValidateCostParams(p);
  } catch (const Error& e) {
    Fail(path, e.detail());
  }
  return p;
}

struct RawSection {
  SectionSpec spec;
  CostParams params;
  std::optional<std::int64_t> tokens;
};

RawSection ParseSection(const json& j, const std::string& path) {
  Fields f(j, path);
  RawSection raw;
  raw.spec.id = SectionId(f.String("name"));
  const std::string role = f.String("role");
  if (role == "critical") {
    raw.spec.role = Role::kCritical;
  } else if (role == "auxiliary") {
    raw.spec.role = Role::kAuxiliary;
  } else {
    Fail(f.Path("role"), "expected 'critical' or 'auxiliary', got '" + role + "'");
  }
  const json* mode = f.Find("exec_mode");
  const std::string m = mode ? AsString(*mode, f.Path("exec_mode")) : "forward_backward";
  if (m == "forward_only") {
    raw.spec.exec_mode = ExecMode::kForwardOnly;
  } else if (m == "forward_backward") {
    raw.spec.exec_mode = ExecMode::kForwardBackward;
  } else {
    Fail(f.Path("exec_mode"), "expected 'forward_only' or 'forward_backward', got '" + m + "'");
  }
  {
    Fields s(f.Need("structural"), f.Path("structural"));
    auto& sp = raw.spec.structural;
    sp.hidden_dim = s.Int("hidden_dim");
    sp.num_heads = s.Int("num_heads");
    sp.num_layers = s.Int("num_layers");
    sp.vocab_size = s.Int("vocab_size", 1);
    sp.max_seq_len = s.Int("max_seq_len");
    sp.param_count = s.Int("param_count");
    s.Done();
  }
  if (const json* subs = f.Find("submodules")) {
    AsArray(*subs, f.Path("submodules"));
    for (std::size_t i = 0; i < subs->size(); ++i) {
      raw.spec.submodules.push_back(AsString((*subs)[i], Index(f.Path("submodules"), i)));
    }
  }
  if (const json* t = f.Find("tokens_per_sample")) {
    raw.tokens = AsInt(*t, f.Path("tokens_per_sample"));
    if (*raw.tokens < 1) Fail(f.Path("tokens_per_sample"), "must be >= 1");
  }
  if (const json* c = f.Find("cost")) raw.params = ParseCost(*c, f.Path("cost"));
  else Fail(f.Path("cost"), "missing required field");
  f.Done();
  return raw;
}

SampleTiming ParseSample(const json& j, const std::string& path) {
  Fields f(j, path);
  SampleTiming s;
  const auto id = f.Int("id");
  if (id < 0) Fail(f.Path("id"), "must be non-negative");
  s.sample_id = static_cast<std::uint64_t>(id);
  const json& times = AsArray(f.Need("times"), f.Path("times"));
  if (times.size() != 6) Fail(f.Path("times"), "expected 6 phase times");
  for (std::size_t i = 0; i < 6; ++i) s.times[i] = AsDouble(times[i], Index(f.Path("times"), i));
  if (const json* act = f.Find("activated")) {
    AsArray(*act, f.Path("activated"));
    for (std::size_t i = 0; i < act->size(); ++i) {
      s.activated.insert(SectionId(AsString((*act)[i], Index(f.Path("activated"), i))));
    }
  }
  if (const json* st = f.Find("section_times")) {
    if (!st->is_object()) Fail(f.Path("section_times"), "expected an object");
    for (auto it = st->begin(); it != st->end(); ++it) {
      Fields t(*it, f.Path("section_times") + "." + it.key());
      s.section_times[SectionId(it.key())] = {t.Double("forward"), t.Double("backward", 0.0)};
      t.Done();
    }
  }
  f.Done();
  return s;
}

std::string FanoutMessage(const Edge& e, const SectionId& fr, const SectionConfig& cf,
                          const SectionId& other, const SectionConfig& co) {
  return "edge " + e.from.str() + " -> " + e.to.str() + ": DP(" + fr.str() +
         ")=" + std::to_string(cf.dp) + " x fanout=" + std::to_string(cf.fanout) +
         " != DP(" + other.str() + ")=" + std::to_string(co.dp);
}

}  // namespace

WorkloadSpec ParseSpec(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  Fields root(doc, "");
  const std::string schema = root.String("schema");
  if (schema != kSpecSchema) {
    Fail("schema", "expected '" + std::string(kSpecSchema) + "', got '" + schema + "'");
  }

  WorkloadSpec spec;
  std::vector<SectionSpec> sections;
  std::map<SectionId, RawSection> raw;
  const json& js = AsArray(root.Need("sections"), "sections");
  for (std::size_t i = 0; i < js.size(); ++i) {
    RawSection r = ParseSection(js[i], Index("sections", i));
    sections.push_back(r.spec);
    raw[r.spec.id] = std::move(r);
  }
  std::vector<Edge> edges;
  if (const json* je = root.Find("edges")) {
    AsArray(*je, "edges");
    for (std::size_t i = 0; i < je->size(); ++i) {
      Fields f((*je)[i], Index("edges", i));
      Edge e{SectionId(f.String("from")), SectionId(f.String("to")),
             f.Double("payload_bytes_per_sample", 0.0)};
      f.Done();
      edges.push_back(std::move(e));
    }
  }
  SectionGraph graph = SectionGraph::Build(sections, edges);

  if (const json* jt = root.Find("transforms")) {
    AsArray(*jt, "transforms");
    for (std::size_t i = 0; i < jt->size(); ++i) {
      Fields f((*jt)[i], Index("transforms", i));
      const std::string kind = f.String("kind");
      if (kind == "colocate_output_layer") {
        const SectionId teacher(f.String("teacher"));
        const SectionId student(f.String("student"));
        if (!graph.Contains(teacher)) {
          throw Error(ErrorCode::kUnknownSection, "transform teacher '" + teacher.str() + "'");
        }
        const auto& ts = graph.Section(teacher).structural;
        const auto hidden = f.Int("hidden_dim", ts.hidden_dim);
        const auto vocab = f.Int("vocab_size", ts.vocab_size);
        graph = ColocateOutputLayer(graph, teacher, student, hidden, vocab);
      } else if (kind == "colocate_exclusive_encoders") {
        const SectionId a(f.String("a"));
        const SectionId b(f.String("b"));
        std::optional<SectionId> merged;
        if (const json* m = f.Find("merged")) merged = SectionId(AsString(*m, f.Path("merged")));
        graph = ColocateExclusiveEncoders(graph, a, b, merged);
      } else {
        Fail(f.Path("kind"), "unknown transform '" + kind + "'");
      }
      f.Done();
    }
  }

  // Per-section data for the final graph. A merged section takes the cost
  // parameters of its first member and the longest token count.
  for (const auto& s : graph.sections()) {
    std::vector<SectionId> members = {s.id};
    if (auto g = graph.exclusive_groups().find(s.id); g != graph.exclusive_groups().end()) {
      members = g->second;
    }
    spec.params[s.id] = raw.at(members.front()).params;
    std::int64_t tokens = 0;
    for (const auto& m : members) {
      const auto& r = raw.at(m);
      tokens = std::max(tokens, r.tokens.value_or(r.spec.structural.max_seq_len));
    }
    spec.tokens_per_sample[s.id] = tokens;
  }

  {
    Fields f(root.Need("cluster"), "cluster");
    spec.cluster.total_gpus = f.Int("total_gpus");
    spec.cluster.mem_per_gpu = f.Double("mem_per_gpu");
    if (spec.cluster.total_gpus < 1) Fail("cluster.total_gpus", "must be >= 1");
    if (!(spec.cluster.mem_per_gpu > 0)) Fail("cluster.mem_per_gpu", "must be positive");
    f.Done();
  }

  if (const json* jo = root.Find("optimizer")) {
    Fields f(*jo, "optimizer");
    spec.options.cp_cap = SmallInt(f, "cp_cap", spec.options.cp_cap);
    if (const json* b = f.Find("critical_gpu_budget")) {
      spec.options.critical_gpu_budget = AsInt(*b, "optimizer.critical_gpu_budget");
      if (*spec.options.critical_gpu_budget < 1) {
        Fail("optimizer.critical_gpu_budget", "must be >= 1");
      }
    }
    if (const json* m = f.Find("mbs_candidates")) {
      AsArray(*m, "optimizer.mbs_candidates");
      spec.options.mbs_candidates.clear();
      for (std::size_t i = 0; i < m->size(); ++i) {
        const auto v = AsInt((*m)[i], Index("optimizer.mbs_candidates", i));
        if (v < 1) Fail(Index("optimizer.mbs_candidates", i), "must be >= 1");
        spec.options.mbs_candidates.push_back(static_cast<int>(v));
      }
      if (spec.options.mbs_candidates.empty()) Fail("optimizer.mbs_candidates", "empty");
    }
    f.Done();
  }

  if (const json* jp = root.Find("pinned")) {
    if (!jp->is_object()) Fail("pinned", "expected an object of section -> config");
    for (auto it = jp->begin(); it != jp->end(); ++it) {
      const SectionId id(it.key());
      if (!graph.Contains(id)) {
        throw Error(ErrorCode::kUnknownSection, "pinned section '" + id.str() + "'");
      }
      spec.pinned[id] = ParseConfig(*it, "pinned." + it.key());
      ValidateConfig(graph.Section(id), spec.pinned[id]);
    }
    for (const auto& e : graph.edges()) {
      const SectionId fr = graph.FanoutSide(e), other = graph.OtherSide(e);
      auto a = spec.pinned.find(fr), b = spec.pinned.find(other);
      if (a == spec.pinned.end() || b == spec.pinned.end()) continue;
      if (std::int64_t{a->second.dp} * a->second.fanout != b->second.dp) {
        throw Error(ErrorCode::kFanoutViolation,
                    FanoutMessage(e, fr, a->second, other, b->second));
      }
    }
  }

  {
    Fields f(root.Need("batch"), "batch");
    const json* samples = f.Find("samples");
    const json* gen = f.Find("generate");
    if ((samples != nullptr) == (gen != nullptr)) {
      Fail("batch", "exactly one of 'samples' or 'generate' is required");
    }
    if (samples) {
      AsArray(*samples, "batch.samples");
      std::vector<SampleTiming> batch;
      for (std::size_t i = 0; i < samples->size(); ++i) {
        batch.push_back(ParseSample((*samples)[i], Index("batch.samples", i)));
      }
      if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "batch.samples is empty");
      spec.samples = ResolveBatch(graph, std::move(batch));
    } else {
      Fields g(*gen, "batch.generate");
      BatchGenerator bg;
      const auto count = g.Int("count");
      if (count < 1 || count > 1'000'000) Fail("batch.generate.count", "must be in [1, 1e6]");
      bg.count = static_cast<int>(count);
      if (const json* act = g.Find("activation")) {
        if (!act->is_object()) Fail("batch.generate.activation", "expected an object");
        for (auto it = act->begin(); it != act->end(); ++it) {
          const std::string p = "batch.generate.activation." + it.key();
          const double prob = AsDouble(*it, p);
          if (!(prob >= 0.0 && prob <= 1.0)) Fail(p, "probability must be in [0, 1]");
          if (!raw.count(SectionId(it.key()))) {
            throw Error(ErrorCode::kUnknownSection, p + ": no such section");
          }
          bg.activation[SectionId(it.key())] = prob;
        }
      }
      for (const auto& [merged, members] : graph.exclusive_groups()) {
        double total = 0.0;
        for (const auto& m : members) {
          auto it = bg.activation.find(m);
          total += it == bg.activation.end() ? 1.0 : it->second;
        }
        if (total > 1.0 + 1e-12) {
          Fail("batch.generate.activation",
               "exclusive members of '" + merged.str() + "' have total probability above 1");
        }
      }
      g.Done();
      spec.generate = bg;
    }
    f.Done();
  }
  root.Done();
  spec.graph = std::move(graph);
  return spec;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "failed writing '" + path + "'");
}

WorkloadSpec LoadSpec(const std::string& path) { return ParseSpec(ReadFile(path)); }

namespace {

ordered_json ConfigJson(const SectionConfig& c) {
  return {{"dp", c.dp}, {"tp", c.tp}, {"pp", c.pp}, {"cp", c.cp}, {"mbs", c.mbs},
          {"fanout", c.fanout}};
}

json ParseJson(std::string_view text, const std::string& what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, what + ": " + e.what());
  }
}

}  // namespace

std::string PlanToJson(const AllocationPlan& plan) {
  ordered_json sections = ordered_json::object();
  for (const auto& [id, sp] : plan.per_section) {
    sections[id.str()] = {
        {"config", ConfigJson(sp.config)},
        {"gpus", sp.gpus},
        {"memory",
         {{"weights", sp.memory.weights},
          {"optimizer_state", sp.memory.optimizer_state},
          {"gradients", sp.memory.gradients},
          {"activations", sp.memory.activations},
          {"total", sp.memory.total}}},
        {"step", {{"forward", sp.step.forward}, {"backward", sp.step.backward}}},
        {"iteration_time", sp.iteration_time}};
  }
  ordered_json doc = {{"schema", "maestro-plan v1"},
                      {"sections", sections},
                      {"total_gpus_used", plan.total_gpus_used},
                      {"predicted_iteration_time", plan.predicted_iteration_time},
                      {"feasible", plan.feasible},
                      {"violations", plan.violations}};
  return doc.dump(2) + "\n";
}

AllocationPlan PlanFromJson(std::string_view text) {
  const json doc = ParseJson(text, "plan");
  Fields root(doc, "");
  if (root.String("schema") != "maestro-plan v1") Fail("schema", "expected 'maestro-plan v1'");
  AllocationPlan plan;
  const json& secs = root.Need("sections");
  if (!secs.is_object()) Fail("sections", "expected an object");
  for (auto it = secs.begin(); it != secs.end(); ++it) {
    const std::string p = "sections." + it.key();
    Fields f(*it, p);
    SectionPlan sp;
    sp.config = ParseConfig(f.Need("config"), p + ".config");
    sp.gpus = f.Int("gpus");
    {
      Fields m(f.Need("memory"), p + ".memory");
      sp.memory = {m.Double("weights"), m.Double("optimizer_state"), m.Double("gradients"),
                   m.Double("activations"), m.Double("total")};
      m.Done();
    }
    {
      Fields s(f.Need("step"), p + ".step");
      sp.step = {s.Double("forward"), s.Double("backward")};
      s.Done();
    }
    sp.iteration_time = f.Double("iteration_time");
    f.Done();
    plan.per_section[SectionId(it.key())] = sp;
  }
  plan.total_gpus_used = root.Int("total_gpus_used");
  plan.predicted_iteration_time = root.Double("predicted_iteration_time");
  const json& feasible = root.Need("feasible");
  if (!feasible.is_boolean()) Fail("feasible", "expected a boolean");
  plan.feasible = feasible.get<bool>();
  const json& v = AsArray(root.Need("violations"), "violations");
  for (std::size_t i = 0; i < v.size(); ++i) {
    plan.violations.push_back(AsString(v[i], Index("violations", i)));
  }
  root.Done();
  return plan;
}

std::string ScheduleToJson(const Schedule& schedule, std::uint64_t seed) {
  ordered_json orders = ordered_json::array();
  for (const auto& [key, ids] : schedule.per_rank_orders) {
    orders.push_back({{"section", key.section.str()}, {"rank", key.rank}, {"samples", ids}});
  }
  ordered_json summary = ordered_json::array();
  for (const auto& [rank, s] : schedule.critical_summary) {
    summary.push_back(
        {{"rank", rank}, {"makespan", s.makespan}, {"critical_idle", s.critical_idle}});
  }
  ordered_json doc = {{"schema", "maestro-schedule v1"},
                      {"seed", seed},
                      {"policy", ExecPolicyName(schedule.policy)},
                      {"orders", orders},
                      {"critical_summary", summary}};
  return doc.dump(2) + "\n";
}

Schedule ScheduleFromJson(std::string_view text, std::uint64_t* seed) {
  const json doc = ParseJson(text, "schedule");
  Fields root(doc, "");
  if (root.String("schema") != "maestro-schedule v1") {
    Fail("schema", "expected 'maestro-schedule v1'");
  }
  Schedule schedule;
  const auto s = root.Int("seed");
  if (s < 0) Fail("seed", "must be non-negative");
  if (seed) *seed = static_cast<std::uint64_t>(s);
  try {
    schedule.policy = ParseExecPolicy(root.String("policy"));
  } catch (const Error& e) {
    Fail("policy", e.detail());
  }
  const json& orders = AsArray(root.Need("orders"), "orders");
  for (std::size_t i = 0; i < orders.size(); ++i) {
    Fields f(orders[i], Index("orders", i));
    RankKey key{SectionId(f.String("section")), static_cast<int>(f.Int("rank"))};
    std::vector<std::uint64_t> ids;
    const json& arr = AsArray(f.Need("samples"), f.Path("samples"));
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const auto v = AsInt(arr[k], Index(f.Path("samples"), k));
      if (v < 0) Fail(Index(f.Path("samples"), k), "must be non-negative");
      ids.push_back(static_cast<std::uint64_t>(v));
    }
    f.Done();
    if (!schedule.per_rank_orders.emplace(key, std::move(ids)).second) {
      Fail(Index("orders", i), "duplicate section/rank");
    }
  }
  const json& summary = AsArray(root.Need("critical_summary"), "critical_summary");
  for (std::size_t i = 0; i < summary.size(); ++i) {
    Fields f(summary[i], Index("critical_summary", i));
    schedule.critical_summary[static_cast<int>(f.Int("rank"))] = {f.Double("makespan"),
                                                                   f.Double("critical_idle")};
    f.Done();
  }
  root.Done();
  return schedule;
}

std::string ReportToJson(const IterationReport& report) {
  ordered_json resources = ordered_json::array();
  for (const auto& [key, busy] : report.busy_time) {
    resources.push_back({{"section", key.section.str()},
                         {"rank", key.rank},
                         {"busy", busy},
                         {"idle", report.idle_time.at(key)}});
  }
  ordered_json per_rank = ordered_json::array();
  for (const auto& [rank, idle] : report.critical_idle_per_rank) {
    per_rank.push_back({{"rank", rank}, {"critical_idle", idle}});
  }
  ordered_json comm = ordered_json::array();
  for (const auto& c : report.comm_events) {
    comm.push_back({{"edge", c.from.str() + " -> " + c.to.str()},
                    {"sample_id", c.sample_id},
                    {"bytes", c.bytes},
                    {"start", c.start},
                    {"end", c.end}});
  }
  ordered_json doc = {{"schema", "maestro-report v1"},
                      {"makespan", report.makespan},
                      {"fill_drain", report.fill_drain},
                      {"critical_idle", report.critical_idle},
                      {"critical_idle_per_rank", per_rank},
                      {"resources", resources},
                      {"comm_events", comm}};
  return doc.dump(2) + "\n";
}

std::string TraceToJson(const std::vector<StageEvent>& events) {
  std::ostringstream out;
  WriteTrace(events, out);
  return out.str();
}

}  // namespace maestro
