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

#include "maestro/maestro.h"

#include <cstdlib>
#include <cstring>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>

#include "maestro/error.hpp"
#include "maestro/pipeline.hpp"
#include "maestro/spec_io.hpp"

struct maestro_spec {
  maestro::WorkloadSpec spec;
};
struct maestro_plan {
  maestro::AllocationPlan plan;
};
struct maestro_schedule {
  maestro::Schedule schedule;
  std::uint64_t seed = 0;
};
struct maestro_report {
  maestro::SimulationResult result;
};

namespace {

using maestro::Error;
using maestro::ErrorCode;

static_assert(static_cast<int>(ErrorCode::kIoError) + 1 == MAESTRO_IO_ERROR);

thread_local std::string last_error;

template <typename Fn>
maestro_status Guard(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return MAESTRO_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<maestro_status>(static_cast<int>(e.code()) + 1);
  } catch (const std::exception& e) {
    last_error = std::string("internal: ") + e.what();
  } catch (...) {
    last_error = "internal: unknown exception";
  }
  return MAESTRO_INTERNAL;
}

void Require(const void* p, const char* what) {
  if (p == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is null");
  }
}

char* Dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

maestro::RunOptions ToRun(const maestro_options* o) {
  maestro::RunOptions run;
  if (o == nullptr) return run;
  if (o->policy) run.policy = maestro::ParseExecPolicy(o->policy);
  if (o->comm) run.simulation.comm = maestro::ParseCommModel(o->comm);
  if (o->earliest_ready) run.simulation.aux_dispatch = maestro::AuxDispatch::kEarliestReady;
  run.seed = o->seed;
  if (o->cp_cap < 0) throw Error(ErrorCode::kInvalidArgument, "cp_cap must be >= 1");
  if (o->cp_cap > 0) run.cp_cap = o->cp_cap;
  return run;
}

std::string PlacementName(maestro::Placement p) {
  switch (p) {
    case maestro::Placement::kUpstream:
      return "upstream";
    case maestro::Placement::kCritical:
      return "critical";
    case maestro::Placement::kDownstream:
      return "downstream";
  }
  return "?";
}

}  // namespace

extern "C" {

void maestro_options_init(maestro_options* options) {
  if (options == nullptr) return;
  options->policy = "interleaved";
  options->comm = "zero";
  options->seed = 0;
  options->cp_cap = 0;
  options->earliest_ready = 0;
}

const char* maestro_last_error(void) { return last_error.c_str(); }

const char* maestro_status_name(maestro_status status) {
  if (status == MAESTRO_OK) return "Ok";
  if (status == MAESTRO_INTERNAL) return "Internal";
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(ErrorCode::kIoError)) return "Unknown";
  return maestro::ErrorCodeName(static_cast<ErrorCode>(code)).data();
}

void maestro_string_free(char* str) { std::free(str); }

maestro_status maestro_spec_load(const char* path, maestro_spec** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new maestro_spec{maestro::LoadSpec(path)};
  });
}

maestro_status maestro_spec_parse(const char* text, size_t length, maestro_spec** out) {
  return Guard([&] {
    Require(text, "text");
    Require(out, "out");
    *out = new maestro_spec{maestro::ParseSpec(std::string_view(text, length))};
  });
}

maestro_status maestro_spec_describe(const maestro_spec* spec, char** out) {
  return Guard([&] {
    Require(spec, "spec");
    Require(out, "out");
    const auto& g = spec->spec.Graph();
    std::ostringstream ss;
    ss << "sections:\n";
    for (const auto& id : g.TopologicalOrder()) {
      const auto& s = g.Section(id);
      ss << "  " << std::left << std::setw(24) << id.str() << std::setw(11)
         << PlacementName(g.PlacementOf(id)) << maestro::ExecModeName(s.exec_mode);
      if (auto pin = spec->spec.pinned.find(id); pin != spec->spec.pinned.end()) {
        const auto& c = pin->second;
        ss << "  pinned dp=" << c.dp << " tp=" << c.tp << " pp=" << c.pp << " cp=" << c.cp
           << " mbs=" << c.mbs << " fanout=" << c.fanout;
      }
      ss << "\n";
    }
    ss << "edges:\n";
    for (const auto& e : g.edges()) {
      ss << "  " << e.from.str() << " -> " << e.to.str() << "  "
         << e.payload_bytes_per_sample << " B/sample\n";
    }
    ss << "cluster: " << spec->spec.cluster.total_gpus << " GPUs x "
       << spec->spec.cluster.mem_per_gpu / 1e9 << " GB\n";
    if (spec->spec.samples) {
      ss << "batch: " << spec->spec.samples->size() << " explicit samples\n";
    } else {
      ss << "batch: " << spec->spec.generate->count << " generated samples\n";
    }
    *out = Dup(ss.str());
  });
}

void maestro_spec_free(maestro_spec* spec) { delete spec; }

maestro_status maestro_optimize(const maestro_spec* spec, const maestro_options* options,
                                maestro_plan** out) {
  return Guard([&] {
    Require(spec, "spec");
    Require(out, "out");
    *out = new maestro_plan{maestro::OptimizePlan(spec->spec, ToRun(options))};
  });
}

maestro_status maestro_plan_parse(const maestro_spec* spec, const char* text,
                                  size_t length, maestro_plan** out) {
  return Guard([&] {
    Require(spec, "spec");
    Require(text, "text");
    Require(out, "out");
    auto plan = maestro::PlanFromJson(std::string_view(text, length));
    maestro::CheckPlan(spec->spec.Graph(), spec->spec.cluster, plan);
    *out = new maestro_plan{std::move(plan)};
  });
}

maestro_status maestro_plan_json(const maestro_plan* plan, char** out) {
  return Guard([&] {
    Require(plan, "plan");
    Require(out, "out");
    *out = Dup(maestro::PlanToJson(plan->plan));
  });
}

maestro_status maestro_plan_table(const maestro_plan* plan, char** out) {
  return Guard([&] {
    Require(plan, "plan");
    Require(out, "out");
    std::ostringstream ss;
    ss << std::left << std::setw(24) << "section" << std::right << std::setw(5) << "dp"
       << std::setw(5) << "tp" << std::setw(5) << "pp" << std::setw(5) << "cp"
       << std::setw(5) << "mbs" << std::setw(8) << "fanout" << std::setw(7) << "gpus"
       << std::setw(11) << "mem(GB)" << std::setw(14) << "iter_time" << "\n";
    for (const auto& [id, sp] : plan->plan.per_section) {
      const auto& c = sp.config;
      ss << std::left << std::setw(24) << id.str() << std::right << std::setw(5) << c.dp
         << std::setw(5) << c.tp << std::setw(5) << c.pp << std::setw(5) << c.cp
         << std::setw(5) << c.mbs << std::setw(8) << c.fanout << std::setw(7) << sp.gpus
         << std::setw(11) << std::fixed << std::setprecision(2) << sp.memory.total / 1e9
         << std::setw(14) << std::setprecision(6) << sp.iteration_time << "\n";
      ss.unsetf(std::ios::floatfield);
    }
    ss << "total GPUs: " << plan->plan.total_gpus_used
       << "  predicted iteration time: " << plan->plan.predicted_iteration_time << "\n";
    *out = Dup(ss.str());
  });
}

void maestro_plan_free(maestro_plan* plan) { delete plan; }

maestro_status maestro_schedule_build(const maestro_spec* spec, const maestro_plan* plan,
                                      const maestro_options* options,
                                      maestro_schedule** out) {
  return Guard([&] {
    Require(spec, "spec");
    Require(plan, "plan");
    Require(out, "out");
    const auto run = ToRun(options);
    *out = new maestro_schedule{maestro::MakeSchedule(spec->spec, plan->plan, run), run.seed};
  });
}

maestro_status maestro_schedule_parse(const char* text, size_t length,
                                      maestro_schedule** out) {
  return Guard([&] {
    Require(text, "text");
    Require(out, "out");
    auto s = std::make_unique<maestro_schedule>();
    s->schedule = maestro::ScheduleFromJson(std::string_view(text, length), &s->seed);
    *out = s.release();
  });
}

maestro_status maestro_schedule_json(const maestro_schedule* schedule, char** out) {
  return Guard([&] {
    Require(schedule, "schedule");
    Require(out, "out");
    *out = Dup(maestro::ScheduleToJson(schedule->schedule, schedule->seed));
  });
}

maestro_status maestro_schedule_table(const maestro_schedule* schedule, char** out) {
  return Guard([&] {
    Require(schedule, "schedule");
    Require(out, "out");
    std::ostringstream ss;
    ss << "policy: " << maestro::ExecPolicyName(schedule->schedule.policy) << "\n";
    for (const auto& [key, ids] : schedule->schedule.per_rank_orders) {
      ss << "  " << key.section.str() << "[" << key.rank << "]:";
      for (auto id : ids) ss << " " << id;
      ss << "\n";
    }
    ss << std::left << std::setw(8) << "rank" << std::setw(14) << "makespan"
       << "critical_idle\n";
    for (const auto& [rank, s] : schedule->schedule.critical_summary) {
      ss << std::left << std::setw(8) << rank << std::setw(14) << s.makespan
         << s.critical_idle << "\n";
    }
    *out = Dup(ss.str());
  });
}

uint64_t maestro_schedule_seed(const maestro_schedule* schedule) {
  return schedule ? schedule->seed : 0;
}

void maestro_schedule_free(maestro_schedule* schedule) { delete schedule; }

maestro_status maestro_simulate(const maestro_spec* spec, const maestro_plan* plan,
                                const maestro_schedule* schedule,
                                const maestro_options* options, maestro_report** out) {
  return Guard([&] {
    Require(spec, "spec");
    Require(plan, "plan");
    Require(schedule, "schedule");
    Require(out, "out");
    auto run = ToRun(options);
    run.seed = schedule->seed;
    *out = new maestro_report{
        maestro::RunSimulation(spec->spec, plan->plan, schedule->schedule, run)};
  });
}

maestro_status maestro_report_json(const maestro_report* report, char** out) {
  return Guard([&] {
    Require(report, "report");
    Require(out, "out");
    *out = Dup(maestro::ReportToJson(report->result.report));
  });
}

maestro_status maestro_report_table(const maestro_report* report, char** out) {
  return Guard([&] {
    Require(report, "report");
    Require(out, "out");
    const auto& r = report->result.report;
    std::ostringstream ss;
    ss << "makespan: " << r.makespan << "  (fill/drain " << r.fill_drain << ")\n"
       << "critical idle: " << r.critical_idle << "\n";
    ss << std::left << std::setw(28) << "resource" << std::setw(14) << "busy"
       << std::setw(14) << "idle" << "util\n";
    for (const auto& [key, busy] : r.busy_time) {
      const std::string name = key.section.str() + "[" + std::to_string(key.rank) + "]";
      const double util = r.makespan > 0 ? busy / r.makespan : 0.0;
      ss << std::left << std::setw(28) << name << std::setw(14) << busy << std::setw(14)
         << r.idle_time.at(key) << std::fixed << std::setprecision(3) << util << "\n";
      ss.unsetf(std::ios::floatfield);
      ss << std::setprecision(6);
    }
    if (!r.comm_events.empty()) ss << "transfers: " << r.comm_events.size() << "\n";
    *out = Dup(ss.str());
  });
}

maestro_status maestro_report_trace(const maestro_report* report, char** out) {
  return Guard([&] {
    Require(report, "report");
    Require(out, "out");
    *out = Dup(maestro::TraceToJson(report->result.events));
  });
}

maestro_status maestro_report_write_trace(const maestro_report* report, const char* path) {
  return Guard([&] {
    Require(report, "report");
    Require(path, "path");
    maestro::ExportTrace(report->result.events, path);
  });
}

double maestro_report_makespan(const maestro_report* report) {
  return report ? report->result.report.makespan : 0.0;
}

double maestro_report_critical_idle(const maestro_report* report) {
  return report ? report->result.report.critical_idle : 0.0;
}

void maestro_report_free(maestro_report* report) { delete report; }

}  // extern "C"
