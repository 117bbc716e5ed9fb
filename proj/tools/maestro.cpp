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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "maestro/maestro.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitInfeasible = 3;

int ExitCodeFor(maestro_status status) {
  switch (status) {
    case MAESTRO_OK:
      return kExitOk;
    case MAESTRO_NO_FEASIBLE_CONFIG:
    case MAESTRO_CANNOT_AVOID_STALL:
      return kExitInfeasible;
    case MAESTRO_CYCLE_DETECTED:
    case MAESTRO_DUPLICATE_SECTION:
    case MAESTRO_NO_CRITICAL_SECTION:
    case MAESTRO_MULTIPLE_CRITICAL_SECTIONS:
    case MAESTRO_UNKNOWN_SECTION:
    case MAESTRO_INVALID_GRAPH:
    case MAESTRO_EDGE_NOT_FOUND:
    case MAESTRO_INVALID_DIMS:
    case MAESTRO_BOTH_ACTIVATED:
    case MAESTRO_INVALID_CONFIG:
    case MAESTRO_FANOUT_VIOLATION:
    case MAESTRO_NEGATIVE_TIME:
    case MAESTRO_EMPTY_BATCH:
    case MAESTRO_PARSE_ERROR:
      return kExitInvalid;
    default:
      return kExitFailure;
  }
}

std::string JsonEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// Thrown by Check so commands can unwind through RAII handles.
struct Failure {
  int exit_code;
};

void Check(maestro_status status, const char* stage) {
  if (status == MAESTRO_OK) return;
  std::cerr << "{\"stage\":\"" << stage << "\",\"status\":\""
            << maestro_status_name(status) << "\",\"message\":\""
            << JsonEscape(maestro_last_error()) << "\"}\n";
  throw Failure{ExitCodeFor(status)};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Spec = Handle<maestro_spec, maestro_spec_free>;
using Plan = Handle<maestro_plan, maestro_plan_free>;
using Sched = Handle<maestro_schedule, maestro_schedule_free>;
using Report = Handle<maestro_report, maestro_report_free>;

struct Text {
  char* s = nullptr;
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { maestro_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

std::string Slurp(const std::string& path, const char* stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "{\"stage\":\"" << stage << "\",\"status\":\"IoError\",\"message\":\"cannot open "
              << JsonEscape(path) << "\"}\n";
    throw Failure{kExitFailure};
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Spit(const std::string& path, const std::string& contents, const char* stage) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  out.flush();
  if (!out) {
    std::cerr << "{\"stage\":\"" << stage << "\",\"status\":\"IoError\",\"message\":\"cannot write "
              << JsonEscape(path) << "\"}\n";
    throw Failure{kExitFailure};
  }
}

struct Flags {
  std::string spec_path;
  std::string policy = "interleaved";
  std::string comm = "zero";
  int cp_cap = 0;
  std::uint64_t seed = 0;
  std::string trace;
  std::string plan;
  std::string schedule;
  std::string out_dir = ".";
  bool earliest_ready = false;
  bool quiet = false;
};

maestro_options Options(const Flags& f) {
  maestro_options o;
  maestro_options_init(&o);
  o.policy = f.policy.c_str();
  o.comm = f.comm.c_str();
  o.cp_cap = f.cp_cap;
  o.seed = f.seed;
  o.earliest_ready = f.earliest_ready ? 1 : 0;
  return o;
}

std::string OutPath(const Flags& f, const char* name) {
  return (std::filesystem::path(f.out_dir) / name).string();
}

void LoadSpec(const Flags& f, Spec& spec) {
  Check(maestro_spec_load(f.spec_path.c_str(), &spec.p), "validate");
}

void Print(const Flags& f, const std::string& s) {
  if (!f.quiet) std::cout << s;
}

void Optimize(const Flags& f, const Spec& spec, Plan& plan) {
  const maestro_options o = Options(f);
  Check(maestro_optimize(spec.p, &o, &plan.p), "optimize");
  Text json, table;
  Check(maestro_plan_json(plan.p, &json.s), "optimize");
  Check(maestro_plan_table(plan.p, &table.s), "optimize");
  Spit(OutPath(f, "plan.json"), json.str(), "optimize");
  Print(f, table.str());
}

void LoadOrOptimize(const Flags& f, const Spec& spec, Plan& plan) {
  if (f.plan.empty()) {
    Optimize(f, spec, plan);
    return;
  }
  const std::string text = Slurp(f.plan, "optimize");
  Check(maestro_plan_parse(spec.p, text.data(), text.size(), &plan.p), "optimize");
}

void BuildSchedule(const Flags& f, const Spec& spec, const Plan& plan, Sched& sched) {
  const maestro_options o = Options(f);
  Check(maestro_schedule_build(spec.p, plan.p, &o, &sched.p), "schedule");
  Text json, table;
  Check(maestro_schedule_json(sched.p, &json.s), "schedule");
  Check(maestro_schedule_table(sched.p, &table.s), "schedule");
  Spit(OutPath(f, "schedule.json"), json.str(), "schedule");
  Print(f, table.str());
}

void Simulate(const Flags& f, const Spec& spec, const Plan& plan, const Sched& sched,
              const std::string& trace_path) {
  const maestro_options o = Options(f);
  Report report;
  Check(maestro_simulate(spec.p, plan.p, sched.p, &o, &report.p), "simulate");
  Text json, table;
  Check(maestro_report_json(report.p, &json.s), "simulate");
  Check(maestro_report_table(report.p, &table.s), "simulate");
  Spit(OutPath(f, "report.json"), json.str(), "simulate");
  if (!trace_path.empty()) {
    Check(maestro_report_write_trace(report.p, trace_path.c_str()), "simulate");
  }
  Print(f, table.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maestro: plan, schedule and simulate compound training workloads"};
  app.require_subcommand(1);
  Flags f;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("spec", f.spec_path, "workload spec file")->required();
    cmd->add_flag("-q,--quiet", f.quiet, "suppress tables on stdout");
  };
  auto add_run = [&](CLI::App* cmd) {
    cmd->add_option("--out-dir", f.out_dir, "directory for plan/schedule/report files");
    cmd->add_option("--seed", f.seed, "seed for generated batches");
    cmd->add_option("--cp-cap", f.cp_cap, "largest context-parallel degree searched")
        ->check(CLI::PositiveNumber);
  };
  auto add_policy = [&](CLI::App* cmd) {
    cmd->add_option("--policy", f.policy, "stage order on critical/downstream ranks")
        ->check(CLI::IsMember({"interleaved", "all-fwd-then-bwd"}));
  };
  auto add_sim = [&](CLI::App* cmd) {
    cmd->add_option("--comm", f.comm, "edge transfer model: zero or linear:<GBps>");
    cmd->add_option("--trace", f.trace, "write a chrome trace here");
    cmd->add_flag("--earliest-ready", f.earliest_ready,
                  "auxiliaries run whichever stage is ready first");
  };

  auto* validate = app.add_subcommand("validate", "check a spec file");
  add_common(validate);
  auto* optimize = app.add_subcommand("optimize", "choose per-section configs");
  add_common(optimize);
  add_run(optimize);
  auto* schedule = app.add_subcommand("schedule", "order samples per rank");
  add_common(schedule);
  add_run(schedule);
  add_policy(schedule);
  schedule->add_option("--plan", f.plan, "plan file (optimizes when omitted)");
  auto* simulate = app.add_subcommand("simulate", "run one iteration");
  add_common(simulate);
  add_run(simulate);
  add_sim(simulate);
  simulate->add_option("--plan", f.plan, "plan file")->required();
  simulate->add_option("--schedule", f.schedule, "schedule file")->required();
  auto* end2end = app.add_subcommand("end2end", "optimize, schedule and simulate");
  add_common(end2end);
  add_run(end2end);
  add_policy(end2end);
  add_sim(end2end);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*optimize || *schedule || *simulate || *end2end) {
      std::error_code ec;
      std::filesystem::create_directories(f.out_dir, ec);
    }
    Spec spec;
    LoadSpec(f, spec);
    if (*validate) {
      Text desc;
      Check(maestro_spec_describe(spec.p, &desc.s), "validate");
      Print(f, desc.str());
      Print(f, "valid\n");
    } else if (*optimize) {
      Plan plan;
      Optimize(f, spec, plan);
    } else if (*schedule) {
      Plan plan;
      Sched sched;
      LoadOrOptimize(f, spec, plan);
      BuildSchedule(f, spec, plan, sched);
    } else if (*simulate) {
      Plan plan;
      Sched sched;
      LoadOrOptimize(f, spec, plan);
      const std::string text = Slurp(f.schedule, "simulate");
      Check(maestro_schedule_parse(text.data(), text.size(), &sched.p), "simulate");
      Simulate(f, spec, plan, sched, f.trace);
    } else if (*end2end) {
      Plan plan;
      Sched sched;
      Optimize(f, spec, plan);
      BuildSchedule(f, spec, plan, sched);
      Simulate(f, spec, plan, sched, f.trace.empty() ? OutPath(f, "trace.json") : f.trace);
    }
  } catch (const Failure& failure) {
    return failure.exit_code;
  }
  return kExitOk;
}
