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

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <string>

#include "maestro/error.hpp"
#include "maestro/pipeline.hpp"

namespace maestro {
namespace {

std::string Workload(const std::string& name) {
  return std::string(MAESTRO_WORKLOADS_DIR) + "/" + name + ".spec";
}

Error Failure(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorCode::kInvalidArgument, "none");
}

std::string Patched(const std::string& from, const std::string& to) {
  std::string text = ReadFile(Workload("vlm_fanout4"));
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return text.replace(at, from.size(), to);
}

TEST(ParseSpec, ShippedWorkloads) {
  for (const char* name : {"vlm_fanout4", "distill_toy", "omni_toy"}) {
    SCOPED_TRACE(name);
    const WorkloadSpec spec = LoadSpec(Workload(name));
    EXPECT_TRUE(spec.graph.has_value());
    EXPECT_TRUE(spec.samples.has_value() != spec.generate.has_value());
  }
  const WorkloadSpec omni = LoadSpec(Workload("omni_toy"));
  EXPECT_TRUE(omni.Graph().Contains(SectionId("encoders")));
  EXPECT_FALSE(omni.Graph().Contains(SectionId("vision")));
}

TEST(ParseSpec, UnknownFieldNamesItsPath) {
  const Error e = Failure([] { ParseSpec(Patched("\"total_gpus\": 8", "\"total_gpus\": 8, \"gpus\": 1")); });
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(e.detail().find("cluster"), std::string::npos);
  EXPECT_NE(e.detail().find("gpus"), std::string::npos);
}

TEST(ParseSpec, TruncatedFileReportsLine) {
  std::string text = ReadFile(Workload("vlm_fanout4"));
  text.resize(text.size() / 2);
  const Error e = Failure([&] { ParseSpec(text); });
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_NE(e.detail().find("line"), std::string::npos);
}

TEST(ParseSpec, WrongSchema) {
  EXPECT_EQ(Failure([] { ParseSpec(Patched("maestro-spec v1", "maestro-spec v9")); }).code(),
            ErrorCode::kParseError);
}

TEST(ParseSpec, PinnedFanoutViolation) {
  const Error e =
      Failure([] { ParseSpec(Patched("\"dp\": 1, \"fanout\": 4", "\"dp\": 1, \"fanout\": 2")); });
  EXPECT_EQ(e.code(), ErrorCode::kFanoutViolation);
  EXPECT_NE(e.detail().find("vit -> llm"), std::string::npos);
}

TEST(ParseSpec, GraphErrorsSurface) {
  EXPECT_EQ(Failure([] { ParseSpec(Patched("\"role\": \"critical\"", "\"role\": \"auxiliary\"")); })
                .code(),
            ErrorCode::kNoCriticalSection);
  EXPECT_EQ(Failure([] { ParseSpec(Patched("\"to\": \"llm\"", "\"to\": \"nope\"")); }).code(),
            ErrorCode::kUnknownSection);
  EXPECT_EQ(Failure([] { LoadSpec("/nonexistent/x.spec"); }).code(), ErrorCode::kIoError);
}

TEST(PlanJson, RoundTrip) {
  const WorkloadSpec spec = LoadSpec(Workload("distill_toy"));
  const AllocationPlan plan = OptimizePlan(spec);
  const AllocationPlan back = PlanFromJson(PlanToJson(plan));
  EXPECT_EQ(PlanToJson(back), PlanToJson(plan));
  for (const auto& [id, sp] : plan.per_section) {
    EXPECT_EQ(back.per_section.at(id).config, sp.config);
  }
  EXPECT_EQ(Failure([] { PlanFromJson("{\"schema\": \"maestro-plan v1\"}"); }).code(),
            ErrorCode::kParseError);
}

TEST(ScheduleJson, RoundTripKeepsSeed) {
  const WorkloadSpec spec = LoadSpec(Workload("vlm_fanout4"));
  const Bundle b = RunEnd2End(spec);
  std::uint64_t seed = 0;
  const Schedule back = ScheduleFromJson(ScheduleToJson(b.schedule, 31), &seed);
  EXPECT_EQ(seed, 31u);
  EXPECT_EQ(back.per_rank_orders, b.schedule.per_rank_orders);
  EXPECT_EQ(back.policy, b.schedule.policy);
}

TEST(End2End, WorkedExampleHasNoCriticalIdle) {
  const Bundle b = RunEnd2End(LoadSpec(Workload("vlm_fanout4")));
  EXPECT_DOUBLE_EQ(b.simulation.report.makespan, 9.0);
  EXPECT_DOUBLE_EQ(b.simulation.report.critical_idle, 0.0);
  for (int r = 0; r < 4; ++r) {
    EXPECT_DOUBLE_EQ(b.simulation.report.critical_idle_per_rank.at(r), 0.0);
  }
  const auto& vit = b.schedule.per_rank_orders.at({SectionId("vit"), 0});
  EXPECT_EQ(vit.size(), 4u);
}

TEST(End2End, DistillationTeacherFansOut) {
  const WorkloadSpec spec = LoadSpec(Workload("distill_toy"));
  const AllocationPlan plan = OptimizePlan(spec);
  const auto& teacher = plan.per_section.at(SectionId("teacher"));
  const auto& student = plan.per_section.at(SectionId("student"));
  EXPECT_GT(teacher.config.fanout, 1);
  EXPECT_EQ(teacher.config.dp * teacher.config.fanout, student.config.dp);
  // Per sample, the teacher forward is cheap enough to serve `fanout` students.
  const double teacher_fwd = teacher.step.forward / teacher.config.mbs;
  const double student_step = student.step.total() / student.config.mbs;
  EXPECT_LT(teacher_fwd, student_step);
  EXPECT_LE(teacher.iteration_time, student.iteration_time);
}

TEST(End2End, SeedDeterminism) {
  const WorkloadSpec spec = LoadSpec(Workload("omni_toy"));
  RunOptions a, c;
  a.seed = 5;
  c.seed = 6;
  const Bundle x = RunEnd2End(spec, a), y = RunEnd2End(spec, a), z = RunEnd2End(spec, c);
  EXPECT_EQ(ReportToJson(x.simulation.report), ReportToJson(y.simulation.report));
  EXPECT_EQ(TraceToJson(x.simulation.events), TraceToJson(y.simulation.events));
  EXPECT_NE(ScheduleToJson(x.schedule, 5), ScheduleToJson(z.schedule, 5));
}

TEST(End2End, StagePrefixOnFailure) {
  WorkloadSpec spec = LoadSpec(Workload("distill_toy"));
  spec.cluster.total_gpus = 1;
  const Error e = Failure([&] { RunEnd2End(spec); });
  EXPECT_EQ(e.detail().rfind("optimize: ", 0), 0u) << e.detail();
}

}  // namespace
}  // namespace maestro
