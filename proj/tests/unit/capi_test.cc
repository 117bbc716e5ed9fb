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

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

namespace {

std::string Workload(const char* name) {
  return std::string(MAESTRO_WORKLOADS_DIR) + "/" + name + ".spec";
}

std::string Take(char* s) {
  std::string out = s ? s : "";
  maestro_string_free(s);
  return out;
}

TEST(CApi, FullRun) {
  maestro_spec* spec = nullptr;
  ASSERT_EQ(maestro_spec_load(Workload("vlm_fanout4").c_str(), &spec), MAESTRO_OK);
  maestro_options opts;
  maestro_options_init(&opts);
  opts.seed = 3;

  maestro_plan* plan = nullptr;
  ASSERT_EQ(maestro_optimize(spec, &opts, &plan), MAESTRO_OK);
  maestro_schedule* sched = nullptr;
  ASSERT_EQ(maestro_schedule_build(spec, plan, &opts, &sched), MAESTRO_OK);
  EXPECT_EQ(maestro_schedule_seed(sched), 3u);
  maestro_report* report = nullptr;
  ASSERT_EQ(maestro_simulate(spec, plan, sched, &opts, &report), MAESTRO_OK);
  EXPECT_DOUBLE_EQ(maestro_report_makespan(report), 9.0);
  EXPECT_DOUBLE_EQ(maestro_report_critical_idle(report), 0.0);

  char* text = nullptr;
  ASSERT_EQ(maestro_report_json(report, &text), MAESTRO_OK);
  EXPECT_NE(Take(text).find("maestro-report v1"), std::string::npos);
  ASSERT_EQ(maestro_plan_table(plan, &text), MAESTRO_OK);
  EXPECT_NE(Take(text).find("llm"), std::string::npos);
  ASSERT_EQ(maestro_report_trace(report, &text), MAESTRO_OK);
  EXPECT_NE(Take(text).find("traceEvents"), std::string::npos);

  ASSERT_EQ(maestro_plan_json(plan, &text), MAESTRO_OK);
  const std::string plan_json = Take(text);
  maestro_plan* reparsed = nullptr;
  ASSERT_EQ(maestro_plan_parse(spec, plan_json.data(), plan_json.size(), &reparsed), MAESTRO_OK);
  ASSERT_EQ(maestro_plan_json(reparsed, &text), MAESTRO_OK);
  EXPECT_EQ(Take(text), plan_json);

  ASSERT_EQ(maestro_schedule_json(sched, &text), MAESTRO_OK);
  const std::string sched_json = Take(text);
  maestro_schedule* sched2 = nullptr;
  ASSERT_EQ(maestro_schedule_parse(sched_json.data(), sched_json.size(), &sched2), MAESTRO_OK);
  EXPECT_EQ(maestro_schedule_seed(sched2), 3u);

  maestro_schedule_free(sched2);
  maestro_plan_free(reparsed);
  maestro_report_free(report);
  maestro_schedule_free(sched);
  maestro_plan_free(plan);
  maestro_spec_free(spec);
}

TEST(CApi, ErrorsBecomeStatusCodes) {
  maestro_spec* spec = nullptr;
  EXPECT_EQ(maestro_spec_load("/nonexistent/spec", &spec), MAESTRO_IO_ERROR);
  EXPECT_EQ(spec, nullptr);
  EXPECT_NE(std::strlen(maestro_last_error()), 0u);

  const char* bad = "{\"schema\": \"maestro-spec v1\", \"sections\": [";
  EXPECT_EQ(maestro_spec_parse(bad, std::strlen(bad), &spec), MAESTRO_PARSE_ERROR);
  EXPECT_STREQ(maestro_status_name(MAESTRO_PARSE_ERROR), "ParseError");
  EXPECT_EQ(maestro_spec_parse(nullptr, 0, &spec), MAESTRO_INVALID_ARGUMENT);
}

TEST(CApi, PlanParseChecksFanout) {
  maestro_spec* spec = nullptr;
  ASSERT_EQ(maestro_spec_load(Workload("vlm_fanout4").c_str(), &spec), MAESTRO_OK);
  maestro_plan* plan = nullptr;
  ASSERT_EQ(maestro_optimize(spec, nullptr, &plan), MAESTRO_OK);
  char* text = nullptr;
  ASSERT_EQ(maestro_plan_json(plan, &text), MAESTRO_OK);
  std::string json = Take(text);
  const auto at = json.find("\"fanout\": 4");
  ASSERT_NE(at, std::string::npos) << json;
  json.replace(at, 11, "\"fanout\": 2");
  maestro_plan* broken = nullptr;
  EXPECT_EQ(maestro_plan_parse(spec, json.data(), json.size(), &broken),
            MAESTRO_FANOUT_VIOLATION);
  maestro_plan_free(plan);
  maestro_spec_free(spec);
}

TEST(CApi, WritesTrace) {
  maestro_spec* spec = nullptr;
  ASSERT_EQ(maestro_spec_load(Workload("omni_toy").c_str(), &spec), MAESTRO_OK);
  maestro_plan* plan = nullptr;
  maestro_schedule* sched = nullptr;
  maestro_report* report = nullptr;
  ASSERT_EQ(maestro_optimize(spec, nullptr, &plan), MAESTRO_OK);
  ASSERT_EQ(maestro_schedule_build(spec, plan, nullptr, &sched), MAESTRO_OK);
  ASSERT_EQ(maestro_simulate(spec, plan, sched, nullptr, &report), MAESTRO_OK);
  const auto path = std::filesystem::temp_directory_path() / "maestro_capi_trace.json";
  ASSERT_EQ(maestro_report_write_trace(report, path.c_str()), MAESTRO_OK);
  EXPECT_GT(std::filesystem::file_size(path), 0u);
  std::filesystem::remove(path);
  EXPECT_EQ(maestro_report_write_trace(report, "/nonexistent/dir/t.json"), MAESTRO_IO_ERROR);
  maestro_report_free(report);
  maestro_schedule_free(sched);
  maestro_plan_free(plan);
  maestro_spec_free(spec);
}

}  // namespace
