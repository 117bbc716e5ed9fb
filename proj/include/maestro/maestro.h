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

/* C interface to the maestro planning toolkit. Every function returns a
 * maestro_status; on failure maestro_last_error() describes it. Strings
 * returned through char** are owned by the caller and released with
 * maestro_string_free. */
#ifndef MAESTRO_MAESTRO_H_
#define MAESTRO_MAESTRO_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MAESTRO_API __declspec(dllexport)
#else
#define MAESTRO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum maestro_status {
  MAESTRO_OK = 0,
  MAESTRO_CYCLE_DETECTED,
  MAESTRO_DUPLICATE_SECTION,
  MAESTRO_NO_CRITICAL_SECTION,
  MAESTRO_MULTIPLE_CRITICAL_SECTIONS,
  MAESTRO_UNKNOWN_SECTION,
  MAESTRO_INVALID_GRAPH,
  MAESTRO_EDGE_NOT_FOUND,
  MAESTRO_INVALID_DIMS,
  MAESTRO_BOTH_ACTIVATED,
  MAESTRO_INVALID_CONFIG,
  MAESTRO_INVALID_ARGUMENT,
  MAESTRO_NO_FEASIBLE_CONFIG,
  MAESTRO_CANNOT_AVOID_STALL,
  MAESTRO_FANOUT_VIOLATION,
  MAESTRO_NEGATIVE_TIME,
  MAESTRO_EMPTY_BATCH,
  MAESTRO_FANOUT_MISMATCH,
  MAESTRO_INCONSISTENT_SCHEDULE,
  MAESTRO_DEPENDENCY_DEADLOCK,
  MAESTRO_INCOMPATIBLE_SHAPES,
  MAESTRO_CHANNEL_CLOSED,
  MAESTRO_SLOT_EXHAUSTED,
  MAESTRO_FRAGMENT_TIMEOUT,
  MAESTRO_PROTOCOL_ERROR,
  MAESTRO_PARSE_ERROR,
  MAESTRO_IO_ERROR,
  MAESTRO_INTERNAL = 100
} maestro_status;

typedef struct maestro_spec maestro_spec;
typedef struct maestro_plan maestro_plan;
typedef struct maestro_schedule maestro_schedule;
typedef struct maestro_report maestro_report;

typedef struct maestro_options {
  const char* policy;  /* "interleaved" (default) or "all-fwd-then-bwd" */
  const char* comm;    /* "zero" (default) or "linear:<GBps>" */
  uint64_t seed;
  int cp_cap;          /* 0 keeps the spec's value */
  int earliest_ready;  /* nonzero: auxiliaries run whatever is ready first */
} maestro_options;

MAESTRO_API void maestro_options_init(maestro_options* options);

/* Message of the last failure on this thread, "" if none. */
MAESTRO_API const char* maestro_last_error(void);
MAESTRO_API const char* maestro_status_name(maestro_status status);
MAESTRO_API void maestro_string_free(char* str);

MAESTRO_API maestro_status maestro_spec_load(const char* path, maestro_spec** out);
MAESTRO_API maestro_status maestro_spec_parse(const char* text, size_t length,
                                              maestro_spec** out);
/* Human-readable summary of sections, placement and edges. */
MAESTRO_API maestro_status maestro_spec_describe(const maestro_spec* spec, char** out);
MAESTRO_API void maestro_spec_free(maestro_spec* spec);

MAESTRO_API maestro_status maestro_optimize(const maestro_spec* spec,
                                            const maestro_options* options,
                                            maestro_plan** out);
/* Parses a plan file and checks it against the spec's graph and cluster. */
MAESTRO_API maestro_status maestro_plan_parse(const maestro_spec* spec, const char* text,
                                              size_t length, maestro_plan** out);
MAESTRO_API maestro_status maestro_plan_json(const maestro_plan* plan, char** out);
MAESTRO_API maestro_status maestro_plan_table(const maestro_plan* plan, char** out);
MAESTRO_API void maestro_plan_free(maestro_plan* plan);

MAESTRO_API maestro_status maestro_schedule_build(const maestro_spec* spec,
                                                  const maestro_plan* plan,
                                                  const maestro_options* options,
                                                  maestro_schedule** out);
MAESTRO_API maestro_status maestro_schedule_parse(const char* text, size_t length,
                                                  maestro_schedule** out);
MAESTRO_API maestro_status maestro_schedule_json(const maestro_schedule* schedule,
                                                 char** out);
MAESTRO_API maestro_status maestro_schedule_table(const maestro_schedule* schedule,
                                                  char** out);
MAESTRO_API uint64_t maestro_schedule_seed(const maestro_schedule* schedule);
MAESTRO_API void maestro_schedule_free(maestro_schedule* schedule);

/* Uses the schedule's seed for batch generation; policy comes from the
 * schedule, comm and dispatch from options. */
MAESTRO_API maestro_status maestro_simulate(const maestro_spec* spec,
                                            const maestro_plan* plan,
                                            const maestro_schedule* schedule,
                                            const maestro_options* options,
                                            maestro_report** out);
MAESTRO_API maestro_status maestro_report_json(const maestro_report* report, char** out);
MAESTRO_API maestro_status maestro_report_table(const maestro_report* report, char** out);
MAESTRO_API maestro_status maestro_report_trace(const maestro_report* report, char** out);
MAESTRO_API maestro_status maestro_report_write_trace(const maestro_report* report,
                                                      const char* path);
MAESTRO_API double maestro_report_makespan(const maestro_report* report);
MAESTRO_API double maestro_report_critical_idle(const maestro_report* report);
MAESTRO_API void maestro_report_free(maestro_report* report);

#ifdef __cplusplus
}
#endif

#endif /* MAESTRO_MAESTRO_H_ */
