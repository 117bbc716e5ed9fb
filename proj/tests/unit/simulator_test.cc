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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <sstream>

#include "json.hpp"
#include "maestro/error.hpp"
#include "support/oracles.hpp"

namespace maestro {
namespace {

const StructuralParams kDims{64, 8, 8, 1000, 64, 1000};

SectionSpec Spec(const char* name, Role role = Role::kAuxiliary) {
  return {SectionId(name), role, ExecMode::kForwardBackward, kDims, {}};
}

class ThreeSection : public ::testing::Test {
 protected:
  ThreeSection()
      : graph_(SectionGraph::Build(
            {Spec("up"), Spec("crit", Role::kCritical), Spec("down")},
            {{SectionId("up"), SectionId("crit"), 4096.0},
             {SectionId("crit"), SectionId("down"), 1024.0}})) {
    for (const char* n : {"up", "crit", "down"}) configs_[SectionId(n)] = {};
  }

  std::vector<SampleTiming> Batch(std::mt19937_64& rng, int n) {
    auto rank = oracle::RandomSixTupleRank(rng, n);
    for (auto& s : rank) {
      if (s.at(Phase::kFwdBc) > 0 || s.at(Phase::kBwdAc) > 0) s.activated.insert(SectionId("up"));
      if (s.at(Phase::kFwdAc) > 0 || s.at(Phase::kBwdBc) > 0) s.activated.insert(SectionId("down"));
    }
    return ResolveBatch(graph_, rank);
  }

  Schedule InOrder(const std::vector<SampleTiming>& batch, ExecPolicy policy) {
    Schedule sched;
    sched.policy = policy;
    for (const auto& s : batch) {
      sched.per_rank_orders[{SectionId("crit"), 0}].push_back(s.sample_id);
      for (const char* aux : {"up", "down"}) {
        if (s.activated.count(SectionId(aux))) {
          sched.per_rank_orders[{SectionId(aux), 0}].push_back(s.sample_id);
        }
      }
    }
    return sched;
  }

  SectionGraph graph_;
  std::map<SectionId, SectionConfig> configs_;
};

TEST(Simulate, SingleSampleSingleSection) {
  const SectionGraph g = SectionGraph::Build({Spec("llm", Role::kCritical)}, {});
  SampleTiming s;
  s.times = {0, 1, 0, 0, 2, 0};
  const std::vector<SampleTiming> batch{s};
  Schedule sched;
  sched.per_rank_orders[{SectionId("llm"), 0}] = {0};
  const auto result = Simulate(g, {{SectionId("llm"), {}}}, sched, batch);
  EXPECT_DOUBLE_EQ(result.report.makespan, 3.0);
  EXPECT_DOUBLE_EQ(result.report.critical_idle, 0.0);
  EXPECT_DOUBLE_EQ(result.report.idle_time.at({SectionId("llm"), 0}), 0.0);
  ASSERT_EQ(result.events.size(), 2u);
  EXPECT_EQ(result.events[0].phase, Phase::kFwdC);
  EXPECT_DOUBLE_EQ(result.events[1].end, 3.0);
}

TEST_F(ThreeSection, AgreesWithMakespanModel) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto batch = Batch(rng, 1 + static_cast<int>(rng() % 10));
    const auto policy = (i % 2) ? ExecPolicy::kInterleaved : ExecPolicy::kAllForwardThenBackward;
    const auto sim = Simulate(graph_, configs_, InOrder(batch, policy), batch);
    EXPECT_EQ(sim.report.makespan, CalculateMakespan(batch, policy));
  }
}

TEST_F(ThreeSection, ConservationAndNoOverlap) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100; ++i) {
    const auto batch = Batch(rng, 2 + static_cast<int>(rng() % 8));
    const auto sim =
        Simulate(graph_, configs_, InOrder(batch, ExecPolicy::kInterleaved), batch);
    std::size_t positive = 0;
    for (const auto& s : batch) {
      positive += std::count_if(s.times.begin(), s.times.end(), [](double t) { return t > 0; });
    }
    EXPECT_EQ(sim.events.size(), positive);
    std::map<RankKey, std::vector<std::pair<double, double>>> tracks;
    for (const auto& e : sim.events) {
      EXPECT_GE(e.end, e.start);
      tracks[{e.section, e.dp_rank}].push_back({e.start, e.end});
    }
    for (auto& [key, spans] : tracks) {
      std::sort(spans.begin(), spans.end());
      for (std::size_t k = 1; k < spans.size(); ++k) EXPECT_LE(spans[k - 1].second, spans[k].first);
      EXPECT_DOUBLE_EQ(sim.report.busy_time.at(key) + sim.report.idle_time.at(key),
                       sim.report.makespan);
    }
  }
}

TEST_F(ThreeSection, CommunicationNeverShortens) {
  std::mt19937_64 rng(23);
  SimulationOptions slow;
  slow.comm = ParseCommModel("linear:0.000001");
  ASSERT_TRUE(slow.comm.has_value());
  for (int i = 0; i < 50; ++i) {
    const auto batch = Batch(rng, 4);
    const auto sched = InOrder(batch, ExecPolicy::kInterleaved);
    const auto free = Simulate(graph_, configs_, sched, batch);
    const auto costly = Simulate(graph_, configs_, sched, batch, slow);
    EXPECT_GE(costly.report.makespan, free.report.makespan);
    EXPECT_TRUE(free.report.comm_events.empty());
  }
}

TEST_F(ThreeSection, InconsistentSchedule) {
  std::mt19937_64 rng(24);
  const auto batch = Batch(rng, 3);
  auto sched = InOrder(batch, ExecPolicy::kInterleaved);
  sched.per_rank_orders[{SectionId("crit"), 0}].push_back(999);
  try {
    Simulate(graph_, configs_, sched, batch);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInconsistentSchedule);
  }
  auto missing = configs_;
  missing.erase(SectionId("down"));
  EXPECT_THROW(Simulate(graph_, missing, InOrder(batch, ExecPolicy::kInterleaved), batch), Error);
}

TEST(ParseCommModel, Forms) {
  EXPECT_FALSE(ParseCommModel("zero").has_value());
  EXPECT_DOUBLE_EQ(ParseCommModel("linear:25")->bytes_per_time_unit, 25e9);
  EXPECT_THROW(ParseCommModel("fast"), Error);
}

TEST(Trace, EmptyEventList) {
  std::ostringstream out;
  WriteTrace({}, out);
  const auto doc = nlohmann::json::parse(out.str());
  ASSERT_TRUE(doc.at("traceEvents").is_array());
  EXPECT_TRUE(doc.at("traceEvents").empty());
}

TEST(Trace, SingleEvent) {
  const std::vector<StageEvent> events{{SectionId("llm"), 2, 7, Phase::kBwdC, 1.5, 3.5}};
  std::ostringstream out;
  WriteTrace(events, out);
  const auto doc = nlohmann::json::parse(out.str());
  int durations = 0;
  for (const auto& e : doc.at("traceEvents")) {
    if (e.at("ph") != "X") continue;
    ++durations;
    EXPECT_DOUBLE_EQ(e.at("ts").get<double>(), 1500.0);
    EXPECT_DOUBLE_EQ(e.at("dur").get<double>(), 2000.0);
    EXPECT_EQ(e.at("tid").get<int>(), 2);
  }
  EXPECT_EQ(durations, 1);
  std::ostringstream again;
  WriteTrace(events, again);
  EXPECT_EQ(out.str(), again.str());
}

TEST(Trace, ExportToBadPath) {
  const auto dir = std::filesystem::temp_directory_path() / "maestro_no_such_dir" / "x";
  try {
    ExportTrace({}, (dir / "trace.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

}  // namespace
}  // namespace maestro
