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

#include "maestro/message_queue.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <numeric>
#include <thread>

#include "maestro/error.hpp"

namespace maestro {
namespace {

using std::chrono::milliseconds;

Tensor Filled(std::vector<std::int64_t> shape, std::uint8_t seed) {
  Tensor t = Tensor::Zeros(std::move(shape), 4);
  std::iota(t.data.begin(), t.data.end(), seed);
  return t;
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

const ShardLayout kWhole{1, 1, 0, 1, {8, 4}};
const ShardLayout kHalves{2, 1, 0, 1, {8, 4}};

TEST(Meta, WireRoundTrip) {
  MessageMeta m{{8, 4, 2}, 2, "vit", 1, 3, 42, 7, 128};
  const auto bytes = EncodeMeta(m);
  EXPECT_EQ(DecodeMeta(bytes), m);
  auto cut = bytes;
  cut.resize(cut.size() - 3);
  EXPECT_EQ(CodeOf([&] { DecodeMeta(cut); }), ErrorCode::kProtocolError);
  auto bad = bytes;
  bad[0] ^= 0xff;
  EXPECT_EQ(CodeOf([&] { DecodeMeta(bad); }), ErrorCode::kProtocolError);
}

TEST(Mesh, PushThenPullIsBitExact) {
  ReshardMesh mesh(PlanReshard(kWhole, kWhole), 1 << 20);
  const Tensor t = Filled({8, 4}, 3);
  EXPECT_EQ(mesh.Push(0, t, "vit", 5).size(), 1u);
  const PulledTensor got = mesh.receiver(0).Pull(milliseconds(500));
  EXPECT_EQ(got.tensor, t);
  EXPECT_EQ(got.meta.sample_id, 5u);
  EXPECT_EQ(got.meta.section, "vit");
  EXPECT_EQ(mesh.receiver(0).stats().slot_bytes_in_use, 0u);
}

TEST(Mesh, FifoPerChannel) {
  ReshardMesh mesh(PlanReshard(kWhole, kWhole), 1 << 20);
  mesh.Push(0, Filled({8, 4}, 1), "vit", 10);
  mesh.Push(0, Filled({8, 4}, 2), "vit", 11);
  EXPECT_EQ(mesh.receiver(0).Pull(milliseconds(500)).meta.sample_id, 10u);
  EXPECT_EQ(mesh.receiver(0).Pull(milliseconds(500)).meta.sample_id, 11u);
}

TEST(Mesh, GathersTwoSenders) {
  ReshardMesh mesh(PlanReshard(kHalves, kWhole), 1 << 20);
  const Tensor whole = Filled({8, 4}, 0);
  const auto shards = Distribute(whole, kHalves);
  mesh.Push(1, shards[1], "vit", 0);
  mesh.Push(0, shards[0], "vit", 0);
  EXPECT_EQ(mesh.receiver(0).Pull(milliseconds(500)).tensor, whole);
}

TEST(Mesh, SlotExhaustedOnBudgetPlusOne) {
  const std::uint64_t bytes = 8 * 4 * 4;
  const int k = 3;
  ReshardMesh mesh(PlanReshard(kWhole, kWhole), k * bytes);
  for (int i = 0; i < k; ++i) mesh.Push(0, Filled({8, 4}, 0), "vit", i);
  EXPECT_EQ(CodeOf([&] { mesh.Push(0, Filled({8, 4}, 0), "vit", k); }),
            ErrorCode::kSlotExhausted);
  mesh.receiver(0).Pull(milliseconds(500));
  EXPECT_NO_THROW(mesh.Push(0, Filled({8, 4}, 0), "vit", k));
  EXPECT_EQ(mesh.receiver(0).stats().slot_bytes_peak, k * bytes);
}

TEST(Mesh, MissingSenderTimesOut) {
  ReshardMesh mesh(PlanReshard(kHalves, kWhole), 1 << 20);
  const auto shards = Distribute(Filled({8, 4}, 0), kHalves);
  mesh.Push(0, shards[0], "vit", 9);
  EXPECT_EQ(CodeOf([&] { mesh.receiver(0).Pull(milliseconds(30)); }),
            ErrorCode::kFragmentTimeout);
  const auto stats = mesh.receiver(0).stats();
  EXPECT_EQ(stats.tensors_dropped, 1u);
  EXPECT_EQ(stats.slot_bytes_in_use, 0u);
}

TEST(Mesh, ClosedChannel) {
  ReshardMesh mesh(PlanReshard(kWhole, kWhole), 1 << 20);
  mesh.CloseSender(0);
  EXPECT_EQ(CodeOf([&] { mesh.Push(0, Filled({8, 4}, 0), "vit", 0); }),
            ErrorCode::kChannelClosed);
  EXPECT_EQ(CodeOf([&] { mesh.receiver(0).Pull(milliseconds(30)); }),
            ErrorCode::kChannelClosed);
}

TEST(Receiver, ReordersBySequence) {
  auto transport = std::make_shared<InProcessTransport>();
  auto slots = std::make_shared<SlotPool>(1 << 20);
  const ReshardPlan plan = PlanReshard(kWhole, kWhole);
  Receiver receiver(transport, plan, 0, {{0, 0}}, slots);
  const Tensor a = Filled({8, 4}, 1), b = Filled({8, 4}, 2);
  auto send = [&](const Tensor& t, std::uint64_t sample, std::uint64_t seq) {
    MessageMeta m{{8, 4}, 4, "vit", 0, 0, sample, seq, t.data.size()};
    slots->Reserve(t.data.size());
    transport->Send(0, Subchannel::kControl, EncodeMeta(m));
    transport->Send(0, Subchannel::kData, t.data);
  };
  send(b, 2, 1);
  send(a, 1, 0);
  EXPECT_EQ(receiver.Pull(milliseconds(500)).tensor, a);
  EXPECT_EQ(receiver.Pull(milliseconds(500)).tensor, b);
  EXPECT_EQ(slots->in_use(), 0u);
}

TEST(Mesh, ConcurrentPushAndPull) {
  ReshardMesh mesh(PlanReshard(kHalves, kWhole), 1 << 20);
  const int n = 200;
  std::thread pusher([&] {
    for (int i = 0; i < n; ++i) {
      const auto shards = Distribute(Filled({8, 4}, static_cast<std::uint8_t>(i)), kHalves);
      mesh.Push(0, shards[0], "llm", i);
      mesh.Push(1, shards[1], "llm", i);
    }
  });
  int ok = 0;
  for (int i = 0; i < n; ++i) {
    const auto got = mesh.receiver(0).Pull(milliseconds(2000));
    if (got.meta.sample_id == static_cast<std::uint64_t>(i) &&
        got.tensor == Filled({8, 4}, static_cast<std::uint8_t>(i))) {
      ++ok;
    }
  }
  pusher.join();
  EXPECT_EQ(ok, n);
}

TEST(FanoutRouter, RoutesByProvenance) {
  const auto merged = MergeFanout({{10, 11}, {20}, {30, 31}}, 3);
  const FanoutRouter router(merged, 3);
  EXPECT_EQ(router.Route(11), 0);
  EXPECT_EQ(router.Route(20), 1);
  EXPECT_EQ(router.Route(31), 2);
  EXPECT_THROW(router.Route(99), Error);
}

}  // namespace
}  // namespace maestro
