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

#include "maestro/reshard.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "maestro/error.hpp"
#include "support/oracles.hpp"

namespace maestro {
namespace {

Tensor Iota(std::vector<std::int64_t> shape, std::size_t element_size = 4) {
  Tensor t = Tensor::Zeros(std::move(shape), element_size);
  std::iota(t.data.begin(), t.data.end(), std::uint8_t{0});
  return t;
}

TEST(PlanReshard, GatherHalves) {
  const ShardLayout src{2, 1, 0, 1, {8, 4}};
  const ShardLayout dst{1, 1, 0, 1, {8, 4}};
  const ReshardPlan plan = PlanReshard(src, dst);
  ASSERT_EQ(plan.transfers.size(), 2u);
  for (int s = 0; s < 2; ++s) {
    const Transfer& t = plan.transfers[s];
    EXPECT_EQ(t.sender, s);
    EXPECT_EQ(t.receiver, 0);
    EXPECT_EQ(t.sender_slice[0], (IndexRange{0, 4}));
    EXPECT_EQ(t.receiver_slice[0], (IndexRange{4 * s, 4 * s + 4}));
    EXPECT_EQ(t.receiver_slice[1], (IndexRange{0, 4}));
  }
}

TEST(PlanReshard, ScatterHalves) {
  const ReshardPlan plan = PlanReshard({1, 1, 0, 1, {8, 4}}, {2, 1, 0, 1, {8, 4}});
  ASSERT_EQ(plan.transfers.size(), 2u);
  EXPECT_EQ(plan.transfers[0].sender_slice[0], (IndexRange{0, 4}));
  EXPECT_EQ(plan.transfers[1].sender_slice[0], (IndexRange{4, 8}));
  EXPECT_EQ(plan.transfers[1].receiver, 1);
  EXPECT_TRUE(oracle::PlanCoversExactly(plan));
}

TEST(PlanReshard, MixedTpCpReassembles) {
  const ShardLayout src{2, 3, 0, 1, {6, 6}};
  const ShardLayout dst{3, 2, 0, 1, {6, 6}};
  const ReshardPlan plan = PlanReshard(src, dst);
  EXPECT_TRUE(oracle::PlanCoversExactly(plan));
  const Tensor original = Iota({6, 6});
  const auto dst_shards = ApplyReshard(plan, Distribute(original, src));
  EXPECT_EQ(Gather(dst_shards, dst), original);
}

TEST(PlanReshard, Incompatible) {
  auto code = [](const ShardLayout& a, const ShardLayout& b) {
    try {
      PlanReshard(a, b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kInvalidArgument;
  };
  EXPECT_EQ(code({1, 1, 0, 1, {8, 4}}, {1, 1, 0, 1, {4, 8}}), ErrorCode::kIncompatibleShapes);
  EXPECT_EQ(code({3, 1, 0, 1, {8, 4}}, {1, 1, 0, 1, {8, 4}}), ErrorCode::kIncompatibleShapes);
  EXPECT_EQ(code({1, 1, 0, 1, {8, 4}}, {1, 1, 1, 0, {8, 4}}), ErrorCode::kIncompatibleShapes);
}

TEST(Layout, RankMapping) {
  const ShardLayout l{2, 3, 0, 1, {6, 6}};
  EXPECT_EQ(l.ranks(), 6);
  EXPECT_EQ(l.RankOf(1, 2), 5);
  EXPECT_EQ(l.TpRank(5), 1);
  EXPECT_EQ(l.CpRank(5), 2);
  const Box box = ShardBox(l, 5);
  EXPECT_EQ(box[0], (IndexRange{3, 6}));
  EXPECT_EQ(box[1], (IndexRange{4, 6}));
  EXPECT_EQ(BoxVolume(box), 6);
  EXPECT_THROW(ValidateLayout({2, 2, 0, 0, {8, 8}}), Error);
}

TEST(Tensor, BoxRoundTrip) {
  const Tensor t = Iota({4, 6}, 2);
  const Box box{{1, 3}, {2, 5}};
  const Tensor piece = ExtractBox(t, box);
  EXPECT_EQ(piece.shape, (std::vector<std::int64_t>{2, 3}));
  Tensor back = Tensor::Zeros({4, 6}, 2);
  InsertBox(back, box, piece);
  EXPECT_EQ(ExtractBox(back, box), piece);
}

TEST(Tensor, DistributeGatherFuzz) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 200; ++i) {
    const int tp = 1 + static_cast<int>(rng() % 4);
    const int cp = 1 + static_cast<int>(rng() % 4);
    ShardLayout l{tp, cp, 0, 1, {tp * (1 + static_cast<std::int64_t>(rng() % 3)),
                                 cp * (1 + static_cast<std::int64_t>(rng() % 3)), 2}};
    const Tensor t = Iota(l.shape, 1 + rng() % 4);
    EXPECT_EQ(Gather(Distribute(t, l), l), t);
  }
}

}  // namespace
}  // namespace maestro
