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

#ifndef MAESTRO_RESHARD_HPP_
#define MAESTRO_RESHARD_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

namespace maestro {

// TP/CP sharding of one logical tensor. Rank r holds tp index r % tp and cp
// index r / tp; each degree splits its axis into equal contiguous blocks.
struct ShardLayout {
  int tp = 1;
  int cp = 1;
  int tp_axis = 0;
  int cp_axis = 0;
  std::vector<std::int64_t> shape;

  int ranks() const { return tp * cp; }
  int TpRank(int rank) const { return rank % tp; }
  int CpRank(int rank) const { return rank / tp; }
  int RankOf(int tp_rank, int cp_rank) const { return cp_rank * tp + tp_rank; }
};

// Throws IncompatibleShapes.
void ValidateLayout(const ShardLayout& layout);

// Half-open [begin, end) per dimension.
struct IndexRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  std::int64_t size() const { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};
using Box = std::vector<IndexRange>;

std::int64_t BoxVolume(const Box& box);
std::vector<std::int64_t> BoxShape(const Box& box);

// Region of the logical tensor owned by `rank`, in global coordinates.
Box ShardBox(const ShardLayout& layout, int rank);

struct Transfer {
  int sender = 0;
  int receiver = 0;
  Box sender_slice;    // local to the sender's shard
  Box receiver_slice;  // local to the receiver's shard
};

struct ReshardPlan {
  ShardLayout src;
  ShardLayout dst;
  std::vector<Transfer> transfers;  // by (sender, receiver)
};

// One transfer per overlapping (sender, receiver) pair. Requires identical
// shapes and axes. Throws IncompatibleShapes.
ReshardPlan PlanReshard(const ShardLayout& src, const ShardLayout& dst);

// Dense row-major tensor of opaque elements.
struct Tensor {
  std::vector<std::int64_t> shape;
  std::size_t element_size = 1;
  std::vector<std::uint8_t> data;

  static Tensor Zeros(std::vector<std::int64_t> shape, std::size_t element_size);
  std::int64_t elements() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

Tensor ExtractBox(const Tensor& tensor, const Box& box);
// Copies `fragment` into `tensor` at `box`. Throws IncompatibleShapes when the
// fragment does not match the box.
void InsertBox(Tensor& tensor, const Box& box, const Tensor& fragment);

// Shards of `tensor` under `layout`, indexed by rank.
std::vector<Tensor> Distribute(const Tensor& tensor, const ShardLayout& layout);
Tensor Gather(const std::vector<Tensor>& shards, const ShardLayout& layout);

// Executes the plan locally: source shards in, destination shards out.
std::vector<Tensor> ApplyReshard(const ReshardPlan& plan,
                                 const std::vector<Tensor>& src_shards);

}  // namespace maestro

#endif  // MAESTRO_RESHARD_HPP_
