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

#include <algorithm>
#include <cstring>
#include <string>

#include "maestro/error.hpp"

namespace maestro {
namespace {

std::string ShapeString(const std::vector<std::int64_t>& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

void Restrict(Box& box, int axis, int degree, int index) {
  if (degree == 1) return;
  const std::int64_t block = (box[axis].end - box[axis].begin) / degree;
  box[axis].begin += block * index;
  box[axis].end = box[axis].begin + block;
}

// Calls fn(src_offset, dst_offset) for each contiguous run of the last
// dimension when copying `box` of `outer` into a dense tensor of the box shape.
template <typename Fn>
void ForEachRow(const std::vector<std::int64_t>& outer, const Box& box, Fn fn) {
  const std::size_t nd = outer.size();
  if (nd == 0 || BoxVolume(box) == 0) return;
  std::vector<std::int64_t> outer_stride(nd, 1), inner_stride(nd, 1);
  for (std::size_t d = nd - 1; d > 0; --d) {
    outer_stride[d - 1] = outer_stride[d] * outer[d];
    inner_stride[d - 1] = inner_stride[d] * box[d].size();
  }
  std::vector<std::int64_t> idx(nd, 0);  // relative to box, last dim fixed at 0
  while (true) {
    std::int64_t src = 0, dst = 0;
    for (std::size_t d = 0; d < nd; ++d) {
      src += (box[d].begin + idx[d]) * outer_stride[d];
      dst += idx[d] * inner_stride[d];
    }
    fn(src, dst);
    std::size_t d = nd - 1;
    while (true) {
      if (d == 0) return;
      --d;
      if (++idx[d] < box[d].size()) break;
      idx[d] = 0;
    }
  }
}

void CheckTensor(const Tensor& t) {
  if (t.element_size == 0 ||
      t.data.size() != static_cast<std::size_t>(t.elements()) * t.element_size) {
    throw Error(ErrorCode::kIncompatibleShapes,
                "tensor of shape " + ShapeString(t.shape) + " holds " +
                    std::to_string(t.data.size()) + " bytes");
  }
}

void CheckBox(const std::vector<std::int64_t>& shape, const Box& box) {
  bool ok = box.size() == shape.size();
  for (std::size_t d = 0; ok && d < box.size(); ++d) {
    ok = box[d].begin >= 0 && box[d].begin <= box[d].end && box[d].end <= shape[d];
  }
  if (!ok) {
    throw Error(ErrorCode::kIncompatibleShapes,
                "box outside tensor of shape " + ShapeString(shape));
  }
}

}  // namespace

void ValidateLayout(const ShardLayout& layout) {
  const auto nd = static_cast<int>(layout.shape.size());
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kIncompatibleShapes,
                "layout tp=" + std::to_string(layout.tp) + " cp=" +
                    std::to_string(layout.cp) + " on " + ShapeString(layout.shape) +
                    ": " + why);
  };
  if (nd == 0) fail("empty shape");
  for (auto extent : layout.shape) {
    if (extent < 1) fail("extents must be positive");
  }
  if (layout.tp < 1 || layout.cp < 1) fail("degrees must be positive");
  if (layout.tp_axis < 0 || layout.tp_axis >= nd || layout.cp_axis < 0 ||
      layout.cp_axis >= nd) {
    fail("axis out of range");
  }
  if (layout.tp > 1 && layout.cp > 1 && layout.tp_axis == layout.cp_axis) {
    fail("tp and cp share an axis");
  }
  if (layout.shape[layout.tp_axis] % layout.tp != 0) fail("tp does not divide its axis");
  if (layout.shape[layout.cp_axis] % layout.cp != 0) fail("cp does not divide its axis");
}

std::int64_t BoxVolume(const Box& box) {
  std::int64_t v = 1;
  for (const auto& r : box) v *= std::max<std::int64_t>(0, r.size());
  return v;
}

std::vector<std::int64_t> BoxShape(const Box& box) {
  std::vector<std::int64_t> shape;
  for (const auto& r : box) shape.push_back(r.size());
  return shape;
}

Box ShardBox(const ShardLayout& layout, int rank) {
  if (rank < 0 || rank >= layout.ranks()) {
    throw Error(ErrorCode::kInvalidArgument,
                "rank " + std::to_string(rank) + " outside layout of " +
                    std::to_string(layout.ranks()));
  }
  Box box;
  for (auto extent : layout.shape) box.push_back({0, extent});
  Restrict(box, layout.tp_axis, layout.tp, layout.TpRank(rank));
  Restrict(box, layout.cp_axis, layout.cp, layout.CpRank(rank));
  return box;
}

ReshardPlan PlanReshard(const ShardLayout& src, const ShardLayout& dst) {
  ValidateLayout(src);
  ValidateLayout(dst);
  if (src.shape != dst.shape) {
    throw Error(ErrorCode::kIncompatibleShapes, "source shape " + ShapeString(src.shape) +
                                                    " vs destination " +
                                                    ShapeString(dst.shape));
  }
  if (src.tp_axis != dst.tp_axis || src.cp_axis != dst.cp_axis) {
    throw Error(ErrorCode::kIncompatibleShapes, "layouts shard different axes");
  }
  ReshardPlan plan{src, dst, {}};
  for (int s = 0; s < src.ranks(); ++s) {
    const Box sbox = ShardBox(src, s);
    for (int r = 0; r < dst.ranks(); ++r) {
      const Box rbox = ShardBox(dst, r);
      Box overlap(sbox.size());
      bool empty = false;
      for (std::size_t d = 0; d < sbox.size(); ++d) {
        overlap[d] = {std::max(sbox[d].begin, rbox[d].begin),
                      std::min(sbox[d].end, rbox[d].end)};
        empty = empty || overlap[d].size() <= 0;
      }
      if (empty) continue;
      Transfer t{s, r, overlap, overlap};
      for (std::size_t d = 0; d < sbox.size(); ++d) {
        t.sender_slice[d].begin -= sbox[d].begin;
        t.sender_slice[d].end -= sbox[d].begin;
        t.receiver_slice[d].begin -= rbox[d].begin;
        t.receiver_slice[d].end -= rbox[d].begin;
      }
      plan.transfers.push_back(std::move(t));
    }
  }
  return plan;
}

Tensor Tensor::Zeros(std::vector<std::int64_t> shape, std::size_t element_size) {
  Tensor t;
  t.shape = std::move(shape);
  t.element_size = element_size;
  t.data.assign(static_cast<std::size_t>(t.elements()) * element_size, 0);
  return t;
}

std::int64_t Tensor::elements() const {
  std::int64_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

Tensor ExtractBox(const Tensor& tensor, const Box& box) {
  CheckTensor(tensor);
  CheckBox(tensor.shape, box);
  Tensor out = Tensor::Zeros(BoxShape(box), tensor.element_size);
  const std::size_t es = tensor.element_size;
  const std::size_t row = static_cast<std::size_t>(box.back().size()) * es;
  ForEachRow(tensor.shape, box, [&](std::int64_t src, std::int64_t dst) {
    std::memcpy(out.data.data() + dst * es, tensor.data.data() + src * es, row);
  });
  return out;
}

void InsertBox(Tensor& tensor, const Box& box, const Tensor& fragment) {
  CheckTensor(tensor);
  CheckTensor(fragment);
  CheckBox(tensor.shape, box);
  if (fragment.shape != BoxShape(box) || fragment.element_size != tensor.element_size) {
    throw Error(ErrorCode::kIncompatibleShapes,
                "fragment " + ShapeString(fragment.shape) + " does not fill box " +
                    ShapeString(BoxShape(box)));
  }
  const std::size_t es = tensor.element_size;
  const std::size_t row = static_cast<std::size_t>(box.back().size()) * es;
  ForEachRow(tensor.shape, box, [&](std::int64_t dst, std::int64_t src) {
    std::memcpy(tensor.data.data() + dst * es, fragment.data.data() + src * es, row);
  });
}

std::vector<Tensor> Distribute(const Tensor& tensor, const ShardLayout& layout) {
  ValidateLayout(layout);
  if (tensor.shape != layout.shape) {
    throw Error(ErrorCode::kIncompatibleShapes, "tensor " + ShapeString(tensor.shape) +
                                                    " vs layout " +
                                                    ShapeString(layout.shape));
  }
  std::vector<Tensor> shards;
  for (int r = 0; r < layout.ranks(); ++r) {
    shards.push_back(ExtractBox(tensor, ShardBox(layout, r)));
  }
  return shards;
}

Tensor Gather(const std::vector<Tensor>& shards, const ShardLayout& layout) {
  ValidateLayout(layout);
  if (static_cast<int>(shards.size()) != layout.ranks()) {
    throw Error(ErrorCode::kIncompatibleShapes,
                std::to_string(shards.size()) + " shards for " +
                    std::to_string(layout.ranks()) + " ranks");
  }
  Tensor out = Tensor::Zeros(layout.shape, shards.front().element_size);
  for (int r = 0; r < layout.ranks(); ++r) {
    InsertBox(out, ShardBox(layout, r), shards[r]);
  }
  return out;
}

std::vector<Tensor> ApplyReshard(const ReshardPlan& plan,
                                 const std::vector<Tensor>& src_shards) {
  if (static_cast<int>(src_shards.size()) != plan.src.ranks()) {
    throw Error(ErrorCode::kIncompatibleShapes,
                std::to_string(src_shards.size()) + " source shards for " +
                    std::to_string(plan.src.ranks()) + " ranks");
  }
  const std::size_t es = src_shards.front().element_size;
  std::vector<Tensor> out;
  for (int r = 0; r < plan.dst.ranks(); ++r) {
    out.push_back(Tensor::Zeros(BoxShape(ShardBox(plan.dst, r)), es));
  }
  for (const auto& t : plan.transfers) {
    InsertBox(out[t.receiver], t.receiver_slice,
              ExtractBox(src_shards[t.sender], t.sender_slice));
  }
  return out;
}

}  // namespace maestro
