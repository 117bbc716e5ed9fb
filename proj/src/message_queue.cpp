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

#include <algorithm>
#include <cstring>
#include <utility>

#include "maestro/error.hpp"

namespace maestro {
namespace {

constexpr std::uint32_t kMagic = 0x4d41454d;

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void PutU64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class WireReader {
 public:
  explicit WireReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}
  std::uint64_t Read(int width) {
    if (pos_ + width > bytes_.size()) {
      throw Error(ErrorCode::kProtocolError, "control message truncated at byte " +
                                                 std::to_string(pos_));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
    return v;
  }
  std::string ReadString(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorCode::kProtocolError, "control message truncated in section name");
    }
    std::string s(bytes_.begin() + pos_, bytes_.begin() + pos_ + n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> EncodeMeta(const MessageMeta& meta) {
  std::vector<std::uint8_t> out;
  PutU32(out, kMagic);
  PutU32(out, static_cast<std::uint32_t>(meta.tensor_shape.size()));
  for (auto e : meta.tensor_shape) PutU64(out, static_cast<std::uint64_t>(e));
  PutU32(out, meta.element_size);
  PutU32(out, static_cast<std::uint32_t>(meta.section.size()));
  out.insert(out.end(), meta.section.begin(), meta.section.end());
  PutU32(out, static_cast<std::uint32_t>(meta.tp_rank));
  PutU32(out, static_cast<std::uint32_t>(meta.cp_rank));
  PutU64(out, meta.sample_id);
  PutU64(out, meta.sequence);
  PutU64(out, meta.payload_bytes);
  return out;
}

MessageMeta DecodeMeta(const std::vector<std::uint8_t>& bytes) {
  WireReader in(bytes);
  if (in.Read(4) != kMagic) throw Error(ErrorCode::kProtocolError, "bad magic");
  MessageMeta meta;
  const auto ndim = in.Read(4);
  if (ndim > 64) throw Error(ErrorCode::kProtocolError, "implausible rank " + std::to_string(ndim));
  for (std::uint64_t i = 0; i < ndim; ++i) {
    meta.tensor_shape.push_back(static_cast<std::int64_t>(in.Read(8)));
  }
  meta.element_size = static_cast<std::uint32_t>(in.Read(4));
  meta.section = in.ReadString(in.Read(4));
  meta.tp_rank = static_cast<int>(in.Read(4));
  meta.cp_rank = static_cast<int>(in.Read(4));
  meta.sample_id = in.Read(8);
  meta.sequence = in.Read(8);
  meta.payload_bytes = in.Read(8);
  if (!in.done()) throw Error(ErrorCode::kProtocolError, "trailing bytes in control message");
  return meta;
}

void InProcessTransport::Send(int channel, Subchannel sub,
                              std::vector<std::uint8_t> bytes) {
  {
    std::lock_guard lock(mu_);
    if (closed_.count(channel)) {
      throw Error(ErrorCode::kChannelClosed, "channel " + std::to_string(channel));
    }
    queues_[{channel, sub}].push_back(std::move(bytes));
  }
  cv_.notify_all();
}

std::optional<std::vector<std::uint8_t>> InProcessTransport::Receive(
    int channel, Subchannel sub, std::chrono::steady_clock::time_point deadline) {
  std::unique_lock lock(mu_);
  auto& q = queues_[{channel, sub}];
  cv_.wait_until(lock, deadline, [&] { return !q.empty() || closed_.count(channel); });
  if (q.empty()) {
    if (closed_.count(channel)) {
      throw Error(ErrorCode::kChannelClosed, "channel " + std::to_string(channel));
    }
    return std::nullopt;
  }
  auto bytes = std::move(q.front());
  q.pop_front();
  return bytes;
}

void InProcessTransport::Close(int channel) {
  {
    std::lock_guard lock(mu_);
    closed_.insert(channel);
  }
  cv_.notify_all();
}

void SlotPool::Reserve(std::uint64_t bytes) {
  std::lock_guard lock(mu_);
  if (in_use_ + bytes > budget_) {
    throw Error(ErrorCode::kSlotExhausted,
                "need " + std::to_string(bytes) + " bytes, " +
                    std::to_string(budget_ - in_use_) + " of " +
                    std::to_string(budget_) + " free");
  }
  in_use_ += bytes;
  peak_ = std::max(peak_, in_use_);
}

void SlotPool::Release(std::uint64_t bytes) {
  std::lock_guard lock(mu_);
  in_use_ -= std::min(bytes, in_use_);
}

std::uint64_t SlotPool::in_use() const {
  std::lock_guard lock(mu_);
  return in_use_;
}

std::uint64_t SlotPool::peak() const {
  std::lock_guard lock(mu_);
  return peak_;
}

Sender::Sender(std::shared_ptr<Transport> transport, int channel,
               std::shared_ptr<SlotPool> slots)
    : transport_(std::move(transport)), channel_(channel), slots_(std::move(slots)) {}

std::uint64_t Sender::Push(const Tensor& fragment, MessageMeta meta) {
  if (closed_) {
    throw Error(ErrorCode::kChannelClosed, "push on closed channel " + std::to_string(channel_));
  }
  if (fragment.data.size() !=
      static_cast<std::size_t>(fragment.elements()) * fragment.element_size) {
    throw Error(ErrorCode::kIncompatibleShapes, "fragment size does not match its shape");
  }
  meta.sequence = next_sequence_;
  meta.payload_bytes = fragment.data.size();
  meta.element_size = static_cast<std::uint32_t>(fragment.element_size);
  slots_->Reserve(meta.payload_bytes);
  try {
    transport_->Send(channel_, Subchannel::kControl, EncodeMeta(meta));
    transport_->Send(channel_, Subchannel::kData, fragment.data);
  } catch (...) {
    slots_->Release(meta.payload_bytes);
    throw;
  }
  return next_sequence_++;
}

void Sender::Close() {
  if (closed_) return;
  closed_ = true;
  transport_->Close(channel_);
}

Receiver::Receiver(std::shared_ptr<Transport> transport, ReshardPlan plan, int rank,
                   std::map<int, int> channels, std::shared_ptr<SlotPool> slots)
    : transport_(std::move(transport)),
      plan_(std::move(plan)),
      rank_(rank),
      slots_(std::move(slots)) {
  for (const auto& t : plan_.transfers) {
    if (t.receiver != rank_) continue;
    auto it = channels.find(t.sender);
    if (it == channels.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no channel for sender " + std::to_string(t.sender));
    }
    Inbound in;
    in.sender = t.sender;
    in.channel = it->second;
    inbound_.push_back(std::move(in));
  }
  // Transfer pointers are taken after plan_ is final.
  std::size_t k = 0;
  for (const auto& t : plan_.transfers) {
    if (t.receiver == rank_) inbound_[k++].transfer = &t;
  }
}

bool Receiver::Poll(Inbound& in, std::chrono::steady_clock::time_point deadline) {
  if (!in.pending) {
    auto control = transport_->Receive(in.channel, Subchannel::kControl, deadline);
    if (!control) return false;
    in.pending = DecodeMeta(*control);
  }
  auto payload = transport_->Receive(in.channel, Subchannel::kData, deadline);
  if (!payload) return false;
  Frame frame{std::move(*in.pending), std::move(*payload)};
  in.pending.reset();
  if (frame.payload.size() != frame.meta.payload_bytes) {
    throw Error(ErrorCode::kProtocolError,
                "channel " + std::to_string(in.channel) + " payload of " +
                    std::to_string(frame.payload.size()) + " bytes, metadata says " +
                    std::to_string(frame.meta.payload_bytes));
  }
  const std::uint64_t seq = frame.meta.sequence;
  if (seq < in.next_sequence || in.reorder.count(seq)) {
    throw Error(ErrorCode::kProtocolError, "duplicate sequence " + std::to_string(seq) +
                                               " on channel " + std::to_string(in.channel));
  }
  ++stats_.fragments_received;
  stats_.bytes_received += frame.payload.size();
  in.reorder.emplace(seq, std::move(frame));
  for (auto it = in.reorder.find(in.next_sequence); it != in.reorder.end();
       it = in.reorder.find(in.next_sequence)) {
    in.ready.push_back(std::move(it->second));
    in.reorder.erase(it);
    ++in.next_sequence;
  }
  Discard(in);
  return true;
}

void Receiver::Discard(Inbound& in) {
  std::erase_if(in.ready, [&](const Frame& f) {
    if (!dropped_.count(f.meta.sample_id)) return false;
    slots_->Release(f.meta.payload_bytes);
    return true;
  });
}

std::optional<Receiver::Frame> Receiver::Take(Inbound& in, std::uint64_t sample_id) {
  for (auto it = in.ready.begin(); it != in.ready.end(); ++it) {
    if (it->meta.sample_id == sample_id) {
      Frame f = std::move(*it);
      in.ready.erase(it);
      return f;
    }
  }
  return std::nullopt;
}

PulledTensor Receiver::Pull(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  if (inbound_.empty()) {
    throw Error(ErrorCode::kProtocolError,
                "receiver " + std::to_string(rank_) + " has no contributing sender");
  }
  Inbound& lead = inbound_.front();
  while (lead.ready.empty()) {
    if (!Poll(lead, deadline)) {
      throw Error(ErrorCode::kFragmentTimeout,
                  "nothing from sender " + std::to_string(lead.sender) + " on channel " +
                      std::to_string(lead.channel));
    }
  }
  const std::uint64_t sample = lead.ready.front().meta.sample_id;

  std::vector<std::optional<Frame>> frames(inbound_.size());
  std::vector<int> missing;
  for (std::size_t i = 0; i < inbound_.size(); ++i) {
    Inbound& in = inbound_[i];
    frames[i] = Take(in, sample);
    try {
      while (!frames[i] && Poll(in, deadline)) frames[i] = Take(in, sample);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kChannelClosed) throw;
      for (auto& f : frames) {
        if (f) slots_->Release(f->meta.payload_bytes);
      }
      dropped_.insert(sample);
      ++stats_.tensors_dropped;
      throw Error(ErrorCode::kChannelClosed,
                  "sender " + std::to_string(in.sender) + " closed before sample " +
                      std::to_string(sample) + " completed");
    }
    if (!frames[i]) missing.push_back(in.sender);
  }
  if (!missing.empty()) {
    for (auto& f : frames) {
      if (f) slots_->Release(f->meta.payload_bytes);
    }
    dropped_.insert(sample);
    ++stats_.tensors_dropped;
    std::string who;
    for (int s : missing) who += (who.empty() ? "" : ",") + std::to_string(s);
    throw Error(ErrorCode::kFragmentTimeout,
                "sample " + std::to_string(sample) + " missing fragments from senders {" +
                    who + "}; tensor dropped");
  }

  const MessageMeta& head = frames.front()->meta;
  PulledTensor out;
  out.meta = head;
  out.tensor = Tensor::Zeros(BoxShape(ShardBox(plan_.dst, rank_)), head.element_size);
  std::uint64_t released = 0;
  for (std::size_t i = 0; i < inbound_.size(); ++i) {
    Frame& f = *frames[i];
    const Transfer& t = *inbound_[i].transfer;
    const bool position_ok = plan_.src.RankOf(f.meta.tp_rank, f.meta.cp_rank) == t.sender;
    if (f.meta.tensor_shape != head.tensor_shape ||
        f.meta.element_size != head.element_size || f.meta.section != head.section ||
        !position_ok) {
      throw Error(ErrorCode::kProtocolError,
                  "fragments of sample " + std::to_string(sample) + " disagree on metadata");
    }
    Tensor fragment;
    fragment.shape = BoxShape(t.sender_slice);
    fragment.element_size = f.meta.element_size;
    fragment.data = std::move(f.payload);
    InsertBox(out.tensor, t.receiver_slice, fragment);
    released += f.meta.payload_bytes;
  }
  slots_->Release(released);
  ++stats_.tensors_pulled;
  return out;
}

EndpointStats Receiver::stats() const {
  EndpointStats s = stats_;
  s.slot_bytes_in_use = slots_->in_use();
  s.slot_bytes_peak = slots_->peak();
  return s;
}

ReshardMesh::ReshardMesh(ReshardPlan plan, std::uint64_t slot_budget_bytes,
                         std::shared_ptr<Transport> transport)
    : plan_(std::move(plan)),
      transport_(transport ? std::move(transport)
                           : std::make_shared<InProcessTransport>()) {
  const int n = plan_.dst.ranks();
  std::vector<std::shared_ptr<SlotPool>> pools;
  std::vector<std::map<int, int>> channels(n);
  for (int r = 0; r < n; ++r) pools.push_back(std::make_shared<SlotPool>(slot_budget_bytes));
  for (const auto& t : plan_.transfers) {
    const int channel = t.sender * n + t.receiver;
    channels[t.receiver][t.sender] = channel;
    senders_[{t.sender, t.receiver}] =
        std::make_unique<Sender>(transport_, channel, pools[t.receiver]);
  }
  for (int r = 0; r < n; ++r) {
    receivers_.push_back(
        std::make_unique<Receiver>(transport_, plan_, r, channels[r], pools[r]));
  }
}

std::vector<std::uint64_t> ReshardMesh::Push(int sender, const Tensor& shard,
                                             const std::string& section,
                                             std::uint64_t sample_id) {
  MessageMeta meta;
  meta.tensor_shape = plan_.src.shape;
  meta.section = section;
  meta.tp_rank = plan_.src.TpRank(sender);
  meta.cp_rank = plan_.src.CpRank(sender);
  meta.sample_id = sample_id;
  std::vector<std::uint64_t> tokens;
  for (const auto& t : plan_.transfers) {
    if (t.sender != sender) continue;
    tokens.push_back(senders_.at({t.sender, t.receiver})
                         ->Push(ExtractBox(shard, t.sender_slice), meta));
  }
  return tokens;
}

void ReshardMesh::CloseSender(int sender) {
  for (auto& [key, s] : senders_) {
    if (key.first == sender) s->Close();
  }
}

FanoutRouter::FanoutRouter(const std::vector<MergedEntry>& merged, int fanout)
    : fanout_(fanout) {
  if (fanout < 1) throw Error(ErrorCode::kInvalidArgument, "fanout must be >= 1");
  for (const auto& e : merged) {
    if (e.source < 0 || e.source >= fanout) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample " + std::to_string(e.sample_id) + " routed to source " +
                      std::to_string(e.source) + " of " + std::to_string(fanout));
    }
    route_[e.sample_id] = e.source;
  }
}

int FanoutRouter::Route(std::uint64_t sample_id) const {
  auto it = route_.find(sample_id);
  if (it == route_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "sample " + std::to_string(sample_id) + " not in merged order");
  }
  return it->second;
}

}  // namespace maestro
