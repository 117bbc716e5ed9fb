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

#ifndef MAESTRO_MESSAGE_QUEUE_HPP_
#define MAESTRO_MESSAGE_QUEUE_HPP_

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "maestro/reshard.hpp"
#include "maestro/scheduler.hpp"

namespace maestro {

struct MessageMeta {
  std::vector<std::int64_t> tensor_shape;  // logical, unsharded
  std::uint32_t element_size = 1;
  std::string section;
  int tp_rank = 0;  // sender position
  int cp_rank = 0;
  std::uint64_t sample_id = 0;
  std::uint64_t sequence = 0;  // per channel, consecutive from 0
  std::uint64_t payload_bytes = 0;
  friend bool operator==(const MessageMeta&, const MessageMeta&) = default;
};

// Control-message wire format, all integers little endian:
//   u32 magic 0x4d41454d ("MEAM")
//   u32 ndim, then ndim x u64 extents
//   u32 element_size
//   u32 section length, then that many bytes
//   u32 tp_rank, u32 cp_rank
//   u64 sample_id, u64 sequence, u64 payload_bytes
std::vector<std::uint8_t> EncodeMeta(const MessageMeta& meta);
// Throws ProtocolError on malformed input.
MessageMeta DecodeMeta(const std::vector<std::uint8_t>& bytes);

enum class Subchannel { kControl, kData };

// Moves opaque byte messages over numbered channels. Each subchannel of a
// channel is FIFO for the transport's own delivery, which receivers do not
// rely on: ordering is restored from sequence numbers.
class Transport {
 public:
  virtual ~Transport() = default;
  // Throws ChannelClosed.
  virtual void Send(int channel, Subchannel sub, std::vector<std::uint8_t> bytes) = 0;
  // Waits until `deadline`; nullopt on timeout. Throws ChannelClosed once the
  // channel is closed and drained.
  virtual std::optional<std::vector<std::uint8_t>> Receive(
      int channel, Subchannel sub, std::chrono::steady_clock::time_point deadline) = 0;
  virtual void Close(int channel) = 0;
};

class InProcessTransport : public Transport {
 public:
  void Send(int channel, Subchannel sub, std::vector<std::uint8_t> bytes) override;
  std::optional<std::vector<std::uint8_t>> Receive(
      int channel, Subchannel sub,
      std::chrono::steady_clock::time_point deadline) override;
  void Close(int channel) override;

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::pair<int, Subchannel>, std::deque<std::vector<std::uint8_t>>> queues_;
  std::set<int> closed_;
};

// Byte quota of a receiving endpoint. Senders reserve on push, the receiver
// releases on pull.
class SlotPool {
 public:
  explicit SlotPool(std::uint64_t budget_bytes) : budget_(budget_bytes) {}
  // Throws SlotExhausted.
  void Reserve(std::uint64_t bytes);
  void Release(std::uint64_t bytes);
  std::uint64_t budget() const { return budget_; }
  std::uint64_t in_use() const;
  std::uint64_t peak() const;

 private:
  mutable std::mutex mu_;
  std::uint64_t budget_;
  std::uint64_t in_use_ = 0;
  std::uint64_t peak_ = 0;
};

// Pushing side of one channel.
class Sender {
 public:
  Sender(std::shared_ptr<Transport> transport, int channel,
         std::shared_ptr<SlotPool> slots);
  // Reserves a slot, sends the metadata then the payload, and returns the
  // sequence number as acknowledgment token. `meta.sequence` and
  // `meta.payload_bytes` are filled in. Never waits for the receiver.
  std::uint64_t Push(const Tensor& fragment, MessageMeta meta);
  void Close();
  int channel() const { return channel_; }

 private:
  std::shared_ptr<Transport> transport_;
  int channel_;
  std::shared_ptr<SlotPool> slots_;
  std::uint64_t next_sequence_ = 0;
  bool closed_ = false;
};

struct EndpointStats {
  std::uint64_t tensors_pulled = 0;
  std::uint64_t fragments_received = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t tensors_dropped = 0;
  std::uint64_t slot_bytes_in_use = 0;
  std::uint64_t slot_bytes_peak = 0;
};

struct PulledTensor {
  Tensor tensor;  // this receiver's destination shard
  MessageMeta meta;
};

// Receiving side: one destination rank of a reshard plan, fed by one channel
// per contributing sender.
class Receiver {
 public:
  // `channels[s]` is the channel of source rank s; only senders with a
  // transfer to `rank` are read.
  Receiver(std::shared_ptr<Transport> transport, ReshardPlan plan, int rank,
           std::map<int, int> channels, std::shared_ptr<SlotPool> slots);

  // Assembles the earliest logical tensor from all contributing senders.
  // Throws FragmentTimeout (dropping the partial tensor), ChannelClosed and
  // ProtocolError.
  PulledTensor Pull(std::chrono::milliseconds timeout);
  EndpointStats stats() const;

 private:
  struct Frame {
    MessageMeta meta;
    std::vector<std::uint8_t> payload;
  };
  struct Inbound {
    int sender = 0;
    int channel = 0;
    const Transfer* transfer = nullptr;
    std::uint64_t next_sequence = 0;
    std::optional<MessageMeta> pending;  // control seen, payload not yet
    std::map<std::uint64_t, Frame> reorder;
    std::deque<Frame> ready;
  };

  // Reads one frame from the transport into the reorder buffer. False on
  // timeout.
  bool Poll(Inbound& in, std::chrono::steady_clock::time_point deadline);
  void Discard(Inbound& in);
  std::optional<Frame> Take(Inbound& in, std::uint64_t sample_id);

  std::shared_ptr<Transport> transport_;
  ReshardPlan plan_;
  int rank_;
  std::shared_ptr<SlotPool> slots_;
  std::vector<Inbound> inbound_;
  std::set<std::uint64_t> dropped_;
  EndpointStats stats_;
};

// All channels of one M-to-N reshard over a shared in-process transport.
// Channel id is sender * dst.ranks() + receiver.
class ReshardMesh {
 public:
  ReshardMesh(ReshardPlan plan, std::uint64_t slot_budget_bytes,
              std::shared_ptr<Transport> transport = nullptr);

  // Sends every fragment of the sender's shard. Returns one token per
  // transfer, in plan order.
  std::vector<std::uint64_t> Push(int sender, const Tensor& shard,
                                  const std::string& section, std::uint64_t sample_id);
  Receiver& receiver(int rank) { return *receivers_.at(rank); }
  void CloseSender(int sender);
  const ReshardPlan& plan() const { return plan_; }

 private:
  ReshardPlan plan_;
  std::shared_ptr<Transport> transport_;
  std::map<std::pair<int, int>, std::unique_ptr<Sender>> senders_;
  std::vector<std::unique_ptr<Receiver>> receivers_;
};

// Picks, for an upstream rank with `fanout` downstream partners, which of its
// channels carries each sample, from the merged schedule's provenance.
class FanoutRouter {
 public:
  FanoutRouter(const std::vector<MergedEntry>& merged, int fanout);
  // Throws InvalidArgument for samples not in the merged order.
  int Route(std::uint64_t sample_id) const;
  int fanout() const { return fanout_; }

 private:
  std::map<std::uint64_t, int> route_;
  int fanout_;
};

}  // namespace maestro

#endif  // MAESTRO_MESSAGE_QUEUE_HPP_
