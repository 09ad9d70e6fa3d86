// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "scispace/protocol.hpp"

namespace scispace {

// Client end of one DTN connection. Requests may be pipelined; responses
// are matched to requests by id, whatever order they arrive in. Transport
// failures surface as Err::shard_unavailable.
class ShardClient {
 public:
  static Result<std::unique_ptr<ShardClient>> connect(const std::string& host, uint16_t port);
  ~ShardClient();

  ShardClient(const ShardClient&) = delete;
  ShardClient& operator=(const ShardClient&) = delete;

  // Sends a request frame; returns its request id.
  Result<uint32_t> send(MsgType type, const std::vector<uint8_t>& payload);

  // Blocks until the response for `request_id` arrives. A RESULT frame
  // yields its parsed payload; an ERROR frame yields the carried error.
  Result<FieldReader> receive(uint32_t request_id);

  // send + receive.
  Result<FieldReader> call(MsgType type, const std::vector<uint8_t>& payload);

  // Frames written to the socket, by message type: the protocol-level
  // capture used to assert batching behavior.
  uint64_t sent_count(MsgType type) const;

 private:
  ShardClient() = default;

  int fd_ = -1;
  std::atomic<uint32_t> next_id_{1};
  std::mutex send_mu_;
  std::mutex recv_mu_;
  std::map<uint32_t, Frame> stashed_;
  std::array<std::atomic<uint64_t>, 16> sent_counts_{};
};

}  // namespace scispace
