// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "scispace/shard_service.hpp"

namespace scispace {

// TCP front end for one ShardService. One thread per connection; frames on
// a connection are handled in order and responses are written whole, so
// frames never interleave mid-frame on the wire.
class ShardServer {
 public:
  // port 0 binds an ephemeral port; port() reports the bound one.
  static Result<std::unique_ptr<ShardServer>> start(ShardService& service,
                                                    const std::string& host, uint16_t port);
  ~ShardServer();

  ShardServer(const ShardServer&) = delete;
  ShardServer& operator=(const ShardServer&) = delete;

  uint16_t port() const { return port_; }
  void stop();

 private:
  explicit ShardServer(ShardService& service) : service_(service) {}

  struct Connection {
    int fd;
    std::thread thread;
    std::atomic<bool> done{false};
  };

  void accept_loop();
  void connection_loop(Connection* conn);
  void reap_finished_locked();

  ShardService& service_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex conn_mu_;
  std::vector<std::unique_ptr<Connection>> connections_;
};

}  // namespace scispace
