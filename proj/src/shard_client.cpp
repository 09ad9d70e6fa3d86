// SPDX-License-Identifier: Apache-2.0

#include "scispace/shard_client.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace scispace {

Result<std::unique_ptr<ShardClient>> ShardClient::connect(const std::string& host,
                                                          uint16_t port) {
  std::unique_ptr<ShardClient> client(new ShardClient());
  client->fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (client->fd_ < 0)
    return make_error(Err::shard_unavailable, "socket: " + std::string(std::strerror(errno)));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    return make_error(Err::shard_unavailable, "bad address: " + host);
  if (::connect(client->fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    return make_error(Err::shard_unavailable, host + ":" + std::to_string(port) + ": " +
                                                  std::strerror(errno));
  const int one = 1;
  ::setsockopt(client->fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return client;
}

ShardClient::~ShardClient() {
  if (fd_ >= 0) ::close(fd_);
}

Result<uint32_t> ShardClient::send(MsgType type, const std::vector<uint8_t>& payload) {
  const uint32_t id = next_id_.fetch_add(1);
  auto frame = encode_frame(static_cast<uint16_t>(type), id, payload);
  if (!frame.ok()) return frame.error();

  std::lock_guard<std::mutex> lock(send_mu_);
  size_t off = 0;
  const auto& bytes = frame.value();
  while (off < bytes.size()) {
    const ssize_t sent = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      return make_error(Err::shard_unavailable, "send: " + std::string(std::strerror(errno)));
    }
    off += static_cast<size_t>(sent);
  }
  const size_t slot = static_cast<size_t>(type);
  if (slot < sent_counts_.size()) sent_counts_[slot].fetch_add(1);
  return id;
}

Result<FieldReader> ShardClient::receive(uint32_t request_id) {
  std::lock_guard<std::mutex> lock(recv_mu_);
  while (true) {
    auto it = stashed_.find(request_id);
    Frame frame;
    if (it != stashed_.end()) {
      frame = std::move(it->second);
      stashed_.erase(it);
    } else {
      auto decoded = decode_frame([this](uint8_t* buf, size_t n) {
        size_t off = 0;
        while (off < n) {
          const ssize_t got = ::recv(fd_, buf + off, n - off, 0);
          if (got <= 0) {
            if (got < 0 && errno == EINTR) continue;
            break;
          }
          off += static_cast<size_t>(got);
        }
        return off;
      });
      if (!decoded.ok())
        return make_error(Err::shard_unavailable, "connection lost: " + decoded.error().message);
      frame = decoded.take();
      if (frame.request_id != request_id) {
        stashed_.emplace(frame.request_id, std::move(frame));
        continue;
      }
    }

    if (frame.msg_type == static_cast<uint16_t>(MsgType::error)) {
      auto we = decode_error_payload(frame.payload);
      if (!we.ok()) return we.error();
      return error_from_wire(we.value());
    }
    if (frame.msg_type != static_cast<uint16_t>(MsgType::result))
      return make_error(Err::bad_frame,
                        "unexpected response type " + std::to_string(frame.msg_type));
    return FieldReader::parse(frame.payload);
  }
}

Result<FieldReader> ShardClient::call(MsgType type, const std::vector<uint8_t>& payload) {
  auto id = send(type, payload);
  if (!id.ok()) return id.error();
  return receive(id.value());
}

uint64_t ShardClient::sent_count(MsgType type) const {
  const size_t slot = static_cast<size_t>(type);
  return slot < sent_counts_.size() ? sent_counts_[slot].load() : 0;
}

}  // namespace scispace
