// SPDX-License-Identifier: Apache-2.0

#include "scispace/shard_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace scispace {

namespace {

size_t read_exact_fd(int fd, uint8_t* buf, size_t n) {
  size_t off = 0;
  while (off < n) {
    const ssize_t got = ::recv(fd, buf + off, n - off, 0);
    if (got <= 0) {
      if (got < 0 && errno == EINTR) continue;
      break;
    }
    off += static_cast<size_t>(got);
  }
  return off;
}

bool write_all_fd(int fd, const uint8_t* data, size_t n) {
  size_t off = 0;
  while (off < n) {
    const ssize_t sent = ::send(fd, data + off, n - off, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<size_t>(sent);
  }
  return true;
}

}  // namespace

Result<std::unique_ptr<ShardServer>> ShardServer::start(ShardService& service,
                                                        const std::string& host,
                                                        uint16_t port) {
  std::unique_ptr<ShardServer> srv(new ShardServer(service));

  srv->listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (srv->listen_fd_ < 0)
    return make_error(Err::io_failure, "socket: " + std::string(std::strerror(errno)));
  const int one = 1;
  ::setsockopt(srv->listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    return make_error(Err::bad_request, "bad listen address: " + host);
  if (::bind(srv->listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    return make_error(Err::io_failure, "bind " + host + ":" + std::to_string(port) + ": " +
                                           std::strerror(errno));
  if (::listen(srv->listen_fd_, 64) != 0)
    return make_error(Err::io_failure, "listen: " + std::string(std::strerror(errno)));

  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(srv->listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  srv->port_ = ntohs(bound.sin_port);

  srv->accept_thread_ = std::thread([raw = srv.get()] { raw->accept_loop(); });
  return srv;
}

ShardServer::~ShardServer() { stop(); }

void ShardServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::vector<std::unique_ptr<Connection>> connections;
  {
    std::lock_guard<std::mutex> lock(conn_mu_);
    connections.swap(connections_);
  }
  for (auto& conn : connections) {
    ::shutdown(conn->fd, SHUT_RDWR);  // unblock the reader
    if (conn->thread.joinable()) conn->thread.join();
    ::close(conn->fd);
  }
}

void ShardServer::reap_finished_locked() {
  for (auto it = connections_.begin(); it != connections_.end();) {
    if ((*it)->done.load()) {
      if ((*it)->thread.joinable()) (*it)->thread.join();
      ::close((*it)->fd);
      it = connections_.erase(it);
    } else {
      ++it;
    }
  }
}

void ShardServer::accept_loop() {
  while (!stopping_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;  // listener closed
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard<std::mutex> lock(conn_mu_);
    reap_finished_locked();
    auto conn = std::make_unique<Connection>();
    conn->fd = fd;
    Connection* raw = conn.get();
    conn->thread = std::thread([this, raw] { connection_loop(raw); });
    connections_.push_back(std::move(conn));
  }
}

void ShardServer::connection_loop(Connection* conn) {
  const int fd = conn->fd;
  while (!stopping_.load()) {
    auto frame = decode_frame([fd](uint8_t* buf, size_t n) { return read_exact_fd(fd, buf, n); });
    if (!frame.ok()) {
      // clean close, torn frame, or flood guard: drop the connection; a
      // decode error on a live stream cannot be resynchronized anyway
      break;
    }
    const Frame resp = service_.handle(frame.value());
    auto encoded = encode_frame(resp.msg_type, resp.request_id, resp.payload);
    if (!encoded.ok()) {
      auto err = encode_frame(static_cast<uint16_t>(MsgType::error), resp.request_id,
                              encode_error_payload(Err::internal, "response too large"));
      if (!err.ok() || !write_all_fd(fd, err.value().data(), err.value().size())) break;
      continue;
    }
    if (!write_all_fd(fd, encoded.value().data(), encoded.value().size())) break;
  }
  ::shutdown(fd, SHUT_RDWR);
  conn->done.store(true);  // the accept loop (or stop) joins and closes
}

}  // namespace scispace
