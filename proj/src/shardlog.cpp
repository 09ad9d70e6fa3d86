// SPDX-License-Identifier: Apache-2.0

#include "scispace/shardlog.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "scispace/protocol.hpp"

namespace fs = std::filesystem;

namespace scispace {

namespace {

Result<std::vector<uint8_t>> read_whole(const fs::path& p) {
  const int fd = ::open(p.c_str(), O_RDONLY);
  if (fd < 0) {
    if (errno == ENOENT) return std::vector<uint8_t>{};
    return make_error(Err::io_failure, p.string() + ": " + std::strerror(errno));
  }
  std::vector<uint8_t> out;
  uint8_t buf[1 << 16];
  while (true) {
    const ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n < 0) {
      ::close(fd);
      return make_error(Err::io_failure, p.string() + ": " + std::strerror(errno));
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  ::close(fd);
  return out;
}

Status write_all(int fd, const uint8_t* data, size_t size) {
  size_t off = 0;
  while (off < size) {
    const ssize_t n = ::write(fd, data + off, size - off);
    if (n < 0) return make_error(Err::io_failure, std::strerror(errno));
    off += static_cast<size_t>(n);
  }
  return ok_status();
}

}  // namespace

ShardLog::~ShardLog() { close(); }

void ShardLog::close() {
  if (log_fd_ >= 0) {
    ::close(log_fd_);
    log_fd_ = -1;
  }
}

Status ShardLog::open(const fs::path& dir, const std::string& name, const ApplyFn& apply) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return make_error(Err::io_failure, "mkdir " + dir.string() + ": " + ec.message());
  snap_path_ = dir / (name + ".snap");
  log_path_ = dir / (name + ".log");

  uint32_t snap_lsn = 0;
  {
    auto bytes = read_whole(snap_path_);
    if (!bytes.ok()) return bytes.error();
    const auto& buf = bytes.value();
    size_t off = 0;
    bool first = true;
    while (off < buf.size()) {
      size_t consumed = 0;
      auto frame = decode_frame_buffer(buf.data() + off, buf.size() - off, &consumed);
      if (!frame.ok()) break;  // torn or corrupt snapshot tail: stop
      off += consumed;
      const Frame& f = frame.value();
      if (first) {
        if (f.msg_type != kSnapshotHeaderType)
          return make_error(Err::bad_frame, "snapshot missing header");
        snap_lsn = f.request_id;
        first = false;
        continue;
      }
      apply(f.msg_type, f.payload);
    }
  }
  lsn_ = snap_lsn;

  uint64_t good_log_bytes = 0;
  {
    auto bytes = read_whole(log_path_);
    if (!bytes.ok()) return bytes.error();
    const auto& buf = bytes.value();
    size_t off = 0;
    while (off < buf.size()) {
      size_t consumed = 0;
      auto frame = decode_frame_buffer(buf.data() + off, buf.size() - off, &consumed);
      if (!frame.ok()) break;  // torn tail
      off += consumed;
      good_log_bytes = off;
      const Frame& f = frame.value();
      if (f.request_id <= snap_lsn) continue;  // covered by the snapshot
      apply(f.msg_type, f.payload);
      if (f.request_id > lsn_) lsn_ = f.request_id;
    }
  }

  log_fd_ = ::open(log_path_.c_str(), O_WRONLY | O_CREAT, 0644);
  if (log_fd_ < 0)
    return make_error(Err::io_failure, log_path_.string() + ": " + std::strerror(errno));
  if (::ftruncate(log_fd_, static_cast<off_t>(good_log_bytes)) != 0)
    return make_error(Err::io_failure, "ftruncate: " + std::string(std::strerror(errno)));
  if (::lseek(log_fd_, 0, SEEK_END) < 0)
    return make_error(Err::io_failure, "lseek: " + std::string(std::strerror(errno)));
  log_bytes_ = good_log_bytes;
  return ok_status();
}

Result<uint32_t> ShardLog::append(uint16_t record_type, const std::vector<uint8_t>& payload) {
  if (log_fd_ < 0) return make_error(Err::internal, "log not open");
  const uint32_t next = lsn_ + 1;
  auto frame = encode_frame(record_type, next, payload);
  if (!frame.ok()) return frame.error();
  if (auto s = write_all(log_fd_, frame.value().data(), frame.value().size()); !s.ok())
    return s.error();
  lsn_ = next;
  log_bytes_ += frame.value().size();
  return next;
}

Status ShardLog::compact(const DumpFn& dump) {
  if (log_fd_ < 0) return make_error(Err::internal, "log not open");
  const fs::path tmp = snap_path_.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) return make_error(Err::io_failure, tmp.string() + ": " + std::strerror(errno));

  Status write_status = ok_status();
  auto header = encode_frame(kSnapshotHeaderType, lsn_, {});
  write_status = write_all(fd, header.value().data(), header.value().size());
  if (write_status.ok()) {
    dump([&](uint16_t type, const std::vector<uint8_t>& payload) {
      if (!write_status.ok()) return;
      auto f = encode_frame(type, lsn_, payload);
      if (!f.ok()) {
        write_status = f.error();
        return;
      }
      write_status = write_all(fd, f.value().data(), f.value().size());
    });
  }
  ::close(fd);
  if (!write_status.ok()) {
    ::unlink(tmp.c_str());
    return write_status;
  }

  if (::rename(tmp.c_str(), snap_path_.c_str()) != 0)
    return make_error(Err::io_failure, "rename: " + std::string(std::strerror(errno)));

  if (::ftruncate(log_fd_, 0) != 0)
    return make_error(Err::io_failure, "ftruncate: " + std::string(std::strerror(errno)));
  if (::lseek(log_fd_, 0, SEEK_SET) < 0)
    return make_error(Err::io_failure, "lseek: " + std::string(std::strerror(errno)));
  log_bytes_ = 0;
  return ok_status();
}

}  // namespace scispace
