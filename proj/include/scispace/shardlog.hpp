// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scispace/result.hpp"

namespace scispace {

// Append-only log plus snapshot, the persistence behind both shard kinds.
//
// Both files are sequences of wire frames (msg_type = record type,
// request_id = log sequence number). The snapshot starts with a header
// frame whose request_id is the LSN it covers; replay applies the snapshot
// body, then every log record with a higher LSN. A torn tail (crash during
// append) is detected and truncated on open, so an acked record is exactly
// one fully-written frame.
class ShardLog {
 public:
  static constexpr uint16_t kSnapshotHeaderType = 1;

  using ApplyFn = std::function<void(uint16_t record_type, const std::vector<uint8_t>& payload)>;
  using EmitFn = std::function<void(uint16_t record_type, const std::vector<uint8_t>& payload)>;
  using DumpFn = std::function<void(const EmitFn& emit)>;

  ShardLog() = default;
  ~ShardLog();
  ShardLog(const ShardLog&) = delete;
  ShardLog& operator=(const ShardLog&) = delete;

  // Creates dir if needed, replays snapshot + log into `apply`, leaves the
  // log open for appends.
  Status open(const std::filesystem::path& dir, const std::string& name, const ApplyFn& apply);

  // Appends one record and flushes it to the OS before returning.
  Result<uint32_t> append(uint16_t record_type, const std::vector<uint8_t>& payload);

  // Rewrites the snapshot from `dump` and truncates the log. Crash-safe:
  // the snapshot is renamed into place before the log is cut, and LSNs keep
  // replay idempotent in between.
  Status compact(const DumpFn& dump);

  uint64_t log_bytes() const { return log_bytes_; }
  uint32_t lsn() const { return lsn_; }

  void close();

 private:
  std::filesystem::path snap_path_;
  std::filesystem::path log_path_;
  int log_fd_ = -1;
  uint64_t log_bytes_ = 0;
  uint32_t lsn_ = 0;
};

}  // namespace scispace
