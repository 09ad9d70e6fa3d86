// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "scispace/backend.hpp"
#include "scispace/workspace.hpp"

namespace scispace {

// Holds <root>/.scispace/meu.lock for the lifetime of the object. The file
// carries "<holder>\n<epoch ms>\n"; a lock older than 60 s is stale and
// gets broken.
class MeuLock {
 public:
  static Result<MeuLock> acquire(const std::filesystem::path& backend_root,
                                 const std::string& holder);
  ~MeuLock();
  MeuLock(MeuLock&& o) noexcept;
  MeuLock& operator=(MeuLock&&) = delete;
  MeuLock(const MeuLock&) = delete;

  static constexpr int64_t kStaleMs = 60'000;

 private:
  explicit MeuLock(std::filesystem::path p) : path_(std::move(p)) {}
  std::filesystem::path path_;
  bool held_ = true;
};

struct ScanReport {
  uint64_t dirs_visited = 0;
  uint64_t dirs_skipped = 0;
  std::vector<std::string> files_unsynced;  // backend-relative
  std::vector<std::string> dirs_unsynced;   // backend-relative, scan order
  int64_t elapsed_ms = 0;

  // Everything below is captured during the same walk so the export phase
  // never re-stats the tree.
  struct Child {
    std::string rel;
    EntryKind kind;
    bool synced;
  };
  std::vector<BackendEntry> files_meta;               // unsynced files
  std::vector<BackendEntry> dirs_meta;                // unsynced dirs
  std::map<std::string, std::vector<Child>> children; // per visited dir
};

// Skip-scan from start_rel: a directory whose flag is true is skipped whole
// (no descent); every flag-false file is reported. Order follows the
// deterministic backend walk. The caller holds the MEU lock.
Result<ScanReport> meu_scan(const std::filesystem::path& backend_root,
                            std::string_view start_rel, const SyncFlagStore& flags);

struct ExportReport {
  uint64_t exported = 0;
  std::map<uint32_t, uint64_t> per_shard;  // records acked per shard
  bool partial = false;                    // some shard group failed
  std::vector<uint32_t> failed_shards;
  ScanReport scan;
  int64_t elapsed_ms = 0;
};

struct MeuOptions {
  std::string start_rel;          // subtree to export, "" = whole backend
  bool index_offline_after = false;
  // Test seam: runs after each shard ack, before that group's flags are
  // set; a thrown CrashPoint simulates dying in the gap.
  std::function<void(uint32_t shard)> after_ack_hook;
};

struct CrashPoint {};

// Scans, groups the unsynchronized records by placement, sends one
// BATCH_EXPORT per shard, then marks exported entries (and fully-synced
// directories, bottom-up) synced. A failed shard leaves its group unsynced
// for the next run; re-running is idempotent.
Result<ExportReport> meu_export(WorkspaceSession& session, uint32_t origin_dtn,
                                const MeuOptions& opts = {});

}  // namespace scispace
