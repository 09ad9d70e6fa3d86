// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "scispace/core.hpp"
#include "scispace/result.hpp"

namespace scispace {

// Everything the artifact keeps inside a backend lives under this reserved
// directory; it is invisible to scans and listings.
inline constexpr const char* kInternalDirName = ".scispace";

struct BackendEntry {
  std::string rel_path;  // '/' separated, relative to the backend root
  EntryKind kind = EntryKind::file;
  uint64_t size = 0;
  int64_t mtime_ms = 0;
};

// Validates a backend-relative path: no traversal, no absolute paths, no
// NUL, and never inside the reserved internal directory.
Status check_backend_rel(std::string_view rel_path);

// Writes a file (creating parent directories), returning the on-disk entry.
// When mtime_ms is given the file's modification time is set to it, the way
// a copy tool preserves source timestamps.
Result<BackendEntry> bk_put(const std::filesystem::path& root, std::string_view rel_path,
                            const std::vector<uint8_t>& bytes,
                            std::optional<int64_t> mtime_ms = std::nullopt);

Result<std::vector<uint8_t>> bk_get(const std::filesystem::path& root,
                                    std::string_view rel_path);

Result<BackendEntry> bk_stat(const std::filesystem::path& root, std::string_view rel_path);

Status bk_mkdir(const std::filesystem::path& root, std::string_view rel_path);

// Depth-first scan: a directory precedes its contents, siblings come in
// lexicographic byte order, the internal directory is skipped, symlinks are
// skipped. start_rel "" scans the whole root. The root itself is not
// yielded.
Result<std::vector<BackendEntry>> bk_scan_entries(const std::filesystem::path& root,
                                                  std::string_view start_rel);

// Visitor-driven variant. on_dir returns whether to descend into the
// directory; on_file observes every file in scan order.
Status bk_walk(const std::filesystem::path& root, std::string_view start_rel,
               const std::function<bool(const BackendEntry&)>& on_dir,
               const std::function<void(const BackendEntry&)>& on_file);

// ---------------------------------------------------------------------------
// Sync flag store: one boolean per entry, meaning "this entry's metadata has
// been committed to the collaboration". Absence reads as false.
//
// marker-tree mode stores flags as zero-byte files under
// <root>/.scispace/sync/: "<rel>.mark" for files, "<rel>.dmark" for
// directories (the root itself is ".dmark"). native-xattr mode stores
// "user.scispace.sync" = "1" on the entry.
// ---------------------------------------------------------------------------

enum class FlagMode { marker_tree, native_xattr };

class SyncFlagStore {
 public:
  SyncFlagStore(std::filesystem::path root, FlagMode mode);

  // The kind hint spares the marker store a stat of the entry; callers on
  // a scan path already know what they are looking at. set(..., true)
  // without a hint verifies the entry exists; with a hint it trusts the
  // caller.
  Result<bool> get(std::string_view rel_path,
                   std::optional<EntryKind> kind = std::nullopt) const;
  Status set(std::string_view rel_path, bool value,
             std::optional<EntryKind> kind = std::nullopt);

  // Clears flags from rel_path's parent all the way up. Keeps the literal
  // skip rule of the scan sound: a synced directory flag never shadows
  // fresh entries below it.
  Status invalidate_parent_chain(std::string_view rel_path);

  FlagMode mode() const { return mode_; }
  const std::filesystem::path& root() const { return root_; }

  // True when the filesystem under dir accepts user extended attributes.
  static bool xattr_supported(const std::filesystem::path& dir);

 private:
  std::filesystem::path marker_path(std::string_view rel_path, EntryKind kind) const;
  Result<EntryKind> kind_of(std::string_view rel_path) const;

  std::filesystem::path root_;
  FlagMode mode_;
  // Directories this instance has already cleared together with their whole
  // ancestor chain; lets a burst of writes into the same subtree skip the
  // repeated walk. Every directory set-true (any instance, any process)
  // appends a byte to the generation file, which voids the memo.
  uint64_t flag_generation() const;
  Status bump_flag_generation();

  std::unordered_set<std::string> cleared_chain_;
  uint64_t memo_generation_ = 0;
};

// A local write: bytes straight into the backend plus the flag bookkeeping
// that makes the next scan find the entry (own flag false, parent chain
// invalidated).
Result<BackendEntry> lw_write(const std::filesystem::path& root, SyncFlagStore& flags,
                              std::string_view rel_path, const std::vector<uint8_t>& bytes,
                              std::optional<int64_t> mtime_ms = std::nullopt);

Status lw_mkdir(const std::filesystem::path& root, SyncFlagStore& flags,
                std::string_view rel_path);

}  // namespace scispace
