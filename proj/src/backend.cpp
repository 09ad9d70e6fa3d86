// SPDX-License-Identifier: Apache-2.0

#include "scispace/backend.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <sys/xattr.h>
#include <unistd.h>
#include <utime.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <system_error>

namespace fs = std::filesystem;

namespace scispace {

namespace {

constexpr const char* kSyncXattr = "user.scispace.sync";

std::string parent_of(std::string_view rel) {
  const size_t pos = rel.rfind('/');
  if (pos == std::string_view::npos) return "";
  return std::string(rel.substr(0, pos));
}

int64_t mtime_ms_of(const struct stat& st) {
  return static_cast<int64_t>(st.st_mtim.tv_sec) * 1000 + st.st_mtim.tv_nsec / 1000000;
}

Status set_file_mtime(const fs::path& p, int64_t mtime_ms) {
  struct timespec times[2];
  times[0].tv_sec = 0;
  times[0].tv_nsec = UTIME_OMIT;
  times[1].tv_sec = mtime_ms / 1000;
  times[1].tv_nsec = (mtime_ms % 1000) * 1000000;
  if (utimensat(AT_FDCWD, p.c_str(), times, 0) != 0)
    return make_error(Err::io_failure, "utimensat: " + std::string(std::strerror(errno)));
  return ok_status();
}

}  // namespace

Status check_backend_rel(std::string_view rel_path) {
  if (rel_path.find('\0') != std::string_view::npos)
    return make_error(Err::escapes_root, "NUL in path");
  if (!rel_path.empty() && rel_path.front() == '/')
    return make_error(Err::escapes_root, "absolute path");
  size_t i = 0;
  bool first = true;
  while (i <= rel_path.size()) {
    const size_t end = std::min(rel_path.find('/', i), rel_path.size());
    std::string_view seg = rel_path.substr(i, end - i);
    if (seg == "." || seg == "..")
      return make_error(Err::escapes_root, "traversal segment");
    if (seg.empty() && end != rel_path.size())
      return make_error(Err::escapes_root, "empty segment");
    if (first && seg == kInternalDirName)
      return make_error(Err::escapes_root, "reserved internal directory");
    first = false;
    if (end == rel_path.size()) break;
    i = end + 1;
  }
  return ok_status();
}

Result<BackendEntry> bk_put(const fs::path& root, std::string_view rel_path,
                            const std::vector<uint8_t>& bytes,
                            std::optional<int64_t> mtime_ms) {
  if (auto s = check_backend_rel(rel_path); !s.ok()) return s.error();
  if (rel_path.empty()) return make_error(Err::escapes_root, "empty path");
  const fs::path target = root / fs::path(rel_path);

  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) return make_error(Err::io_failure, "mkdir: " + ec.message());

  const int fd = ::open(target.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) return make_error(Err::io_failure, "open: " + std::string(std::strerror(errno)));
  size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::write(fd, bytes.data() + off, bytes.size() - off);
    if (n < 0) {
      ::close(fd);
      return make_error(Err::io_failure, "write: " + std::string(std::strerror(errno)));
    }
    off += static_cast<size_t>(n);
  }
  ::close(fd);

  if (mtime_ms) {
    if (auto s = set_file_mtime(target, *mtime_ms); !s.ok()) return s.error();
  }

  struct stat st;
  if (::stat(target.c_str(), &st) != 0)
    return make_error(Err::io_failure, "stat: " + std::string(std::strerror(errno)));
  BackendEntry e;
  e.rel_path = std::string(rel_path);
  e.kind = EntryKind::file;
  e.size = static_cast<uint64_t>(st.st_size);
  e.mtime_ms = mtime_ms_of(st);
  return e;
}

Result<std::vector<uint8_t>> bk_get(const fs::path& root, std::string_view rel_path) {
  if (auto s = check_backend_rel(rel_path); !s.ok()) return s.error();
  const fs::path target = root / fs::path(rel_path);
  const int fd = ::open(target.c_str(), O_RDONLY);
  if (fd < 0) {
    if (errno == ENOENT || errno == ENOTDIR) return make_error(Err::not_found, std::string(rel_path));
    return make_error(Err::io_failure, "open: " + std::string(std::strerror(errno)));
  }
  struct stat st;
  if (::fstat(fd, &st) != 0) {
    ::close(fd);
    return make_error(Err::io_failure, "fstat: " + std::string(std::strerror(errno)));
  }
  if (S_ISDIR(st.st_mode)) {
    ::close(fd);
    return make_error(Err::not_a_file, std::string(rel_path));
  }
  std::vector<uint8_t> out(static_cast<size_t>(st.st_size));
  size_t off = 0;
  while (off < out.size()) {
    const ssize_t n = ::read(fd, out.data() + off, out.size() - off);
    if (n < 0) {
      ::close(fd);
      return make_error(Err::io_failure, "read: " + std::string(std::strerror(errno)));
    }
    if (n == 0) break;
    off += static_cast<size_t>(n);
  }
  ::close(fd);
  out.resize(off);
  return out;
}

Result<BackendEntry> bk_stat(const fs::path& root, std::string_view rel_path) {
  if (auto s = check_backend_rel(rel_path); !s.ok()) return s.error();
  const fs::path target = rel_path.empty() ? root : root / fs::path(rel_path);
  struct stat st;
  if (::lstat(target.c_str(), &st) != 0) {
    if (errno == ENOENT || errno == ENOTDIR) return make_error(Err::not_found, std::string(rel_path));
    return make_error(Err::io_failure, "lstat: " + std::string(std::strerror(errno)));
  }
  BackendEntry e;
  e.rel_path = std::string(rel_path);
  e.kind = S_ISDIR(st.st_mode) ? EntryKind::directory : EntryKind::file;
  e.size = S_ISDIR(st.st_mode) ? 0 : static_cast<uint64_t>(st.st_size);
  e.mtime_ms = mtime_ms_of(st);
  return e;
}

Status bk_mkdir(const fs::path& root, std::string_view rel_path) {
  if (auto s = check_backend_rel(rel_path); !s.ok()) return s.error();
  std::error_code ec;
  fs::create_directories(root / fs::path(rel_path), ec);
  if (ec) return make_error(Err::io_failure, "mkdir: " + ec.message());
  return ok_status();
}

namespace {

Status walk_dir(const fs::path& root, const std::string& rel,
                const std::function<bool(const BackendEntry&)>& on_dir,
                const std::function<void(const BackendEntry&)>& on_file) {
  const fs::path dir = rel.empty() ? root : root / fs::path(rel);
  std::vector<std::string> names;
  {
    std::error_code ec;
    fs::directory_iterator it(dir, ec);
    if (ec) return make_error(Err::io_failure, dir.string() + ": " + ec.message());
    for (const auto& de : it) names.push_back(de.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) {
    if (rel.empty() && name == kInternalDirName) continue;
    const std::string child_rel = rel.empty() ? name : rel + "/" + name;
    struct stat st;
    const fs::path child = root / fs::path(child_rel);
    if (::lstat(child.c_str(), &st) != 0) continue;  // vanished mid-scan
    if (S_ISLNK(st.st_mode)) {
      std::fprintf(stderr, "scispace: skipping symlink %s\n", child_rel.c_str());
      continue;
    }
    BackendEntry e;
    e.rel_path = child_rel;
    e.mtime_ms = mtime_ms_of(st);
    if (S_ISDIR(st.st_mode)) {
      e.kind = EntryKind::directory;
      e.size = 0;
      if (on_dir(e)) {
        if (auto s = walk_dir(root, child_rel, on_dir, on_file); !s.ok()) return s;
      }
    } else if (S_ISREG(st.st_mode)) {
      e.kind = EntryKind::file;
      e.size = static_cast<uint64_t>(st.st_size);
      on_file(e);
    }
  }
  return ok_status();
}

}  // namespace

Status bk_walk(const fs::path& root, std::string_view start_rel,
               const std::function<bool(const BackendEntry&)>& on_dir,
               const std::function<void(const BackendEntry&)>& on_file) {
  if (auto s = check_backend_rel(start_rel); !s.ok()) return s.error();
  const fs::path start = start_rel.empty() ? root : root / fs::path(start_rel);
  std::error_code ec;
  const auto st = fs::status(start, ec);
  if (ec || !fs::exists(st)) return make_error(Err::not_found, std::string(start_rel));
  if (!fs::is_directory(st)) return make_error(Err::not_found, std::string(start_rel) + " is not a directory");
  return walk_dir(root, std::string(start_rel), on_dir, on_file);
}

Result<std::vector<BackendEntry>> bk_scan_entries(const fs::path& root,
                                                  std::string_view start_rel) {
  std::vector<BackendEntry> out;
  auto s = bk_walk(
      root, start_rel,
      [&](const BackendEntry& e) {
        out.push_back(e);
        return true;
      },
      [&](const BackendEntry& e) { out.push_back(e); });
  if (!s.ok()) return s.error();
  return out;
}

// --- sync flags -------------------------------------------------------------

SyncFlagStore::SyncFlagStore(fs::path root, FlagMode mode)
    : root_(std::move(root)), mode_(mode) {}

fs::path SyncFlagStore::marker_path(std::string_view rel_path, EntryKind kind) const {
  fs::path p = root_ / kInternalDirName / "sync";
  std::string name(rel_path);
  name += (kind == EntryKind::directory) ? ".dmark" : ".mark";
  return p / fs::path(name);
}

Result<EntryKind> SyncFlagStore::kind_of(std::string_view rel_path) const {
  auto st = bk_stat(root_, rel_path);
  if (!st.ok()) return st.error();
  return st.value().kind;
}

Result<bool> SyncFlagStore::get(std::string_view rel_path,
                                std::optional<EntryKind> kind_hint) const {
  if (auto s = check_backend_rel(rel_path); !s.ok()) return s.error();
  if (mode_ == FlagMode::native_xattr) {
    const fs::path target = rel_path.empty() ? root_ : root_ / fs::path(rel_path);
    char buf[8];
    const ssize_t n = ::getxattr(target.c_str(), kSyncXattr, buf, sizeof(buf));
    if (n < 0) {
      if (errno == ENODATA || errno == ENOENT || errno == ENOTDIR) return false;
      return make_error(Err::io_failure, "getxattr: " + std::string(std::strerror(errno)));
    }
    return n >= 1 && buf[0] == '1';
  }
  // marker-tree: the entry's kind decides which marker name applies; a
  // missing entry simply has no flag.
  EntryKind kind;
  if (kind_hint) {
    kind = *kind_hint;
  } else {
    auto looked_up = kind_of(rel_path);
    if (!looked_up.ok()) {
      if (looked_up.code() == Err::not_found) return false;
      return looked_up.error();
    }
    kind = looked_up.value();
  }
  std::error_code ec;
  return fs::exists(marker_path(rel_path, kind), ec);
}

uint64_t SyncFlagStore::flag_generation() const {
  std::error_code ec;
  const auto size = fs::file_size(root_ / kInternalDirName / "sync" / ".gen", ec);
  return ec ? 0 : static_cast<uint64_t>(size);
}

Status SyncFlagStore::bump_flag_generation() {
  const fs::path gen = root_ / kInternalDirName / "sync" / ".gen";
  std::error_code ec;
  fs::create_directories(gen.parent_path(), ec);
  if (ec) return make_error(Err::io_failure, "gen mkdir: " + ec.message());
  const int fd = ::open(gen.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) return make_error(Err::io_failure, "gen open: " + std::string(std::strerror(errno)));
  const char b = 'g';
  [[maybe_unused]] const ssize_t n = ::write(fd, &b, 1);
  ::close(fd);
  return ok_status();
}

Status SyncFlagStore::set(std::string_view rel_path, bool value,
                          std::optional<EntryKind> kind_hint) {
  if (auto s = check_backend_rel(rel_path); !s.ok()) return s.error();
  Result<EntryKind> kind = kind_hint ? Result<EntryKind>(*kind_hint) : kind_of(rel_path);
  if (!kind.ok()) return kind.error();
  if (value && kind.value() == EntryKind::directory) {
    cleared_chain_.erase(std::string(rel_path));
    if (auto s = bump_flag_generation(); !s.ok()) return s;
  }

  if (mode_ == FlagMode::native_xattr) {
    const fs::path target = rel_path.empty() ? root_ : root_ / fs::path(rel_path);
    if (value) {
      if (::setxattr(target.c_str(), kSyncXattr, "1", 1, 0) != 0)
        return make_error(Err::io_failure, "setxattr: " + std::string(std::strerror(errno)));
    } else {
      if (::removexattr(target.c_str(), kSyncXattr) != 0 && errno != ENODATA)
        return make_error(Err::io_failure, "removexattr: " + std::string(std::strerror(errno)));
    }
    return ok_status();
  }

  const fs::path marker = marker_path(rel_path, kind.value());
  if (value) {
    std::error_code ec;
    fs::create_directories(marker.parent_path(), ec);
    if (ec) return make_error(Err::io_failure, "marker mkdir: " + ec.message());
    const int fd = ::open(marker.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) return make_error(Err::io_failure, "marker open: " + std::string(std::strerror(errno)));
    ::close(fd);
  } else {
    std::error_code ec;
    fs::remove(marker, ec);
    if (ec) return make_error(Err::io_failure, "marker remove: " + ec.message());
  }
  return ok_status();
}

Status SyncFlagStore::invalidate_parent_chain(std::string_view rel_path) {
  // Clears every ancestor. Stopping at the first false ancestor would be
  // cheaper but unsound: a parent directory created by this very write is
  // false while the flags above it still say "synced", and the scan would
  // skip the whole subtree. The memo makes write bursts into one subtree
  // walk the chain only once: a memoized directory was cleared together
  // with everything above it, and any directory set-true since (any
  // process) shows up as a generation change and voids the memo.
  if (!cleared_chain_.empty()) {
    const uint64_t gen = flag_generation();
    if (gen != memo_generation_) {
      cleared_chain_.clear();
      memo_generation_ = gen;
    }
  } else {
    memo_generation_ = flag_generation();
  }
  std::string cur = parent_of(rel_path);
  std::vector<std::string> walked;
  while (true) {
    if (cleared_chain_.count(cur)) break;
    auto flagged = get(cur, EntryKind::directory);
    if (!flagged.ok()) return flagged.error();
    if (flagged.value()) {
      if (auto s = set(cur, false, EntryKind::directory); !s.ok()) return s;
    }
    walked.push_back(cur);
    if (cur.empty()) break;
    cur = parent_of(cur);
  }
  for (auto& dir : walked) cleared_chain_.insert(std::move(dir));
  return ok_status();
}

bool SyncFlagStore::xattr_supported(const fs::path& dir) {
  const fs::path probe = dir / ".scispace.xattr-probe";
  const int fd = ::open(probe.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) return false;
  ::close(fd);
  const bool ok = ::setxattr(probe.c_str(), kSyncXattr, "1", 1, 0) == 0;
  ::unlink(probe.c_str());
  return ok;
}

// --- local writes -----------------------------------------------------------

Result<BackendEntry> lw_write(const fs::path& root, SyncFlagStore& flags,
                              std::string_view rel_path, const std::vector<uint8_t>& bytes,
                              std::optional<int64_t> mtime_ms) {
  auto entry = bk_put(root, rel_path, bytes, mtime_ms);
  if (!entry.ok()) return entry.error();
  // Overwrites of already-synced files must come back into scan scope.
  if (auto s = flags.set(rel_path, false, EntryKind::file); !s.ok()) return s.error();
  if (auto s = flags.invalidate_parent_chain(rel_path); !s.ok()) return s.error();
  return entry;
}

Status lw_mkdir(const fs::path& root, SyncFlagStore& flags, std::string_view rel_path) {
  if (auto s = bk_mkdir(root, rel_path); !s.ok()) return s;
  if (rel_path.empty()) return ok_status();
  if (auto s = flags.set(rel_path, false); !s.ok()) return s;
  return flags.invalidate_parent_chain(rel_path);
}

}  // namespace scispace
