// SPDX-License-Identifier: Apache-2.0

#include "scispace/meu.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

namespace fs = std::filesystem;

namespace scispace {

// --- lock --------------------------------------------------------------------

Result<MeuLock> MeuLock::acquire(const fs::path& backend_root, const std::string& holder) {
  const fs::path dir = backend_root / kInternalDirName;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) return make_error(Err::io_failure, ec.message());
  const fs::path lock_path = dir / "meu.lock";

  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(lock_path.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
    if (fd >= 0) {
      const std::string body = holder + "\n" + std::to_string(now_ms()) + "\n";
      [[maybe_unused]] ssize_t n = ::write(fd, body.data(), body.size());
      ::close(fd);
      return MeuLock(lock_path);
    }
    if (errno != EEXIST)
      return make_error(Err::io_failure, "lock: " + std::string(std::strerror(errno)));

    // stale-lock check
    std::ifstream in(lock_path);
    std::string other_holder, ts_line;
    std::getline(in, other_holder);
    std::getline(in, ts_line);
    int64_t ts = 0;
    try {
      ts = std::stoll(ts_line);
    } catch (const std::exception&) {
      ts = 0;  // unreadable lock counts as stale
    }
    if (now_ms() - ts <= kStaleMs)
      return make_error(Err::lock_held, "held by " + other_holder);
    fs::remove(lock_path, ec);
  }
  return make_error(Err::lock_held, "could not break stale lock");
}

MeuLock::~MeuLock() {
  if (held_) {
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

MeuLock::MeuLock(MeuLock&& o) noexcept : path_(std::move(o.path_)), held_(o.held_) {
  o.held_ = false;
}

// --- scan --------------------------------------------------------------------

namespace {

std::string parent_dir_of(const std::string& rel) {
  const size_t pos = rel.rfind('/');
  return pos == std::string::npos ? std::string() : rel.substr(0, pos);
}

}  // namespace

Result<ScanReport> meu_scan(const fs::path& backend_root, std::string_view start_rel,
                            const SyncFlagStore& flags) {
  ScanReport report;
  const int64_t t0 = steady_now_ms();

  auto start_stat = bk_stat(backend_root, start_rel);
  if (!start_stat.ok()) return start_stat.error();
  if (start_stat.value().kind != EntryKind::directory)
    return make_error(Err::not_found, std::string(start_rel) + " is not a directory");

  auto root_flag = flags.get(start_rel, EntryKind::directory);
  if (!root_flag.ok()) return root_flag.error();
  if (root_flag.value()) {
    report.dirs_skipped = 1;  // whole subtree already synchronized
    report.elapsed_ms = steady_now_ms() - t0;
    return report;
  }
  report.dirs_visited = 1;
  const std::string start(start_rel);
  if (!start.empty()) {
    report.dirs_unsynced.push_back(start);
    report.dirs_meta.push_back(start_stat.value());
    report.dirs_meta.back().rel_path = start;
  }
  report.children[start];  // the start dir participates in the rollup

  Status flag_error = ok_status();
  auto walk = bk_walk(
      backend_root, start_rel,
      [&](const BackendEntry& e) {
        if (!flag_error.ok()) return false;
        auto flagged = flags.get(e.rel_path, EntryKind::directory);
        if (!flagged.ok()) {
          flag_error = flagged.error();
          return false;
        }
        report.children[parent_dir_of(e.rel_path)].push_back(
            ScanReport::Child{e.rel_path, EntryKind::directory, flagged.value()});
        if (flagged.value()) {
          report.dirs_skipped += 1;
          return false;  // no descent below a synced directory
        }
        report.dirs_visited += 1;
        report.dirs_unsynced.push_back(e.rel_path);
        report.dirs_meta.push_back(e);
        report.children[e.rel_path];
        return true;
      },
      [&](const BackendEntry& e) {
        if (!flag_error.ok()) return;
        auto flagged = flags.get(e.rel_path, EntryKind::file);
        if (!flagged.ok()) {
          flag_error = flagged.error();
          return;
        }
        report.children[parent_dir_of(e.rel_path)].push_back(
            ScanReport::Child{e.rel_path, EntryKind::file, flagged.value()});
        if (!flagged.value()) {
          report.files_unsynced.push_back(e.rel_path);
          report.files_meta.push_back(e);
        }
      });
  if (!walk.ok()) return walk.error();
  if (!flag_error.ok()) return flag_error.error();
  report.elapsed_ms = steady_now_ms() - t0;
  return report;
}

// --- export ------------------------------------------------------------------

namespace {

size_t segment_count(std::string_view rel) {
  if (rel.empty()) return 0;
  return static_cast<size_t>(std::count(rel.begin(), rel.end(), '/')) + 1;
}

Result<FileRecord> build_record(const BackendEntry& entry, const std::string& owner,
                                uint32_t origin_dtn, uint32_t dtn_count) {
  auto path = normalize_path("/" + entry.rel_path);
  if (!path.ok()) return path.error();
  auto placed = place(path.value(), dtn_count);
  if (!placed.ok()) return placed.error();

  FileRecord r;
  r.path = path.value().display();
  r.size = entry.kind == EntryKind::directory ? 0 : entry.size;
  r.owner = owner;
  r.mtime_ms = entry.mtime_ms;
  r.dtn_index = placed.value();
  r.ns = path.value().ns;
  r.synced = true;
  r.kind = entry.kind;
  r.data_dtn = origin_dtn;
  return r;
}

}  // namespace

Result<ExportReport> meu_export(WorkspaceSession& session, uint32_t origin_dtn,
                                const MeuOptions& opts) {
  const int64_t t0 = steady_now_ms();
  const CollabConfig& cfg = session.config();
  if (origin_dtn >= cfg.dtn_count())
    return make_error(Err::bad_request, "origin DTN out of range");
  const fs::path& root = cfg.dtns[origin_dtn].backend_root;

  auto lock = MeuLock::acquire(root, cfg.collaborator);
  if (!lock.ok()) return lock.error();
  SyncFlagStore flags(root, cfg.flag_mode);

  ExportReport report;
  auto scan = meu_scan(root, opts.start_rel, flags);
  if (!scan.ok()) return scan.error();
  report.scan = scan.take();

  // records per target shard, plus the file rel paths to flag on ack.
  // directory flags are never set here: a directory only becomes synced
  // once the bottom-up pass sees every child synced, otherwise a failed
  // sibling group would be skipped forever.
  std::unordered_map<uint32_t, std::vector<FileRecord>> groups;
  std::unordered_map<uint32_t, std::vector<std::string>> group_file_rels;
  std::unordered_map<uint32_t, std::vector<std::string>> group_dir_rels;
  auto add_entry = [&](const BackendEntry& entry) -> Status {
    if (segment_count(entry.rel_path) < 2) {
      if (entry.kind == EntryKind::file)
        std::fprintf(stderr, "scispace: %s sits above any namespace, not exported\n",
                     entry.rel_path.c_str());
      return ok_status();  // namespace roots carry no records of their own
    }
    auto record = build_record(entry, cfg.collaborator, origin_dtn, cfg.dtn_count());
    if (!record.ok()) return record.error();
    groups[record.value().dtn_index].push_back(record.value());
    auto& rels = entry.kind == EntryKind::file ? group_file_rels : group_dir_rels;
    rels[record.value().dtn_index].push_back(entry.rel_path);
    return ok_status();
  };
  for (const auto& entry : report.scan.dirs_meta) {
    if (auto s = add_entry(entry); !s.ok()) return s.error();
  }
  for (const auto& entry : report.scan.files_meta) {
    if (auto s = add_entry(entry); !s.ok()) return s.error();
  }

  // one BATCH_EXPORT per shard
  std::unordered_set<std::string> newly_synced;
  std::unordered_set<std::string> dir_record_acked;
  for (auto& [shard, records] : groups) {
    if (records.empty()) continue;
    FieldWriter w;
    w.add_string(1, cfg.collaborator);
    for (const auto& r : records) w.add_bytes(2, record_to_bytes(r));
    auto resp = session.client(shard).call(MsgType::batch_export, w.finish());
    if (!resp.ok()) {
      std::fprintf(stderr, "scispace: export to shard %u failed: %s\n", shard,
                   resp.error().message.c_str());
      report.partial = true;
      report.failed_shards.push_back(shard);
      continue;
    }
    const uint64_t acked = resp.value().u64(1).value_or(records.size());
    report.per_shard[shard] = acked;
    report.exported += acked;
    if (opts.after_ack_hook) opts.after_ack_hook(shard);
    for (const auto& rel : group_file_rels[shard]) {
      if (auto s = flags.set(rel, true, EntryKind::file); !s.ok()) return s.error();
      newly_synced.insert(rel);
    }
    for (const auto& rel : group_dir_rels[shard]) dir_record_acked.insert(rel);
  }

  // bottom-up rollup over the scan's child lists: a directory becomes
  // synced once its own record is on its shard and every child is synced.
  // Namespace roots and the scan root carry no records, so only the child
  // condition applies to them. Skipped subtrees were already true.
  std::vector<std::string> candidate_dirs = report.scan.dirs_unsynced;
  if (opts.start_rel.empty()) candidate_dirs.push_back("");
  std::sort(candidate_dirs.begin(), candidate_dirs.end(),
            [](const std::string& a, const std::string& b) {
              return segment_count(a) > segment_count(b);
            });
  std::unordered_set<std::string> dir_now_synced;
  for (const auto& dir : candidate_dirs) {
    if (segment_count(dir) >= 2 && !dir_record_acked.count(dir)) continue;
    auto children = report.scan.children.find(dir);
    bool all_synced = true;
    if (children != report.scan.children.end()) {
      for (const auto& child : children->second) {
        if (child.synced || newly_synced.count(child.rel) || dir_now_synced.count(child.rel))
          continue;
        all_synced = false;
        break;
      }
    }
    if (all_synced) {
      if (auto s = flags.set(dir, true, EntryKind::directory); !s.ok()) return s.error();
      dir_now_synced.insert(dir);
    }
  }

  if (opts.index_offline_after && !report.partial) {
    FieldWriter w;
    w.add_u8(1, static_cast<uint8_t>(IndexControl::offline));
    w.add_string(3, opts.start_rel);
    auto resp = session.client(origin_dtn).call(MsgType::enqueue_index, w.finish());
    if (!resp.ok()) return resp.error();
  }

  report.elapsed_ms = steady_now_ms() - t0;
  return report;
}

}  // namespace scispace
