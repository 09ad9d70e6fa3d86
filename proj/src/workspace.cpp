// SPDX-License-Identifier: Apache-2.0

#include "scispace/workspace.hpp"

#include <algorithm>
#include <future>
#include <set>

namespace scispace {

namespace {

std::vector<uint8_t> record_request(const FileRecord& r) {
  FieldWriter w;
  w.add_bytes(1, record_to_bytes(r));
  return w.finish();
}

}  // namespace

Result<std::unique_ptr<WorkspaceSession>> WorkspaceSession::open(const CollabConfig& cfg) {
  std::unique_ptr<WorkspaceSession> session(new WorkspaceSession(cfg));
  for (const auto& dtn : cfg.dtns) {
    auto client = ShardClient::connect(dtn.host, dtn.port);
    if (!client.ok()) return client.error();
    session->clients_.push_back(client.take());
  }
  return session;
}

Result<FileRecord> WorkspaceSession::write(std::string_view raw_path,
                                           const std::vector<uint8_t>& bytes,
                                           std::optional<int64_t> mtime_ms) {
  auto path = normalize_path(raw_path);
  if (!path.ok()) return path.error();
  auto placed = place(path.value(), dtn_count());
  if (!placed.ok()) return placed.error();
  const uint32_t d = placed.value();
  const auto& root = cfg_.dtns[d].backend_root;
  const std::string rel = path.value().backend_rel();

  auto entry = bk_put(root, rel, bytes, mtime_ms);
  if (!entry.ok()) return entry.error();
  SyncFlagStore flags(root, cfg_.flag_mode);
  if (auto s = flags.set(rel, true); !s.ok()) return s.error();

  FileRecord record;
  record.path = path.value().display();
  record.size = entry.value().size;
  record.owner = cfg_.collaborator;
  record.mtime_ms = entry.value().mtime_ms;
  record.dtn_index = d;
  record.ns = path.value().ns;
  record.synced = true;
  record.kind = EntryKind::file;
  record.data_dtn = d;

  auto put = clients_[d]->call(MsgType::put_file, record_request(record));
  if (!put.ok()) return put.error();

  switch (cfg_.mode) {
    case IndexMode::inline_sync: {
      FieldWriter w;
      w.add_u8(1, static_cast<uint8_t>(IndexControl::index_sync_now));
      w.add_string(2, record.path);
      auto idx = clients_[d]->call(MsgType::enqueue_index, w.finish());
      if (!idx.ok()) return idx.error();  // strict mode: the write fails whole
      break;
    }
    case IndexMode::inline_async: {
      FieldWriter w;
      w.add_u8(1, static_cast<uint8_t>(IndexControl::enqueue_async));
      w.add_string(2, record.path);
      auto idx = clients_[d]->call(MsgType::enqueue_index, w.finish());
      if (!idx.ok()) return idx.error();
      break;
    }
    case IndexMode::lw_offline:
      break;
  }
  return record;
}

Result<FileRecord> WorkspaceSession::stat(std::string_view raw_path) {
  auto path = normalize_path(raw_path);
  if (!path.ok()) return path.error();
  auto placed = place(path.value(), dtn_count());
  if (!placed.ok()) return placed.error();
  FieldWriter w;
  w.add_string(1, path.value().display());
  w.add_string(2, cfg_.collaborator);
  auto resp = clients_[placed.value()]->call(MsgType::get_file, w.finish());
  if (!resp.ok()) return resp.error();
  auto rb = resp.value().bytes(1);
  if (!rb) return make_error(Err::bad_frame, "stat response without record");
  return record_from_bytes(*rb);
}

Result<std::vector<uint8_t>> WorkspaceSession::read(std::string_view raw_path) {
  auto record = stat(raw_path);
  if (!record.ok()) return record.error();
  if (record.value().kind == EntryKind::directory)
    return make_error(Err::not_a_file, record.value().path);
  if (record.value().data_dtn >= dtn_count())
    return make_error(Err::internal, "record names unknown data DTN");
  auto parsed = normalize_path(record.value().path);
  if (!parsed.ok()) return parsed.error();
  return bk_get(cfg_.dtns[record.value().data_dtn].backend_root, parsed.value().backend_rel());
}

Result<std::vector<std::vector<FileRecord>>> WorkspaceSession::list_visible_per_shard() {
  std::vector<std::future<Result<std::vector<FileRecord>>>> futures;
  for (uint32_t d = 0; d < dtn_count(); ++d) {
    futures.push_back(std::async(std::launch::async, [this, d]() -> Result<std::vector<FileRecord>> {
      FieldWriter w;
      w.add_string(1, cfg_.collaborator);
      auto resp = clients_[d]->call(MsgType::list_visible, w.finish());
      if (!resp.ok()) return resp.error();
      std::vector<FileRecord> out;
      for (const auto& rb : resp.value().repeated(1)) {
        auto r = record_from_bytes(rb);
        if (!r.ok()) return r.error();
        out.push_back(r.take());
      }
      return out;
    }));
  }
  std::vector<std::vector<FileRecord>> per_shard(dtn_count());
  std::optional<Error> first_error;
  for (uint32_t d = 0; d < dtn_count(); ++d) {
    auto r = futures[d].get();
    if (!r.ok()) {
      if (!first_error) first_error = r.error();
      continue;
    }
    per_shard[d] = r.take();
  }
  if (first_error) return *first_error;  // no partial listings
  return per_shard;
}

Result<std::vector<FileRecord>> WorkspaceSession::list_visible_all() {
  auto per_shard = list_visible_per_shard();
  if (!per_shard.ok()) return per_shard.error();
  std::vector<FileRecord> all;
  for (auto& shard : per_shard.value())
    for (auto& r : shard) all.push_back(std::move(r));
  std::sort(all.begin(), all.end(),
            [](const FileRecord& a, const FileRecord& b) { return a.path < b.path; });
  return all;
}

std::vector<std::string> child_names_under(const std::vector<FileRecord>& records,
                                           const WorkspacePath& dir) {
  const std::string prefix = dir.display() + "/";
  std::set<std::string> children;
  for (const auto& r : records) {
    if (r.path.size() <= prefix.size() || r.path.compare(0, prefix.size(), prefix) != 0)
      continue;
    const size_t end = r.path.find('/', prefix.size());
    children.insert(r.path.substr(prefix.size(), end - prefix.size()));
  }
  return {children.begin(), children.end()};
}

Result<std::vector<std::string>> WorkspaceSession::readdir(std::string_view raw_dir_path) {
  auto dir = normalize_path(raw_dir_path);
  if (!dir.ok()) return dir.error();
  auto merged = list_visible_all();
  if (!merged.ok()) return merged.error();
  return child_names_under(merged.value(), dir.value());
}

Status WorkspaceSession::mkdir(std::string_view raw_dir_path) {
  auto dir = normalize_path(raw_dir_path);
  if (!dir.ok()) return dir.error();
  if (dir.value().rel.empty())
    return make_error(Err::exists, "namespace root " + dir.value().display());
  auto placed = place(dir.value(), dtn_count());
  if (!placed.ok()) return placed.error();
  const uint32_t d = placed.value();

  auto existing = stat(raw_dir_path);
  if (existing.ok() || existing.code() == Err::not_visible)
    return make_error(Err::exists, dir.value().display());
  if (existing.code() != Err::not_found) return existing.error();

  const auto& root = cfg_.dtns[d].backend_root;
  const std::string rel = dir.value().backend_rel();
  if (auto s = bk_mkdir(root, rel); !s.ok()) return s;
  SyncFlagStore flags(root, cfg_.flag_mode);
  if (auto s = flags.set(rel, true); !s.ok()) return s;

  FileRecord record;
  record.path = dir.value().display();
  record.size = 0;
  record.owner = cfg_.collaborator;
  record.mtime_ms = now_ms();
  record.dtn_index = d;
  record.ns = dir.value().ns;
  record.synced = true;
  record.kind = EntryKind::directory;
  record.data_dtn = d;
  auto put = clients_[d]->call(MsgType::put_file, record_request(record));
  if (!put.ok()) return put.error();
  return ok_status();
}

Status WorkspaceSession::register_namespace(const NamespaceTemplate& tmpl) {
  FieldWriter w;
  w.add_bytes(1, ns_to_bytes(tmpl));
  const auto payload = w.finish();
  for (auto& client : clients_) {
    auto resp = client->call(MsgType::register_ns, payload);
    if (!resp.ok()) return resp.error();
  }
  return ok_status();
}

Result<size_t> WorkspaceSession::flush_all() {
  size_t total = 0;
  for (auto& client : clients_) {
    FieldWriter w;
    w.add_u8(1, static_cast<uint8_t>(IndexControl::flush));
    auto resp = client->call(MsgType::enqueue_index, w.finish());
    if (!resp.ok()) return resp.error();
    total += resp.value().u64(1).value_or(0);
  }
  return total;
}

Result<size_t> WorkspaceSession::scrub_all() {
  size_t total = 0;
  for (auto& client : clients_) {
    FieldWriter w;
    w.add_u8(1, static_cast<uint8_t>(IndexControl::scrub));
    auto resp = client->call(MsgType::enqueue_index, w.finish());
    if (!resp.ok()) return resp.error();
    total += resp.value().u64(1).value_or(0);
  }
  return total;
}

}  // namespace scispace
