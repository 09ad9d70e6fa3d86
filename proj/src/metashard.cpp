// SPDX-License-Identifier: Apache-2.0

#include "scispace/metashard.hpp"

#include "scispace/backend.hpp"

namespace fs = std::filesystem;

namespace scispace {

namespace {
constexpr uint64_t kCompactThresholdBytes = 8ull * 1024 * 1024;
constexpr size_t kSnapshotBatch = 512;
}  // namespace

NamespaceTemplate default_namespace() {
  return NamespaceTemplate{"public", "system", Scope::global};
}

bool record_visible_to(const FileRecord& r, const NamespaceTemplate& ns,
                       std::string_view requester) {
  if (!r.synced) return false;
  if (ns.scope == Scope::global) return true;
  return r.owner == requester;
}

Result<std::unique_ptr<MetadataShard>> MetadataShard::open(const fs::path& dir,
                                                           uint32_t dtn_index,
                                                           uint32_t dtn_count) {
  if (dtn_count == 0) return make_error(Err::zero_dtn_count);
  std::unique_ptr<MetadataShard> shard(new MetadataShard(dtn_index, dtn_count));
  auto apply = [&shard](uint16_t type, const std::vector<uint8_t>& payload) {
    auto parsed = FieldReader::parse(payload);
    if (!parsed.ok()) return;
    const FieldReader& f = parsed.value();
    switch (type) {
      case metalog::kFileUpsert:
        for (const auto& rb : f.repeated(1)) {
          auto rec = record_from_bytes(rb);
          if (rec.ok()) shard->apply_upsert(rec.value());
        }
        break;
      case metalog::kNsRegister: {
        auto nb = f.bytes(1);
        if (!nb) break;
        auto tmpl = ns_from_bytes(*nb);
        if (tmpl.ok()) shard->namespaces_[tmpl.value().name] = tmpl.value();
        break;
      }
      case metalog::kFileRemove:
        for (const auto& pb : f.repeated(1))
          shard->files_.erase(std::string(pb.begin(), pb.end()));
        break;
      default:
        break;  // unknown record types are skipped, same as wire fields
    }
  };
  if (auto s = shard->log_.open(dir, "meta", apply); !s.ok()) return s.error();
  shard->namespaces_.emplace(default_namespace().name, default_namespace());
  return shard;
}

Status MetadataShard::validate_for_shard(const FileRecord& record) const {
  auto parsed = normalize_path(record.path);
  if (!parsed.ok()) return parsed.error();
  if (parsed.value().display() != record.path)
    return make_error(Err::bad_request, "record path not canonical: " + record.path);
  if (parsed.value().ns != record.ns)
    return make_error(Err::bad_request, "record namespace mismatch: " + record.path);
  auto placed = place(parsed.value(), dtn_count_);
  if (!placed.ok()) return placed.error();
  if (placed.value() != dtn_index_ || record.dtn_index != dtn_index_)
    return make_error(Err::wrong_shard,
                      record.path + " places to shard " + std::to_string(placed.value()));
  if (namespaces_.find(record.ns) == namespaces_.end())
    return make_error(Err::unknown_namespace, record.ns);
  return ok_status();
}

void MetadataShard::apply_upsert(const FileRecord& record) {
  auto it = files_.find(record.path);
  if (it == files_.end()) {
    files_.emplace(record.path, record);
    return;
  }
  if (record.mtime_ms >= it->second.mtime_ms) it->second = record;
}

Status MetadataShard::maybe_compact() {
  if (log_.log_bytes() <= kCompactThresholdBytes) return ok_status();
  return log_.compact([this](const ShardLog::EmitFn& emit) {
    for (const auto& [name, tmpl] : namespaces_) {
      if (name == default_namespace().name && tmpl == default_namespace()) continue;
      FieldWriter w;
      w.add_bytes(1, ns_to_bytes(tmpl));
      emit(metalog::kNsRegister, w.finish());
    }
    FieldWriter batch;
    size_t in_batch = 0;
    for (const auto& [path, record] : files_) {
      batch.add_bytes(1, record_to_bytes(record));
      if (++in_batch == kSnapshotBatch) {
        emit(metalog::kFileUpsert, batch.finish());
        batch = FieldWriter();
        in_batch = 0;
      }
    }
    if (in_batch > 0) emit(metalog::kFileUpsert, batch.finish());
  });
}

Status MetadataShard::put_record(const FileRecord& record) {
  if (auto s = validate_for_shard(record); !s.ok()) return s;
  FieldWriter w;
  w.add_bytes(1, record_to_bytes(record));
  if (auto appended = log_.append(metalog::kFileUpsert, w.finish()); !appended.ok())
    return appended.error();
  apply_upsert(record);
  return maybe_compact();
}

Result<FileRecord> MetadataShard::get_record(const std::string& path_display) const {
  auto it = files_.find(path_display);
  if (it == files_.end()) return make_error(Err::not_found, path_display);
  return it->second;
}

Result<FileRecord> MetadataShard::get_visible(const std::string& path_display,
                                              std::string_view requester) const {
  auto it = files_.find(path_display);
  if (it == files_.end()) return make_error(Err::not_found, path_display);
  const FileRecord& r = it->second;
  if (!r.synced) return make_error(Err::not_found, path_display);
  auto ns = namespaces_.find(r.ns);
  if (ns == namespaces_.end()) return make_error(Err::unknown_namespace, r.ns);
  if (!record_visible_to(r, ns->second, requester))
    return make_error(Err::not_visible, path_display);
  return r;
}

std::vector<FileRecord> MetadataShard::list_visible(std::string_view requester) const {
  std::vector<FileRecord> out;
  for (const auto& [path, record] : files_) {
    auto ns = namespaces_.find(record.ns);
    if (ns == namespaces_.end()) continue;
    if (record_visible_to(record, ns->second, requester)) out.push_back(record);
  }
  return out;  // files_ is path-ordered
}

Result<size_t> MetadataShard::batch_export(std::vector<FileRecord> records) {
  for (auto& r : records) r.synced = true;
  for (const auto& r : records) {
    if (auto s = validate_for_shard(r); !s.ok()) return s.error();
  }
  if (records.empty()) return size_t{0};

  FieldWriter w;
  for (const auto& r : records) w.add_bytes(1, record_to_bytes(r));
  if (auto appended = log_.append(metalog::kFileUpsert, w.finish()); !appended.ok())
    return appended.error();
  for (const auto& r : records) apply_upsert(r);
  if (auto s = maybe_compact(); !s.ok()) return s.error();
  return records.size();
}

Status MetadataShard::register_namespace(const NamespaceTemplate& tmpl) {
  if (!valid_path_segment(tmpl.name))
    return make_error(Err::bad_name, tmpl.name);
  auto it = namespaces_.find(tmpl.name);
  if (it != namespaces_.end()) {
    if (it->second == tmpl) return ok_status();  // idempotent re-registration
    return make_error(Err::conflict, "namespace " + tmpl.name + " already registered");
  }
  FieldWriter w;
  w.add_bytes(1, ns_to_bytes(tmpl));
  if (auto appended = log_.append(metalog::kNsRegister, w.finish()); !appended.ok())
    return appended.error();
  namespaces_.emplace(tmpl.name, tmpl);
  return ok_status();
}

Result<NamespaceTemplate> MetadataShard::resolve_namespace(const std::string& ns_name) const {
  auto it = namespaces_.find(ns_name);
  if (it == namespaces_.end()) return make_error(Err::unknown_namespace, ns_name);
  return it->second;
}

Result<std::vector<std::string>> MetadataShard::scrub(
    const std::vector<fs::path>& backend_roots_by_dtn) {
  std::vector<std::string> removed;
  for (const auto& [path, record] : files_) {
    if (record.data_dtn >= backend_roots_by_dtn.size()) continue;
    auto parsed = normalize_path(path);
    if (!parsed.ok()) continue;
    auto st = bk_stat(backend_roots_by_dtn[record.data_dtn], parsed.value().backend_rel());
    if (!st.ok() && st.code() == Err::not_found) removed.push_back(path);
  }
  if (removed.empty()) return removed;

  FieldWriter w;
  for (const auto& p : removed) w.add_string(1, p);
  if (auto appended = log_.append(metalog::kFileRemove, w.finish()); !appended.ok())
    return appended.error();
  for (const auto& p : removed) files_.erase(p);
  if (auto s = maybe_compact(); !s.ok()) return s.error();
  return removed;
}

}  // namespace scispace
