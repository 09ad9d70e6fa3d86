// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "scispace/core.hpp"
#include "scispace/shardlog.hpp"
#include "scispace/wire_codec.hpp"

namespace scispace {

// Record types in the metadata shard's log/snapshot.
namespace metalog {
constexpr uint16_t kFileUpsert = 100;  // repeated field 1: FileRecord bytes
constexpr uint16_t kNsRegister = 101;  // field 1: NamespaceTemplate bytes
constexpr uint16_t kFileRemove = 102;  // repeated field 1: path strings
}  // namespace metalog

// The always-present bootstrap namespace.
NamespaceTemplate default_namespace();

bool record_visible_to(const FileRecord& r, const NamespaceTemplate& ns,
                       std::string_view requester);

// Per-DTN file-mapping shard plus the namespace registry. Not internally
// locked; the owning service serializes access.
class MetadataShard {
 public:
  static Result<std::unique_ptr<MetadataShard>> open(const std::filesystem::path& dir,
                                                     uint32_t dtn_index, uint32_t dtn_count);

  // Upserts one record, durable before return. Last writer wins by mtime;
  // equal mtimes favor the arrival.
  Status put_record(const FileRecord& record);

  // The stored record regardless of visibility (shard-internal callers).
  Result<FileRecord> get_record(const std::string& path_display) const;

  // Visibility-checked read: unsynced records read as absent, local-scope
  // records are the owner's only.
  Result<FileRecord> get_visible(const std::string& path_display,
                                 std::string_view requester) const;

  std::vector<FileRecord> list_visible(std::string_view requester) const;

  // All-or-nothing upsert of an export batch; every record must place here
  // and carry a registered namespace. Records are stored synced.
  Result<size_t> batch_export(std::vector<FileRecord> records);

  Status register_namespace(const NamespaceTemplate& tmpl);
  Result<NamespaceTemplate> resolve_namespace(const std::string& ns_name) const;

  // Drops records whose backing file no longer exists in its data DTN's
  // backend. Returns the removed paths so discovery state can follow.
  Result<std::vector<std::string>> scrub(
      const std::vector<std::filesystem::path>& backend_roots_by_dtn);

  uint32_t dtn_index() const { return dtn_index_; }
  uint32_t dtn_count() const { return dtn_count_; }
  size_t record_count() const { return files_.size(); }
  const std::map<std::string, FileRecord>& records() const { return files_; }
  const std::map<std::string, NamespaceTemplate>& namespaces() const { return namespaces_; }

 private:
  MetadataShard(uint32_t dtn_index, uint32_t dtn_count)
      : dtn_index_(dtn_index), dtn_count_(dtn_count) {}

  Status validate_for_shard(const FileRecord& record) const;
  void apply_upsert(const FileRecord& record);
  Status maybe_compact();

  uint32_t dtn_index_;
  uint32_t dtn_count_;
  std::map<std::string, FileRecord> files_;
  std::map<std::string, NamespaceTemplate> namespaces_;
  ShardLog log_;
};

}  // namespace scispace
