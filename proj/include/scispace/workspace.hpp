// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scispace/backend.hpp"
#include "scispace/config.hpp"
#include "scispace/shard_client.hpp"

namespace scispace {

// One collaborator's view of the collaboration: routes operations to
// backends by pathname hash, keeps shard metadata in step, and triggers the
// configured indexing mode. A session serves one logical client; distinct
// sessions are independent. readdir fans out internally, everything else is
// sequential per call.
class WorkspaceSession {
 public:
  static Result<std::unique_ptr<WorkspaceSession>> open(const CollabConfig& cfg);

  // Ordered effects: data bytes to the placed backend, sync flag true,
  // shard record durable, then the mode hook (inline-sync indexes before
  // returning, inline-async enqueues, lw-offline does nothing).
  Result<FileRecord> write(std::string_view raw_path, const std::vector<uint8_t>& bytes,
                           std::optional<int64_t> mtime_ms = std::nullopt);

  Result<std::vector<uint8_t>> read(std::string_view raw_path);

  Result<FileRecord> stat(std::string_view raw_path);

  // Merged, deduplicated immediate children of dir_path across all shards,
  // sorted; fails whole rather than returning a partial view.
  Result<std::vector<std::string>> readdir(std::string_view raw_dir_path);

  Status mkdir(std::string_view raw_dir_path);

  // Fans out to every shard and requires every ack; safe to retry.
  Status register_namespace(const NamespaceTemplate& tmpl);

  // Everything visible to this collaborator, all shards, path-sorted.
  Result<std::vector<FileRecord>> list_visible_all();

  Result<size_t> flush_all();  // drain async indexing queues
  Result<size_t> scrub_all();  // reconcile shard records against backends

  const CollabConfig& config() const { return cfg_; }
  const std::string& collaborator() const { return cfg_.collaborator; }
  IndexMode mode() const { return cfg_.mode; }
  uint32_t dtn_count() const { return cfg_.dtn_count(); }
  ShardClient& client(uint32_t dtn_index) { return *clients_.at(dtn_index); }

 private:
  explicit WorkspaceSession(CollabConfig cfg) : cfg_(std::move(cfg)) {}

  Result<std::vector<std::vector<FileRecord>>> list_visible_per_shard();

  CollabConfig cfg_;
  std::vector<std::unique_ptr<ShardClient>> clients_;
};

// Immediate-child names of dir among the given records; shared by readdir
// and the test oracles.
std::vector<std::string> child_names_under(const std::vector<FileRecord>& records,
                                           const WorkspacePath& dir);

}  // namespace scispace
