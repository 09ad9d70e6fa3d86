// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "scispace/config.hpp"
#include "scispace/shard_server.hpp"
#include "scispace/shard_service.hpp"
#include "scispace/workspace.hpp"

namespace scispace {

// A whole collaboration on one host: per-DTN backend directories, shard
// services, and TCP servers on ephemeral ports. The workhorse behind the
// benchmarks, the test suites, and the demo CLI.
class LocalCluster {
 public:
  struct Options {
    uint32_t dtn_count = 2;
    IndexMode mode = IndexMode::inline_async;
    IndexQueue::Thresholds thresholds;
    SpecSet specs;
    FlagMode flag_mode = FlagMode::marker_tree;
    std::string collaborator = "alice";
    std::vector<NamespaceTemplate> namespaces;  // registered via the session
  };

  // base_dir must exist; backends are created under it.
  static Result<std::unique_ptr<LocalCluster>> start(const std::filesystem::path& base_dir,
                                                     const Options& opts);
  ~LocalCluster();

  // Config pointing at the live endpoints; set `collaborator` to open
  // sessions for other identities.
  CollabConfig client_config(const std::string& collaborator = "") const;
  Result<std::unique_ptr<WorkspaceSession>> open_session(const std::string& collaborator = "");

  uint32_t dtn_count() const { return cfg_.dtn_count(); }
  const std::filesystem::path& backend_root(uint32_t d) const {
    return cfg_.dtns.at(d).backend_root;
  }
  ShardService& service(uint32_t d) { return *services_.at(d); }

  // Stops one DTN's server+service (connections drop); restart_dtn brings
  // it back on the same port from its persisted state.
  void stop_dtn(uint32_t d);
  Status restart_dtn(uint32_t d);

  // Union of all discovery shards, (attribute, file, value)-sorted.
  std::vector<AttributeTriple> all_triples();
  std::vector<FileRecord> all_records();

 private:
  LocalCluster() = default;

  CollabConfig cfg_;
  std::vector<std::unique_ptr<ShardService>> services_;
  std::vector<std::unique_ptr<ShardServer>> servers_;
};

}  // namespace scispace
