// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scispace/backend.hpp"
#include "scispace/core.hpp"
#include "scispace/sds.hpp"
#include "scispace/wire_codec.hpp"

namespace scispace {

enum class IndexMode { inline_sync, inline_async, lw_offline };

Result<IndexMode> parse_index_mode(std::string_view s);
const char* index_mode_name(IndexMode m);

// Collaboration config, line-oriented "key = value" under [section]
// headers. '#' starts a comment. [dtn] sections repeat, one per node.
//
//   [collaboration]
//   name = demo
//   collaborator = alice
//   flag_mode = marker-tree        # or native-xattr
//
//   [dtn]
//   id = dtn-a
//   host = 127.0.0.1
//   port = 7401
//   backend_root = /srv/dtn-a
//
//   [sds]
//   mode = inline-async            # inline-sync | inline-async | lw-offline
//   flush_count = 64
//   flush_ms = 500
//   flush_bytes = 67108864
//   spec_file = specs.txt
//
//   [namespaces]
//   climate = alice global
//   drafts = alice local
struct CollabConfig {
  std::string name;
  std::string collaborator;
  FlagMode flag_mode = FlagMode::marker_tree;
  std::vector<DtnDescriptor> dtns;  // dense-indexed, id-ordered
  IndexMode mode = IndexMode::inline_async;
  IndexQueue::Thresholds thresholds;
  std::filesystem::path spec_file;
  SpecSet specs;  // loaded from spec_file when present
  std::vector<NamespaceTemplate> namespaces;

  uint32_t dtn_count() const { return static_cast<uint32_t>(dtns.size()); }
};

Result<CollabConfig> parse_collab_config(std::string_view text,
                                         const std::filesystem::path& base_dir);
Result<CollabConfig> load_collab_config(const std::filesystem::path& p);

}  // namespace scispace
