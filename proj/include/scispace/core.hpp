// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scispace/result.hpp"

namespace scispace {

// A canonical workspace pathname. The first segment names the namespace,
// the remaining segments locate the entry inside it. The display form
// ("/<namespace>/<seg>/.../<seg>") is the placement key and the map key
// used throughout the shards.
struct WorkspacePath {
  std::string ns;
  std::vector<std::string> rel;

  std::string display() const;
  // Path of the entry relative to a backend root: "<ns>/<seg>/...".
  std::string backend_rel() const;
  bool operator==(const WorkspacePath&) const = default;
};

// Parses raw text into canonical form. Collapses repeated '/', rejects
// empty input, "." / ".." segments, NUL bytes, invalid UTF-8, and paths
// without a namespace segment.
Result<WorkspacePath> normalize_path(std::string_view raw);

bool valid_path_segment(std::string_view seg);
bool valid_utf8(std::string_view bytes);

// FNV-1a, 64-bit. Offset basis 14695981039346656037, prime 1099511628211,
// wrapping multiply.
uint64_t fnv1a64(std::string_view bytes);

// Maps a pathname onto a DTN index: fnv1a64(display) mod dtn_count.
Result<uint32_t> place(const WorkspacePath& path, uint32_t dtn_count);
Result<uint32_t> place_display(std::string_view display, uint32_t dtn_count);

// One data-transfer-node endpoint plus the local directory emulating its
// storage. Indices are dense 0..N-1 in lexicographic order of `id`, so
// placement does not depend on config-file ordering.
struct DtnDescriptor {
  uint32_t index = 0;
  std::string id;
  std::string host;
  uint16_t port = 0;
  std::filesystem::path backend_root;
};

// Sorts by id and assigns dense indices. Fails on duplicate ids.
Result<std::vector<DtnDescriptor>> finalize_dtn_list(std::vector<DtnDescriptor> dtns);

enum class EntryKind : uint8_t { file = 0, directory = 1 };

// One shared entry's workspace metadata; the unit stored in a metadata
// shard. dtn_index is the metadata placement (== place(path, N));
// data_dtn is the DTN whose backend actually holds the bytes (they differ
// for entries exported from local writes).
struct FileRecord {
  std::string path;  // canonical display form
  uint64_t size = 0;
  std::string owner;
  int64_t mtime_ms = 0;
  uint32_t dtn_index = 0;
  std::string ns;
  bool synced = false;
  EntryKind kind = EntryKind::file;
  uint32_t data_dtn = 0;

  bool operator==(const FileRecord&) const = default;
};

int64_t now_ms();
int64_t steady_now_ms();

}  // namespace scispace
