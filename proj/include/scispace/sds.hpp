// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "scispace/backend.hpp"
#include "scispace/core.hpp"
#include "scispace/sdf.hpp"
#include "scispace/shardlog.hpp"
#include "scispace/wire_codec.hpp"

namespace scispace {

// One attribute a collaboration wants indexed: data-file attributes whose
// name and type both match are recorded; everything else is ignored.
struct AttributeSpec {
  std::string name;
  ValueTag type = ValueTag::text_val;

  bool operator==(const AttributeSpec&) const = default;
};

using SpecSet = std::vector<AttributeSpec>;

// Spec file format: one "name:type" per line, type in {int,float,text},
// '#' starts a comment.
Result<SpecSet> parse_spec_set(std::string_view text);
Result<SpecSet> load_spec_file(const std::filesystem::path& p);

// File-system pseudo-attributes emitted alongside extracted ones.
inline constexpr const char* kFsSizeAttr = "fs.size";
inline constexpr const char* kFsMtimeAttr = "fs.mtime";

struct StatContext {
  uint64_t size = 0;
  int64_t mtime_ms = 0;
};

// Extraction is total: undecodable bytes yield no data-file triples, and
// without a stat context there are no fs.* triples either.
std::vector<AttributeTriple> extract_attributes(const std::string& file_display,
                                                const std::vector<uint8_t>& file_bytes,
                                                const SpecSet& specs,
                                                std::optional<StatContext> stat_ctx);

// Comparison operators shared by the query language and the shard-side
// evaluator.
enum class QueryOp : uint8_t { eq = 1, gt = 2, lt = 3, like = 4 };

// EQ is exact on tag and value. GT/LT order numerics; an INT stored value
// widens to double only when the literal is FLOAT. LIKE matches TEXT with
// '%' (any run) and '_' (one char) wildcards, case-sensitively.
bool value_matches(QueryOp op, const AttributeValue& literal, const AttributeValue& stored);

bool like_match(std::string_view pattern, std::string_view text);

// Record types in the discovery shard's log/snapshot.
namespace disclog {
constexpr uint16_t kReindex = 110;      // field 1: file path, repeated field 2: triples
constexpr uint16_t kManualTag = 111;    // field 1: triple
constexpr uint16_t kRemoveFile = 112;   // field 1: file path
constexpr uint16_t kReindexBulk = 113;  // repeated field 2: file blocks
}  // namespace disclog

// Per-DTN discovery shard: the (attribute, file) -> value index. Not
// internally locked; the owning service serializes access.
class DiscoveryShard {
 public:
  static Result<std::unique_ptr<DiscoveryShard>> open(const std::filesystem::path& dir);

  // Replaces the file's extracted triples with `extracted`, durably.
  // Manual triples survive; an extracted triple never displaces a manual
  // one for the same (attribute, file).
  Status reindex_file(const std::string& file, const std::vector<AttributeTriple>& extracted);

  struct FileTriples {
    std::string file;
    std::vector<AttributeTriple> triples;
  };
  // Same replace semantics for many files in one log transaction; the
  // batched path behind offline indexing and peer pushes.
  Status reindex_bulk(const std::vector<FileTriples>& files);

  // Bulk variant for the wire handler: `encoded_blocks` are the already
  // field-coded file blocks off the message (logged as-is), `decoded` their
  // parsed form (applied in-memory). Both must describe the same files.
  Status reindex_bulk_encoded(const std::vector<std::vector<uint8_t>>& encoded_blocks,
                              const std::vector<FileTriples>& decoded);

  Status tag_manual(const std::string& file, const std::string& attribute,
                    const AttributeValue& value);

  Status remove_file(const std::string& file);

  // Files whose triple for `attribute` satisfies the clause.
  std::vector<std::string> eval_clause(const std::string& attribute, QueryOp op,
                                       const AttributeValue& literal) const;

  std::vector<AttributeTriple> dump_sorted() const;
  size_t triple_count() const { return triple_count_; }

 private:
  DiscoveryShard() = default;

  struct Stored {
    AttributeValue value;
    TripleSource source;
  };

  void apply_reindex(const std::string& file, const std::vector<AttributeTriple>& extracted);
  void apply_manual(const AttributeTriple& t);
  void apply_remove(const std::string& file);
  Status maybe_compact();

  // attribute -> file -> stored value; plus the reverse file index for
  // replace/remove.
  std::map<std::string, std::map<std::string, Stored>> by_attr_;
  std::unordered_map<std::string, std::set<std::string>> attrs_of_file_;
  size_t triple_count_ = 0;
  ShardLog log_;
};

// FIFO of paths awaiting asynchronous indexing. Duplicate enqueues collapse
// (latest bytes win at drain time). Thresholds decide when the worker
// drains: pending count, age of the oldest entry, or cumulative bytes.
class IndexQueue {
 public:
  struct Thresholds {
    size_t flush_count = 64;
    int64_t flush_ms = 500;
    uint64_t flush_bytes = 64ull * 1024 * 1024;
  };

  static constexpr size_t kDefaultCapacity = 1048576;

  explicit IndexQueue(Thresholds t, size_t capacity = kDefaultCapacity)
      : thresholds_(t), capacity_(capacity) {}

  Status enqueue(const std::string& path_display, uint64_t size_hint);
  // Up to flush_count paths, oldest first.
  std::vector<std::string> take_batch();
  bool threshold_fired(int64_t now_steady_ms) const;
  // Steady-clock deadline at which the age threshold fires, if anything is
  // pending.
  std::optional<int64_t> age_deadline() const;

  size_t pending() const { return fifo_.size(); }
  uint64_t pending_bytes() const { return pending_bytes_; }
  const Thresholds& thresholds() const { return thresholds_; }

 private:
  struct Entry {
    std::string path;
    uint64_t size;
    int64_t enqueued_ms;  // steady clock
  };

  Thresholds thresholds_;
  size_t capacity_;
  std::deque<Entry> fifo_;
  std::unordered_set<std::string> queued_;
  uint64_t pending_bytes_ = 0;
};

struct IndexReport {
  uint64_t files_seen = 0;
  uint64_t files_indexed = 0;
  uint64_t triples_written = 0;
  int64_t scan_ms = 0;
  int64_t extract_ms = 0;
  int64_t store_ms = 0;
};

// Synchronous indexing of one file's bytes; durable before return.
Status index_sync(const std::string& file_display, const std::vector<uint8_t>& file_bytes,
                  std::optional<StatContext> stat_ctx, const SpecSet& specs,
                  DiscoveryShard& shard);

// Offline pass: walks `selector` under the backend root and indexes every
// ".sdf" file found. Idempotent over unchanged trees.
Result<IndexReport> index_offline(const std::filesystem::path& backend_root,
                                  std::string_view selector, const SpecSet& specs,
                                  DiscoveryShard& shard);

}  // namespace scispace
