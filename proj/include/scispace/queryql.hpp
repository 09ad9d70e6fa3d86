// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "scispace/sds.hpp"
#include "scispace/workspace.hpp"

namespace scispace {

struct QueryClause {
  std::string attribute;
  QueryOp op = QueryOp::eq;
  AttributeValue literal;

  bool operator==(const QueryClause&) const = default;
};

// AND-combined clauses.
struct Predicate {
  std::vector<QueryClause> clauses;

  bool operator==(const Predicate&) const = default;
};

// Grammar: clause ("AND" clause)*, clause: name op literal. Names are bare
// words or double-quoted; literals are integers, decimals (dot or
// exponent), or double-quoted strings; ops are =, >, <, and the
// case-insensitive keyword "like". Syntax errors carry the byte position,
// type errors flag op/literal mismatches (LIKE wants text, </> want
// numbers).
Result<Predicate> parse_query(std::string_view q);

struct QueryResult {
  std::vector<std::string> paths;  // sorted, deduplicated
  int64_t elapsed_ms = 0;
};

// Scatter-gather: every shard evaluates the predicate against its triples
// and applies the visibility rules; the union of the replies is the
// answer. Any unreachable shard fails the query whole.
Result<QueryResult> execute_query(WorkspaceSession& session, const Predicate& pred);

// ---------------------------------------------------------------------------
// Brute-force oracle, independent of the shard/index/wire path: walks the
// backends, re-derives every file's attributes (including the manual-tag
// journal the caller kept), evaluates the predicate with its own matching
// code, and applies visibility from flag state + namespace scope +
// caller-known ownership.
// ---------------------------------------------------------------------------

struct OracleContext {
  std::vector<std::filesystem::path> backend_roots;
  SpecSet specs;
  std::vector<NamespaceTemplate> namespaces;
  FlagMode flag_mode = FlagMode::marker_tree;
  // Ownership as the test set it up, path display -> collaborator id.
  std::function<std::string(const std::string&)> owner_of;
  // Every manual tag the test issued, in order.
  std::vector<AttributeTriple> manual_tags;
};

// Pre-extracted corpus so one walk can serve many predicates.
class OracleCorpus {
 public:
  static Result<OracleCorpus> build(const OracleContext& ctx);

  std::vector<std::string> scan(const Predicate& pred, const std::string& requester) const;

  size_t file_count() const { return files_.size(); }

 private:
  struct FileEntry {
    std::string display;
    std::string ns;
    bool synced = false;
    std::vector<std::pair<std::string, AttributeValue>> attrs;
  };
  std::vector<FileEntry> files_;
  std::vector<NamespaceTemplate> namespaces_;
  std::function<std::string(const std::string&)> owner_of_;
};

// Single-shot form: build + scan.
Result<std::vector<std::string>> oracle_scan(const OracleContext& ctx, const Predicate& pred,
                                             const std::string& requester);

}  // namespace scispace
