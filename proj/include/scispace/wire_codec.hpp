// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "scispace/core.hpp"
#include "scispace/protocol.hpp"
#include "scispace/sdf.hpp"

namespace scispace {

// Field-coded forms of the domain types carried in message payloads and in
// shard persistence. Tag tables are documented in PROTOCOL.md.

enum class Scope : uint8_t { local = 0, global = 1 };

struct NamespaceTemplate {
  std::string name;
  std::string owner;
  Scope scope = Scope::global;

  bool operator==(const NamespaceTemplate&) const = default;
};

enum class TripleSource : uint8_t { extracted = 0, manual = 1 };

// One discovery-index entry: (attribute, file, typed value).
struct AttributeTriple {
  std::string attribute;
  std::string file;  // path display form
  AttributeValue value;
  TripleSource source = TripleSource::extracted;

  bool operator==(const AttributeTriple&) const = default;
};

std::vector<uint8_t> record_to_bytes(const FileRecord& r);
Result<FileRecord> record_from_bytes(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> value_to_bytes(const AttributeValue& v);
Result<AttributeValue> value_from_bytes(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> ns_to_bytes(const NamespaceTemplate& t);
Result<NamespaceTemplate> ns_from_bytes(const std::vector<uint8_t>& bytes);

std::vector<uint8_t> triple_to_bytes(const AttributeTriple& t);
Result<AttributeTriple> triple_from_bytes(const std::vector<uint8_t>& bytes);

}  // namespace scispace
