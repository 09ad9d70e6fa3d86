// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "scispace/result.hpp"

namespace scispace {

// Typed attribute value carried both in SDF headers and discovery triples.
enum class ValueTag : uint8_t { int_val = 1, float_val = 2, text_val = 3 };

struct AttributeValue {
  ValueTag tag = ValueTag::int_val;
  int64_t i = 0;
  double f = 0.0;
  std::string text;

  static AttributeValue of_int(int64_t v);
  static AttributeValue of_float(double v);
  static AttributeValue of_text(std::string v);

  bool operator==(const AttributeValue& o) const;
  // Total order used for deterministic set comparisons (tag, then value;
  // floats by bit pattern so NaN is stable).
  bool operator<(const AttributeValue& o) const;
  std::string to_string() const;
};

// Self-describing data file: a typed attribute header plus an opaque
// payload. Attributes are readable without interpreting the payload.
//
// Wire layout, all multi-byte integers big-endian:
//   magic "SSDF" | version u16 | attr_count u16
//   per attribute: name_len u16, name bytes, tag u8,
//                  value (INT: i64, FLOAT: IEEE-754 binary64,
//                         TEXT: len u16 + bytes)
//   payload_len u64 | payload bytes
struct SdfDocument {
  static constexpr uint16_t kVersion = 1;

  std::vector<std::pair<std::string, AttributeValue>> attributes;
  std::vector<uint8_t> payload;

  bool operator==(const SdfDocument&) const = default;
};

constexpr size_t kSdfMaxNameLen = 65535;
constexpr size_t kSdfMaxTextLen = 65535;
constexpr size_t kSdfMaxAttributes = 65535;

Result<std::vector<uint8_t>> sdf_encode(const SdfDocument& doc);

// Inverse of sdf_encode. Total: any byte sequence yields a document or a
// typed error; declared lengths are validated against remaining input
// before allocation. Trailing bytes after the payload are an error.
Result<SdfDocument> sdf_decode(const uint8_t* data, size_t size);
Result<SdfDocument> sdf_decode(const std::vector<uint8_t>& bytes);

}  // namespace scispace
