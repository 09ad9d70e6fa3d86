// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scispace/result.hpp"

namespace scispace {

// Binary wire protocol between workspace clients and per-DTN shard
// services.
//
// Frame layout, all integers big-endian:
//   length u32   -- byte length of type + request_id + payload (== 6 + N)
//   msg_type u16
//   request_id u32
//   payload      -- N bytes, tagged length-value fields (see FieldWriter)
//
// length is capped at 64 MiB as a flood guard; a declared length above the
// cap is rejected before any allocation.

enum class MsgType : uint16_t {
  put_file = 1,
  get_file = 2,
  list_visible = 3,
  batch_export = 4,
  enqueue_index = 5,
  query = 6,
  tag = 7,
  register_ns = 8,
  result = 9,
  error = 10,
};

constexpr uint32_t kMaxFrameLength = 64u * 1024 * 1024;
constexpr uint32_t kFrameHeaderBytes = 6;  // msg_type + request_id

// Control codes carried by ENQUEUE_INDEX (field 1); the message doubles as
// the indexing/maintenance channel so the wire type set stays fixed.
enum class IndexControl : uint8_t {
  enqueue_async = 0,
  index_sync_now = 1,
  flush = 2,
  offline = 3,
  scrub = 4,
  // Extracted triples pushed from a peer DTN's offline pass; a file's
  // triples always live on its placement shard, wherever its bytes sit.
  store_triples = 5,
};

struct Frame {
  uint16_t msg_type = 0;
  uint32_t request_id = 0;
  std::vector<uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

Result<std::vector<uint8_t>> encode_frame(uint16_t msg_type, uint32_t request_id,
                                          const std::vector<uint8_t>& payload);

// Pulls whole frames out of a byte source. `read_exact(buf, n)` must block
// until n bytes are available and return the count actually read (short
// count means the stream closed). Returns Err::truncated when the stream
// closes mid-frame and Err::not_found on a clean close at a frame boundary.
using ReadExactFn = std::function<size_t(uint8_t* buf, size_t n)>;

Result<Frame> decode_frame(const ReadExactFn& read_exact);

// Decodes one frame from a complete in-memory buffer; `consumed` reports
// how many bytes the frame occupied.
Result<Frame> decode_frame_buffer(const uint8_t* data, size_t size, size_t* consumed);

// Error codes carried in ERROR payloads (field 1). Field 3 carries a
// finer-grained detail code: the Err enum value, so clients recover the
// exact failure; decoders that do not know field 3 skip it.
enum class WireErrorCode : uint16_t {
  not_found = 1,
  bad_request = 2,
  conflict = 3,
  internal = 4,
  unsupported = 5,
};

WireErrorCode wire_code_for(Err e);

// ---------------------------------------------------------------------------
// Payload field codec: field_count u16, then per field tag u8 + len u32 +
// bytes. Unknown tags are skipped on read, which is what lets message
// schemas grow without breaking old peers.
// ---------------------------------------------------------------------------

class FieldWriter {
 public:
  void add_bytes(uint8_t tag, const uint8_t* data, size_t size);
  void add_bytes(uint8_t tag, const std::vector<uint8_t>& bytes);
  void add_string(uint8_t tag, std::string_view s);
  void add_u16(uint8_t tag, uint16_t v);
  void add_u64(uint8_t tag, uint64_t v);
  void add_i64(uint8_t tag, int64_t v);
  void add_u8(uint8_t tag, uint8_t v);
  void add_f64(uint8_t tag, double v);

  std::vector<uint8_t> finish() const;

 private:
  struct RawField {
    uint8_t tag;
    std::vector<uint8_t> bytes;
  };
  std::vector<RawField> fields_;
};

class FieldReader {
 public:
  static Result<FieldReader> parse(const uint8_t* data, size_t size);
  static Result<FieldReader> parse(const std::vector<uint8_t>& payload);

  // First field with the tag, if any.
  std::optional<std::vector<uint8_t>> bytes(uint8_t tag) const;
  std::optional<std::string> string(uint8_t tag) const;
  std::optional<uint16_t> u16(uint8_t tag) const;
  std::optional<uint64_t> u64(uint8_t tag) const;
  std::optional<int64_t> i64(uint8_t tag) const;
  std::optional<uint8_t> u8(uint8_t tag) const;
  std::optional<double> f64(uint8_t tag) const;

  // All fields with the tag, in payload order (repeated fields are lists).
  std::vector<std::vector<uint8_t>> repeated(uint8_t tag) const;

  size_t field_count() const { return fields_.size(); }

 private:
  struct RawField {
    uint8_t tag;
    std::vector<uint8_t> bytes;
  };
  std::vector<RawField> fields_;
};

std::vector<uint8_t> encode_error_payload(Err code, const std::string& message);

struct WireError {
  WireErrorCode code;
  std::string message;
  std::optional<Err> detail;
};

Result<WireError> decode_error_payload(const std::vector<uint8_t>& payload);

// Maps an ERROR frame back to the local Error type (uses the detail field
// when present, otherwise the coarse wire code).
Error error_from_wire(const WireError& we);

}  // namespace scispace
