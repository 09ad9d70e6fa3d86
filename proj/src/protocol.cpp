// SPDX-License-Identifier: Apache-2.0

#include "scispace/protocol.hpp"

#include <cstring>

namespace scispace {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8)
    out.push_back(static_cast<uint8_t>(v >> shift));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<uint8_t>(v >> shift));
}

uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

uint32_t get_u32(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

WireErrorCode wire_code_for(Err e) {
  switch (e) {
    case Err::not_found:
    case Err::not_visible:
      return WireErrorCode::not_found;
    case Err::conflict:
    case Err::exists:
    case Err::wrong_shard:
      return WireErrorCode::conflict;
    case Err::unsupported:
      return WireErrorCode::unsupported;
    case Err::io_failure:
    case Err::internal:
    case Err::shard_unavailable:
      return WireErrorCode::internal;
    default:
      return WireErrorCode::bad_request;
  }
}

Result<std::vector<uint8_t>> encode_frame(uint16_t msg_type, uint32_t request_id,
                                          const std::vector<uint8_t>& payload) {
  if (payload.size() > kMaxFrameLength - kFrameHeaderBytes)
    return make_error(Err::payload_too_large,
                      "payload of " + std::to_string(payload.size()) + " bytes");
  std::vector<uint8_t> out;
  out.reserve(4 + kFrameHeaderBytes + payload.size());
  put_u32(out, static_cast<uint32_t>(kFrameHeaderBytes + payload.size()));
  put_u16(out, msg_type);
  put_u32(out, request_id);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Result<Frame> decode_frame(const ReadExactFn& read_exact) {
  uint8_t head[4];
  size_t got = read_exact(head, 4);
  if (got == 0) return make_error(Err::not_found, "stream closed");
  if (got < 4) return make_error(Err::truncated, "stream closed inside frame length");
  const uint32_t length = get_u32(head);
  if (length > kMaxFrameLength)
    return make_error(Err::oversized_frame, "declared " + std::to_string(length));
  if (length < kFrameHeaderBytes)
    return make_error(Err::bad_frame, "declared " + std::to_string(length));

  std::vector<uint8_t> body(length);
  got = read_exact(body.data(), length);
  if (got < length) return make_error(Err::truncated, "stream closed inside frame body");

  Frame f;
  f.msg_type = get_u16(body.data());
  f.request_id = get_u32(body.data() + 2);
  f.payload.assign(body.begin() + kFrameHeaderBytes, body.end());
  return f;
}

Result<Frame> decode_frame_buffer(const uint8_t* data, size_t size, size_t* consumed) {
  size_t off = 0;
  auto read_exact = [&](uint8_t* buf, size_t n) -> size_t {
    const size_t avail = size - off;
    const size_t take = n < avail ? n : avail;
    std::memcpy(buf, data + off, take);
    off += take;
    return take;
  };
  auto result = decode_frame(read_exact);
  if (consumed) *consumed = off;
  return result;
}

// --- field codec -----------------------------------------------------------

void FieldWriter::add_bytes(uint8_t tag, const uint8_t* data, size_t size) {
  fields_.push_back(RawField{tag, std::vector<uint8_t>(data, data + size)});
}

void FieldWriter::add_bytes(uint8_t tag, const std::vector<uint8_t>& bytes) {
  add_bytes(tag, bytes.data(), bytes.size());
}

void FieldWriter::add_string(uint8_t tag, std::string_view s) {
  add_bytes(tag, reinterpret_cast<const uint8_t*>(s.data()), s.size());
}

void FieldWriter::add_u16(uint8_t tag, uint16_t v) {
  std::vector<uint8_t> b;
  put_u16(b, v);
  fields_.push_back(RawField{tag, std::move(b)});
}

void FieldWriter::add_u64(uint8_t tag, uint64_t v) {
  std::vector<uint8_t> b;
  put_u64(b, v);
  fields_.push_back(RawField{tag, std::move(b)});
}

void FieldWriter::add_i64(uint8_t tag, int64_t v) {
  add_u64(tag, static_cast<uint64_t>(v));
}

void FieldWriter::add_u8(uint8_t tag, uint8_t v) {
  fields_.push_back(RawField{tag, {v}});
}

void FieldWriter::add_f64(uint8_t tag, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  add_u64(tag, bits);
}

std::vector<uint8_t> FieldWriter::finish() const {
  std::vector<uint8_t> out;
  size_t total = 2;
  for (const auto& f : fields_) total += 5 + f.bytes.size();
  out.reserve(total);
  put_u16(out, static_cast<uint16_t>(fields_.size()));
  for (const auto& f : fields_) {
    out.push_back(f.tag);
    put_u32(out, static_cast<uint32_t>(f.bytes.size()));
    out.insert(out.end(), f.bytes.begin(), f.bytes.end());
  }
  return out;
}

Result<FieldReader> FieldReader::parse(const uint8_t* data, size_t size) {
  FieldReader r;
  if (size < 2) return make_error(Err::truncated, "payload shorter than field count");
  const uint16_t count = get_u16(data);
  size_t off = 2;
  r.fields_.reserve(count);
  for (uint16_t k = 0; k < count; ++k) {
    if (off + 5 > size) return make_error(Err::truncated, "field header");
    const uint8_t tag = data[off];
    const uint32_t len = get_u32(data + off + 1);
    off += 5;
    if (off + len > size) return make_error(Err::truncated, "field body");
    r.fields_.push_back(RawField{tag, std::vector<uint8_t>(data + off, data + off + len)});
    off += len;
  }
  if (off != size) return make_error(Err::trailing_bytes, "after last field");
  return r;
}

Result<FieldReader> FieldReader::parse(const std::vector<uint8_t>& payload) {
  return parse(payload.data(), payload.size());
}

std::optional<std::vector<uint8_t>> FieldReader::bytes(uint8_t tag) const {
  for (const auto& f : fields_)
    if (f.tag == tag) return f.bytes;
  return std::nullopt;
}

std::optional<std::string> FieldReader::string(uint8_t tag) const {
  for (const auto& f : fields_)
    if (f.tag == tag) return std::string(f.bytes.begin(), f.bytes.end());
  return std::nullopt;
}

std::optional<uint16_t> FieldReader::u16(uint8_t tag) const {
  for (const auto& f : fields_)
    if (f.tag == tag && f.bytes.size() == 2) return get_u16(f.bytes.data());
  return std::nullopt;
}

std::optional<uint64_t> FieldReader::u64(uint8_t tag) const {
  for (const auto& f : fields_)
    if (f.tag == tag && f.bytes.size() == 8) return get_u64(f.bytes.data());
  return std::nullopt;
}

std::optional<int64_t> FieldReader::i64(uint8_t tag) const {
  auto v = u64(tag);
  if (!v) return std::nullopt;
  return static_cast<int64_t>(*v);
}

std::optional<uint8_t> FieldReader::u8(uint8_t tag) const {
  for (const auto& f : fields_)
    if (f.tag == tag && f.bytes.size() == 1) return f.bytes[0];
  return std::nullopt;
}

std::optional<double> FieldReader::f64(uint8_t tag) const {
  auto v = u64(tag);
  if (!v) return std::nullopt;
  double d;
  std::memcpy(&d, &*v, 8);
  return d;
}

std::vector<std::vector<uint8_t>> FieldReader::repeated(uint8_t tag) const {
  std::vector<std::vector<uint8_t>> out;
  for (const auto& f : fields_)
    if (f.tag == tag) out.push_back(f.bytes);
  return out;
}

// --- error payloads --------------------------------------------------------

std::vector<uint8_t> encode_error_payload(Err code, const std::string& message) {
  FieldWriter w;
  w.add_u16(1, static_cast<uint16_t>(wire_code_for(code)));
  w.add_string(2, message);
  w.add_u16(3, static_cast<uint16_t>(code));
  return w.finish();
}

Result<WireError> decode_error_payload(const std::vector<uint8_t>& payload) {
  auto fields = FieldReader::parse(payload);
  if (!fields.ok()) return fields.error();
  const FieldReader& r = fields.value();
  WireError we;
  auto code = r.u16(1);
  if (!code) return make_error(Err::bad_frame, "error payload without code");
  we.code = static_cast<WireErrorCode>(*code);
  we.message = r.string(2).value_or("");
  if (auto detail = r.u16(3)) we.detail = static_cast<Err>(*detail);
  return we;
}

Error error_from_wire(const WireError& we) {
  if (we.detail) return Error{*we.detail, we.message};
  switch (we.code) {
    case WireErrorCode::not_found: return Error{Err::not_found, we.message};
    case WireErrorCode::bad_request: return Error{Err::bad_request, we.message};
    case WireErrorCode::conflict: return Error{Err::conflict, we.message};
    case WireErrorCode::unsupported: return Error{Err::unsupported, we.message};
    case WireErrorCode::internal: return Error{Err::internal, we.message};
  }
  return Error{Err::internal, we.message};
}

}  // namespace scispace
