// SPDX-License-Identifier: Apache-2.0

#include "scispace/sdf.hpp"

#include <cstring>
#include <unordered_set>

#include "scispace/core.hpp"

namespace scispace {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'D', 'F'};

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(static_cast<uint8_t>(v >> shift));
}

struct Reader {
  const uint8_t* p;
  size_t n;
  size_t off = 0;

  bool need(size_t k) const { return off + k <= n; }
  uint8_t u8() { return p[off++]; }
  uint16_t u16() {
    uint16_t v = (static_cast<uint16_t>(p[off]) << 8) | p[off + 1];
    off += 2;
    return v;
  }
  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[off + i];
    off += 8;
    return v;
  }
};

}  // namespace

AttributeValue AttributeValue::of_int(int64_t v) {
  AttributeValue a;
  a.tag = ValueTag::int_val;
  a.i = v;
  return a;
}

AttributeValue AttributeValue::of_float(double v) {
  AttributeValue a;
  a.tag = ValueTag::float_val;
  a.f = v;
  return a;
}

AttributeValue AttributeValue::of_text(std::string v) {
  AttributeValue a;
  a.tag = ValueTag::text_val;
  a.text = std::move(v);
  return a;
}

bool AttributeValue::operator==(const AttributeValue& o) const {
  if (tag != o.tag) return false;
  switch (tag) {
    case ValueTag::int_val: return i == o.i;
    case ValueTag::float_val: {
      uint64_t a, b;
      std::memcpy(&a, &f, 8);
      std::memcpy(&b, &o.f, 8);
      return a == b;
    }
    case ValueTag::text_val: return text == o.text;
  }
  return false;
}

bool AttributeValue::operator<(const AttributeValue& o) const {
  if (tag != o.tag) return tag < o.tag;
  switch (tag) {
    case ValueTag::int_val: return i < o.i;
    case ValueTag::float_val: {
      uint64_t a, b;
      std::memcpy(&a, &f, 8);
      std::memcpy(&b, &o.f, 8);
      return a < b;
    }
    case ValueTag::text_val: return text < o.text;
  }
  return false;
}

std::string AttributeValue::to_string() const {
  switch (tag) {
    case ValueTag::int_val: return std::to_string(i);
    case ValueTag::float_val: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", f);
      return buf;
    }
    case ValueTag::text_val: return text;
  }
  return {};
}

Result<std::vector<uint8_t>> sdf_encode(const SdfDocument& doc) {
  if (doc.attributes.size() > kSdfMaxAttributes)
    return make_error(Err::too_many_attributes);
  std::unordered_set<std::string_view> seen;
  for (const auto& [name, value] : doc.attributes) {
    if (name.size() > kSdfMaxNameLen) return make_error(Err::name_too_long, name.substr(0, 64));
    if (value.tag == ValueTag::text_val && value.text.size() > kSdfMaxTextLen)
      return make_error(Err::text_too_long, name);
    if (!seen.insert(name).second)
      return make_error(Err::duplicate_attribute, name);
  }

  std::vector<uint8_t> out;
  out.reserve(16 + doc.attributes.size() * 24 + doc.payload.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u16(out, SdfDocument::kVersion);
  put_u16(out, static_cast<uint16_t>(doc.attributes.size()));
  for (const auto& [name, value] : doc.attributes) {
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(static_cast<uint8_t>(value.tag));
    switch (value.tag) {
      case ValueTag::int_val:
        put_u64(out, static_cast<uint64_t>(value.i));
        break;
      case ValueTag::float_val: {
        uint64_t bits;
        std::memcpy(&bits, &value.f, 8);
        put_u64(out, bits);
        break;
      }
      case ValueTag::text_val:
        put_u16(out, static_cast<uint16_t>(value.text.size()));
        out.insert(out.end(), value.text.begin(), value.text.end());
        break;
    }
  }
  put_u64(out, doc.payload.size());
  out.insert(out.end(), doc.payload.begin(), doc.payload.end());
  return out;
}

Result<SdfDocument> sdf_decode(const uint8_t* data, size_t size) {
  Reader r{data, size};
  if (!r.need(4)) return make_error(Err::truncated, "short of magic");
  if (std::memcmp(data, kMagic, 4) != 0) return make_error(Err::bad_magic);
  r.off = 4;
  if (!r.need(4)) return make_error(Err::truncated, "short of header");
  const uint16_t version = r.u16();
  if (version != SdfDocument::kVersion)
    return make_error(Err::unsupported_version, std::to_string(version));
  const uint16_t attr_count = r.u16();

  SdfDocument doc;
  doc.attributes.reserve(attr_count);
  for (uint16_t k = 0; k < attr_count; ++k) {
    if (!r.need(2)) return make_error(Err::truncated, "attribute name length");
    const uint16_t name_len = r.u16();
    if (!r.need(name_len)) return make_error(Err::truncated, "attribute name");
    std::string name(reinterpret_cast<const char*>(data + r.off), name_len);
    r.off += name_len;
    if (!valid_utf8(name)) return make_error(Err::malformed_utf8, "attribute name");
    if (!r.need(1)) return make_error(Err::truncated, "attribute tag");
    const uint8_t tag = r.u8();
    AttributeValue value;
    switch (tag) {
      case static_cast<uint8_t>(ValueTag::int_val): {
        if (!r.need(8)) return make_error(Err::truncated, "int value");
        value = AttributeValue::of_int(static_cast<int64_t>(r.u64()));
        break;
      }
      case static_cast<uint8_t>(ValueTag::float_val): {
        if (!r.need(8)) return make_error(Err::truncated, "float value");
        const uint64_t bits = r.u64();
        double f;
        std::memcpy(&f, &bits, 8);
        value = AttributeValue::of_float(f);
        break;
      }
      case static_cast<uint8_t>(ValueTag::text_val): {
        if (!r.need(2)) return make_error(Err::truncated, "text length");
        const uint16_t text_len = r.u16();
        if (!r.need(text_len)) return make_error(Err::truncated, "text value");
        std::string text(reinterpret_cast<const char*>(data + r.off), text_len);
        r.off += text_len;
        if (!valid_utf8(text)) return make_error(Err::malformed_utf8, "text value");
        value = AttributeValue::of_text(std::move(text));
        break;
      }
      default:
        return make_error(Err::bad_frame, "unknown attribute tag " + std::to_string(tag));
    }
    doc.attributes.emplace_back(std::move(name), std::move(value));
  }
  {
    std::unordered_set<std::string_view> names;
    for (const auto& [name, value] : doc.attributes)
      if (!names.insert(name).second) return make_error(Err::duplicate_attribute, name);
  }

  if (!r.need(8)) return make_error(Err::truncated, "payload length");
  const uint64_t payload_len = r.u64();
  if (!r.need(payload_len)) return make_error(Err::truncated, "payload");
  doc.payload.assign(data + r.off, data + r.off + payload_len);
  r.off += payload_len;
  if (r.off != size) return make_error(Err::trailing_bytes);
  return doc;
}

Result<SdfDocument> sdf_decode(const std::vector<uint8_t>& bytes) {
  return sdf_decode(bytes.data(), bytes.size());
}

}  // namespace scispace
