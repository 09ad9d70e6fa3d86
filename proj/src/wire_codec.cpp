// SPDX-License-Identifier: Apache-2.0

#include "scispace/wire_codec.hpp"

namespace scispace {

std::vector<uint8_t> record_to_bytes(const FileRecord& r) {
  FieldWriter w;
  w.add_string(1, r.path);
  w.add_u64(2, r.size);
  w.add_string(3, r.owner);
  w.add_i64(4, r.mtime_ms);
  w.add_u64(5, r.dtn_index);
  w.add_string(6, r.ns);
  w.add_u8(7, r.synced ? 1 : 0);
  w.add_u8(8, static_cast<uint8_t>(r.kind));
  w.add_u64(9, r.data_dtn);
  return w.finish();
}

Result<FileRecord> record_from_bytes(const std::vector<uint8_t>& bytes) {
  auto parsed = FieldReader::parse(bytes);
  if (!parsed.ok()) return parsed.error();
  const FieldReader& f = parsed.value();
  FileRecord r;
  auto path = f.string(1);
  if (!path) return make_error(Err::bad_frame, "record without path");
  r.path = *path;
  r.size = f.u64(2).value_or(0);
  r.owner = f.string(3).value_or("");
  r.mtime_ms = f.i64(4).value_or(0);
  r.dtn_index = static_cast<uint32_t>(f.u64(5).value_or(0));
  r.ns = f.string(6).value_or("");
  r.synced = f.u8(7).value_or(0) != 0;
  r.kind = f.u8(8).value_or(0) == 1 ? EntryKind::directory : EntryKind::file;
  r.data_dtn = static_cast<uint32_t>(f.u64(9).value_or(r.dtn_index));
  return r;
}

std::vector<uint8_t> value_to_bytes(const AttributeValue& v) {
  FieldWriter w;
  w.add_u8(1, static_cast<uint8_t>(v.tag));
  switch (v.tag) {
    case ValueTag::int_val: w.add_i64(2, v.i); break;
    case ValueTag::float_val: w.add_f64(3, v.f); break;
    case ValueTag::text_val: w.add_string(4, v.text); break;
  }
  return w.finish();
}

Result<AttributeValue> value_from_bytes(const std::vector<uint8_t>& bytes) {
  auto parsed = FieldReader::parse(bytes);
  if (!parsed.ok()) return parsed.error();
  const FieldReader& f = parsed.value();
  auto tag = f.u8(1);
  if (!tag) return make_error(Err::bad_frame, "value without tag");
  switch (*tag) {
    case static_cast<uint8_t>(ValueTag::int_val):
      return AttributeValue::of_int(f.i64(2).value_or(0));
    case static_cast<uint8_t>(ValueTag::float_val):
      return AttributeValue::of_float(f.f64(3).value_or(0.0));
    case static_cast<uint8_t>(ValueTag::text_val):
      return AttributeValue::of_text(f.string(4).value_or(""));
  }
  return make_error(Err::bad_frame, "unknown value tag");
}

std::vector<uint8_t> ns_to_bytes(const NamespaceTemplate& t) {
  FieldWriter w;
  w.add_string(1, t.name);
  w.add_string(2, t.owner);
  w.add_u8(3, static_cast<uint8_t>(t.scope));
  return w.finish();
}

Result<NamespaceTemplate> ns_from_bytes(const std::vector<uint8_t>& bytes) {
  auto parsed = FieldReader::parse(bytes);
  if (!parsed.ok()) return parsed.error();
  const FieldReader& f = parsed.value();
  NamespaceTemplate t;
  auto name = f.string(1);
  if (!name) return make_error(Err::bad_frame, "namespace without name");
  t.name = *name;
  t.owner = f.string(2).value_or("");
  t.scope = f.u8(3).value_or(1) == 0 ? Scope::local : Scope::global;
  return t;
}

std::vector<uint8_t> triple_to_bytes(const AttributeTriple& t) {
  FieldWriter w;
  w.add_string(1, t.attribute);
  w.add_string(2, t.file);
  w.add_bytes(3, value_to_bytes(t.value));
  w.add_u8(4, static_cast<uint8_t>(t.source));
  return w.finish();
}

Result<AttributeTriple> triple_from_bytes(const std::vector<uint8_t>& bytes) {
  auto parsed = FieldReader::parse(bytes);
  if (!parsed.ok()) return parsed.error();
  const FieldReader& f = parsed.value();
  AttributeTriple t;
  auto attr = f.string(1);
  auto file = f.string(2);
  auto value_bytes = f.bytes(3);
  if (!attr || !file || !value_bytes)
    return make_error(Err::bad_frame, "incomplete triple");
  t.attribute = *attr;
  t.file = *file;
  auto value = value_from_bytes(*value_bytes);
  if (!value.ok()) return value.error();
  t.value = value.take();
  t.source = f.u8(4).value_or(0) == 1 ? TripleSource::manual : TripleSource::extracted;
  return t;
}

}  // namespace scispace
