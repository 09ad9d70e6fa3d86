// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "scispace/protocol.hpp"
#include "scispace/wire_codec.hpp"
#include "testutil.hpp"

using namespace scispace;

namespace {

// buffer-backed stream for decode_frame
struct BufStream {
  const std::vector<uint8_t>& data;
  size_t off = 0;
  size_t operator()(uint8_t* buf, size_t n) {
    const size_t take = std::min(n, data.size() - off);
    std::memcpy(buf, data.data() + off, take);
    off += take;
    return take;
  }
};

}  // namespace

TEST_CASE("frame golden encoding") {
  auto bytes = encode_frame(9, 7, {});
  REQUIRE(bytes.ok());
  const std::vector<uint8_t> golden = {0x00, 0x00, 0x00, 0x06, 0x00, 0x09, 0x00, 0x00, 0x00, 0x07};
  CHECK(bytes.value() == golden);
}

TEST_CASE("payload size cap") {
  std::vector<uint8_t> big(kMaxFrameLength - kFrameHeaderBytes + 1);
  CHECK(encode_frame(1, 1, big).code() == Err::payload_too_large);
  big.resize(kMaxFrameLength - kFrameHeaderBytes);
  CHECK(encode_frame(1, 1, big).ok());
}

TEST_CASE("back-to-back frames decode in order with no bytes lost") {
  auto a = encode_frame(1, 10, {0xAA, 0xBB}).take();
  auto b = encode_frame(2, 11, {0xCC}).take();
  std::vector<uint8_t> stream = a;
  stream.insert(stream.end(), b.begin(), b.end());

  BufStream s{stream};
  auto f1 = decode_frame(std::ref(s));
  REQUIRE(f1.ok());
  CHECK(f1.value().msg_type == 1);
  CHECK(f1.value().request_id == 10);
  CHECK(f1.value().payload == std::vector<uint8_t>{0xAA, 0xBB});
  auto f2 = decode_frame(std::ref(s));
  REQUIRE(f2.ok());
  CHECK(f2.value().msg_type == 2);
  CHECK(f2.value().payload == std::vector<uint8_t>{0xCC});
  // clean close at a frame boundary
  auto f3 = decode_frame(std::ref(s));
  CHECK(f3.code() == Err::not_found);
}

TEST_CASE("flood guard rejects oversized declared length before allocation") {
  const std::vector<uint8_t> stream = {0xFF, 0xFF, 0xFF, 0xFF};
  BufStream s{stream};
  CHECK(decode_frame(std::ref(s)).code() == Err::oversized_frame);
}

TEST_CASE("stream closing mid-header or mid-body is truncation") {
  {
    const std::vector<uint8_t> stream = {0x00, 0x00, 0x00};
    BufStream s{stream};
    CHECK(decode_frame(std::ref(s)).code() == Err::truncated);
  }
  {
    auto full = encode_frame(3, 4, {1, 2, 3, 4, 5}).take();
    for (size_t cut = 4; cut < full.size(); ++cut) {
      std::vector<uint8_t> partial(full.begin(), full.begin() + cut);
      BufStream s{partial};
      CHECK(decode_frame(std::ref(s)).code() == Err::truncated);
    }
  }
}

TEST_CASE("frame round-trip over random frames") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    Frame f;
    f.msg_type = static_cast<uint16_t>(rng());
    f.request_id = static_cast<uint32_t>(rng());
    f.payload.resize(rng() % 2048);
    for (auto& b : f.payload) b = static_cast<uint8_t>(rng());
    auto bytes = encode_frame(f.msg_type, f.request_id, f.payload).take();
    size_t consumed = 0;
    auto back = decode_frame_buffer(bytes.data(), bytes.size(), &consumed);
    REQUIRE(back.ok());
    CHECK(back.value() == f);
    CHECK(consumed == bytes.size());
  }
}

TEST_CASE("field codec round-trips randomized field sets") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 300; ++i) {
    FieldWriter w;
    struct Expect {
      uint8_t tag;
      std::vector<uint8_t> bytes;
    };
    std::vector<Expect> expected;
    const size_t n = rng() % 12;
    for (size_t k = 0; k < n; ++k) {
      const uint8_t tag = static_cast<uint8_t>(rng() % 20);
      std::vector<uint8_t> bytes(rng() % 64);
      for (auto& b : bytes) b = static_cast<uint8_t>(rng());
      w.add_bytes(tag, bytes);
      expected.push_back({tag, bytes});
    }
    auto parsed = FieldReader::parse(w.finish());
    REQUIRE(parsed.ok());
    CHECK(parsed.value().field_count() == n);
    // repeated() returns per-tag occurrences in order
    for (const auto& e : expected) {
      auto all = parsed.value().repeated(e.tag);
      CHECK(std::find(all.begin(), all.end(), e.bytes) != all.end());
    }
  }
}

TEST_CASE("unknown field tags are skipped") {
  FieldWriter w;
  w.add_string(1, "keep");
  w.add_string(99, "future-field");
  w.add_u64(2, 1234);
  auto parsed = FieldReader::parse(w.finish());
  REQUIRE(parsed.ok());
  CHECK(parsed.value().string(1).value() == "keep");
  CHECK(parsed.value().u64(2).value() == 1234);
  CHECK(parsed.value().string(7) == std::nullopt);
  // a reader that knows nothing about tag 99 still walks past it
  CHECK(parsed.value().string(99).value() == "future-field");
}

TEST_CASE("typed field accessors") {
  FieldWriter w;
  w.add_u8(1, 7);
  w.add_u16(2, 513);
  w.add_u64(3, 1ull << 40);
  w.add_i64(4, -77);
  w.add_f64(5, 2.5);
  auto r = FieldReader::parse(w.finish()).take();
  CHECK(r.u8(1).value() == 7);
  CHECK(r.u16(2).value() == 513);
  CHECK(r.u64(3).value() == (1ull << 40));
  CHECK(r.i64(4).value() == -77);
  CHECK(r.f64(5).value() == 2.5);
}

TEST_CASE("error payloads carry code, message, and detail") {
  auto payload = encode_error_payload(Err::not_visible, "scope");
  auto we = decode_error_payload(payload);
  REQUIRE(we.ok());
  CHECK(we.value().code == WireErrorCode::not_found);
  CHECK(we.value().message == "scope");
  REQUIRE(we.value().detail.has_value());
  CHECK(*we.value().detail == Err::not_visible);
  const Error e = error_from_wire(we.value());
  CHECK(e.code == Err::not_visible);

  // a peer without the detail field still maps the coarse code
  WireError coarse{WireErrorCode::conflict, "busy", std::nullopt};
  CHECK(error_from_wire(coarse).code == Err::conflict);
}

TEST_CASE("record and triple codecs round-trip") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    FileRecord r;
    r.path = testutil::random_display_path(rng);
    r.size = rng();
    r.owner = testutil::random_segment(rng);
    r.mtime_ms = static_cast<int64_t>(rng() % (1ull << 45));
    r.dtn_index = static_cast<uint32_t>(rng() % 8);
    r.ns = r.path.substr(1, r.path.find('/', 1) - 1);
    r.synced = rng() % 2;
    r.kind = rng() % 2 ? EntryKind::directory : EntryKind::file;
    r.data_dtn = static_cast<uint32_t>(rng() % 8);
    auto back = record_from_bytes(record_to_bytes(r));
    REQUIRE(back.ok());
    CHECK(back.value() == r);

    AttributeTriple t;
    t.attribute = testutil::random_segment(rng);
    t.file = r.path;
    t.value = testutil::random_value(rng);
    t.source = rng() % 2 ? TripleSource::manual : TripleSource::extracted;
    auto tback = triple_from_bytes(triple_to_bytes(t));
    REQUIRE(tback.ok());
    CHECK(tback.value() == t);
  }

  NamespaceTemplate ns{"climate", "alice", Scope::local};
  CHECK(ns_from_bytes(ns_to_bytes(ns)).value() == ns);
}
