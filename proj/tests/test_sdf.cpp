// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scispace/sdf.hpp"
#include "testutil.hpp"

using namespace scispace;

TEST_CASE("empty document encodes to exactly 16 bytes") {
  SdfDocument doc;
  auto bytes = sdf_encode(doc);
  REQUIRE(bytes.ok());
  const std::vector<uint8_t> golden = {'S', 'S', 'D', 'F', 0x00, 0x01, 0x00, 0x00,
                                       0,   0,   0,   0,   0,    0,    0,    0};
  CHECK(bytes.value() == golden);
}

TEST_CASE("single int attribute golden encoding") {
  SdfDocument doc;
  doc.attributes.emplace_back("DayNight", AttributeValue::of_int(1));
  auto bytes = sdf_encode(doc);
  REQUIRE(bytes.ok());
  // 16 header/payload bytes + name_len(2) + name(8) + tag(1) + i64(8) = 35
  const std::vector<uint8_t> golden = {
      'S',  'S',  'D',  'F',              // magic
      0x00, 0x01,                         // version
      0x00, 0x01,                         // attr_count
      0x00, 0x08,                         // name_len
      'D',  'a',  'y',  'N', 'i', 'g', 'h', 't',
      0x01,                               // tag INT
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01,
      0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // payload_len
  };
  CHECK(bytes.value().size() == 35);
  CHECK(bytes.value() == golden);

  auto back = sdf_decode(bytes.value());
  REQUIRE(back.ok());
  CHECK(back.value() == doc);
}

TEST_CASE("duplicate attribute names are rejected") {
  SdfDocument doc;
  doc.attributes.emplace_back("x", AttributeValue::of_int(1));
  doc.attributes.emplace_back("x", AttributeValue::of_int(2));
  CHECK(sdf_encode(doc).code() == Err::duplicate_attribute);
}

TEST_CASE("oversized text and names are rejected") {
  SdfDocument doc;
  doc.attributes.emplace_back("t", AttributeValue::of_text(std::string(65536, 'x')));
  CHECK(sdf_encode(doc).code() == Err::text_too_long);
  SdfDocument doc2;
  doc2.attributes.emplace_back(std::string(65536, 'n'), AttributeValue::of_int(0));
  CHECK(sdf_encode(doc2).code() == Err::name_too_long);
}

TEST_CASE("round-trip over randomized documents") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    const SdfDocument doc = testutil::random_document(rng);
    auto bytes = sdf_encode(doc);
    REQUIRE(bytes.ok());
    auto back = sdf_decode(bytes.value());
    REQUIRE(back.ok());
    CHECK(back.value() == doc);
  }
  // one large payload to cover the MiB range
  SdfDocument big;
  big.attributes.emplace_back("blob", AttributeValue::of_text("payload"));
  big.payload.resize(1 << 20);
  std::mt19937_64 rng2(6);
  for (auto& b : big.payload) b = static_cast<uint8_t>(rng2());
  auto bytes = sdf_encode(big);
  REQUIRE(bytes.ok());
  CHECK(sdf_decode(bytes.value()).value() == big);
}

TEST_CASE("bad magic and trailing bytes are typed errors") {
  SdfDocument doc;
  doc.attributes.emplace_back("a", AttributeValue::of_float(2.5));
  auto bytes = sdf_encode(doc).take();

  auto flipped = bytes;
  flipped[0] ^= 0xff;
  CHECK(sdf_decode(flipped).code() == Err::bad_magic);

  auto extra = bytes;
  extra.push_back(0);
  CHECK(sdf_decode(extra).code() == Err::trailing_bytes);

  auto vers = bytes;
  vers[5] = 9;
  CHECK(sdf_decode(vers).code() == Err::unsupported_version);
}

TEST_CASE("exhaustive truncation sweep never crashes") {
  SdfDocument doc;
  doc.attributes.emplace_back("Location", AttributeValue::of_text("Pacific"));
  doc.attributes.emplace_back("DayNight", AttributeValue::of_int(1));
  doc.attributes.emplace_back("Depth", AttributeValue::of_float(-42.125));
  doc.payload = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto bytes = sdf_encode(doc).take();

  for (size_t len = 0; len < bytes.size(); ++len) {
    auto r = sdf_decode(bytes.data(), len);
    REQUIRE_FALSE(r.ok());
    CHECK(r.code() == Err::truncated);
  }
  CHECK(sdf_decode(bytes).ok());
}

TEST_CASE("declared lengths are validated before allocation") {
  // a header declaring a huge payload with no bytes behind it
  std::vector<uint8_t> bytes = {'S', 'S', 'D', 'F', 0x00, 0x01, 0x00, 0x00,
                                0x7f, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff, 0xff};
  CHECK(sdf_decode(bytes).code() == Err::truncated);
}

TEST_CASE("random mutations decode or fail cleanly") {
  std::mt19937_64 rng(13);
  SdfDocument doc = testutil::random_document(rng);
  auto bytes = sdf_encode(doc).take();
  for (int i = 0; i < 2000; ++i) {
    auto mutated = bytes;
    const size_t flips = 1 + rng() % 4;
    for (size_t f = 0; f < flips && !mutated.empty(); ++f)
      mutated[rng() % mutated.size()] ^= static_cast<uint8_t>(1 + rng() % 255);
    (void)sdf_decode(mutated);  // must not crash or hang
  }
}
