// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "scispace/sds.hpp"
#include "scispace/shard_service.hpp"
#include "testutil.hpp"

using namespace scispace;
using scispace::testutil::TempDir;

namespace {

std::vector<uint8_t> encode_doc(std::vector<std::pair<std::string, AttributeValue>> attrs) {
  SdfDocument doc;
  doc.attributes = std::move(attrs);
  return sdf_encode(doc).take();
}

}  // namespace

TEST_CASE("spec files parse") {
  auto specs = parse_spec_set("# indexed attributes\nLocation:text\nDayNight : int\n\nDepth:float\n");
  REQUIRE(specs.ok());
  REQUIRE(specs.value().size() == 3);
  CHECK(specs.value()[0] == AttributeSpec{"Location", ValueTag::text_val});
  CHECK(specs.value()[1] == AttributeSpec{"DayNight", ValueTag::int_val});
  CHECK(specs.value()[2] == AttributeSpec{"Depth", ValueTag::float_val});

  CHECK(parse_spec_set("weird").code() == Err::bad_request);
  CHECK(parse_spec_set("a:int\na:text").code() == Err::duplicate_attribute);
  CHECK(parse_spec_set("a:datetime").code() == Err::bad_request);
}

TEST_CASE("extraction keeps matching attributes plus fs pseudo-attributes") {
  const SpecSet specs = {{"Location", ValueTag::text_val}};
  const auto bytes = encode_doc({{"Location", AttributeValue::of_text("Pacific")},
                                 {"Ignored", AttributeValue::of_int(3)}});
  StatContext ctx{bytes.size(), 777};

  auto triples = extract_attributes("/public/f.sdf", bytes, specs, ctx);
  REQUIRE(triples.size() == 3);
  CHECK(triples[0] == AttributeTriple{"Location", "/public/f.sdf",
                                      AttributeValue::of_text("Pacific"),
                                      TripleSource::extracted});
  CHECK(triples[1].attribute == kFsSizeAttr);
  CHECK(triples[1].value == AttributeValue::of_int(static_cast<int64_t>(bytes.size())));
  CHECK(triples[2].attribute == kFsMtimeAttr);
  CHECK(triples[2].value == AttributeValue::of_int(777));
}

TEST_CASE("type mismatches are skipped silently") {
  const SpecSet specs = {{"Location", ValueTag::text_val}};
  const auto bytes = encode_doc({{"Location", AttributeValue::of_int(5)}});
  auto triples = extract_attributes("/public/f.sdf", bytes, specs, StatContext{1, 1});
  REQUIRE(triples.size() == 2);  // fs.* only
  CHECK(triples[0].attribute == kFsSizeAttr);
}

TEST_CASE("extraction is total") {
  const SpecSet specs = {{"Location", ValueTag::text_val}};
  const std::vector<uint8_t> garbage = {9, 9, 9, 9};
  CHECK(extract_attributes("/p/f", garbage, specs, std::nullopt).empty());
  // with a stat context, undecodable files still get fs.* entries
  CHECK(extract_attributes("/p/f", garbage, specs, StatContext{4, 2}).size() == 2);
}

TEST_CASE("like matching") {
  CHECK(like_match("2016%", "2016-07-15"));
  CHECK(like_match("%07%", "2016-07-15"));
  CHECK(like_match("201_-07%", "2016-07-15"));
  CHECK_FALSE(like_match("2017%", "2016-07-15"));
  CHECK(like_match("%", ""));
  CHECK(like_match("", ""));
  CHECK_FALSE(like_match("_", ""));
  CHECK_FALSE(like_match("pacific", "Pacific"));  // case-sensitive
}

TEST_CASE("value matching widens ints only against float literals") {
  const auto i5 = AttributeValue::of_int(5);
  const auto f5 = AttributeValue::of_float(5.0);
  const auto f49 = AttributeValue::of_float(4.9);
  const auto i4 = AttributeValue::of_int(4);

  CHECK(value_matches(QueryOp::eq, i5, i5));
  CHECK_FALSE(value_matches(QueryOp::eq, i5, f5));  // EQ is exact on tag
  CHECK(value_matches(QueryOp::gt, f49, i5));       // int 5 widens, 5.0 > 4.9
  CHECK_FALSE(value_matches(QueryOp::gt, i4, f5));  // int literal never widens stored floats
  CHECK(value_matches(QueryOp::lt, AttributeValue::of_int(10), i5));
  CHECK_FALSE(value_matches(QueryOp::gt, AttributeValue::of_text("abc"), i5));
}

TEST_CASE("discovery shard reindex replaces, manual survives") {
  TempDir dir;
  auto shard = DiscoveryShard::open(dir.path()).take();

  const std::string file = "/public/f.sdf";
  REQUIRE(shard->reindex_file(file, {{"Location", file, AttributeValue::of_text("Pacific"),
                                      TripleSource::extracted},
                                     {"DayNight", file, AttributeValue::of_int(1),
                                      TripleSource::extracted}}).ok());
  CHECK(shard->triple_count() == 2);

  // re-extraction with a new value set replaces the old extracted triples
  REQUIRE(shard->reindex_file(file, {{"Location", file, AttributeValue::of_text("Arctic"),
                                      TripleSource::extracted}}).ok());
  CHECK(shard->triple_count() == 1);
  CHECK(shard->eval_clause("Location", QueryOp::eq, AttributeValue::of_text("Arctic")).size() == 1);
  CHECK(shard->eval_clause("DayNight", QueryOp::eq, AttributeValue::of_int(1)).empty());

  // manual tags survive reindexing and win over extracted values
  REQUIRE(shard->tag_manual(file, "Quality", AttributeValue::of_text("gold")).ok());
  REQUIRE(shard->tag_manual(file, "Quality", AttributeValue::of_text("platinum")).ok());
  REQUIRE(shard->reindex_file(file, {{"Location", file, AttributeValue::of_text("Indian"),
                                      TripleSource::extracted},
                                     {"Quality", file, AttributeValue::of_text("auto"),
                                      TripleSource::extracted}}).ok());
  auto quality = shard->eval_clause("Quality", QueryOp::eq, AttributeValue::of_text("platinum"));
  CHECK(quality == std::vector<std::string>{file});
  CHECK(shard->triple_count() == 2);
}

TEST_CASE("discovery shard reload equivalence") {
  TempDir dir;
  std::vector<AttributeTriple> before;
  {
    auto shard = DiscoveryShard::open(dir.path()).take();
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
      const std::string file = "/public/r" + std::to_string(i);
      std::vector<AttributeTriple> triples;
      for (int k = 0; k < 3; ++k)
        triples.push_back({"a" + std::to_string(k), file, testutil::random_value(rng),
                           TripleSource::extracted});
      REQUIRE(shard->reindex_file(file, triples).ok());
      if (i % 7 == 0)
        REQUIRE(shard->tag_manual(file, "note", AttributeValue::of_text("t" + std::to_string(i))).ok());
    }
    before = shard->dump_sorted();
  }
  auto reloaded = DiscoveryShard::open(dir.path()).take();
  CHECK(reloaded->dump_sorted() == before);
}

TEST_CASE("index queue coalesces and bounds") {
  IndexQueue q(IndexQueue::Thresholds{4, 1000, 1 << 20});
  REQUIRE(q.enqueue("/p/a", 1).ok());
  REQUIRE(q.enqueue("/p/b", 1).ok());
  REQUIRE(q.enqueue("/p/c", 1).ok());
  CHECK(q.pending() == 3);
  REQUIRE(q.enqueue("/p/a", 1).ok());  // duplicate collapses
  CHECK(q.pending() == 3);

  // count threshold fires at flush_count
  CHECK_FALSE(q.threshold_fired(steady_now_ms()));
  REQUIRE(q.enqueue("/p/d", 1).ok());
  CHECK(q.threshold_fired(steady_now_ms()));

  auto batch = q.take_batch();
  CHECK(batch == std::vector<std::string>{"/p/a", "/p/b", "/p/c", "/p/d"});
  CHECK(q.pending() == 0);
}

TEST_CASE("queue capacity bound gives backpressure") {
  CHECK(IndexQueue::kDefaultCapacity == 1048576);
  IndexQueue q(IndexQueue::Thresholds{1000, 1000, 1 << 30}, 3);
  REQUIRE(q.enqueue("/p/a", 1).ok());
  REQUIRE(q.enqueue("/p/b", 1).ok());
  REQUIRE(q.enqueue("/p/c", 1).ok());
  CHECK(q.enqueue("/p/d", 1).code() == Err::queue_full);
  CHECK(q.enqueue("/p/a", 1).ok());  // duplicates still coalesce, no growth
  (void)q.take_batch();
  CHECK(q.enqueue("/p/d", 1).ok());  // retry succeeds after a drain
}

TEST_CASE("queue thresholds: age and bytes") {
  IndexQueue q(IndexQueue::Thresholds{100, 50, 10});
  REQUIRE(q.enqueue("/p/a", 4).ok());
  CHECK_FALSE(q.threshold_fired(steady_now_ms()));
  // byte threshold
  REQUIRE(q.enqueue("/p/b", 8).ok());
  CHECK(q.threshold_fired(steady_now_ms()));
  (void)q.take_batch();
  // age threshold
  REQUIRE(q.enqueue("/p/c", 1).ok());
  CHECK_FALSE(q.threshold_fired(steady_now_ms()));
  CHECK(q.threshold_fired(steady_now_ms() + 51));
  REQUIRE(q.age_deadline().has_value());
}

TEST_CASE("drain_step batching arithmetic and vanish rule") {
  TempDir backend;
  TempDir shard_dir;
  auto shard = DiscoveryShard::open(shard_dir.path()).take();
  const SpecSet specs = {{"Location", ValueTag::text_val}};

  IndexQueue q(IndexQueue::Thresholds{4, 10000, 1 << 30});
  CHECK(drain_step(q, *shard, specs, backend.path()).value() == 0);  // empty queue

  for (int i = 0; i < 10; ++i) {
    const std::string rel = "public/q/f" + std::to_string(i) + ".sdf";
    REQUIRE(bk_put(backend.path(), rel,
                   encode_doc({{"Location", AttributeValue::of_text("Pacific")}})).ok());
    REQUIRE(q.enqueue("/" + rel, 1).ok());
  }
  // one file vanishes between enqueue and drain
  std::filesystem::remove(backend.path() / "public/q/f3.sdf");

  CHECK(drain_step(q, *shard, specs, backend.path()).value() == 3);  // f3 dropped
  CHECK(drain_step(q, *shard, specs, backend.path()).value() == 4);
  CHECK(drain_step(q, *shard, specs, backend.path()).value() == 2);
  CHECK(q.pending() == 0);
  CHECK(shard->eval_clause("Location", QueryOp::eq, AttributeValue::of_text("Pacific")).size() == 9);
}

TEST_CASE("a coalesced entry indexes the bytes present at drain time") {
  TempDir backend;
  TempDir shard_dir;
  auto shard = DiscoveryShard::open(shard_dir.path()).take();
  const SpecSet specs = {{"Location", ValueTag::text_val}};
  IndexQueue q(IndexQueue::Thresholds{8, 10000, 1 << 30});

  const std::string rel = "public/c/f.sdf";
  REQUIRE(bk_put(backend.path(), rel,
                 encode_doc({{"Location", AttributeValue::of_text("Pacific")}})).ok());
  REQUIRE(q.enqueue("/" + rel, 1).ok());
  REQUIRE(q.enqueue("/" + rel, 1).ok());  // coalesces
  // the file changes after enqueue but before the drain
  REQUIRE(bk_put(backend.path(), rel,
                 encode_doc({{"Location", AttributeValue::of_text("Arctic")}})).ok());

  CHECK(drain_step(q, *shard, specs, backend.path()).value() == 1);
  CHECK(shard->eval_clause("Location", QueryOp::eq, AttributeValue::of_text("Arctic")).size() == 1);
  CHECK(shard->eval_clause("Location", QueryOp::eq, AttributeValue::of_text("Pacific")).empty());
}

TEST_CASE("index_offline scans sdf files and is idempotent") {
  TempDir backend;
  TempDir shard_dir;
  auto shard = DiscoveryShard::open(shard_dir.path()).take();
  const SpecSet specs = {{"Location", ValueTag::text_val}};

  REQUIRE(bk_put(backend.path(), "public/off/a.sdf",
                 encode_doc({{"Location", AttributeValue::of_text("Pacific")}})).ok());
  REQUIRE(bk_put(backend.path(), "public/off/b.sdf",
                 encode_doc({{"Location", AttributeValue::of_text("Arctic")}})).ok());
  REQUIRE(bk_put(backend.path(), "public/off/notes.txt", {1, 2, 3}).ok());

  auto report = index_offline(backend.path(), "public/off", specs, *shard);
  REQUIRE(report.ok());
  CHECK(report.value().files_seen == 3);
  CHECK(report.value().files_indexed == 2);
  CHECK(report.value().triples_written == 6);  // 1 matched + 2 fs.* each

  const auto before = shard->dump_sorted();
  auto again = index_offline(backend.path(), "public/off", specs, *shard);
  REQUIRE(again.ok());
  CHECK(shard->dump_sorted() == before);  // idempotent

  CHECK(index_offline(backend.path(), "missing", specs, *shard).code() == Err::not_found);

  TempDir empty;
  auto zero = index_offline(empty.path(), "", specs, *shard);
  REQUIRE(zero.ok());
  CHECK(zero.value().files_seen == 0);
}
