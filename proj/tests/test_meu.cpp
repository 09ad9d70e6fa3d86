// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <set>

#include "scispace/cluster.hpp"
#include "scispace/meu.hpp"
#include "testutil.hpp"

using namespace scispace;
using scispace::testutil::TempDir;

namespace {

std::unique_ptr<LocalCluster> make_cluster(const TempDir& dir, uint32_t dtns) {
  LocalCluster::Options opts;
  opts.dtn_count = dtns;
  opts.mode = IndexMode::lw_offline;
  auto cluster = LocalCluster::start(dir.path(), opts);
  REQUIRE(cluster.ok());
  return cluster.take();
}

// flag-independent walk of one backend: the completeness oracle
std::set<std::string> walk_displays(const std::filesystem::path& root) {
  std::set<std::string> out;
  for (const auto& e : bk_scan_entries(root, "").take()) {
    const size_t segs = std::count(e.rel_path.begin(), e.rel_path.end(), '/') + 1;
    if (segs < 2) continue;  // namespace roots carry no records
    out.insert("/" + e.rel_path);
  }
  return out;
}

std::set<std::string> visible_displays(WorkspaceSession& session) {
  std::set<std::string> out;
  for (const auto& r : session.list_visible_all().take()) out.insert(r.path);
  return out;
}

}  // namespace

TEST_CASE("meu lock excludes concurrent runs and breaks stale locks") {
  TempDir dir;
  {
    auto lock = MeuLock::acquire(dir.path(), "alice");
    REQUIRE(lock.ok());
    auto second = MeuLock::acquire(dir.path(), "bob");
    CHECK(second.code() == Err::lock_held);
  }
  // released on scope exit
  CHECK(MeuLock::acquire(dir.path(), "bob").ok());

  // a stale lock (older than 60 s) is broken
  {
    std::ofstream f(dir.path() / ".scispace/meu.lock");
    f << "crashed\n" << now_ms() - MeuLock::kStaleMs - 1000 << "\n";
  }
  CHECK(MeuLock::acquire(dir.path(), "carol").ok());
}

TEST_CASE("scan short-circuits fully synced trees") {
  TempDir dir;
  SyncFlagStore flags(dir.path(), FlagMode::marker_tree);
  REQUIRE(bk_put(dir.path(), "public/a/b/f1", {1}).ok());
  REQUIRE(bk_put(dir.path(), "public/a/f2", {1}).ok());
  for (const char* rel : {"public/a/b/f1", "public/a/f2", "public/a/b", "public/a", "public", ""})
    REQUIRE(flags.set(rel, true).ok());

  auto report = meu_scan(dir.path(), "", flags);
  REQUIRE(report.ok());
  CHECK(report.value().dirs_visited == 0);
  CHECK(report.value().dirs_skipped == 1);
  CHECK(report.value().files_unsynced.empty());
}

TEST_CASE("scan reports fresh files and skips synced siblings") {
  TempDir dir;
  SyncFlagStore flags(dir.path(), FlagMode::marker_tree);
  for (int i = 0; i < 3; ++i)
    REQUIRE(bk_put(dir.path(), "public/fresh/f" + std::to_string(i), {1}).ok());
  auto fresh = meu_scan(dir.path(), "", flags);
  REQUIRE(fresh.ok());
  CHECK(fresh.value().files_unsynced.size() == 3);

  // lock must not be held by someone else while exporting
  CHECK(meu_scan(dir.path(), "ghost", flags).code() == Err::not_found);
}

TEST_CASE("export sends one batch per shard and is idempotent") {
  TempDir dir;
  auto cluster = make_cluster(dir, 1);
  auto session = cluster->open_session().take();
  const auto& root = cluster->backend_root(0);
  SyncFlagStore flags(root, FlagMode::marker_tree);

  for (int i = 0; i < 3; ++i)
    REQUIRE(lw_write(root, flags, "public/lw/f" + std::to_string(i), {1}).ok());

  const uint64_t before = session->client(0).sent_count(MsgType::batch_export);
  auto report = meu_export(*session, 0);
  REQUIRE(report.ok());
  CHECK(report.value().exported == 4);  // 3 files + the lw directory record
  CHECK(session->client(0).sent_count(MsgType::batch_export) - before == 1);
  CHECK(visible_displays(*session) == walk_displays(root));

  // immediate re-export moves nothing and sends nothing
  auto again = meu_export(*session, 0);
  REQUIRE(again.ok());
  CHECK(again.value().exported == 0);
  CHECK(session->client(0).sent_count(MsgType::batch_export) - before == 1);

  // nothing unsynced from the start: zero messages
  auto empty_run = meu_export(*session, 0);
  CHECK(empty_run.value().exported == 0);
}

TEST_CASE("skip soundness after an incremental change") {
  TempDir dir;
  auto cluster = make_cluster(dir, 2);
  auto session = cluster->open_session().take();
  const auto& root = cluster->backend_root(0);
  SyncFlagStore flags(root, FlagMode::marker_tree);

  for (int d = 0; d < 10; ++d)
    for (int f = 0; f < 20; ++f)
      REQUIRE(lw_write(root, flags,
                       "public/tree/d" + std::to_string(d) + "/f" + std::to_string(f), {1})
                  .ok());
  REQUIRE(meu_export(*session, 0).ok());

  // one new file deep inside; the sibling subtrees stay skipped
  REQUIRE(lw_write(root, flags, "public/tree/d4/fresh", {2}).ok());
  auto scan = meu_scan(root, "", flags);
  REQUIRE(scan.ok());
  CHECK(scan.value().files_unsynced == std::vector<std::string>{"public/tree/d4/fresh"});
  CHECK(scan.value().dirs_skipped >= 1);

  // the fresh file plus its chain-invalidated ancestor directory records
  auto report = meu_export(*session, 0);
  REQUIRE(report.ok());
  CHECK(report.value().scan.files_unsynced.size() == 1);
  CHECK(report.value().exported == 3);
  CHECK(visible_displays(*session) == walk_displays(root));
}

TEST_CASE("completeness across shards equals the walk oracle") {
  TempDir dir;
  auto cluster = make_cluster(dir, 2);
  auto session = cluster->open_session().take();
  const auto& root = cluster->backend_root(0);
  SyncFlagStore flags(root, FlagMode::marker_tree);

  std::mt19937_64 rng(55);
  for (int i = 0; i < 60; ++i) {
    const std::string rel = "public/c/d" + std::to_string(rng() % 5) + "/f" + std::to_string(i);
    REQUIRE(lw_write(root, flags, rel, {static_cast<uint8_t>(i)}).ok());
  }
  auto report = meu_export(*session, 0);
  REQUIRE(report.ok());
  CHECK_FALSE(report.value().partial);
  // records landed on both shards, one batch each
  CHECK(report.value().per_shard.size() == 2);
  CHECK(visible_displays(*session) == walk_displays(root));
}

TEST_CASE("a crash between ack and flag-set re-exports idempotently") {
  TempDir dir;
  auto cluster = make_cluster(dir, 2);
  auto session = cluster->open_session().take();
  const auto& root = cluster->backend_root(0);
  SyncFlagStore flags(root, FlagMode::marker_tree);

  for (int i = 0; i < 10; ++i)
    REQUIRE(lw_write(root, flags, "public/crash/f" + std::to_string(i), {1}).ok());

  MeuOptions opts;
  bool crashed = false;
  opts.after_ack_hook = [&](uint32_t) {
    if (!crashed) {
      crashed = true;
      throw CrashPoint{};
    }
  };
  CHECK_THROWS_AS((void)meu_export(*session, 0, opts), CrashPoint);
  REQUIRE(crashed);

  // recovery: plain re-export completes the job with no visibility loss
  auto retry = meu_export(*session, 0);
  REQUIRE(retry.ok());
  CHECK(visible_displays(*session) == walk_displays(root));
  // no duplicate records either
  CHECK(session->list_visible_all().value().size() == walk_displays(root).size());

  // and one more export is a no-op
  CHECK(meu_export(*session, 0).value().exported == 0);
}

TEST_CASE("partial shard failure exports what it can and recovers") {
  TempDir dir;
  auto cluster = make_cluster(dir, 2);
  auto session = cluster->open_session().take();
  const auto& root = cluster->backend_root(0);
  SyncFlagStore flags(root, FlagMode::marker_tree);

  for (int i = 0; i < 40; ++i)
    REQUIRE(lw_write(root, flags, "public/p/f" + std::to_string(i), {1}).ok());

  cluster->stop_dtn(1);
  auto report = meu_export(*session, 0);
  REQUIRE(report.ok());
  CHECK(report.value().partial);
  REQUIRE(report.value().failed_shards.size() == 1);
  CHECK(report.value().failed_shards[0] == 1);
  CHECK(report.value().per_shard.count(0) == 1);

  REQUIRE(cluster->restart_dtn(1).ok());
  auto session2 = cluster->open_session().take();
  auto retry = meu_export(*session2, 0);
  REQUIRE(retry.ok());
  CHECK_FALSE(retry.value().partial);
  CHECK(visible_displays(*session2) == walk_displays(root));
}

TEST_CASE("export with offline indexing populates discovery state") {
  TempDir dir;
  LocalCluster::Options copts;
  copts.dtn_count = 2;
  copts.mode = IndexMode::lw_offline;
  copts.specs = {{"Location", ValueTag::text_val}};
  auto cluster = LocalCluster::start(dir.path(), copts).take();
  auto session = cluster->open_session().take();
  const auto& root = cluster->backend_root(0);
  SyncFlagStore flags(root, FlagMode::marker_tree);

  SdfDocument doc;
  doc.attributes.emplace_back("Location", AttributeValue::of_text("Pacific"));
  for (int i = 0; i < 8; ++i)
    REQUIRE(lw_write(root, flags, "public/ox/f" + std::to_string(i) + ".sdf",
                     sdf_encode(doc).take()).ok());

  MeuOptions opts;
  opts.index_offline_after = true;
  REQUIRE(meu_export(*session, 0, opts).ok());

  size_t location_triples = 0;
  for (const auto& t : cluster->all_triples())
    if (t.attribute == "Location") ++location_triples;
  CHECK(location_triples == 8);
}
