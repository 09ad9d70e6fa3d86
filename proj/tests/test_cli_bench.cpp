// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scispace/bench.hpp"
#include "scispace/config.hpp"
#include "testutil.hpp"

using namespace scispace;
using scispace::testutil::TempDir;

TEST_CASE("collaboration config parses sections, dtns, and namespaces") {
  TempDir dir;
  {
    std::ofstream specs(dir.path() / "specs.txt");
    specs << "Location:text\nDayNight:int\n";
  }
  const std::string text =
      "# demo collaboration\n"
      "[collaboration]\n"
      "name = demo\n"
      "collaborator = alice\n"
      "flag_mode = marker-tree\n"
      "\n"
      "[dtn]\n"
      "id = dtn-b\n"
      "host = 127.0.0.1\n"
      "port = 7402\n"
      "backend_root = b\n"
      "\n"
      "[dtn]\n"
      "id = dtn-a\n"
      "host = 127.0.0.1\n"
      "port = 7401\n"
      "backend_root = /abs/a\n"
      "\n"
      "[sds]\n"
      "mode = inline-async\n"
      "flush_count = 16\n"
      "flush_ms = 250\n"
      "flush_bytes = 1048576\n"
      "spec_file = specs.txt\n"
      "\n"
      "[namespaces]\n"
      "climate = alice global\n"
      "draft = alice local\n";
  auto cfg = parse_collab_config(text, dir.path());
  REQUIRE(cfg.ok());
  CHECK(cfg.value().name == "demo");
  CHECK(cfg.value().collaborator == "alice");
  // dense indices in id order, regardless of file order
  REQUIRE(cfg.value().dtns.size() == 2);
  CHECK(cfg.value().dtns[0].id == "dtn-a");
  CHECK(cfg.value().dtns[0].index == 0);
  CHECK(cfg.value().dtns[0].backend_root == "/abs/a");
  CHECK(cfg.value().dtns[1].id == "dtn-b");
  CHECK(cfg.value().dtns[1].backend_root == dir.path() / "b");  // relative resolves to base
  CHECK(cfg.value().mode == IndexMode::inline_async);
  CHECK(cfg.value().thresholds.flush_count == 16);
  CHECK(cfg.value().thresholds.flush_ms == 250);
  REQUIRE(cfg.value().specs.size() == 2);
  CHECK(cfg.value().specs[1].type == ValueTag::int_val);
  REQUIRE(cfg.value().namespaces.size() == 2);
  CHECK(cfg.value().namespaces[1].scope == Scope::local);
}

TEST_CASE("config errors") {
  TempDir dir;
  CHECK(parse_collab_config("[collaboration]\nname = x\n", dir.path()).code() ==
        Err::bad_request);  // no dtns
  CHECK(parse_collab_config("[dtn]\nhost = h\nbackend_root = r\n", dir.path()).code() ==
        Err::bad_request);  // dtn without id
  CHECK(parse_collab_config("[dtn]\nid = a\nbackend_root = r\n[sds]\nmode = turbo\n", dir.path())
            .code() == Err::bad_request);
  CHECK(parse_collab_config("key = value\n", dir.path()).code() == Err::bad_request);
  const std::string dup =
      "[dtn]\nid = a\nbackend_root = r1\n[dtn]\nid = a\nbackend_root = r2\n";
  CHECK(parse_collab_config(dup, dir.path()).code() == Err::conflict);
}

TEST_CASE("bench rows round-trip") {
  BenchRow r{"meu", {{"files", "5000"}, {"seed", "42"}}, "export_ms", 123.5};
  const std::string line = format_bench_row(r);
  CHECK(line == "meu\tfiles=5000;seed=42\texport_ms\t123.5");
  auto back = parse_bench_row(line);
  REQUIRE(back.ok());
  CHECK(back.value() == r);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    BenchRow row{testutil::random_segment(rng), {}, testutil::random_segment(rng),
                 static_cast<double>(rng() % 100000) / 8.0};
    const size_t params = rng() % 4;
    for (size_t k = 0; k < params; ++k)
      row.params["p" + std::to_string(k)] = testutil::random_segment(rng);
    auto rt = parse_bench_row(format_bench_row(row));
    REQUIRE(rt.ok());
    CHECK(rt.value() == row);
  }

  CHECK(parse_bench_row("too\tfew").code() == Err::bad_request);
  CHECK(parse_bench_row("a\tb=1\tc\tnot_a_number").code() == Err::bad_request);
}

TEST_CASE("stats helpers") {
  CHECK(bench_median({3, 1, 2}) == 2.0);
  CHECK(bench_median({1, 2, 3, 4}) == 2.5);
  CHECK(bench_percentile({1, 2, 3, 4, 5}, 0) == 1.0);
  CHECK(bench_percentile({1, 2, 3, 4, 5}, 100) == 5.0);
  CHECK(bench_mean({2, 4}) == 3.0);

  // perfect line fits with r2 == 1
  std::vector<std::pair<double, double>> xy;
  for (int i = 1; i <= 10; ++i) xy.emplace_back(i, 3.0 * i + 7.0);
  auto fit = least_squares(xy);
  CHECK(fit.slope == doctest::Approx(3.0));
  CHECK(fit.intercept == doctest::Approx(7.0));
  CHECK(fit.r2 == doctest::Approx(1.0));

  // noise lowers r2 below a clean line
  xy.clear();
  std::mt19937_64 rng(4);
  for (int i = 1; i <= 30; ++i)
    xy.emplace_back(i, static_cast<double>(rng() % 1000));
  CHECK(least_squares(xy).r2 < 0.5);
}

TEST_CASE("corpus generation is deterministic under a seed") {
  CorpusOptions opts;
  opts.file_count = 20;
  opts.payload_bytes = 128;
  opts.attr_count = 6;
  opts.seed = 7;
  const auto a = generate_corpus(opts);
  const auto b = generate_corpus(opts);
  REQUIRE(a.size() == 20);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].rel == b[i].rel);
    CHECK(a[i].encoded == b[i].encoded);
    CHECK(a[i].mtime_ms == b[i].mtime_ms);
  }
  opts.seed = 8;
  const auto c = generate_corpus(opts);
  CHECK(a[0].encoded != c[0].encoded);
}

TEST_CASE("ior sweep: local writes beat the workspace path, gap shrinks with block size") {
  BenchEnv env;
  env.scratch = bench_default_scratch() / "test-ior";
  env.seed = 7;
  auto report = run_bench_ior(env, {4096, 524288}, 4 * 1024 * 1024, 3);
  std::error_code ec;
  std::filesystem::remove_all(env.scratch, ec);
  REQUIRE(report.ok());

  auto ws_small = report.value().metric_values("write_MBps", {{"block", "4096"}, {"path", "workspace"}});
  auto lw_small = report.value().metric_values("write_MBps", {{"block", "4096"}, {"path", "local"}});
  auto ws_big = report.value().metric_values("write_MBps", {{"block", "524288"}, {"path", "workspace"}});
  auto lw_big = report.value().metric_values("write_MBps", {{"block", "524288"}, {"path", "local"}});
  REQUIRE(ws_small.size() == 1);
  REQUIRE(lw_small.size() == 1);
  // small blocks: per-file metadata round-trips dominate the workspace path
  CHECK(lw_small[0] >= ws_small[0]);
  // the relative gap narrows as blocks grow (generous slack for timer noise)
  const double gap_small = lw_small[0] / ws_small[0];
  const double gap_big = lw_big[0] / ws_big[0];
  CHECK(gap_small >= gap_big * 0.8);
}

TEST_CASE("concurrent sessions stay correct and throughput does not collapse") {
  BenchEnv env;
  env.scratch = bench_default_scratch() / "test-clients";
  env.seed = 7;
  auto report = run_bench_clients(env, {1, 4}, 100, 1024, 3);
  std::error_code ec;
  std::filesystem::remove_all(env.scratch, ec);
  REQUIRE(report.ok());
  for (const double ok : report.value().metric_values("routing_ok")) CHECK(ok == 1.0);
  auto t1 = report.value().metric_values("files_per_s", {{"sessions", "1"}});
  auto t4 = report.value().metric_values("files_per_s", {{"sessions", "4"}});
  REQUIRE(t1.size() == 1);
  REQUIRE(t4.size() == 1);
  CHECK(t4[0] >= 0.3 * t1[0]);
  auto records = report.value().metric_values("records", {{"sessions", "4"}});
  REQUIRE(records.size() == 1);
  CHECK(records[0] >= 400);  // every session's files are present
}

TEST_CASE("modes bench smoke: equivalence rows hold even with no specs") {
  TempDir dir;
  BenchEnv env;
  env.scratch = dir.path();
  env.seed = 7;
  auto report = run_bench_modes(env, {0, 3}, 150, 512, 1);
  REQUIRE(report.ok());
  auto equal = report.value().metric_values("modes_equal");
  REQUIRE(equal.size() == 2);
  for (const double v : equal) CHECK(v == 1.0);
  for (const double v : report.value().metric_values("oracle_equal")) CHECK(v == 1.0);
}

TEST_CASE("hitratio bench smoke: constructed corpora hit the exact counts") {
  TempDir dir;
  BenchEnv env;
  env.scratch = dir.path();
  env.seed = 7;
  auto report = run_bench_hitratio(env, {0.0, 0.5, 1.0}, 200, 5);
  REQUIRE(report.ok());
  for (const char* attr : {"Location", "Instrument", "Date", "DayNight"}) {
    auto h0 = report.value().metric_values("hits", {{"attr", attr}, {"ratio", "0"}});
    auto h50 = report.value().metric_values("hits", {{"attr", attr}, {"ratio", "0.5"}});
    auto h100 = report.value().metric_values("hits", {{"attr", attr}, {"ratio", "1"}});
    REQUIRE(h0.size() == 1);
    CHECK(h0[0] == 0.0);
    CHECK(h50[0] == 100.0);
    CHECK(h100[0] == 200.0);
  }
}

TEST_CASE("cli end-to-end: put, get, ls, stat, tag, query, flush") {
  const char* bin = std::getenv("SCISPACE_BIN");
  if (!bin) {
    MESSAGE("SCISPACE_BIN not set; cli end-to-end skipped");
    return;
  }
  TempDir dir;
  LocalCluster::Options opts;
  opts.dtn_count = 2;
  opts.mode = IndexMode::inline_sync;
  opts.specs = {{"Location", ValueTag::text_val}};
  auto cluster = LocalCluster::start(dir.path(), opts).take();

  // config file pointing at the live servers
  const auto cfg = cluster->client_config("carol");
  const std::string cfg_path = (dir.path() / "collab.conf").string();
  {
    std::ofstream out(cfg_path);
    out << "[collaboration]\nname = e2e\ncollaborator = carol\n\n";
    for (const auto& d : cfg.dtns)
      out << "[dtn]\nid = " << d.id << "\nhost = " << d.host << "\nport = " << d.port
          << "\nbackend_root = " << d.backend_root.string() << "\n\n";
    out << "[sds]\nmode = inline-sync\n";
  }

  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(bin) + " --config " + cfg_path + " " + args +
                            " > " + (dir.path() / "out.txt").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream in(dir.path() / "out.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return std::make_pair(WEXITSTATUS(rc), ss.str());
  };

  // a small data file to push through
  SdfDocument doc;
  doc.attributes.emplace_back("Location", AttributeValue::of_text("Pacific"));
  doc.payload = {1, 2, 3};
  const auto encoded = sdf_encode(doc).take();
  {
    std::ofstream f(dir.path() / "in.sdf", std::ios::binary);
    f.write(reinterpret_cast<const char*>(encoded.data()),
            static_cast<std::streamsize>(encoded.size()));
  }

  // an empty collaboration lists empty with a clean exit
  auto empty_ls = run("ls /public");
  CHECK(empty_ls.first == 0);
  CHECK(empty_ls.second.empty());

  CHECK(run("put /public/cli/a.sdf " + (dir.path() / "in.sdf").string()).first == 0);
  auto got = run("get /public/cli/a.sdf " + (dir.path() / "back.sdf").string());
  CHECK(got.first == 0);
  {
    std::ifstream f(dir.path() / "back.sdf", std::ios::binary);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    CHECK(bytes == encoded);
  }

  auto ls = run("ls /public/cli");
  CHECK(ls.first == 0);
  CHECK(ls.second == "a.sdf\n");

  auto st = run("stat /public/cli/a.sdf");
  CHECK(st.first == 0);
  CHECK(st.second.find("size:") != std::string::npos);

  CHECK(run("tag /public/cli/a.sdf Quality=gold").first == 0);
  auto q = run("query 'Location = \"Pacific\" AND Quality = \"gold\"'");
  CHECK(q.first == 0);
  CHECK(q.second.find("/public/cli/a.sdf\n") != std::string::npos);
  CHECK(q.second.find("# elapsed_ms=") != std::string::npos);

  CHECK(run("flush").first == 0);
  CHECK(run("mkdir /public/cli/sub").first == 0);
  CHECK(run("ls /public").first == 0);

  // usage errors exit 1
  CHECK(run("no-such-command").first == 1);
  CHECK(run("query 'Location >'").first == 1);
  CHECK(run("get /public/none x.out").first == 1);
}
