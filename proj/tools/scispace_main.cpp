// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <sys/stat.h>
#include <time.h>

#include <csignal>
#include <fstream>
#include <iostream>

#include "scispace/bench.hpp"
#include "scispace/meu.hpp"
#include "scispace/queryql.hpp"
#include "scispace/shard_server.hpp"

namespace fs = std::filesystem;
using namespace scispace;

namespace {

int exit_code_for(const Error& e) {
  switch (e.code) {
    case Err::io_failure:
    case Err::internal:
    case Err::shard_unavailable:
    case Err::oversized_frame:
    case Err::bad_frame:
      return 2;
    default:
      return 1;  // user-correctable
  }
}

int fail(const Error& e) {
  std::cerr << "scispace: " << err_name(e.code) << ": " << e.message << "\n";
  return exit_code_for(e);
}

Result<CollabConfig> config_from(const std::string& config_path) {
  std::string path = config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("SCISPACE_CONFIG")) path = env;
  }
  if (path.empty())
    return make_error(Err::bad_request, "no config: pass --config or set SCISPACE_CONFIG");
  return load_collab_config(path);
}

Result<std::unique_ptr<WorkspaceSession>> open_session(const std::string& config_path) {
  auto cfg = config_from(config_path);
  if (!cfg.ok()) return cfg.error();
  auto session = WorkspaceSession::open(cfg.value());
  if (!session.ok()) return session.error();
  // the configured namespaces; registration is idempotent
  for (const auto& ns : cfg.value().namespaces) {
    if (auto s = session.value()->register_namespace(ns); !s.ok()) return s.error();
  }
  return session;
}

Result<std::vector<uint8_t>> read_local_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return make_error(Err::not_found, path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  return bytes;
}

std::vector<size_t> parse_size_list(const std::string& csv, std::vector<size_t> dflt) {
  if (csv.empty()) return dflt;
  std::vector<size_t> out;
  size_t start = 0;
  while (start <= csv.size()) {
    const size_t comma = std::min(csv.find(',', start), csv.size());
    out.push_back(std::stoull(csv.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& csv, std::vector<double> dflt) {
  if (csv.empty()) return dflt;
  std::vector<double> out;
  size_t start = 0;
  while (start <= csv.size()) {
    const size_t comma = std::min(csv.find(',', start), csv.size());
    out.push_back(std::stod(csv.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

volatile std::sig_atomic_t g_stop_requested = 0;
void on_signal(int) { g_stop_requested = 1; }

int cmd_serve_shard(const std::string& config_path, uint32_t dtn) {
  auto cfg = config_from(config_path);
  if (!cfg.ok()) return fail(cfg.error());
  if (dtn >= cfg.value().dtn_count()) {
    std::cerr << "scispace: dtn index " << dtn << " out of range\n";
    return 1;
  }
  auto service = ShardService::open(cfg.value(), dtn);
  if (!service.ok()) return fail(service.error());
  std::vector<std::pair<std::string, uint16_t>> peers;
  for (const auto& d : cfg.value().dtns) peers.emplace_back(d.host, d.port);
  service.value()->set_peers(peers);

  const auto& descriptor = cfg.value().dtns[dtn];
  auto server = ShardServer::start(*service.value(), descriptor.host, descriptor.port);
  if (!server.ok()) return fail(server.error());
  std::cout << "serving shard " << dtn << " on " << descriptor.host << ":"
            << server.value()->port() << std::endl;

  std::signal(SIGTERM, on_signal);
  std::signal(SIGINT, on_signal);
  while (!g_stop_requested) {
    struct timespec ts{0, 50'000'000};
    nanosleep(&ts, nullptr);
  }
  server.value()->stop();
  return 0;
}

Result<AttributeValue> parse_tag_value(const std::string& spec, std::string* name_out) {
  const size_t eq = spec.find('=');
  if (eq == std::string::npos)
    return make_error(Err::bad_request, "expected NAME=VALUE[:type]");
  *name_out = spec.substr(0, eq);
  std::string value = spec.substr(eq + 1);
  std::string type = "text";
  const size_t colon = value.rfind(':');
  if (colon != std::string::npos &&
      (value.substr(colon + 1) == "int" || value.substr(colon + 1) == "float" ||
       value.substr(colon + 1) == "text")) {
    type = value.substr(colon + 1);
    value = value.substr(0, colon);
  }
  try {
    if (type == "int") return AttributeValue::of_int(std::stoll(value));
    if (type == "float") return AttributeValue::of_float(std::stod(value));
  } catch (const std::exception&) {
    return make_error(Err::bad_request, "value does not parse as " + type + ": " + value);
  }
  return AttributeValue::of_text(value);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scispace: collaboration workspace over DTN backends"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "collaboration config (or SCISPACE_CONFIG)");

  // serve-shard
  auto* serve = app.add_subcommand("serve-shard", "run one DTN's shard service");
  uint32_t serve_dtn = 0;
  serve->add_option("--dtn", serve_dtn, "DTN index to serve")->required();

  // put
  auto* put = app.add_subcommand("put", "copy a local file into the workspace");
  std::string put_dst, put_src;
  bool put_preserve = false;
  int64_t put_mtime = -1;
  put->add_option("path", put_dst, "workspace path")->required();
  put->add_option("file", put_src, "local source file")->required();
  put->add_flag("--preserve-mtime", put_preserve, "carry the source file's mtime");
  put->add_option("--mtime-ms", put_mtime, "explicit mtime (ms since epoch)");

  // get
  auto* get = app.add_subcommand("get", "copy a workspace file to a local file");
  std::string get_src, get_dst;
  get->add_option("path", get_src, "workspace path")->required();
  get->add_option("file", get_dst, "local destination file")->required();

  // ls / stat / mkdir
  auto* ls = app.add_subcommand("ls", "list a workspace directory");
  std::string ls_path;
  ls->add_option("path", ls_path, "workspace directory")->required();
  auto* stat_cmd = app.add_subcommand("stat", "show a workspace entry's record");
  std::string stat_path;
  stat_cmd->add_option("path", stat_path, "workspace path")->required();
  auto* mkdir_cmd = app.add_subcommand("mkdir", "create a workspace directory");
  std::string mkdir_path;
  mkdir_cmd->add_option("path", mkdir_path, "workspace directory")->required();

  // export
  auto* export_cmd = app.add_subcommand("export", "commit local-write metadata to the shards");
  std::string export_root, export_subtree;
  bool export_index = false;
  export_cmd->add_option("--root", export_root, "backend root to scan")->required();
  export_cmd->add_option("--path", export_subtree, "subtree to export (default: whole root)");
  export_cmd->add_flag("--index", export_index, "run offline indexing after the export");

  // tag / query / flush / scrub
  auto* tag = app.add_subcommand("tag", "attach a manual attribute to a file");
  std::string tag_path, tag_spec;
  tag->add_option("path", tag_path, "workspace path")->required();
  tag->add_option("attribute", tag_spec, "NAME=VALUE[:int|:float|:text]")->required();
  auto* query = app.add_subcommand("query", "search indexed attributes");
  std::string query_str;
  query->add_option("q", query_str, "query string, e.g. 'Location = \"Pacific\"'")->required();
  auto* flush = app.add_subcommand("flush", "drain the asynchronous indexing queues");
  auto* scrub = app.add_subcommand("scrub", "drop records whose backing files are gone");

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark experiment");
  std::string bench_kind, bench_out, bench_scratch;
  std::string arg_counts, arg_attrs, arg_ratios, arg_blocks, arg_sessions;
  uint64_t bench_seed = 42;
  size_t bench_files = 0, bench_payload = 65536, bench_queries = 250, bench_reps = 1;
  bench->add_option("experiment", bench_kind, "meu | modes | hitratio | ior | clients")
      ->required();
  bench->add_option("--seed", bench_seed, "corpus seed");
  bench->add_option("--out", bench_out, "write rows to this file (default stdout)");
  bench->add_option("--scratch", bench_scratch, "working directory (default: TMPDIR)");
  bench->add_option("--counts", arg_counts, "meu: file counts, comma-separated");
  bench->add_option("--attrs", arg_attrs, "modes: attribute counts");
  bench->add_option("--ratios", arg_ratios, "hitratio: hit ratios");
  bench->add_option("--blocks", arg_blocks, "ior: block sizes");
  bench->add_option("--sessions", arg_sessions, "clients: session counts");
  bench->add_option("--files", bench_files, "corpus file count");
  bench->add_option("--payload", bench_payload, "modes: payload bytes per file");
  bench->add_option("--queries", bench_queries, "hitratio: queries per (attribute, ratio)");
  bench->add_option("--reps", bench_reps, "modes: repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints message and usage
    return rc == 0 ? 0 : 1;     // usage problems are user errors
  }

  if (serve->parsed()) return cmd_serve_shard(config_path, serve_dtn);

  if (put->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto bytes = read_local_file(put_src);
    if (!bytes.ok()) return fail(bytes.error());
    std::optional<int64_t> mtime;
    if (put_mtime >= 0) mtime = put_mtime;
    if (put_preserve) {
      struct stat st;
      if (::stat(put_src.c_str(), &st) == 0)
        mtime = static_cast<int64_t>(st.st_mtim.tv_sec) * 1000 + st.st_mtim.tv_nsec / 1000000;
    }
    auto record = session.value()->write(put_dst, bytes.value(), mtime);
    if (!record.ok()) return fail(record.error());
    std::cout << record.value().path << " -> dtn " << record.value().dtn_index << " ("
              << record.value().size << " bytes)\n";
    return 0;
  }

  if (get->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto bytes = session.value()->read(get_src);
    if (!bytes.ok()) return fail(bytes.error());
    std::ofstream out(get_dst, std::ios::binary);
    if (!out) return fail(Error{Err::io_failure, "cannot write " + get_dst});
    out.write(reinterpret_cast<const char*>(bytes.value().data()),
              static_cast<std::streamsize>(bytes.value().size()));
    return 0;
  }

  if (ls->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto names = session.value()->readdir(ls_path);
    if (!names.ok()) return fail(names.error());
    for (const auto& n : names.value()) std::cout << n << "\n";
    return 0;
  }

  if (stat_cmd->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto r = session.value()->stat(stat_path);
    if (!r.ok()) return fail(r.error());
    const auto& rec = r.value();
    std::cout << rec.path << "\n"
              << "  kind:     " << (rec.kind == EntryKind::directory ? "directory" : "file")
              << "\n"
              << "  size:     " << rec.size << "\n"
              << "  owner:    " << rec.owner << "\n"
              << "  mtime_ms: " << rec.mtime_ms << "\n"
              << "  shard:    " << rec.dtn_index << "\n"
              << "  data_dtn: " << rec.data_dtn << "\n"
              << "  synced:   " << (rec.synced ? "true" : "false") << "\n";
    return 0;
  }

  if (mkdir_cmd->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto s = session.value()->mkdir(mkdir_path);
    if (!s.ok()) return fail(s.error());
    return 0;
  }

  if (export_cmd->parsed()) {
    auto cfg = config_from(config_path);
    if (!cfg.ok()) return fail(cfg.error());
    std::error_code ec;
    const fs::path root = fs::weakly_canonical(export_root, ec);
    int origin = -1;
    for (uint32_t d = 0; d < cfg.value().dtn_count(); ++d) {
      if (fs::weakly_canonical(cfg.value().dtns[d].backend_root, ec) == root) origin = static_cast<int>(d);
    }
    if (origin < 0) {
      std::cerr << "scispace: " << export_root << " is not a configured backend root\n";
      return 1;
    }
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    MeuOptions opts;
    opts.start_rel = export_subtree;
    opts.index_offline_after = export_index;
    auto report = meu_export(*session.value(), static_cast<uint32_t>(origin), opts);
    if (!report.ok()) return fail(report.error());
    std::cout << "exported " << report.value().exported << " records ("
              << report.value().scan.files_unsynced.size() << " files, dirs visited "
              << report.value().scan.dirs_visited << ", skipped "
              << report.value().scan.dirs_skipped << ")\n";
    if (report.value().partial) {
      std::cerr << "scispace: some shards were unreachable; re-run to complete\n";
      return 2;
    }
    return 0;
  }

  if (tag->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    std::string name;
    auto value = parse_tag_value(tag_spec, &name);
    if (!value.ok()) return fail(value.error());
    auto path = normalize_path(tag_path);
    if (!path.ok()) return fail(path.error());
    auto placed = place(path.value(), session.value()->dtn_count());
    if (!placed.ok()) return fail(placed.error());
    FieldWriter w;
    w.add_string(1, path.value().display());
    w.add_string(2, name);
    w.add_bytes(3, value_to_bytes(value.value()));
    w.add_string(4, session.value()->collaborator());
    auto resp = session.value()->client(placed.value()).call(MsgType::tag, w.finish());
    if (!resp.ok()) return fail(resp.error());
    return 0;
  }

  if (query->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto pred = parse_query(query_str);
    if (!pred.ok()) return fail(pred.error());
    auto result = execute_query(*session.value(), pred.value());
    if (!result.ok()) return fail(result.error());
    for (const auto& p : result.value().paths) std::cout << p << "\n";
    std::cout << "# elapsed_ms=" << result.value().elapsed_ms << "\n";
    return 0;
  }

  if (flush->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto n = session.value()->flush_all();
    if (!n.ok()) return fail(n.error());
    std::cout << "drained " << n.value() << " pending files\n";
    return 0;
  }

  if (scrub->parsed()) {
    auto session = open_session(config_path);
    if (!session.ok()) return fail(session.error());
    auto n = session.value()->scrub_all();
    if (!n.ok()) return fail(n.error());
    std::cout << "removed " << n.value() << " stale records\n";
    return 0;
  }

  if (bench->parsed()) {
    BenchEnv env;
    env.seed = bench_seed;
    env.log = &std::cerr;
    env.scratch = bench_scratch.empty() ? bench_default_scratch() : fs::path(bench_scratch);
    std::error_code ec;
    fs::create_directories(env.scratch, ec);

    Result<BenchReport> report = make_error(Err::bad_request, "unknown experiment: " + bench_kind);
    if (bench_kind == "meu") {
      report = run_bench_meu(env, parse_size_list(arg_counts, {5000, 10000, 20000, 40000}));
    } else if (bench_kind == "modes") {
      report = run_bench_modes(env, parse_size_list(arg_attrs, {5, 20}),
                               bench_files ? bench_files : 2000, bench_payload, bench_reps);
    } else if (bench_kind == "hitratio") {
      report = run_bench_hitratio(env, parse_double_list(arg_ratios, {0, 0.25, 0.5, 0.75, 1.0}),
                                  bench_files ? bench_files : 4000, bench_queries);
    } else if (bench_kind == "ior") {
      report = run_bench_ior(env, parse_size_list(arg_blocks, {4096, 16384, 65536, 262144, 524288}));
    } else if (bench_kind == "clients") {
      report = run_bench_clients(env, parse_size_list(arg_sessions, {1, 2, 4, 8}),
                                 bench_files ? bench_files : 400);
    }
    if (!report.ok()) return fail(report.error());
    if (bench_out.empty()) {
      report.value().print(std::cout);
    } else {
      std::ofstream out(bench_out);
      report.value().print(out);
    }
    return 0;
  }

  return 1;
}
