// SPDX-License-Identifier: Apache-2.0

#include "scispace/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unistd.h>

#include <cstdarg>
#include <cstdio>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "scispace/meu.hpp"

namespace fs = std::filesystem;

namespace scispace {

namespace {

int64_t now_us() {
  using namespace std::chrono;
  return duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count();
}

void logf(const BenchEnv& env, const char* fmt, ...) {
  if (!env.log) return;
  char buf[512];
  va_list ap;
  va_start(ap, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  va_end(ap);
  *env.log << buf << "\n";
}

std::string fmt_double(double v) {
  // shortest form that still re-parses to the same double
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

BenchRow row(std::string experiment, std::map<std::string, std::string> params,
             std::string metric, double value) {
  return BenchRow{std::move(experiment), std::move(params), std::move(metric), value};
}

Result<fs::path> fresh_dir(const fs::path& scratch, const std::string& name) {
  static int counter = 0;
  const fs::path dir = scratch / (name + "-" + std::to_string(counter++));
  std::error_code ec;
  fs::remove_all(dir, ec);
  fs::create_directories(dir, ec);
  if (ec) return make_error(Err::io_failure, dir.string() + ": " + ec.message());
  return dir;
}

}  // namespace

// --- rows ---------------------------------------------------------------------

std::string format_bench_row(const BenchRow& r) {
  std::string params;
  for (const auto& [k, v] : r.params) {
    if (!params.empty()) params += ";";
    params += k + "=" + v;
  }
  return r.experiment + "\t" + params + "\t" + r.metric + "\t" + fmt_double(r.value);
}

Result<BenchRow> parse_bench_row(const std::string& line) {
  BenchRow r;
  std::vector<std::string> cols;
  size_t start = 0;
  while (true) {
    const size_t tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  if (cols.size() != 4) return make_error(Err::bad_request, "expected 4 tab-separated columns");
  r.experiment = cols[0];
  size_t i = 0;
  while (i < cols[1].size()) {
    const size_t semi = std::min(cols[1].find(';', i), cols[1].size());
    const std::string pair = cols[1].substr(i, semi - i);
    const size_t eq = pair.find('=');
    if (eq == std::string::npos) return make_error(Err::bad_request, "bad param: " + pair);
    r.params[pair.substr(0, eq)] = pair.substr(eq + 1);
    i = semi + 1;
  }
  r.metric = cols[2];
  try {
    r.value = std::stod(cols[3]);
  } catch (const std::exception&) {
    return make_error(Err::bad_request, "bad value: " + cols[3]);
  }
  return r;
}

void BenchReport::print(std::ostream& out) const {
  for (const auto& r : rows) out << format_bench_row(r) << "\n";
}

std::vector<double> BenchReport::metric_values(
    const std::string& metric, const std::map<std::string, std::string>& filter) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.metric != metric) continue;
    bool match = true;
    for (const auto& [k, v] : filter) {
      auto it = r.params.find(k);
      if (it == r.params.end() || it->second != v) {
        match = false;
        break;
      }
    }
    if (match) out.push_back(r.value);
  }
  return out;
}

// --- stats --------------------------------------------------------------------

double bench_median(std::vector<double> v) { return bench_percentile(std::move(v), 50.0); }

double bench_percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = (p / 100.0) * static_cast<double>(v.size() - 1);
  const size_t lo = static_cast<size_t>(idx);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

double bench_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

LinearFit least_squares(const std::vector<std::pair<double, double>>& xy) {
  LinearFit fit;
  const double n = static_cast<double>(xy.size());
  if (xy.size() < 2) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : xy) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean_y = sy / n;
  for (const auto& [x, y] : xy) {
    const double pred = fit.slope * x + fit.intercept;
    ss_res += (y - pred) * (y - pred);
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  fit.r2 = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

// --- corpus -------------------------------------------------------------------

SpecSet standard_specs(size_t attr_count) {
  static const AttributeSpec base[] = {
      {"Location", ValueTag::text_val},
      {"Instrument", ValueTag::text_val},
      {"Date", ValueTag::text_val},
      {"DayNight", ValueTag::int_val},
  };
  SpecSet specs;
  for (size_t i = 0; i < attr_count; ++i) {
    if (i < 4) {
      specs.push_back(base[i]);
      continue;
    }
    char name[32];
    std::snprintf(name, sizeof(name), "attr%02zu", i + 1);
    const ValueTag tag = i % 3 == 0   ? ValueTag::text_val
                         : i % 3 == 1 ? ValueTag::int_val
                                      : ValueTag::float_val;
    specs.push_back(AttributeSpec{name, tag});
  }
  return specs;
}

std::vector<CorpusFile> generate_corpus(const CorpusOptions& opts) {
  static const char* kLocations[] = {"Pacific", "Atlantic", "Indian", "Arctic", "Southern"};
  static const char* kInstruments[] = {"MODIS-A", "MODIS-T", "VIIRS", "SeaWiFS"};
  const SpecSet specs = standard_specs(opts.attr_count);

  std::vector<CorpusFile> out;
  out.reserve(opts.file_count);
  for (size_t i = 0; i < opts.file_count; ++i) {
    std::mt19937_64 rng(opts.seed * 1000003ull + i);
    CorpusFile f;
    char rel[256];
    std::snprintf(rel, sizeof(rel), "%s/%s/d%03zu/f%06zu.sdf", opts.ns.c_str(),
                  opts.dir.c_str(), i / 256, i);
    f.rel = rel;
    f.display = "/" + f.rel;

    for (const auto& spec : specs) {
      AttributeValue v;
      if (spec.name == "Location") {
        v = AttributeValue::of_text(kLocations[rng() % 5]);
      } else if (spec.name == "Instrument") {
        v = AttributeValue::of_text(kInstruments[rng() % 4]);
      } else if (spec.name == "Date") {
        char date[16];
        std::snprintf(date, sizeof(date), "2016-%02llu-%02llu",
                      static_cast<unsigned long long>(rng() % 12 + 1),
                      static_cast<unsigned long long>(rng() % 28 + 1));
        v = AttributeValue::of_text(date);
      } else if (spec.name == "DayNight") {
        v = AttributeValue::of_int(static_cast<int64_t>(rng() % 2));
      } else if (spec.type == ValueTag::int_val) {
        v = AttributeValue::of_int(static_cast<int64_t>(rng() % 100000));
      } else if (spec.type == ValueTag::float_val) {
        v = AttributeValue::of_float(static_cast<double>(rng() % 1000000) / 997.0);
      } else {
        v = AttributeValue::of_text("v" + std::to_string(rng() % 100000));
      }
      f.doc.attributes.emplace_back(spec.name, v);
    }
    f.doc.payload.resize(opts.payload_bytes);
    for (size_t b = 0; b < opts.payload_bytes; ++b)
      f.doc.payload[b] = static_cast<uint8_t>(rng());
    f.encoded = sdf_encode(f.doc).take();
    f.mtime_ms = 1700000000000ll + static_cast<int64_t>(fnv1a64(f.display) % 10000000ull);
    out.push_back(std::move(f));
  }
  return out;
}

// --- experiments --------------------------------------------------------------

std::filesystem::path bench_default_scratch() {
  std::error_code ec;
  const fs::path shm = "/dev/shm";
  if (fs::is_directory(shm, ec)) {
    const fs::path probe = shm / (".scispace-probe-" + std::to_string(::getpid()));
    if (fs::create_directories(probe, ec); !ec) {
      fs::remove_all(probe, ec);
      return shm / "scispace-bench";
    }
  }
  const char* tmp = std::getenv("TMPDIR");
  return fs::path(tmp ? tmp : "/tmp") / "scispace-bench";
}

Result<BenchReport> run_bench_meu(const BenchEnv& env, const std::vector<size_t>& file_counts,
                                  size_t repetitions) {
  BenchReport report;
  report.experiment = "meu";
  std::vector<std::pair<double, double>> points;

  // repetition blocks interleave across counts so a slow system phase
  // spreads over the sweep instead of poisoning one count's samples
  std::map<size_t, std::vector<double>> samples;
  for (size_t rep = 0; rep < repetitions; ++rep) {
    for (const size_t count : file_counts) {
      auto dir = fresh_dir(env.scratch, "meu");
      if (!dir.ok()) return dir.error();
      {
        LocalCluster::Options opts;
        opts.dtn_count = 1;
        opts.mode = IndexMode::lw_offline;
        auto cluster = LocalCluster::start(dir.value(), opts);
        if (!cluster.ok()) return cluster.error();
        auto session = cluster.value()->open_session();
        if (!session.ok()) return session.error();

        const fs::path& root = cluster.value()->backend_root(0);
        SyncFlagStore flags(root, FlagMode::marker_tree);
        const std::vector<uint8_t> empty;
        for (size_t i = 0; i < count; ++i) {
          char rel[128];
          std::snprintf(rel, sizeof(rel), "public/meu/d%04zu/f%06zu", i / 256, i);
          auto put = lw_write(root, flags, rel, empty);
          if (!put.ok()) return put.error();
        }
        // the export should not pay the corpus creation's writeback debt
        ::sync();

        const int64_t t0 = now_us();
        auto exp = meu_export(*session.value(), 0);
        if (!exp.ok()) return exp.error();
        const double elapsed_ms = static_cast<double>(now_us() - t0) / 1000.0;
        samples[count].push_back(elapsed_ms);

        std::map<std::string, std::string> params{{"files", std::to_string(count)},
                                                  {"rep", std::to_string(rep)},
                                                  {"seed", std::to_string(env.seed)}};
        report.append(row("meu", params, "export_ms", elapsed_ms));
        report.append(row("meu", params, "exported", static_cast<double>(exp.value().exported)));
        report.append(row("meu", params, "dirs_visited",
                          static_cast<double>(exp.value().scan.dirs_visited)));
        logf(env, "meu: %zu files rep %zu exported in %.1f ms", count, rep, elapsed_ms);

        auto again = meu_export(*session.value(), 0);
        if (!again.ok()) return again.error();
        report.append(row("meu", params, "reexported", static_cast<double>(again.value().exported)));
      }
      std::error_code ec;
      fs::remove_all(dir.value(), ec);  // keep the scratch inode budget flat
    }
  }
  for (const size_t count : file_counts) {
    std::map<std::string, std::string> params{{"files", std::to_string(count)},
                                              {"seed", std::to_string(env.seed)}};
    report.append(row("meu", params, "export_ms_median", bench_median(samples[count])));
    // the fit uses the per-count minimum: scheduler and filesystem
    // interference only ever add time, so the minimum tracks the cost the
    // artifact itself incurs
    const double best = *std::min_element(samples[count].begin(), samples[count].end());
    report.append(row("meu", params, "export_ms_min", best));
    points.emplace_back(static_cast<double>(count), best);
  }

  if (points.size() >= 2) {
    const LinearFit fit = least_squares(points);
    std::map<std::string, std::string> params{{"seed", std::to_string(env.seed)}};
    report.append(row("meu", params, "fit_r2", fit.r2));
    report.append(row("meu", params, "fit_slope_ms_per_file", fit.slope));
    logf(env, "meu: linear fit r2=%.5f slope=%.5f ms/file", fit.r2, fit.slope);
  }
  return report;
}

namespace {

struct ModeRun {
  std::vector<double> write_ack_ms;
  double ingest_wall_ms = 0;      // to last write ack
  double complete_wall_ms = 0;    // to index fully populated
};

Result<ModeRun> ingest_corpus(LocalCluster& cluster, const std::vector<CorpusFile>& corpus,
                              IndexMode mode) {
  ModeRun run;
  auto session = cluster.open_session();
  if (!session.ok()) return session.error();

  const int64_t t0 = now_us();
  if (mode == IndexMode::lw_offline) {
    // ingest+index only: the metadata export protocol is a separate
    // experiment (the meu bench), not part of the indexing-mode breakdown
    const fs::path& root = cluster.backend_root(0);
    SyncFlagStore flags(root, FlagMode::marker_tree);
    for (const auto& f : corpus) {
      const int64_t w0 = now_us();
      auto put = lw_write(root, flags, f.rel, f.encoded, f.mtime_ms);
      if (!put.ok()) return put.error();
      run.write_ack_ms.push_back(static_cast<double>(now_us() - w0) / 1000.0);
    }
    run.ingest_wall_ms = static_cast<double>(now_us() - t0) / 1000.0;
    FieldWriter w;
    w.add_u8(1, static_cast<uint8_t>(IndexControl::offline));
    w.add_string(3, "");
    auto resp = session.value()->client(0).call(MsgType::enqueue_index, w.finish());
    if (!resp.ok()) return resp.error();
  } else {
    for (const auto& f : corpus) {
      const int64_t w0 = now_us();
      auto put = session.value()->write(f.display, f.encoded, f.mtime_ms);
      if (!put.ok()) return put.error();
      run.write_ack_ms.push_back(static_cast<double>(now_us() - w0) / 1000.0);
    }
    run.ingest_wall_ms = static_cast<double>(now_us() - t0) / 1000.0;
    if (mode == IndexMode::inline_async) {
      auto flushed = session.value()->flush_all();
      if (!flushed.ok()) return flushed.error();
    }
  }
  run.complete_wall_ms = static_cast<double>(now_us() - t0) / 1000.0;
  return run;
}

std::vector<AttributeTriple> corpus_oracle_triples(const std::vector<CorpusFile>& corpus,
                                                   const SpecSet& specs) {
  std::vector<AttributeTriple> expected;
  for (const auto& f : corpus) {
    auto triples = extract_attributes(
        f.display, f.encoded, specs,
        StatContext{f.encoded.size(), f.mtime_ms});
    expected.insert(expected.end(), triples.begin(), triples.end());
  }
  std::sort(expected.begin(), expected.end(),
            [](const AttributeTriple& a, const AttributeTriple& b) {
              if (a.attribute != b.attribute) return a.attribute < b.attribute;
              if (a.file != b.file) return a.file < b.file;
              return a.value < b.value;
            });
  return expected;
}

}  // namespace

Result<BenchReport> run_bench_modes(const BenchEnv& env, const std::vector<size_t>& attr_counts,
                                    size_t file_count, size_t payload_bytes,
                                    size_t repetitions) {
  BenchReport report;
  report.experiment = "modes";
  static const IndexMode kModes[] = {IndexMode::inline_sync, IndexMode::inline_async,
                                     IndexMode::lw_offline};

  for (const size_t attrs : attr_counts) {
    CorpusOptions copts;
    copts.file_count = file_count;
    copts.payload_bytes = payload_bytes;
    copts.attr_count = attrs;
    copts.seed = env.seed;
    const auto corpus = generate_corpus(copts);
    const SpecSet specs = standard_specs(attrs);
    const auto expected = corpus_oracle_triples(corpus, specs);

    for (size_t rep = 0; rep < repetitions; ++rep) {
      std::vector<std::vector<AttributeTriple>> mode_triples;
      for (const IndexMode mode : kModes) {
        auto dir = fresh_dir(env.scratch, "modes");
        if (!dir.ok()) return dir.error();
        LocalCluster::Options opts;
        opts.dtn_count = 2;
        opts.mode = mode;
        opts.specs = specs;
        auto cluster = LocalCluster::start(dir.value(), opts);
        if (!cluster.ok()) return cluster.error();
        auto cleanup = [&] {
          cluster.value().reset();
          std::error_code ec;
          fs::remove_all(dir.value(), ec);
        };

        auto run = ingest_corpus(*cluster.value(), corpus, mode);
        if (!run.ok()) return run.error();

        std::map<std::string, std::string> params{
            {"attrs", std::to_string(attrs)},
            {"mode", index_mode_name(mode)},
            {"files", std::to_string(file_count)},
            {"rep", std::to_string(rep)},
            {"seed", std::to_string(env.seed)}};
        report.append(row("modes", params, "write_ack_ms_median",
                          bench_median(run.value().write_ack_ms)));
        report.append(row("modes", params, "write_ack_ms_p95",
                          bench_percentile(run.value().write_ack_ms, 95.0)));
        report.append(row("modes", params, "ingest_wall_ms", run.value().ingest_wall_ms));
        report.append(row("modes", params, "complete_wall_ms", run.value().complete_wall_ms));
        logf(env, "modes: attrs=%zu %s rep=%zu write-ack median %.3f ms, end-to-end %.1f ms",
             attrs, index_mode_name(mode), rep, bench_median(run.value().write_ack_ms),
             run.value().complete_wall_ms);

        auto triples = cluster.value()->all_triples();
        report.append(row("modes", params, "oracle_equal",
                          triples == expected ? 1.0 : 0.0));
        mode_triples.push_back(std::move(triples));
        cleanup();
      }
      const bool all_equal = mode_triples.size() == 3 && mode_triples[0] == mode_triples[1] &&
                             mode_triples[1] == mode_triples[2];
      report.append(row("modes",
                        {{"attrs", std::to_string(attrs)},
                         {"rep", std::to_string(rep)},
                         {"seed", std::to_string(env.seed)}},
                        "modes_equal", all_equal ? 1.0 : 0.0));
    }
  }
  return report;
}

Result<BenchReport> run_bench_hitratio(const BenchEnv& env, const std::vector<double>& ratios,
                                       size_t file_count, size_t queries_per_cell) {
  BenchReport report;
  report.experiment = "hitratio";
  struct Shape {
    const char* attr;
    const char* query;
  };
  static const Shape kShapes[] = {
      {"Location", "Location = \"Pacific\""},
      {"Instrument", "Instrument = \"MODIS-A\""},
      {"Date", "Date like \"2016-07%\""},
      {"DayNight", "DayNight = 1"},
  };

  // Build every ratio's collaboration up front, then sample all cells in
  // interleaved passes: medians compared across ratios then come from the
  // same system-state windows, so slow phases cannot invert the trend.
  struct RatioSetup {
    double ratio;
    std::filesystem::path dir;
    std::unique_ptr<LocalCluster> cluster;
    std::unique_ptr<WorkspaceSession> session;
  };
  std::vector<RatioSetup> setups;
  for (const double ratio : ratios) {
    const size_t hits = static_cast<size_t>(std::ceil(ratio * static_cast<double>(file_count)));
    auto dir = fresh_dir(env.scratch, "hitratio");
    if (!dir.ok()) return dir.error();
    LocalCluster::Options opts;
    opts.dtn_count = 2;
    opts.mode = IndexMode::lw_offline;
    opts.specs = standard_specs(4);
    auto cluster = LocalCluster::start(dir.value(), opts);
    if (!cluster.ok()) return cluster.error();
    auto session = cluster.value()->open_session();
    if (!session.ok()) return session.error();

    // first `hits` files carry every target value, the rest distinct fillers
    const fs::path& root = cluster.value()->backend_root(0);
    SyncFlagStore flags(root, FlagMode::marker_tree);
    for (size_t i = 0; i < file_count; ++i) {
      SdfDocument doc;
      const bool hit = i < hits;
      doc.attributes.emplace_back("Location",
                                  AttributeValue::of_text(hit ? "Pacific" : "Loc-" + std::to_string(i)));
      doc.attributes.emplace_back("Instrument",
                                  AttributeValue::of_text(hit ? "MODIS-A" : "Inst-" + std::to_string(i)));
      doc.attributes.emplace_back("Date", AttributeValue::of_text(hit ? "2016-07-15" : "2015-01-01"));
      doc.attributes.emplace_back("DayNight", AttributeValue::of_int(hit ? 1 : 0));
      char rel[128];
      std::snprintf(rel, sizeof(rel), "public/hr/d%03zu/f%06zu.sdf", i / 256, i);
      auto put = lw_write(root, flags, rel, sdf_encode(doc).take());
      if (!put.ok()) return put.error();
    }
    auto exp = meu_export(*session.value(), 0);
    if (!exp.ok()) return exp.error();
    FieldWriter w;
    w.add_u8(1, static_cast<uint8_t>(IndexControl::offline));
    w.add_string(3, "");
    auto resp = session.value()->client(0).call(MsgType::enqueue_index, w.finish());
    if (!resp.ok()) return resp.error();
    setups.push_back(RatioSetup{ratio, dir.value(), cluster.take(), session.take()});
  }

  std::vector<Predicate> preds;
  for (const auto& shape : kShapes) {
    auto pred = parse_query(shape.query);
    if (!pred.ok()) return pred.error();
    preds.push_back(pred.take());
  }

  // warmup, discarded: connections, caches, allocator
  for (auto& setup : setups) {
    for (const auto& pred : preds) {
      for (size_t q = 0; q < 20; ++q) {
        auto res = execute_query(*setup.session, pred);
        if (!res.ok()) return res.error();
      }
    }
  }

  constexpr size_t kPasses = 5;
  const size_t per_pass = std::max<size_t>(1, queries_per_cell / kPasses);
  std::map<std::pair<size_t, size_t>, std::vector<double>> latencies;  // (ratio, shape)
  std::map<std::pair<size_t, size_t>, size_t> result_sizes;
  for (size_t pass = 0; pass < kPasses; ++pass) {
    for (size_t r = 0; r < setups.size(); ++r) {
      for (size_t sh = 0; sh < preds.size(); ++sh) {
        for (size_t q = 0; q < per_pass; ++q) {
          const int64_t t0 = now_us();
          auto res = execute_query(*setups[r].session, preds[sh]);
          if (!res.ok()) return res.error();
          latencies[{r, sh}].push_back(static_cast<double>(now_us() - t0) / 1000.0);
          result_sizes[{r, sh}] = res.value().paths.size();
        }
      }
    }
  }

  for (size_t r = 0; r < setups.size(); ++r) {
    for (size_t sh = 0; sh < preds.size(); ++sh) {
      const auto& samples = latencies[{r, sh}];
      std::map<std::string, std::string> params{
          {"attr", kShapes[sh].attr},
          {"ratio", fmt_double(setups[r].ratio)},
          {"files", std::to_string(file_count)},
          {"seed", std::to_string(env.seed)}};
      report.append(row("hitratio", params, "median_ms", bench_median(samples)));
      report.append(row("hitratio", params, "p95_ms", bench_percentile(samples, 95.0)));
      report.append(row("hitratio", params, "hits",
                        static_cast<double>(result_sizes[{r, sh}])));
      logf(env, "hitratio: %s ratio=%.2f hits=%zu median %.3f ms", kShapes[sh].attr,
           setups[r].ratio, result_sizes[{r, sh}], bench_median(samples));
    }
  }

  for (auto& setup : setups) {
    setup.session.reset();
    setup.cluster.reset();
    std::error_code ec;
    fs::remove_all(setup.dir, ec);
  }
  return report;
}

Result<BenchReport> run_bench_ior(const BenchEnv& env, const std::vector<size_t>& block_sizes,
                                  size_t total_bytes, size_t repetitions) {
  BenchReport report;
  report.experiment = "ior";

  for (const size_t block : block_sizes) {
    const size_t count = std::max<size_t>(1, total_bytes / block);
    std::vector<double> ws_write, ws_read, lw_write_v, lw_read;
    for (size_t rep = 0; rep < repetitions; ++rep) {
      auto dir = fresh_dir(env.scratch, "ior");
      if (!dir.ok()) return dir.error();
      {
        LocalCluster::Options opts;
        opts.dtn_count = 1;
        opts.mode = IndexMode::lw_offline;
        auto cluster = LocalCluster::start(dir.value(), opts);
        if (!cluster.ok()) return cluster.error();
        auto session = cluster.value()->open_session();
        if (!session.ok()) return session.error();

        std::mt19937_64 rng(env.seed);
        std::vector<uint8_t> block_bytes(block);
        for (auto& b : block_bytes) b = static_cast<uint8_t>(rng());

        auto mbps = [&](int64_t us) {
          return static_cast<double>(count * block) / 1048576.0 /
                 (static_cast<double>(us) / 1e6);
        };

        // workspace path
        int64_t t0 = now_us();
        for (size_t i = 0; i < count; ++i) {
          auto putr = session.value()->write("/public/ws/f" + std::to_string(i), block_bytes);
          if (!putr.ok()) return putr.error();
        }
        ws_write.push_back(mbps(now_us() - t0));
        t0 = now_us();
        for (size_t i = 0; i < count; ++i) {
          auto rd = session.value()->read("/public/ws/f" + std::to_string(i));
          if (!rd.ok()) return rd.error();
        }
        ws_read.push_back(mbps(now_us() - t0));

        // local-write path
        const fs::path& root = cluster.value()->backend_root(0);
        SyncFlagStore flags(root, FlagMode::marker_tree);
        t0 = now_us();
        for (size_t i = 0; i < count; ++i) {
          auto putr = lw_write(root, flags, "public/lw/f" + std::to_string(i), block_bytes);
          if (!putr.ok()) return putr.error();
        }
        lw_write_v.push_back(mbps(now_us() - t0));
        t0 = now_us();
        for (size_t i = 0; i < count; ++i) {
          auto rd = bk_get(root, "public/lw/f" + std::to_string(i));
          if (!rd.ok()) return rd.error();
        }
        lw_read.push_back(mbps(now_us() - t0));
      }
      std::error_code ec;
      fs::remove_all(dir.value(), ec);
    }

    std::map<std::string, std::string> base{{"block", std::to_string(block)},
                                            {"seed", std::to_string(env.seed)}};
    auto with_path = [&](const char* path) {
      auto p = base;
      p["path"] = path;
      return p;
    };
    report.append(row("ior", with_path("workspace"), "write_MBps", bench_median(ws_write)));
    report.append(row("ior", with_path("workspace"), "read_MBps", bench_median(ws_read)));
    report.append(row("ior", with_path("local"), "write_MBps", bench_median(lw_write_v)));
    report.append(row("ior", with_path("local"), "read_MBps", bench_median(lw_read)));
    logf(env, "ior: block=%zu ws-write %.1f MB/s lw-write %.1f MB/s (medians of %zu)", block,
         bench_median(ws_write), bench_median(lw_write_v), repetitions);
  }
  return report;
}

Result<BenchReport> run_bench_clients(const BenchEnv& env,
                                      const std::vector<size_t>& session_counts,
                                      size_t files_per_session, size_t file_bytes,
                                      size_t repetitions) {
  BenchReport report;
  report.experiment = "clients";

  for (const size_t sessions : session_counts) {
    std::vector<double> rep_throughput;
    size_t records = 0;
    bool routing_ok = true;
    for (size_t rep = 0; rep < repetitions; ++rep) {
      auto dir = fresh_dir(env.scratch, "clients");
      if (!dir.ok()) return dir.error();
      {
        LocalCluster::Options opts;
        opts.dtn_count = 2;
        opts.mode = IndexMode::lw_offline;
        auto cluster = LocalCluster::start(dir.value(), opts);
        if (!cluster.ok()) return cluster.error();

        std::vector<uint8_t> body(file_bytes, 0x5a);
        std::vector<std::thread> threads;
        std::vector<Status> outcomes(sessions, ok_status());
        const int64_t t0 = now_us();
        for (size_t s = 0; s < sessions; ++s) {
          threads.emplace_back([&, s] {
            auto session = cluster.value()->open_session("user" + std::to_string(s));
            if (!session.ok()) {
              outcomes[s] = session.error();
              return;
            }
            for (size_t i = 0; i < files_per_session; ++i) {
              char path[128];
              std::snprintf(path, sizeof(path), "/public/c%zu/f%06zu", s, i);
              auto putr = session.value()->write(path, body);
              if (!putr.ok()) {
                outcomes[s] = putr.error();
                return;
              }
            }
          });
        }
        for (auto& t : threads) t.join();
        const int64_t elapsed = now_us() - t0;
        for (const auto& s : outcomes)
          if (!s.ok()) return s.error();

        // routing audit: every record sits on its placement shard
        records = 0;
        for (uint32_t d = 0; d < cluster.value()->dtn_count(); ++d) {
          for (const auto& r : cluster.value()->service(d).dump_records()) {
            ++records;
            auto placed = place_display(r.path, cluster.value()->dtn_count());
            if (!placed.ok() || placed.value() != d || r.dtn_index != d) routing_ok = false;
          }
        }
        rep_throughput.push_back(static_cast<double>(sessions * files_per_session) /
                                 (static_cast<double>(elapsed) / 1e6));
      }
      std::error_code ec;
      fs::remove_all(dir.value(), ec);
    }

    std::map<std::string, std::string> params{{"sessions", std::to_string(sessions)},
                                              {"seed", std::to_string(env.seed)}};
    report.append(row("clients", params, "files_per_s", bench_median(rep_throughput)));
    report.append(row("clients", params, "records", static_cast<double>(records)));
    report.append(row("clients", params, "routing_ok", routing_ok ? 1.0 : 0.0));
    logf(env, "clients: %zu sessions, %.0f files/s median, routing %s", sessions,
         bench_median(rep_throughput), routing_ok ? "ok" : "BROKEN");
  }
  return report;
}

}  // namespace scispace
