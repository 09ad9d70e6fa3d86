// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "scispace/cluster.hpp"
#include "scispace/queryql.hpp"
#include "scispace/sdf.hpp"

namespace scispace {

// One machine-readable measurement:
//   experiment<TAB>param=value;...<TAB>metric<TAB>value
struct BenchRow {
  std::string experiment;
  std::map<std::string, std::string> params;
  std::string metric;
  double value = 0.0;

  bool operator==(const BenchRow&) const = default;
};

std::string format_bench_row(const BenchRow& row);
Result<BenchRow> parse_bench_row(const std::string& line);

struct BenchReport {
  std::string experiment;
  std::vector<BenchRow> rows;

  void append(BenchRow row) { rows.push_back(std::move(row)); }
  void print(std::ostream& out) const;
  // rows matching metric (and optionally a param filter), in order
  std::vector<double> metric_values(const std::string& metric,
                                    const std::map<std::string, std::string>& filter = {}) const;
};

// --- small stats -------------------------------------------------------------

double bench_median(std::vector<double> v);
double bench_percentile(std::vector<double> v, double p);  // p in [0,100]
double bench_mean(const std::vector<double>& v);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LinearFit least_squares(const std::vector<std::pair<double, double>>& xy);

// --- seeded corpus -----------------------------------------------------------

// The four search attributes the query benchmarks exercise, plus generated
// fillers ("attr05", "attr06", ...) alternating int/float/text.
SpecSet standard_specs(size_t attr_count);

struct CorpusOptions {
  size_t file_count = 2000;
  size_t payload_bytes = 65536;
  size_t attr_count = 20;  // attributes per file == specs registered
  uint64_t seed = 42;
  std::string ns = "public";
  std::string dir = "corpus";  // subdirectory under the namespace
};

struct CorpusFile {
  std::string rel;        // backend-relative: "<ns>/<dir>/dNN/fNNNNN.sdf"
  std::string display;    // "/<rel>"
  SdfDocument doc;
  std::vector<uint8_t> encoded;
  int64_t mtime_ms = 0;   // deterministic per path
};

// Deterministic under (options, seed); the same corpus feeds every mode so
// the resulting index states are comparable byte-for-byte.
std::vector<CorpusFile> generate_corpus(const CorpusOptions& opts);

// --- experiments -------------------------------------------------------------

struct BenchEnv {
  std::filesystem::path scratch;  // working area, one subdir per run
  uint64_t seed = 42;
  std::ostream* log = nullptr;    // human-readable progress, optional
};

// Prefers a tmpfs scratch (/dev/shm) so timed experiments measure the
// artifact rather than disk writeback; falls back to TMPDIR.
std::filesystem::path bench_default_scratch();

Result<BenchReport> run_bench_meu(const BenchEnv& env, const std::vector<size_t>& file_counts,
                                  size_t repetitions = 3);

Result<BenchReport> run_bench_modes(const BenchEnv& env, const std::vector<size_t>& attr_counts,
                                    size_t file_count = 2000, size_t payload_bytes = 65536,
                                    size_t repetitions = 1);

Result<BenchReport> run_bench_hitratio(const BenchEnv& env, const std::vector<double>& ratios,
                                       size_t file_count = 4000, size_t queries_per_cell = 250);

Result<BenchReport> run_bench_ior(const BenchEnv& env, const std::vector<size_t>& block_sizes,
                                  size_t total_bytes = 16 * 1024 * 1024,
                                  size_t repetitions = 3);

Result<BenchReport> run_bench_clients(const BenchEnv& env,
                                      const std::vector<size_t>& session_counts,
                                      size_t files_per_session = 400, size_t file_bytes = 4096,
                                      size_t repetitions = 3);

}  // namespace scispace
