#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sort3lab/kernels.hpp"

// In-repo microbenchmark harness: a deterministic pattern-indexed workload,
// per-kernel timing with a monotonic clock, measurement of the bare scanning
// overhead (copying the workload without sorting), and overhead-adjusted
// ratio reporting.  Timed loops run strictly single-threaded.

namespace sort3lab::bench {

using kernels::Triple;

struct Workload {
  std::uint64_t seed = 0;
  std::uint32_t n = 0;
  std::vector<std::uint8_t> indexes;  // pattern index per case, each in [0,12]
  std::vector<Triple> triples;        // materialized up front, outside the timed loop
};

inline constexpr std::uint32_t kDefaultWorkloadSize = 32768;
inline constexpr int kDefaultRepetitions = 9;

// Draws n pattern indexes uniformly over [0,12] with the repo generator and
// materializes each pattern representative through the value map
// {0 -> 10, 1 -> 20, 2 -> 30}.  Pure function of (seed, n).
Workload build_workload(std::uint64_t seed, std::uint32_t n);

struct BenchSample {
  std::string name;           // kernel name or "scanning"
  int repetitions = 0;
  std::vector<std::uint64_t> total_ns;  // one total per repetition
  std::uint64_t ns = 0;       // chosen statistic: minimum over repetitions
  std::uint64_t checksum = 0; // position-weighted sum of the scratch buffers
};

// Times `repetitions` passes over the workload.  Each pass copies every triple
// into a scratch buffer and, for kernels, sorts it in place; for "scanning" it
// only copies.  The scratch contents feed a published checksum so the work
// cannot be optimized away.  Throws std::invalid_argument for unknown kernels.
BenchSample measure(std::string_view kernel_or_scanning, const Workload& workload,
                    int repetitions);

// (t_a - t_scan) / (t_b - t_scan).  Throws std::domain_error when the
// denominator is not positive (overhead swallowed the measurement).
double adjusted_ratio(std::uint64_t t_a, std::uint64_t t_b, std::uint64_t t_scan);

struct BenchReport {
  struct Entry {
    std::string kernel;
    std::uint64_t total_ns = 0;
    double ratio = 0.0;  // adjusted_ratio(total_ns, baseline total, scanning_ns)

    bool operator==(const Entry&) const = default;
  };

  std::string platform;  // host CPU + toolchain
  std::uint64_t scanning_ns = 0;
  std::string baseline;
  std::vector<Entry> entries;
  std::uint64_t seed = 0;
  std::uint32_t n = 0;
  int repetitions = 0;
  std::uint64_t checksum = 0;

  bool operator==(const BenchReport&) const = default;
};

// Measures scanning plus each kernel on one workload and assembles the report.
BenchReport run_benchmark(std::span<const std::string> kernel_names, std::uint64_t seed,
                          std::uint32_t n, int repetitions, const std::string& baseline);

enum class Format : std::uint8_t { text, csv, json };

// text: one table row per platform with Scanning, per-kernel and Ratio
// columns, thousands separators, ratios to 2 decimals.
// csv: platform,kernel,scanning_ns,total_ns,adjusted_ratio_vs_<baseline>.
// json: stable keys; parse_report_json round-trips to an equal BenchReport.
std::string render_report(const BenchReport& report, Format format);
BenchReport parse_report_json(std::string_view json_text);

std::string platform_description();

// Published reference timings (total ns for the slower and faster kernels and
// the scanning overhead) whose adjusted ratios the formula must reproduce.
struct ReferenceRun {
  std::string_view toolchain;
  std::uint64_t slower_ns;
  std::uint64_t faster_ns;
  std::uint64_t scanning_ns;
  double expected_ratio;  // at 2-decimal rounding
};
std::span<const ReferenceRun> reference_runs();

// Repetition count from SORT3LAB_BENCH_REPS, else kDefaultRepetitions.
int repetitions_from_env();

}  // namespace sort3lab::bench
