#include "sort3lab/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sort3lab/rng.hpp"
#include "sort3lab/verifier.hpp"

namespace sort3lab::bench {

using nlohmann::json;

Workload build_workload(std::uint64_t seed, std::uint32_t n) {
  if (n < 1) throw std::invalid_argument("workload size must be at least 1");
  Workload w;
  w.seed = seed;
  w.n = n;
  w.indexes.reserve(n);
  w.triples.reserve(n);
  SplitMix64 rng(seed);
  const auto& pats = verify::patterns();
  for (std::uint32_t i = 0; i < n; ++i) {
    auto idx = static_cast<std::uint8_t>(rng.bounded(13));
    w.indexes.push_back(idx);
    Triple t = pats[idx].representative;
    for (std::int32_t& v : t) v = (v + 1) * 10;  // {0,1,2} -> {10,20,30}
    w.triples.push_back(t);
  }
  return w;
}

namespace {

template <class T>
inline void do_not_optimize(T& value) {
  asm volatile("" : "+m,r"(value) : : "memory");
}

std::uint64_t case_checksum(const Triple& t) {
  // Position-weighted so an unsorted permutation cannot collide with the
  // sorted one.
  return static_cast<std::uint64_t>(static_cast<std::uint32_t>(t[0])) * 1 +
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(t[1])) * 2 +
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(t[2])) * 3;
}

}  // namespace

BenchSample measure(std::string_view kernel_or_scanning, const Workload& workload,
                    int repetitions) {
  if (repetitions < 3) throw std::invalid_argument("repetitions must be at least 3");

  const bool scanning = kernel_or_scanning == "scanning";
  const kernels::Kernel* kernel = nullptr;
  if (!scanning) {
    kernel = kernels::find_kernel(kernel_or_scanning);
    if (!kernel) throw std::invalid_argument("unknown kernel: " + std::string(kernel_or_scanning));
  }

  BenchSample sample;
  sample.name = std::string(kernel_or_scanning);
  sample.repetitions = repetitions;
  sample.total_ns.reserve(static_cast<std::size_t>(repetitions));

  using clock = std::chrono::steady_clock;
  for (int rep = 0; rep < repetitions; ++rep) {
    std::uint64_t checksum = 0;
    const auto t0 = clock::now();
    if (scanning) {
      for (const Triple& t : workload.triples) {
        Triple buf = t;
        do_not_optimize(buf);
        checksum += case_checksum(buf);
      }
    } else {
      const auto fn = kernel->fn;
      const auto ordering = kernel->default_ordering;
      for (const Triple& t : workload.triples) {
        Triple buf = t;
        do_not_optimize(buf);
        fn(buf.data(), ordering);
        checksum += case_checksum(buf);
      }
    }
    const auto t1 = clock::now();
    do_not_optimize(checksum);
    sample.checksum = checksum;
    sample.total_ns.push_back(static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
  }
  sample.ns = *std::min_element(sample.total_ns.begin(), sample.total_ns.end());
  return sample;
}

double adjusted_ratio(std::uint64_t t_a, std::uint64_t t_b, std::uint64_t t_scan) {
  if (t_b <= t_scan)
    throw std::domain_error("adjusted ratio denominator is not positive: "
                            "scanning overhead exceeds the measurement");
  return (static_cast<double>(t_a) - static_cast<double>(t_scan)) /
         (static_cast<double>(t_b) - static_cast<double>(t_scan));
}

BenchReport run_benchmark(std::span<const std::string> kernel_names, std::uint64_t seed,
                          std::uint32_t n, int repetitions, const std::string& baseline) {
  if (kernel_names.empty()) throw std::invalid_argument("no kernels selected");
  if (std::find(kernel_names.begin(), kernel_names.end(), baseline) == kernel_names.end())
    throw std::invalid_argument("baseline kernel is not in the kernel list: " + baseline);

  const Workload workload = build_workload(seed, n);

  BenchReport report;
  report.platform = platform_description();
  report.baseline = baseline;
  report.seed = seed;
  report.n = n;
  report.repetitions = repetitions;

  // Strictly sequential: never interleave measurements of different kernels.
  BenchSample scanning = measure("scanning", workload, repetitions);
  report.scanning_ns = scanning.ns;

  std::vector<BenchSample> samples;
  for (const std::string& name : kernel_names) samples.push_back(measure(name, workload, repetitions));

  std::uint64_t baseline_ns = 0;
  for (const BenchSample& s : samples)
    if (s.name == baseline) baseline_ns = s.ns;

  for (const BenchSample& s : samples) {
    BenchReport::Entry e;
    e.kernel = s.name;
    e.total_ns = s.ns;
    e.ratio = adjusted_ratio(s.ns, baseline_ns, report.scanning_ns);
    report.entries.push_back(e);
    report.checksum = s.checksum;
  }
  return report;
}

namespace {

std::string thousands(std::uint64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  int count = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
    if (count && count % 3 == 0) out.push_back(',');
    out.push_back(*it);
    ++count;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::string ratio_2dp(double r) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", r);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace

std::string render_report(const BenchReport& report, Format format) {
  switch (format) {
    case Format::json: {
      json j;
      j["platform"] = report.platform;
      j["scanning_ns"] = report.scanning_ns;
      j["baseline"] = report.baseline;
      j["seed"] = report.seed;
      j["n"] = report.n;
      j["repetitions"] = report.repetitions;
      j["checksum"] = report.checksum;
      j["kernels"] = json::array();
      for (const auto& e : report.entries)
        j["kernels"].push_back({{"kernel", e.kernel}, {"total_ns", e.total_ns}, {"ratio", e.ratio}});
      return j.dump(2) + "\n";
    }
    case Format::csv: {
      std::string out = "platform,kernel,scanning_ns,total_ns,adjusted_ratio_vs_" +
                        report.baseline + "\n";
      for (const auto& e : report.entries) {
        out += csv_quote(report.platform) + "," + e.kernel + "," +
               std::to_string(report.scanning_ns) + "," + std::to_string(e.total_ns) + "," +
               ratio_2dp(e.ratio) + "\n";
      }
      return out;
    }
    case Format::text: {
      // Column order: Platform, Scanning, one column per kernel, Ratio.
      std::vector<std::string> headers = {"Platform", "Scanning"};
      for (const auto& e : report.entries) headers.push_back(e.kernel);
      headers.push_back("Ratio");

      std::vector<std::string> row = {report.platform, thousands(report.scanning_ns)};
      for (const auto& e : report.entries) row.push_back(thousands(e.total_ns));
      std::string ratio;
      int others = 0;
      for (const auto& e : report.entries)
        if (e.kernel != report.baseline) ++others;
      for (const auto& e : report.entries) {
        if (e.kernel == report.baseline) continue;
        if (!ratio.empty()) ratio += " ";
        if (others > 1) ratio += e.kernel + "=";
        ratio += ratio_2dp(e.ratio);
      }
      row.push_back(ratio);

      std::vector<std::size_t> width(headers.size());
      for (std::size_t i = 0; i < headers.size(); ++i)
        width[i] = std::max(headers[i].size(), row[i].size());

      std::ostringstream out;
      for (std::size_t i = 0; i < headers.size(); ++i) {
        out << headers[i] << std::string(width[i] - headers[i].size(), ' ');
        out << (i + 1 < headers.size() ? "  " : "");
      }
      out << "\n";
      for (std::size_t i = 0; i < row.size(); ++i) {
        bool last = i + 1 == row.size();
        out << row[i];
        if (!last) out << std::string(width[i] - row[i].size(), ' ') << "  ";
      }
      out << "\n";
      return out.str();
    }
  }
  return "";
}

BenchReport parse_report_json(std::string_view json_text) {
  json j = json::parse(json_text);
  BenchReport report;
  report.platform = j.at("platform").get<std::string>();
  report.scanning_ns = j.at("scanning_ns").get<std::uint64_t>();
  report.baseline = j.at("baseline").get<std::string>();
  report.seed = j.at("seed").get<std::uint64_t>();
  report.n = j.at("n").get<std::uint32_t>();
  report.repetitions = j.at("repetitions").get<int>();
  report.checksum = j.at("checksum").get<std::uint64_t>();
  for (const auto& e : j.at("kernels")) {
    report.entries.push_back({e.at("kernel").get<std::string>(),
                              e.at("total_ns").get<std::uint64_t>(),
                              e.at("ratio").get<double>()});
  }
  return report;
}

std::string platform_description() {
  std::string cpu = "unknown cpu";
  std::string mhz;
  std::ifstream info("/proc/cpuinfo");
  std::string line;
  while (std::getline(info, line)) {
    auto value_of = [&](const char* key) -> std::string {
      if (line.rfind(key, 0) != 0) return "";
      auto colon = line.find(':');
      if (colon == std::string::npos) return "";
      auto v = line.substr(colon + 1);
      auto first = v.find_first_not_of(" \t");
      return first == std::string::npos ? "" : v.substr(first);
    };
    if (auto v = value_of("model name"); !v.empty() && cpu == "unknown cpu") cpu = v;
    if (auto v = value_of("cpu MHz"); !v.empty() && mhz.empty()) mhz = v + " MHz";
  }

#if defined(__clang__)
  std::string toolchain = "clang " + std::string(__clang_version__);
#elif defined(__GNUC__)
  std::string toolchain = "gcc " + std::string(__VERSION__);
#else
  std::string toolchain = "unknown toolchain";
#endif

  std::string out = toolchain + ", " + cpu;
  if (!mhz.empty()) out += ", " + mhz;
  return out;
}

std::span<const ReferenceRun> reference_runs() {
  static const ReferenceRun runs[] = {
      {"clang 15.0", 272347, 260922, 75740, 1.06},
      {"gcc 12.2", 354085, 299526, 74052, 1.24},
  };
  return runs;
}

int repetitions_from_env() {
  if (const char* env = std::getenv("SORT3LAB_BENCH_REPS")) {
    int v = std::atoi(env);
    if (v >= 3) return v;
  }
  return kDefaultRepetitions;
}

}  // namespace sort3lab::bench
