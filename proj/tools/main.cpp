#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sort3lab/assets.hpp"
#include "sort3lab/bench.hpp"
#include "sort3lab/isa.hpp"
#include "sort3lab/kernels.hpp"
#include "sort3lab/machine.hpp"
#include "sort3lab/searcher.hpp"
#include "sort3lab/verifier.hpp"

namespace {

namespace isa = sort3lab::isa;
namespace kernels = sort3lab::kernels;
namespace verify = sort3lab::verify;
namespace bench = sort3lab::bench;
namespace search = sort3lab::search;
using kernels::Ordering;

// Exit codes are a scripting contract:
//   0 success / verified, 1 verification or refutation failure,
//   2 usage or parse error, 3 runtime error (fuel, memory fault, bad report).
constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Resolves a program argument: a file on disk first, then an embedded asset.
isa::Program load_program(const std::string& name) {
  if (std::filesystem::exists(name)) return isa::parse_program(read_file(name));
  if (auto embedded = sort3lab::assets::find(name); !embedded.empty())
    return isa::parse_program(embedded);
  throw UsageError("no such program file or embedded asset: " + name);
}

bool program_uses_carry_idiom(const isa::Program& p) {
  for (const isa::Instruction& ins : p.instructions)
    if (ins.op == isa::Opcode::sbb || ins.op == isa::Opcode::adc) return true;
  return false;
}

std::vector<std::int32_t> parse_values(const std::string& text) {
  std::vector<std::int32_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(item.c_str(), &end, 0);
    if (errno != 0 || end == item.c_str() || *end != '\0' || v < INT32_MIN ||
        v > static_cast<long long>(UINT32_MAX))
      throw UsageError("bad input value: " + item);
    values.push_back(static_cast<std::int32_t>(static_cast<std::uint32_t>(v)));
  }
  if (values.size() != 2 && values.size() != 3)
    throw UsageError("--in expects 2 or 3 comma-separated integers");
  return values;
}

Ordering parse_ordering(const std::string& text) {
  if (text == "signed") return Ordering::signed32;
  if (text == "unsigned") return Ordering::unsigned32;
  throw UsageError("ordering must be 'signed' or 'unsigned'");
}

struct RunArgs {
  std::string program;
  std::string input;
  std::uint64_t fuel = isa::kDefaultFuel;
  std::string ordering = "signed";
  bool json = false;
};

int cmd_run(const RunArgs& args) {
  isa::Program program = load_program(args.program);
  std::vector<std::int32_t> input = parse_values(args.input);
  Ordering ordering = parse_ordering(args.ordering);

  isa::RunResult r = isa::run(program, input, args.fuel);

  if (args.json) {
    nlohmann::json j;
    j["halt"] = isa::halt_reason_name(r.reason);
    j["executed"] = r.executed;
    j["backward_jumps"] = r.backward_jumps;
    if (r.reason == isa::HaltReason::completed) {
      j["output"] = std::vector<std::int32_t>(r.output.begin(), r.output.begin() + r.cells);
    }
    if (!r.fault.empty()) j["fault"] = r.fault;
    std::cout << j.dump(2) << "\n";
  } else if (r.reason == isa::HaltReason::completed) {
    for (int i = 0; i < r.cells; ++i)
      std::cout << r.output[static_cast<std::size_t>(i)] << (i + 1 < r.cells ? " " : "\n");
    bool sorted = true;
    for (int i = 1; i < r.cells; ++i)
      if (kernels::less(r.output[static_cast<std::size_t>(i)],
                        r.output[static_cast<std::size_t>(i - 1)], ordering))
        sorted = false;
    std::cout << "retired: " << r.executed << "\n";
    std::cout << "halt: completed\n";
    std::cout << "sorted (" << kernels::ordering_name(ordering) << "): "
              << (sorted ? "yes" : "no") << "\n";
  } else {
    std::cout << "halt: " << isa::halt_reason_name(r.reason) << "\n";
    if (!r.fault.empty()) std::cout << "fault: " << r.fault << "\n";
    std::cout << "retired: " << r.executed << "\n";
  }
  return r.reason == isa::HaltReason::completed ? kExitOk : kExitRuntime;
}

struct VerifyArgs {
  std::string subject;
  std::string domain = "patterns";
  std::string ordering;
  std::uint64_t fuel = isa::kDefaultFuel;
  bool json = false;
};

int cmd_verify(const VerifyArgs& args) {
  auto domain = verify::Domain::parse(args.domain);
  if (!domain) throw UsageError("bad domain: " + args.domain +
                                " (patterns | grid:LO:HI | random:SEED:N | extremes)");

  verify::VerifyReport report;
  if (const kernels::Kernel* kernel = kernels::find_kernel(args.subject)) {
    Ordering ordering =
        args.ordering.empty() ? kernel->default_ordering : parse_ordering(args.ordering);
    report = verify::verify_sorter(args.subject, *domain, ordering);
  } else {
    isa::Program program = load_program(args.subject);
    Ordering ordering;
    if (!args.ordering.empty()) {
      ordering = parse_ordering(args.ordering);
    } else if (program_uses_carry_idiom(program)) {
      ordering = Ordering::unsigned32;
      std::cerr << "note: " << args.subject
                << " packs comparisons through the carry flag; defaulting to unsigned "
                   "ordering (pass --ordering to override)\n";
    } else {
      ordering = Ordering::signed32;
    }
    report = verify::verify_sorter(program, args.subject, *domain, ordering, args.fuel);
  }

  std::cout << (args.json ? report.to_json() + "\n" : report.to_text());
  return report.pass() ? kExitOk : kExitVerifyFail;
}

struct BenchArgs {
  std::string kernels = "network,loop,table";
  std::uint64_t seed = 0;
  std::uint32_t n = bench::kDefaultWorkloadSize;
  int reps = 0;
  std::string baseline;
  std::string format = "text";
  bool json = false;
  bool check_paper_ratios = false;
};

int cmd_bench(const BenchArgs& args) {
  bench::Format format;
  if (args.json || args.format == "json") format = bench::Format::json;
  else if (args.format == "csv") format = bench::Format::csv;
  else if (args.format == "text") format = bench::Format::text;
  else throw UsageError("bad format: " + args.format);

  if (args.check_paper_ratios) {
    // Recompute the published reference ratios from their published timings.
    nlohmann::json rows = nlohmann::json::array();
    bool all_match = true;
    for (const bench::ReferenceRun& run : bench::reference_runs()) {
      double ratio = bench::adjusted_ratio(run.slower_ns, run.faster_ns, run.scanning_ns);
      char rounded[16];
      std::snprintf(rounded, sizeof(rounded), "%.2f", ratio);
      bool match = std::string(rounded) == [&] {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.2f", run.expected_ratio);
        return std::string(buf);
      }();
      all_match = all_match && match;
      if (format == bench::Format::json) {
        rows.push_back({{"toolchain", run.toolchain},
                        {"slower_ns", run.slower_ns},
                        {"faster_ns", run.faster_ns},
                        {"scanning_ns", run.scanning_ns},
                        {"ratio", ratio},
                        {"rounded", rounded},
                        {"match", match}});
      } else {
        std::cout << run.toolchain << ": (" << run.slower_ns << " - " << run.scanning_ns
                  << ") / (" << run.faster_ns << " - " << run.scanning_ns << ") = " << rounded
                  << "\n";
      }
    }
    if (format == bench::Format::json) std::cout << rows.dump(2) << "\n";
    return all_match ? kExitOk : kExitRuntime;
  }

  std::vector<std::string> names;
  std::stringstream ss(args.kernels);
  std::string item;
  while (std::getline(ss, item, ',')) names.push_back(item);
  if (names.empty()) throw UsageError("no kernels given");
  for (const std::string& name : names)
    if (!kernels::find_kernel(name)) throw UsageError("unknown kernel: " + name);

  std::string baseline = args.baseline.empty() ? names.front() : args.baseline;
  int reps = args.reps > 0 ? args.reps : bench::repetitions_from_env();

  bench::BenchReport report = bench::run_benchmark(names, args.seed, args.n, reps, baseline);
  std::cout << bench::render_report(report, format);
  return kExitOk;
}

struct SearchArgs {
  std::string target = "sort2";
  std::string ordering = "signed";
  int max_len = 8;
  int regs = 0;
  int index_regs = -1;
  std::string vocab;
  bool branchless = true;
  bool allow_branches = false;
  std::string budget = "60s";
  std::uint64_t threads = 0;
  std::string resume_file;
  std::string cursor_file;
  bool no_canonical = false;
  bool no_dead_code = false;
  bool no_prefix_memo = false;
  bool no_filter = false;
  bool json = false;
  bool quiet = false;
};

void parse_budget(const std::string& text, search::SearchConfig& config) {
  if (text.empty()) throw UsageError("empty budget");
  char suffix = text.back();
  std::string number = text;
  if (suffix == 's' || suffix == 'c') number.pop_back();
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(number.c_str(), &end);
  if (errno != 0 || end == number.c_str() || *end != '\0' || v <= 0)
    throw UsageError("bad budget: " + text + " (use e.g. 60s or 5000000c)");
  if (suffix == 'c') {
    config.budget_candidates = static_cast<std::uint64_t>(v);
    config.budget_seconds = 0;
  } else {
    config.budget_seconds = v;
  }
}

int cmd_search(const SearchArgs& args) {
  search::SearchConfig config;
  if (args.target == "sort2") config.target = search::Target::sort2;
  else if (args.target == "sort3") config.target = search::Target::sort3;
  else throw UsageError("target must be sort2 or sort3");
  config.ordering = parse_ordering(args.ordering);
  config.max_len = args.max_len;
  config.registers_available = args.regs;
  config.index_registers = args.index_regs;
  config.allow_branches = args.allow_branches;
  parse_budget(args.budget, config);
  config.threads = static_cast<int>(args.threads);
  config.prune.canonical_registers = !args.no_canonical;
  config.prune.dead_code = !args.no_dead_code;
  config.prune.prefix_memo = !args.no_prefix_memo;
  config.prune.test_vector_filter = !args.no_filter;

  if (!args.vocab.empty()) {
    std::stringstream ss(args.vocab);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto kind = search::parse_template_kind(item);
      if (!kind) throw UsageError("unknown vocabulary template: " + item);
      config.vocabulary.push_back(*kind);
    }
  }

  if (!args.quiet) {
    config.progress = [](const search::Progress& p) {
      std::fprintf(stderr, "len=%d candidates=%llu (%.1fM/s)\n", p.current_length,
                   static_cast<unsigned long long>(p.candidates),
                   p.candidates_per_second / 1e6);
    };
  }

  std::optional<search::Cursor> resume;
  if (!args.resume_file.empty()) {
    resume = search::Cursor::from_json(read_file(args.resume_file));
    if (!resume) throw UsageError("bad cursor file: " + args.resume_file);
  }

  search::Cursor cursor;
  search::SearchResult result =
      search::search(config, resume ? &*resume : nullptr, &cursor);

  if (!args.cursor_file.empty()) {
    std::ofstream out(args.cursor_file, std::ios::binary);
    out << cursor.to_json() << "\n";
  }

  if (args.json) {
    std::cout << result.to_json() << "\n";
    return kExitOk;
  }

  std::cout << "target=" << search::target_name(result.target)
            << " ordering=" << kernels::ordering_name(result.ordering)
            << " max_len=" << result.max_len << "\n";
  std::cout << "exhausted=" << (result.exhausted ? "true" : "false")
            << " completed_length=" << result.completed_length << " candidates="
            << result.candidates_enumerated << " elapsed=" << result.elapsed_seconds << "s\n";
  if (!result.pruned_by_reason.empty()) {
    std::cout << "pruned:";
    for (const auto& [reason, count] : result.pruned_by_reason)
      std::cout << " " << reason << "=" << count;
    std::cout << "\n";
  }
  if (result.found.empty()) {
    std::cout << (result.exhausted ? "no programs; space exhausted\n"
                                   : "no programs found within budget\n");
  } else {
    std::cout << "found " << result.found.size() << " minimal program(s) of length "
              << result.found.front().length << ":\n";
    for (const search::FoundProgram& f : result.found) {
      std::cout << "---\n" << isa::render_program(f.program);
    }
  }
  return kExitOk;
}

struct RefuteArgs {
  std::string listing1_file;
  std::string listing2_file;
  bool json = false;
};

int cmd_refute(const RefuteArgs& args) {
  std::string l1{sort3lab::assets::listing1_source()};
  std::string l2{sort3lab::assets::listing2_source()};
  if (!args.listing1_file.empty()) l1 = read_file(args.listing1_file);
  if (!args.listing2_file.empty()) l2 = read_file(args.listing2_file);

  search::RefutationSummary summary = search::refutation_summary(l1, l2);
  std::cout << (args.json ? summary.to_json() + "\n" : summary.to_text());
  return summary.claim_refuted ? kExitOk : kExitVerifyFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sort3lab: execute, verify, benchmark and search short sort programs"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run_cmd = app.add_subcommand("run", "interpret a program on one input");
  run_cmd->add_option("program", run_args.program, "program file or embedded asset name")
      ->required();
  run_cmd->add_option("--in", run_args.input, "comma-separated input values (2 or 3)")
      ->required();
  run_cmd->add_option("--fuel", run_args.fuel, "maximum retired instructions");
  run_cmd->add_option("--ordering", run_args.ordering, "signed|unsigned (for the sortedness note)");
  run_cmd->add_flag("--json", run_args.json, "machine-readable output");

  VerifyArgs verify_args;
  CLI::App* verify_cmd = app.add_subcommand("verify", "check a kernel or program against the oracle");
  verify_cmd->add_option("subject", verify_args.subject, "kernel name or program file")->required();
  verify_cmd->add_option("--domain", verify_args.domain,
                         "patterns | grid:LO:HI | random:SEED:N | extremes");
  verify_cmd->add_option("--ordering", verify_args.ordering, "signed|unsigned");
  verify_cmd->add_option("--fuel", verify_args.fuel, "fuel per interpreted run");
  verify_cmd->add_flag("--json", verify_args.json, "machine-readable output");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand("bench", "time kernels on a pattern-indexed workload");
  bench_cmd->add_option("--kernels", bench_args.kernels, "comma-separated kernel names");
  bench_cmd->add_option("--seed", bench_args.seed, "workload seed");
  bench_cmd->add_option("--n", bench_args.n, "workload size (default 32768)");
  bench_cmd->add_option("--reps", bench_args.reps, "repetitions (default 9 or SORT3LAB_BENCH_REPS)");
  bench_cmd->add_option("--baseline", bench_args.baseline, "ratio baseline kernel");
  bench_cmd->add_option("--format", bench_args.format, "text|csv|json");
  bench_cmd->add_flag("--json", bench_args.json, "same as --format json");
  bench_cmd->add_flag("--check-paper-ratios", bench_args.check_paper_ratios,
                      "recompute the published reference ratios and exit");

  SearchArgs search_args;
  CLI::App* search_cmd = app.add_subcommand("search", "enumerate short sort programs");
  search_cmd->add_option("--target", search_args.target, "sort2|sort3");
  search_cmd->add_option("--ordering", search_args.ordering, "signed|unsigned");
  search_cmd->add_option("--max-len", search_args.max_len, "instruction bound");
  search_cmd->add_option("--regs", search_args.regs, "data registers (default 3/4 by target)");
  search_cmd->add_option("--index-regs", search_args.index_regs, "index registers");
  search_cmd->add_option("--vocab", search_args.vocab,
                         "comma-separated templates: load,store,storeidx,movrr,cmp,cmovg,sbb,adc,"
                         "movsb,jle,jmp");
  search_cmd->add_flag("--branchless", search_args.branchless, "exclude jumps (default)");
  search_cmd->add_flag("--allow-branches", search_args.allow_branches, "include jle/jmp templates");
  search_cmd->add_option("--budget", search_args.budget, "wall budget: <sec>s or <count>c");
  search_cmd->add_option("--threads", search_args.threads, "worker threads");
  search_cmd->add_option("--resume", search_args.resume_file, "resume from a cursor file");
  search_cmd->add_option("--save-cursor", search_args.cursor_file, "write the cursor on exit");
  search_cmd->add_flag("--no-canonical-registers", search_args.no_canonical,
                       "disable canonical register pruning");
  search_cmd->add_flag("--no-dead-code", search_args.no_dead_code, "disable static pruning");
  search_cmd->add_flag("--no-prefix-memo", search_args.no_prefix_memo,
                       "disable incremental prefix execution");
  search_cmd->add_flag("--no-test-vector-filter", search_args.no_filter,
                       "disable the pattern prefilter");
  search_cmd->add_flag("--json", search_args.json, "machine-readable output");
  search_cmd->add_flag("--quiet", search_args.quiet, "suppress the progress line");

  RefuteArgs refute_args;
  CLI::App* refute_cmd =
      app.add_subcommand("refute", "count, classify and verify the shipped reference programs");
  refute_cmd->add_option("--listing1", refute_args.listing1_file, "override the 14-instruction asset");
  refute_cmd->add_option("--listing2", refute_args.listing2_file, "override the 15-instruction asset");
  refute_cmd->add_flag("--json", refute_args.json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(run_args);
    if (verify_cmd->parsed()) return cmd_verify(verify_args);
    if (bench_cmd->parsed()) return cmd_bench(bench_args);
    if (search_cmd->parsed()) return cmd_search(search_args);
    if (refute_cmd->parsed()) return cmd_refute(refute_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const isa::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
