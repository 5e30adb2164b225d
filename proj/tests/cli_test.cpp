// End-to-end tests of the command-line tool: output shapes and the exit-code
// contract (0 ok/verified, 1 verification failure, 2 usage, 3 runtime).
// The binary path arrives in SORT3LAB_BIN.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

#include "sort3lab/assets.hpp"

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

std::string binary_path() {
  const char* env = std::getenv("SORT3LAB_BIN");
  REQUIRE_MESSAGE(env != nullptr, "SORT3LAB_BIN must point at the sort3lab binary");
  return env;
}

CommandResult run_cli(const std::string& args) {
  std::string command = binary_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult result;
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof(buffer), pipe))
    result.out.append(buffer, n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string first_line(const std::string& s) {
  auto pos = s.find('\n');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

}  // namespace

TEST_CASE("run: sorts and exits 0") {
  CommandResult r = run_cli("run listing1.s --in 3,1,2");
  CHECK(r.exit_code == 0);
  CHECK(first_line(r.out) == "1 2 3");
  CHECK(r.out.find("halt: completed") != std::string::npos);

  CommandResult zeros = run_cli("run listing2.s --in 0,0,0");
  CHECK(zeros.exit_code == 0);
  CHECK(first_line(zeros.out) == "0 0 0");
}

TEST_CASE("run: json output") {
  CommandResult r = run_cli("run listing2.s --in 3,1,2 --json");
  CHECK(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("halt") == "completed");
  CHECK(j.at("output") == nlohmann::json::array({1, 2, 3}));
  CHECK(j.at("executed") == 15);
}

TEST_CASE("run: fuel exhaustion is a runtime error (exit 3)") {
  // The fast path of listing1 retires 10 instructions, so fuel 5 trips.
  CommandResult r = run_cli("run listing1.s --in 1,2,3 --fuel 5");
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("out_of_fuel") != std::string::npos);
  // With enough fuel the same invocation completes.
  CHECK(run_cli("run listing1.s --in 1,2,3 --fuel 10").exit_code == 0);
}

TEST_CASE("run: parse and usage errors exit 2") {
  CHECK(run_cli("run no_such_file.s --in 1,2,3").exit_code == 2);
  CHECK(run_cli("run listing1.s --in nonsense").exit_code == 2);
  CHECK(run_cli("run listing1.s").exit_code == 2);  // --in is required
}

TEST_CASE("run: memory faults exit 3") {
  // listing1 reads 8(%[p]); a 2-cell buffer makes that access fault.
  CommandResult r = run_cli("run listing1.s --in 1,2");
  CHECK(r.exit_code == 3);
  CHECK(r.out.find("memory_fault") != std::string::npos);
}

TEST_CASE("verify: subcommand verdicts and exit codes") {
  CHECK(run_cli("verify listing2.s --domain grid:0:3 --ordering unsigned").exit_code == 0);
  CHECK(run_cli("verify network --domain patterns").exit_code == 0);
  CHECK(run_cli("verify oracle --domain extremes --ordering unsigned").exit_code == 0);

  CommandResult fail = run_cli("verify listing2.s --domain extremes --ordering signed");
  CHECK(fail.exit_code == 1);
  CHECK(fail.out.find("verdict=fail") != std::string::npos);
  CHECK(fail.out.find("input=") != std::string::npos);  // counterexample printed

  CHECK(run_cli("verify nonexistent_kernel --domain patterns").exit_code == 2);
  CHECK(run_cli("verify network --domain bogus").exit_code == 2);
}

TEST_CASE("verify: pattern domain reports 13 cases") {
  CommandResult r = run_cli("verify network --domain patterns --json");
  CHECK(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("cases") == 13);
  CHECK(j.at("verdict") == "pass");
}

TEST_CASE("bench: table output and reference ratio check") {
  CommandResult r = run_cli("bench --kernels network,loop,table --n 4096 --reps 3 --seed 0");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("Scanning") != std::string::npos);
  CHECK(r.out.find("Ratio") != std::string::npos);

  CommandResult minimal = run_cli("bench --kernels network --n 1 --reps 3");
  CHECK(minimal.exit_code == 0);

  CommandResult ratios = run_cli("bench --check-paper-ratios");
  CHECK(ratios.exit_code == 0);
  CHECK(ratios.out.find("1.06") != std::string::npos);
  CHECK(ratios.out.find("1.24") != std::string::npos);

  CommandResult json_ratios = run_cli("bench --check-paper-ratios --json");
  CHECK(json_ratios.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(json_ratios.out);
  REQUIRE(j.is_array());
  CHECK(j.size() == 2);
  CHECK(j[0].at("rounded") == "1.06");
  CHECK(j[1].at("rounded") == "1.24");

  CHECK(run_cli("bench --kernels nope").exit_code == 2);
}

TEST_CASE("bench: csv and json formats") {
  CommandResult csv = run_cli("bench --kernels network,loop --n 512 --reps 3 --format csv");
  CHECK(csv.exit_code == 0);
  CHECK(first_line(csv.out) == "platform,kernel,scanning_ns,total_ns,adjusted_ratio_vs_network");

  CommandResult js = run_cli("bench --kernels network --n 512 --reps 3 --json");
  CHECK(js.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(js.out);
  CHECK(j.at("kernels").size() == 1);
  CHECK(j.at("scanning_ns").is_number());
}

TEST_CASE("search: trivial exhaustion and truncation messages") {
  CommandResult r = run_cli("search --target sort3 --max-len 2 --quiet");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("no programs; space exhausted") != std::string::npos);

  CommandResult t = run_cli("search --target sort3 --max-len 13 --budget 2s --quiet");
  CHECK(t.exit_code == 0);
  CHECK(t.out.find("exhausted=false") != std::string::npos);

  CHECK(run_cli("search --target sort5").exit_code == 2);
  CHECK(run_cli("search --budget nonsense").exit_code == 2);
  CHECK(run_cli("search --vocab warp").exit_code == 2);
}

TEST_CASE("search: small carry-idiom search through the CLI, with cursor") {
  std::string base =
      "search --target sort2 --ordering unsigned --regs 2 --index-regs 1 "
      "--vocab load,store,storeidx,cmp,sbb --max-len 6 --quiet";
  CommandResult r = run_cli(base + " --json");
  CHECK(r.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(r.out);
  CHECK(j.at("exhausted") == true);
  CHECK(j.at("found").size() == 20);
  CHECK(j.at("found")[0].at("length") == 6);
  CHECK(j.at("found")[0].at("branchless") == true);

  // Cursor file round trip: truncate, then resume.
  std::string cursor_path = "cli_test_cursor.json";
  CommandResult cut = run_cli(base + " --budget 40c --save-cursor " + cursor_path);
  CHECK(cut.exit_code == 0);
  CHECK(cut.out.find("exhausted=false") != std::string::npos);
  CommandResult resumed = run_cli(base + " --resume " + cursor_path + " --json");
  CHECK(resumed.exit_code == 0);
  nlohmann::json rj = nlohmann::json::parse(resumed.out);
  CHECK(rj.at("exhausted") == true);
  CHECK(rj.at("found").size() == 20);
  std::remove(cursor_path.c_str());
}

TEST_CASE("refute: default run and negative control") {
  CommandResult r = run_cli("refute");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("listing1   14") != std::string::npos);
  CHECK(r.out.find("listing2   15") != std::string::npos);
  CHECK(r.out.find("claim_refuted: true") != std::string::npos);

  CommandResult js = run_cli("refute --json");
  CHECK(js.exit_code == 0);
  nlohmann::json j = nlohmann::json::parse(js.out);
  CHECK(j.at("claim_refuted") == true);
  CHECK(j.at("rows")[0].at("instructions") == 14);
  CHECK(j.at("rows")[1].at("instructions") == 15);
  CHECK(j.at("rows")[1].at("branchless") == true);

  // A corrupted asset fails the refutation check.
  std::string corrupt_path = "cli_test_corrupt.s";
  {
    std::ofstream out(corrupt_path);
    out << "# reg a dword\nmov %[a], %[b]\n";
  }
  CommandResult bad = run_cli("refute --listing1 " + corrupt_path);
  CHECK(bad.exit_code == 1);
  CHECK(bad.out.find("claim_refuted: false") != std::string::npos);
  std::remove(corrupt_path.c_str());
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
}
