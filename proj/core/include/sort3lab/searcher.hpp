#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sort3lab/isa.hpp"
#include "sort3lab/kernels.hpp"

// Bounded brute-force search for shortest correct sort programs over a
// configurable slice of the instruction set.  Candidates are enumerated in
// lexicographic (length, opcode index, operand encoding) order; each complete
// candidate is filtered against the pattern representatives and survivors are
// fully verified.  Pruning is restricted to rules that cannot change the
// minimal length or the set of minimal-length programs.

namespace sort3lab::search {

using kernels::Ordering;

enum class Target : std::uint8_t { sort2, sort3 };

std::string_view target_name(Target t);

// Instruction templates (opcode x operand shape).  Data registers are dword,
// index registers qword; memory shapes address the sort buffer except for the
// byte-table load.
enum class TemplateKind : std::uint8_t {
  load,           // mov disp(%p) -> data reg, disp in {0,4,8}
  store,          // mov data reg -> disp(%p)
  store_indexed,  // mov data reg -> disp(%p, index reg, 4)
  mov_rr,         // mov data reg -> data reg
  cmp_rr,         // cmp data reg, data reg
  cmovg_rr,       // cmovg data reg -> data reg
  sbb_ii,         // sbb index reg, index reg (same register; i = -CF)
  adc_ii,         // adc index reg, index reg (same register; i = 2i + CF)
  movsb_table,    // movsb table+disp(%index reg) -> index reg
  jle_label,
  jmp_label,
};

std::string_view template_kind_name(TemplateKind k);
std::optional<TemplateKind> parse_template_kind(std::string_view name);

// {load, store, mov_rr, cmp_rr, cmovg_rr}
std::vector<TemplateKind> default_vocabulary(Target target);

struct PruneFlags {
  bool canonical_registers = true;  // enumerate registers in first-use order only
  bool dead_code = true;            // static rules: provably removable instructions,
                                    // clobbered inputs, unmeetable load/store/flag obligations
  bool prefix_memo = true;          // incremental prefix execution on the test vectors
  bool test_vector_filter = true;   // pattern-representative prefilter before full verification
};

struct Progress {
  int current_length = 0;
  std::uint64_t candidates = 0;   // complete candidates reached so far
  std::uint64_t pruned = 0;       // subtree pruning events in the current level
  std::uint64_t ops_tried = 0;    // attempted instruction placements in the current level
  double candidates_per_second = 0.0;
};

struct SearchConfig {
  Target target = Target::sort2;
  Ordering ordering = Ordering::signed32;
  std::vector<TemplateKind> vocabulary;  // empty -> default_vocabulary(target)
  int max_len = 8;
  int registers_available = 0;  // data registers; 0 -> 3 for sort2, 4 for sort3
  int index_registers = -1;     // -1 -> 1 when the vocabulary needs them, else 0
  bool allow_branches = false;  // jle/jmp templates are dropped when false
  double budget_seconds = 60.0;
  std::uint64_t budget_candidates = 0;  // 0 = unlimited
  PruneFlags prune;
  int threads = 0;  // 0 -> hardware concurrency
  std::function<void(const Progress&)> progress;  // polled roughly once per second
};

struct FoundProgram {
  isa::Program program;  // canonical register names
  int length = 0;
  bool branchless = true;
};

struct SearchResult {
  Target target = Target::sort2;
  Ordering ordering = Ordering::signed32;
  int max_len = 0;
  std::vector<FoundProgram> found;  // minimal length only, sorted by rendering
  std::uint64_t candidates_enumerated = 0;  // complete candidates reached
  std::map<std::string, std::uint64_t> pruned_by_reason;  // subtree pruning events
  // True iff every length level up to min(found length, max_len) was fully
  // enumerated within budget, i.e. the reported minimum (or absence) is proven.
  bool exhausted = false;
  int completed_length = 0;  // deepest fully enumerated level
  double elapsed_seconds = 0.0;

  std::string to_json() const;
};

// Resume point; only level boundaries are recorded.
struct Cursor {
  int next_length = 1;
  std::uint64_t candidates_enumerated = 0;
  std::map<std::string, std::uint64_t> pruned_by_reason;
  double elapsed_seconds = 0.0;

  std::string to_json() const;
  static std::optional<Cursor> from_json(std::string_view text);
};

SearchResult search(const SearchConfig& config, const Cursor* resume = nullptr,
                    Cursor* cursor_out = nullptr);

// Two-stage check: pattern-representative prefilter, then full verification
// over patterns + grid(0,3) + extremes under `ordering`.  Interpreted with
// fuel 4 * instruction count.  Failures of any kind return false.
bool check_candidate(const isa::Program& program, Target target, Ordering ordering);

// Renames registers in first-use order (r0, r1, ...), preserving widths.
// Idempotent and semantics-preserving.
isa::Program canonicalize(const isa::Program& program);

struct RefutationRow {
  std::string name;
  int instructions = 0;
  bool branchless = false;
  Ordering ordering = Ordering::signed32;
  bool verified = false;
};

struct RefutationSummary {
  std::vector<RefutationRow> rows;
  bool claim_refuted = false;  // all rows verified and strictly below 17 instructions

  std::string to_json() const;
  std::string to_text() const;
};

// Counts, branchlessness and full verification for the embedded reference
// programs (listing1.s signed, listing2.s unsigned).
RefutationSummary refutation_summary();
RefutationSummary refutation_summary(std::string_view listing1_text,
                                     std::string_view listing2_text);

}  // namespace sort3lab::search
