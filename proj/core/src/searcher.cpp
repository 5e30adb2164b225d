#include "sort3lab/searcher.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cstring>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sort3lab/assets.hpp"
#include "sort3lab/machine.hpp"
#include "sort3lab/verifier.hpp"

namespace sort3lab::search {

using isa::Instruction;
using isa::MachineState;
using isa::Opcode;
using isa::Operand;
using isa::Program;
using isa::Width;
using kernels::Triple;
using nlohmann::json;

std::string_view target_name(Target t) { return t == Target::sort2 ? "sort2" : "sort3"; }

std::string_view template_kind_name(TemplateKind k) {
  switch (k) {
    case TemplateKind::load: return "load";
    case TemplateKind::store: return "store";
    case TemplateKind::store_indexed: return "storeidx";
    case TemplateKind::mov_rr: return "movrr";
    case TemplateKind::cmp_rr: return "cmp";
    case TemplateKind::cmovg_rr: return "cmovg";
    case TemplateKind::sbb_ii: return "sbb";
    case TemplateKind::adc_ii: return "adc";
    case TemplateKind::movsb_table: return "movsb";
    case TemplateKind::jle_label: return "jle";
    case TemplateKind::jmp_label: return "jmp";
  }
  return "?";
}

std::optional<TemplateKind> parse_template_kind(std::string_view name) {
  for (auto k : {TemplateKind::load, TemplateKind::store, TemplateKind::store_indexed,
                 TemplateKind::mov_rr, TemplateKind::cmp_rr, TemplateKind::cmovg_rr,
                 TemplateKind::sbb_ii, TemplateKind::adc_ii, TemplateKind::movsb_table,
                 TemplateKind::jle_label, TemplateKind::jmp_label}) {
    if (template_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<TemplateKind> default_vocabulary(Target) {
  return {TemplateKind::load, TemplateKind::store, TemplateKind::mov_rr, TemplateKind::cmp_rr,
          TemplateKind::cmovg_rr};
}

namespace {

constexpr int kMaxSearchRegs = 12;

// Pruning reasons; the names double as report keys.
enum Reason : int {
  kCanonical = 0,
  kZeroState,
  kInputClobber,
  kDeadRegWrite,
  kDeadFlagWrite,
  kDeadStore,
  kObligations,
  kTrailingNonStore,
  kPrefixFault,
  kTestVector,
  kFullVerification,
  kReasonCount,
};

constexpr std::string_view kReasonNames[kReasonCount] = {
    "canonical_registers", "zero_state",         "input_clobber",
    "dead_reg_write",      "dead_flag_write",    "dead_store",
    "obligations",         "trailing_non_store", "prefix_fault",
    "test_vector_filter",  "full_verification",
};

// One concrete instruction plus the static facts pruning needs.
struct Op {
  Instruction instr;
  TemplateKind kind;
  // Registers in canonical appearance order, tagged by pool (0 data, 1 index).
  std::array<std::uint8_t, 4> seq_pool{};
  std::array<std::uint8_t, 4> seq_idx{};
  int seq_len = 0;
  std::uint16_t reads_mask = 0;  // global register indices read
  int write_reg = -1;            // global register index written, -1 none
  bool cond_write = false;       // cmovg: write may not happen
  bool writes_flags = false;
  bool reads_flags = false;
  bool only_reg_effect = false;  // whole effect is the register write
  bool is_cmp = false;           // whole effect is the flag write
  int load_cell = -1;
  int store_cell = -1;
  bool dyn_store = false;
  bool is_store = false;  // any buffer write
  std::uint8_t ob_load = 0;
  std::uint8_t ob_store = 0;
  bool ob_fw = false;
  bool ob_fr = false;
};

// Per-depth static tracking for the dead-code rules.
struct Track {
  std::uint8_t loaded = 0;
  std::uint8_t stored = 0;
  bool has_fw = false;
  bool has_fr = false;
  std::int8_t last_write[kMaxSearchRegs];
  std::int8_t last_read[kMaxSearchRegs];
  bool write_only_reg[kMaxSearchRegs];
  std::int8_t last_flag_write = -1;
  bool last_flag_write_is_cmp = false;
  std::int8_t last_flag_read = -1;
  std::int8_t last_static_store[4];
  std::int8_t last_cell_read[4];
  std::uint16_t written_mask = 0;
  std::int8_t used_d = 0;
  std::int8_t used_i = 0;

  void reset() {
    *this = Track{};
    std::memset(last_write, -1, sizeof(last_write));
    std::memset(last_read, -1, sizeof(last_read));
    std::memset(write_only_reg, 0, sizeof(write_only_reg));
    std::memset(last_static_store, -1, sizeof(last_static_store));
    std::memset(last_cell_read, -1, sizeof(last_cell_read));
  }
};

struct Resolved {
  Target target;
  kernels::Ordering ordering;
  std::vector<TemplateKind> vocabulary;
  int max_len;
  int data_regs;
  int index_regs;
  bool allow_branches;
  double budget_seconds;
  std::uint64_t budget_candidates;
  PruneFlags prune;
  int threads;
  int cells;  // 2 or 3

  bool vocab_has_load = false;
  bool vocab_has_store = false;
  bool vocab_has_dyn_store = false;
  bool vocab_has_fw = false;
  bool vocab_has_fr = false;
  bool vocab_has_combined_flag = false;  // sbb/adc: reader and writer in one slot
};

bool needs_index_regs(const std::vector<TemplateKind>& vocab) {
  for (TemplateKind k : vocab) {
    if (k == TemplateKind::store_indexed || k == TemplateKind::sbb_ii ||
        k == TemplateKind::adc_ii || k == TemplateKind::movsb_table)
      return true;
  }
  return false;
}

Resolved resolve_config(const SearchConfig& config) {
  Resolved r;
  r.target = config.target;
  r.ordering = config.ordering;
  r.vocabulary = config.vocabulary.empty() ? default_vocabulary(config.target) : config.vocabulary;
  if (!config.allow_branches) {
    std::erase_if(r.vocabulary, [](TemplateKind k) {
      return k == TemplateKind::jle_label || k == TemplateKind::jmp_label;
    });
  }
  if (r.vocabulary.empty()) throw std::invalid_argument("search vocabulary is empty");
  r.max_len = config.max_len;
  if (r.max_len < 1) throw std::invalid_argument("max_len must be at least 1");
  r.data_regs = config.registers_available > 0 ? config.registers_available
                                               : (config.target == Target::sort2 ? 3 : 4);
  if (r.data_regs < 1 || r.data_regs > 6)
    throw std::invalid_argument("registers_available must be in [1,6]");
  r.index_regs = config.index_registers >= 0 ? config.index_registers
                                             : (needs_index_regs(r.vocabulary) ? 1 : 0);
  if (r.index_regs < 0 || r.index_regs > 2)
    throw std::invalid_argument("index_registers must be in [0,2]");
  r.allow_branches = config.allow_branches;
  r.budget_seconds = config.budget_seconds;
  if (r.budget_seconds <= 0 && config.budget_candidates == 0)
    throw std::invalid_argument("search budget must be positive");
  r.budget_candidates = config.budget_candidates;
  r.prune = config.prune;
  r.threads = config.threads > 0 ? config.threads
                                 : std::max(1u, std::thread::hardware_concurrency());
  r.cells = config.target == Target::sort2 ? 2 : 3;

  for (TemplateKind k : r.vocabulary) {
    switch (k) {
      case TemplateKind::load: r.vocab_has_load = true; break;
      case TemplateKind::store: r.vocab_has_store = true; break;
      case TemplateKind::store_indexed:
        r.vocab_has_store = true;
        r.vocab_has_dyn_store = true;
        break;
      case TemplateKind::cmp_rr: r.vocab_has_fw = true; break;
      case TemplateKind::cmovg_rr:
      case TemplateKind::jle_label: r.vocab_has_fr = true; break;
      case TemplateKind::sbb_ii:
      case TemplateKind::adc_ii:
        r.vocab_has_fw = true;
        r.vocab_has_fr = true;
        r.vocab_has_combined_flag = true;
        break;
      default: break;
    }
  }
  return r;
}

// Register layout inside candidate programs: 0 = p (buffer base, untouched),
// then data registers, then index registers.
int preg() { return 0; }
int dreg(int d) { return 1 + d; }
int ireg(const Resolved& r, int i) { return 1 + r.data_regs + i; }

Program base_program(const Resolved& r) {
  Program p;
  p.reg_names.push_back("p");
  p.reg_widths.push_back(Width::qword);
  for (int d = 0; d < r.data_regs; ++d) {
    p.reg_names.push_back("r" + std::to_string(d));
    p.reg_widths.push_back(Width::dword);
  }
  for (int i = 0; i < r.index_regs; ++i) {
    p.reg_names.push_back("i" + std::to_string(i));
    p.reg_widths.push_back(Width::qword);
  }
  bool has_table = std::find(r.vocabulary.begin(), r.vocabulary.end(),
                             TemplateKind::movsb_table) != r.vocabulary.end();
  if (has_table) {
    p.data_symbols.push_back("dest");
    p.data_offsets.push_back(0);
    const auto& dest = kernels::dest_table();
    p.data.assign(dest.begin(), dest.end());
  }
  return p;
}

void op_add_reg(Op& op, const Resolved& r, int global) {
  if (global == preg()) return;  // p is fixed, not part of a renaming pool
  bool is_index = global > r.data_regs;
  for (int k = 0; k < op.seq_len; ++k) {
    if (op.seq_pool[static_cast<std::size_t>(k)] == (is_index ? 1 : 0) &&
        op.seq_idx[static_cast<std::size_t>(k)] ==
            static_cast<std::uint8_t>(is_index ? global - 1 - r.data_regs : global - 1))
      return;  // already in the sequence
  }
  op.seq_pool[static_cast<std::size_t>(op.seq_len)] = is_index ? 1 : 0;
  op.seq_idx[static_cast<std::size_t>(op.seq_len)] =
      static_cast<std::uint8_t>(is_index ? global - 1 - r.data_regs : global - 1);
  op.seq_len += 1;
}

std::vector<Op> expand_ops(const Resolved& r, int level_len) {
  std::vector<Op> ops;
  std::vector<int> disps;
  for (int c = 0; c < r.cells; ++c) disps.push_back(4 * c);

  auto reads = [](std::initializer_list<int> regs) {
    std::uint16_t mask = 0;
    for (int g : regs) mask |= static_cast<std::uint16_t>(1u << g);
    return mask;
  };

  for (TemplateKind kind : r.vocabulary) {
    switch (kind) {
      case TemplateKind::load:
        for (int disp : disps)
          for (int d = 0; d < r.data_regs; ++d) {
            Op op;
            op.kind = kind;
            op.instr = {Opcode::mov, Width::dword,
                        Operand::make_mem(-1, disp, preg(), -1, 1), Operand::make_reg(dreg(d))};
            op_add_reg(op, r, dreg(d));
            op.write_reg = dreg(d);
            op.only_reg_effect = true;
            op.load_cell = disp / 4;
            op.ob_load = static_cast<std::uint8_t>(1 << (disp / 4));
            ops.push_back(op);
          }
        break;
      case TemplateKind::store:
        for (int disp : disps)
          for (int d = 0; d < r.data_regs; ++d) {
            Op op;
            op.kind = kind;
            op.instr = {Opcode::mov, Width::dword, Operand::make_reg(dreg(d)),
                        Operand::make_mem(-1, disp, preg(), -1, 1)};
            op_add_reg(op, r, dreg(d));
            op.reads_mask = reads({dreg(d)});
            op.store_cell = disp / 4;
            op.is_store = true;
            op.ob_store = static_cast<std::uint8_t>(1 << (disp / 4));
            ops.push_back(op);
          }
        break;
      case TemplateKind::store_indexed:
        for (int disp : disps)
          for (int i = 0; i < r.index_regs; ++i)
            for (int d = 0; d < r.data_regs; ++d) {
              Op op;
              op.kind = kind;
              op.instr = {Opcode::mov, Width::dword, Operand::make_reg(dreg(d)),
                          Operand::make_mem(-1, disp, preg(), ireg(r, i), 4)};
              op_add_reg(op, r, dreg(d));
              op_add_reg(op, r, ireg(r, i));
              op.reads_mask = reads({dreg(d), ireg(r, i)});
              op.dyn_store = true;
              op.is_store = true;
              op.ob_store = static_cast<std::uint8_t>((1 << r.cells) - 1);
              ops.push_back(op);
            }
        break;
      case TemplateKind::mov_rr:
        for (int s = 0; s < r.data_regs; ++s)
          for (int d = 0; d < r.data_regs; ++d) {
            if (s == d) continue;
            Op op;
            op.kind = kind;
            op.instr = {Opcode::mov, Width::dword, Operand::make_reg(dreg(s)),
                        Operand::make_reg(dreg(d))};
            op_add_reg(op, r, dreg(s));
            op_add_reg(op, r, dreg(d));
            op.reads_mask = reads({dreg(s)});
            op.write_reg = dreg(d);
            op.only_reg_effect = true;
            ops.push_back(op);
          }
        break;
      case TemplateKind::cmp_rr:
        for (int s = 0; s < r.data_regs; ++s)
          for (int d = 0; d < r.data_regs; ++d) {
            if (s == d) continue;
            Op op;
            op.kind = kind;
            op.instr = {Opcode::cmp, Width::dword, Operand::make_reg(dreg(s)),
                        Operand::make_reg(dreg(d))};
            op_add_reg(op, r, dreg(s));
            op_add_reg(op, r, dreg(d));
            op.reads_mask = reads({dreg(s), dreg(d)});
            op.writes_flags = true;
            op.is_cmp = true;
            op.ob_fw = true;
            ops.push_back(op);
          }
        break;
      case TemplateKind::cmovg_rr:
        for (int s = 0; s < r.data_regs; ++s)
          for (int d = 0; d < r.data_regs; ++d) {
            if (s == d) continue;
            Op op;
            op.kind = kind;
            op.instr = {Opcode::cmovg, Width::dword, Operand::make_reg(dreg(s)),
                        Operand::make_reg(dreg(d))};
            op_add_reg(op, r, dreg(s));
            op_add_reg(op, r, dreg(d));
            op.reads_mask = reads({dreg(s), dreg(d)});
            op.write_reg = dreg(d);
            op.cond_write = true;
            op.reads_flags = true;
            op.only_reg_effect = true;
            op.ob_fr = true;
            ops.push_back(op);
          }
        break;
      case TemplateKind::sbb_ii:
      case TemplateKind::adc_ii:
        for (int i = 0; i < r.index_regs; ++i) {
          Op op;
          op.kind = kind;
          op.instr = {kind == TemplateKind::sbb_ii ? Opcode::sbb : Opcode::adc, Width::qword,
                      Operand::make_reg(ireg(r, i)), Operand::make_reg(ireg(r, i))};
          op_add_reg(op, r, ireg(r, i));
          op.reads_mask = reads({ireg(r, i)});
          op.write_reg = ireg(r, i);
          op.writes_flags = true;
          op.reads_flags = true;
          op.ob_fw = true;
          op.ob_fr = true;
          ops.push_back(op);
        }
        break;
      case TemplateKind::movsb_table:
        for (int disp : {4, 12, 20})
          for (int b = 0; b < r.index_regs; ++b)
            for (int d = 0; d < r.index_regs; ++d) {
              Op op;
              op.kind = kind;
              op.instr = {Opcode::movsb_sx, Width::byte,
                          Operand::make_mem(0, disp, ireg(r, b), -1, 1),
                          Operand::make_reg(ireg(r, d))};
              op_add_reg(op, r, ireg(r, b));
              op_add_reg(op, r, ireg(r, d));
              op.reads_mask = reads({ireg(r, b)});
              op.write_reg = ireg(r, d);
              op.only_reg_effect = true;
              ops.push_back(op);
            }
        break;
      case TemplateKind::jle_label:
      case TemplateKind::jmp_label:
        for (int t = 0; t <= level_len; ++t) {
          Op op;
          op.kind = kind;
          op.instr = {kind == TemplateKind::jle_label ? Opcode::jle : Opcode::jmp, Width::qword,
                      Operand{}, Operand::make_label(t)};
          if (kind == TemplateKind::jle_label) {
            op.reads_flags = true;
            op.ob_fr = true;
          }
          ops.push_back(op);
        }
        break;
    }
  }
  return ops;
}

struct LevelCtx {
  const Resolved* cfg;
  int len = 0;
  std::vector<Op> ops;
  Program base;  // registers + data, no instructions
  int vectors = 0;
  std::array<Triple, 13> inputs{};
  std::array<Triple, 13> expected{};
  std::uint64_t fuel = 0;

  std::atomic<bool> stop{false};
  std::atomic<std::uint64_t> shared_leaves{0};
  std::atomic<std::uint64_t> shared_ops{0};
  std::atomic<std::uint64_t> shared_pruned{0};
  std::chrono::steady_clock::time_point deadline{};
  bool has_deadline = false;
  std::uint64_t candidate_cap = 0;  // absolute leaf count at which to stop
};

struct FoundRecord {
  Program program;
  std::string rendering;  // canonical text, used as the merge key
};

struct Walker {
  LevelCtx* ctx = nullptr;
  Program work;
  std::vector<MachineState> states;  // (len+1) x vectors
  std::vector<Track> track;
  std::uint64_t leaves = 0;
  std::array<std::uint64_t, kReasonCount> pruned{};
  std::vector<FoundRecord> found;
  std::uint64_t since_budget_check = 0;
  std::uint64_t local_leaf_batch = 0;
  std::uint64_t local_ops_batch = 0;
  std::uint64_t local_pruned_batch = 0;

  MachineState& state_at(int depth, int v) {
    return states[static_cast<std::size_t>(depth * ctx->vectors + v)];
  }
};

bool full_verify(const Program& program, Target target, kernels::Ordering ordering,
                 std::uint64_t fuel);

void init_walker(Walker& w, LevelCtx& ctx) {
  w.ctx = &ctx;
  w.work = ctx.base;
  w.work.instructions.clear();
  w.work.instructions.reserve(static_cast<std::size_t>(ctx.len));
  w.states.assign(static_cast<std::size_t>((ctx.len + 1) * ctx.vectors), MachineState{});
  w.track.assign(static_cast<std::size_t>(ctx.len + 1), Track{});
  for (auto& t : w.track) t.reset();
  for (int v = 0; v < ctx.vectors; ++v) {
    MachineState& s = w.state_at(0, v);
    s = MachineState{};
    s.buffer_size = static_cast<std::uint32_t>(4 * ctx.cfg->cells);
    for (int c = 0; c < ctx.cfg->cells; ++c)
      s.set_buffer_cell(c, ctx.inputs[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)]);
  }
}

// Places `op` as instruction number `placed`.  Returns kReasonCount on
// success (instruction pushed, track/state advanced); otherwise the pruning
// reason (nothing to undo).
int try_place(Walker& w, int placed, const Op& op) {
  const LevelCtx& ctx = *w.ctx;
  const Resolved& cfg = *ctx.cfg;
  const Track& t = w.track[static_cast<std::size_t>(placed)];
  const bool branchless_rules = !cfg.allow_branches;

  std::int8_t used_d = t.used_d;
  std::int8_t used_i = t.used_i;
  if (cfg.prune.canonical_registers) {
    for (int k = 0; k < op.seq_len; ++k) {
      std::int8_t& cur = op.seq_pool[static_cast<std::size_t>(k)] ? used_i : used_d;
      auto idx = static_cast<std::int8_t>(op.seq_idx[static_cast<std::size_t>(k)]);
      if (idx > cur) return kCanonical;
      if (idx == cur) ++cur;
    }
  } else {
    for (int k = 0; k < op.seq_len; ++k) {
      std::int8_t& cur = op.seq_pool[static_cast<std::size_t>(k)] ? used_i : used_d;
      auto idx = static_cast<std::int8_t>(op.seq_idx[static_cast<std::size_t>(k)]);
      if (idx >= cur) cur = static_cast<std::int8_t>(idx + 1);
    }
  }

  if (cfg.prune.dead_code && branchless_rules) {
    const bool last_slot = placed + 1 == ctx.len;
    if (last_slot && !op.is_store) return kTrailingNonStore;

    // An instruction that provably leaves the machine unchanged on every
    // input is removable, so no minimal program contains it.
    if ((op.kind == TemplateKind::mov_rr || op.kind == TemplateKind::cmovg_rr)) {
      std::uint16_t both = static_cast<std::uint16_t>(
          (1u << op.instr.src.reg) | (1u << op.instr.dst.reg));
      if ((t.written_mask & both) == 0) return kZeroState;
    }

    // Storing over an input cell that was never read loses information the
    // output provably depends on.
    if (op.store_cell >= 0 && !(t.loaded >> op.store_cell & 1)) return kInputClobber;

    // Overwriting a register whose last writer had no other effect makes
    // that writer removable.
    if (op.write_reg >= 0 && !op.cond_write && !(op.reads_mask >> op.write_reg & 1)) {
      std::int8_t lw = t.last_write[op.write_reg];
      if (lw >= 0 && t.write_only_reg[op.write_reg] && t.last_read[op.write_reg] <= lw)
        return kDeadRegWrite;
    }

    // Overwriting flags that were produced by a cmp nobody read makes that
    // cmp removable.
    if (op.writes_flags && !op.reads_flags && t.last_flag_write >= 0 &&
        t.last_flag_write_is_cmp && t.last_flag_read <= t.last_flag_write)
      return kDeadFlagWrite;

    // Re-storing a cell whose previous static store was never read makes the
    // previous store removable.
    if (op.store_cell >= 0) {
      std::int8_t ls = t.last_static_store[op.store_cell];
      if (ls >= 0 && t.last_cell_read[op.store_cell] <= ls) return kDeadStore;
    }

    // Lower bound on the instructions still required: unread input cells,
    // unwritten output cells, and missing flag producer/consumer.
    std::uint8_t cellmask = static_cast<std::uint8_t>((1 << cfg.cells) - 1);
    std::uint8_t loaded = t.loaded | op.ob_load;
    std::uint8_t stored = t.stored | op.ob_store;
    bool fw = t.has_fw || op.ob_fw;
    bool fr = t.has_fr || op.ob_fr;
    int load_need = std::popcount(static_cast<unsigned>(cellmask & ~loaded));
    if (load_need > 0 && !cfg.vocab_has_load) load_need = 255;
    int store_need = 0;
    if ((stored & cellmask) != cellmask) {
      if (!cfg.vocab_has_store) store_need = 255;
      else if (cfg.vocab_has_dyn_store) store_need = 1;
      else store_need = std::popcount(static_cast<unsigned>(cellmask & ~stored));
    }
    int flag_need = 0;
    if (!fw && !fr) flag_need = cfg.vocab_has_combined_flag ? 1 : 2;
    else if (!fw || !fr) flag_need = 1;
    if ((!fw && !cfg.vocab_has_fw) || (!fr && !cfg.vocab_has_fr)) flag_need = 255;
    if (load_need + store_need + flag_need > ctx.len - (placed + 1)) return kObligations;
  }

  w.work.instructions.push_back(op.instr);

  // Incremental execution of the new instruction on every test vector.
  if (cfg.prune.prefix_memo && cfg.prune.test_vector_filter && branchless_rules) {
    for (int v = 0; v < ctx.vectors; ++v) {
      MachineState& next = w.state_at(placed + 1, v);
      next = w.state_at(placed, v);
      if (isa::step(next, w.work) != isa::StepStatus::ok) {
        // The fault replays in every completion of this prefix.
        w.work.instructions.pop_back();
        return kPrefixFault;
      }
    }
  }

  Track& nt = w.track[static_cast<std::size_t>(placed + 1)];
  nt = t;
  nt.used_d = used_d;
  nt.used_i = used_i;
  auto d8 = static_cast<std::int8_t>(placed);
  if (op.load_cell >= 0) {
    nt.loaded |= static_cast<std::uint8_t>(1 << op.load_cell);
    nt.last_cell_read[op.load_cell] = d8;
  }
  if (op.store_cell >= 0) {
    nt.stored |= static_cast<std::uint8_t>(1 << op.store_cell);
    nt.last_static_store[op.store_cell] = d8;
  }
  if (op.dyn_store) {
    nt.stored |= static_cast<std::uint8_t>((1 << ctx.cfg->cells) - 1);
    for (int c = 0; c < ctx.cfg->cells; ++c) nt.last_cell_read[c] = d8;  // aliasing barrier
  }
  if (op.write_reg >= 0) {
    nt.last_write[op.write_reg] = d8;
    nt.write_only_reg[op.write_reg] = op.only_reg_effect;
    nt.written_mask |= static_cast<std::uint16_t>(1u << op.write_reg);
  }
  if (op.reads_mask) {
    std::uint16_t m = op.reads_mask;
    while (m) {
      int r = std::countr_zero(m);
      m &= static_cast<std::uint16_t>(m - 1);
      nt.last_read[r] = d8;
    }
  }
  if (op.writes_flags) {
    nt.last_flag_write = d8;
    nt.last_flag_write_is_cmp = op.is_cmp;
  }
  if (op.reads_flags) nt.last_flag_read = d8;
  nt.has_fw = nt.has_fw || op.ob_fw;
  nt.has_fr = nt.has_fr || op.ob_fr;
  return kReasonCount;
}

void unplace(Walker& w) { w.work.instructions.pop_back(); }

bool leaf_outputs_sorted(Walker& w) {
  const LevelCtx& ctx = *w.ctx;
  const Resolved& cfg = *ctx.cfg;
  if (cfg.prune.prefix_memo && cfg.prune.test_vector_filter && !cfg.allow_branches) {
    for (int v = 0; v < ctx.vectors; ++v) {
      const MachineState& s = w.state_at(ctx.len, v);
      for (int c = 0; c < cfg.cells; ++c)
        if (s.buffer_cell(c) !=
            ctx.expected[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)])
          return false;
    }
    return true;
  }
  for (int v = 0; v < ctx.vectors; ++v) {
    const Triple& in = ctx.inputs[static_cast<std::size_t>(v)];
    isa::RunResult r = isa::run(
        w.work, std::span<const std::int32_t>(in.data(), static_cast<std::size_t>(cfg.cells)),
        ctx.fuel);
    if (r.reason != isa::HaltReason::completed) return false;
    for (int c = 0; c < cfg.cells; ++c)
      if (r.output[static_cast<std::size_t>(c)] !=
          ctx.expected[static_cast<std::size_t>(v)][static_cast<std::size_t>(c)])
        return false;
  }
  return true;
}

void handle_leaf(Walker& w) {
  const LevelCtx& ctx = *w.ctx;
  w.leaves += 1;

  bool pass;
  if (ctx.cfg->prune.test_vector_filter) {
    pass = leaf_outputs_sorted(w);
    if (!pass) {
      w.pruned[kTestVector] += 1;
      return;
    }
  }
  if (!full_verify(w.work, ctx.cfg->target, ctx.cfg->ordering, ctx.fuel)) {
    w.pruned[kFullVerification] += 1;
    return;
  }
  Program canonical = canonicalize(w.work);
  std::string text = isa::render_program(canonical);
  w.found.push_back({std::move(canonical), std::move(text)});
}

bool budget_hit(Walker& w) {
  LevelCtx& ctx = *w.ctx;
  if (ctx.stop.load(std::memory_order_relaxed)) return true;
  if (++w.since_budget_check < 4096) return false;
  w.since_budget_check = 0;
  ctx.shared_leaves.fetch_add(w.local_leaf_batch, std::memory_order_relaxed);
  ctx.shared_ops.fetch_add(w.local_ops_batch, std::memory_order_relaxed);
  ctx.shared_pruned.fetch_add(w.local_pruned_batch, std::memory_order_relaxed);
  w.local_leaf_batch = 0;
  w.local_ops_batch = 0;
  w.local_pruned_batch = 0;
  if (ctx.has_deadline && std::chrono::steady_clock::now() >= ctx.deadline) {
    ctx.stop.store(true, std::memory_order_relaxed);
    return true;
  }
  if (ctx.candidate_cap &&
      ctx.shared_leaves.load(std::memory_order_relaxed) >= ctx.candidate_cap) {
    ctx.stop.store(true, std::memory_order_relaxed);
    return true;
  }
  return false;
}

// Returns false when the budget interrupted the walk.
bool dfs(Walker& w, int placed) {
  const LevelCtx& ctx = *w.ctx;
  for (const Op& op : ctx.ops) {
    if (budget_hit(w)) return false;
    w.local_ops_batch += 1;
    int r = try_place(w, placed, op);
    if (r != kReasonCount) {
      w.pruned[static_cast<std::size_t>(r)] += 1;
      w.local_pruned_batch += 1;
      continue;
    }
    if (placed + 1 == ctx.len) {
      handle_leaf(w);
      w.local_leaf_batch += 1;
    } else {
      if (!dfs(w, placed + 1)) {
        unplace(w);
        return false;
      }
    }
    unplace(w);
  }
  return true;
}

bool full_verify(const Program& program, Target target, kernels::Ordering ordering,
                 std::uint64_t fuel) {
  if (target == Target::sort3) {
    for (const verify::Domain& domain :
         {verify::Domain::make_patterns(), verify::Domain::make_grid(0, 3),
          verify::Domain::make_extremes()}) {
      if (!verify::verify_sorter(program, "candidate", domain, ordering, fuel).pass())
        return false;
    }
    return true;
  }

  // sort2: the analogous pair domains.
  auto check_pair = [&](std::int32_t a, std::int32_t b) {
    std::int32_t in[2] = {a, b};
    std::int32_t expected[2] = {a, b};
    kernels::oracle_sort2(expected, ordering);
    isa::RunResult r = isa::run(program, in, fuel);
    if (r.reason != isa::HaltReason::completed) return false;
    return r.output[0] == expected[0] && r.output[1] == expected[1];
  };
  for (auto [a, b] : {std::pair<std::int32_t, std::int32_t>{0, 0}, {0, 1}, {1, 0}})
    if (!check_pair(a, b)) return false;
  for (std::int32_t a = 0; a <= 3; ++a)
    for (std::int32_t b = 0; b <= 3; ++b)
      if (!check_pair(a, b)) return false;
  const std::int32_t extreme[] = {INT32_MIN, INT32_MIN + 1, -1, 0, 1, INT32_MAX - 1, INT32_MAX};
  for (std::int32_t a : extreme)
    for (std::int32_t b : extreme)
      if (!check_pair(a, b)) return false;
  return true;
}

struct LevelOutcome {
  bool complete = false;
  std::uint64_t leaves = 0;
  std::array<std::uint64_t, kReasonCount> pruned{};
  std::vector<FoundRecord> found;
};

LevelOutcome run_level(LevelCtx& ctx, const std::function<void(const Progress&)>& progress,
                       std::uint64_t leaves_before) {
  LevelOutcome outcome;

  // Split work by enumerating valid prefixes of length 2 serially, then
  // letting workers pull prefixes from a shared queue.
  if (ctx.len <= 2 || ctx.cfg->threads <= 1) {
    Walker w;
    init_walker(w, ctx);
    outcome.complete = dfs(w, 0);
    ctx.shared_leaves.fetch_add(w.local_leaf_batch, std::memory_order_relaxed);
    outcome.leaves = w.leaves;
    outcome.pruned = w.pruned;
    outcome.found = std::move(w.found);
    return outcome;
  }

  struct Prefix {
    int op0, op1;
  };
  std::vector<Prefix> prefixes;
  std::array<std::uint64_t, kReasonCount> prefix_pruned{};
  {
    Walker w;
    init_walker(w, ctx);
    for (int a = 0; a < static_cast<int>(ctx.ops.size()); ++a) {
      int ra = try_place(w, 0, ctx.ops[static_cast<std::size_t>(a)]);
      if (ra != kReasonCount) {
        prefix_pruned[static_cast<std::size_t>(ra)] += 1;
        continue;
      }
      for (int b = 0; b < static_cast<int>(ctx.ops.size()); ++b) {
        int rb = try_place(w, 1, ctx.ops[static_cast<std::size_t>(b)]);
        if (rb != kReasonCount) {
          prefix_pruned[static_cast<std::size_t>(rb)] += 1;
          continue;
        }
        prefixes.push_back({a, b});
        unplace(w);
      }
      unplace(w);
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<int> workers_done{0};
  std::vector<Walker> walkers(static_cast<std::size_t>(ctx.cfg->threads));
  std::vector<std::thread> threads;
  std::atomic<int> incomplete{0};

  for (int tid = 0; tid < ctx.cfg->threads; ++tid) {
    threads.emplace_back([&, tid] {
      Walker& w = walkers[static_cast<std::size_t>(tid)];
      init_walker(w, ctx);
      for (;;) {
        std::size_t mine = next.fetch_add(1, std::memory_order_relaxed);
        if (mine >= prefixes.size()) break;
        if (ctx.stop.load(std::memory_order_relaxed)) {
          incomplete.fetch_add(1, std::memory_order_relaxed);
          break;
        }
        const Prefix& p = prefixes[mine];
        try_place(w, 0, ctx.ops[static_cast<std::size_t>(p.op0)]);
        try_place(w, 1, ctx.ops[static_cast<std::size_t>(p.op1)]);
        bool done = dfs(w, 2);
        unplace(w);
        unplace(w);
        if (!done) {
          incomplete.fetch_add(1, std::memory_order_relaxed);
          break;
        }
      }
      ctx.shared_leaves.fetch_add(w.local_leaf_batch, std::memory_order_relaxed);
      w.local_leaf_batch = 0;
      workers_done.fetch_add(1, std::memory_order_release);
    });
  }

  // Progress polling while the workers drain the queue.
  auto last = std::chrono::steady_clock::now();
  std::uint64_t last_count = leaves_before + ctx.shared_leaves.load(std::memory_order_relaxed);
  while (workers_done.load(std::memory_order_acquire) < ctx.cfg->threads) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    if (!progress) continue;
    auto now = std::chrono::steady_clock::now();
    if (now - last < std::chrono::seconds(1)) continue;
    std::uint64_t count = leaves_before + ctx.shared_leaves.load(std::memory_order_relaxed);
    Progress p;
    p.current_length = ctx.len;
    p.candidates = count;
    p.pruned = ctx.shared_pruned.load(std::memory_order_relaxed);
    p.ops_tried = ctx.shared_ops.load(std::memory_order_relaxed);
    double dt = std::chrono::duration<double>(now - last).count();
    p.candidates_per_second = dt > 0 ? static_cast<double>(count - last_count) / dt : 0.0;
    last = now;
    last_count = count;
    progress(p);
  }
  for (auto& t : threads) t.join();

  outcome.complete = incomplete.load() == 0 && !ctx.stop.load();
  outcome.pruned = prefix_pruned;
  for (Walker& w : walkers) {
    outcome.leaves += w.leaves;
    for (std::size_t i = 0; i < kReasonCount; ++i) outcome.pruned[i] += w.pruned[i];
    for (FoundRecord& f : w.found) outcome.found.push_back(std::move(f));
  }
  return outcome;
}

}  // namespace

SearchResult search(const SearchConfig& config, const Cursor* resume, Cursor* cursor_out) {
  Resolved cfg = resolve_config(config);

  SearchResult result;
  result.target = cfg.target;
  result.ordering = cfg.ordering;
  result.max_len = cfg.max_len;

  Cursor snapshot;  // last completed level boundary
  int start_level = 1;
  if (resume) {
    start_level = std::max(1, resume->next_length);
    result.candidates_enumerated = resume->candidates_enumerated;
    result.pruned_by_reason = resume->pruned_by_reason;
    result.elapsed_seconds = resume->elapsed_seconds;
    snapshot = *resume;
  }
  result.completed_length = start_level - 1;

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double base_elapsed = result.elapsed_seconds;

  auto deadline = t0 + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                           std::chrono::duration<double>(cfg.budget_seconds));

  bool truncated = false;
  for (int len = start_level; len <= cfg.max_len; ++len) {
    LevelCtx ctx;
    ctx.cfg = &cfg;
    ctx.len = len;
    ctx.ops = expand_ops(cfg, len);
    ctx.base = base_program(cfg);
    if (cfg.allow_branches) {
      for (int t = 0; t <= len; ++t) ctx.base.labels["L" + std::to_string(t)] = t;
    }
    ctx.fuel = std::max<std::uint64_t>(1, 4 * static_cast<std::uint64_t>(len));
    if (cfg.target == Target::sort2) {
      ctx.vectors = 3;
      int v = 0;
      for (auto [a, b] : {std::pair<std::int32_t, std::int32_t>{0, 0}, {0, 1}, {1, 0}}) {
        ctx.inputs[static_cast<std::size_t>(v)] = {a, b, 0};
        std::int32_t e[2] = {a, b};
        kernels::oracle_sort2(e, cfg.ordering);
        ctx.expected[static_cast<std::size_t>(v)] = {e[0], e[1], 0};
        ++v;
      }
    } else {
      ctx.vectors = 13;
      int v = 0;
      for (const verify::Pattern& p : verify::patterns()) {
        ctx.inputs[static_cast<std::size_t>(v)] = p.representative;
        Triple e = p.representative;
        kernels::oracle_sort3(e.data(), cfg.ordering);
        ctx.expected[static_cast<std::size_t>(v)] = e;
        ++v;
      }
    }
    if (cfg.budget_seconds > 0) {
      ctx.deadline = deadline;
      ctx.has_deadline = true;
    }
    if (cfg.budget_candidates > 0) {
      std::uint64_t so_far = result.candidates_enumerated;
      ctx.candidate_cap =
          cfg.budget_candidates > so_far ? cfg.budget_candidates - so_far : 1;
    }

    LevelOutcome outcome = run_level(ctx, config.progress, result.candidates_enumerated);

    result.candidates_enumerated += outcome.leaves;
    for (std::size_t i = 0; i < kReasonCount; ++i) {
      if (outcome.pruned[i])
        result.pruned_by_reason[std::string(kReasonNames[i])] += outcome.pruned[i];
    }

    // Deduplicate by canonical rendering and keep whatever was found, even
    // when the budget cut the level short.
    if (!outcome.found.empty()) {
      std::sort(outcome.found.begin(), outcome.found.end(),
                [](const FoundRecord& a, const FoundRecord& b) { return a.rendering < b.rendering; });
      outcome.found.erase(std::unique(outcome.found.begin(), outcome.found.end(),
                                      [](const FoundRecord& a, const FoundRecord& b) {
                                        return a.rendering == b.rendering;
                                      }),
                          outcome.found.end());
      for (FoundRecord& f : outcome.found) {
        result.found.push_back(
            {std::move(f.program), len, isa::is_branchless(f.program)});
      }
    }

    if (!outcome.complete) {
      truncated = true;
      break;
    }
    result.completed_length = len;
    snapshot.next_length = len + 1;
    snapshot.candidates_enumerated = result.candidates_enumerated;
    snapshot.pruned_by_reason = result.pruned_by_reason;
    snapshot.elapsed_seconds = base_elapsed + elapsed();

    if (!result.found.empty()) break;  // minimal length proven; deeper levels cannot be minimal
  }

  result.exhausted = !truncated;
  result.elapsed_seconds = base_elapsed + elapsed();
  if (cursor_out) *cursor_out = snapshot;
  return result;
}

bool check_candidate(const isa::Program& program, Target target, Ordering ordering) {
  const std::uint64_t fuel =
      std::max<std::uint64_t>(1, 4 * static_cast<std::uint64_t>(program.instructions.size()));

  // Stage 1: the cheap pattern-representative filter.
  if (target == Target::sort3) {
    for (const verify::Pattern& p : verify::patterns()) {
      Triple expected = p.representative;
      kernels::oracle_sort3(expected.data(), ordering);
      isa::RunResult r = isa::run(program, p.representative, fuel);
      if (r.reason != isa::HaltReason::completed) return false;
      if (Triple{r.output[0], r.output[1], r.output[2]} != expected) return false;
    }
  } else {
    for (auto [a, b] : {std::pair<std::int32_t, std::int32_t>{0, 0}, {0, 1}, {1, 0}}) {
      std::int32_t in[2] = {a, b};
      std::int32_t expected[2] = {a, b};
      kernels::oracle_sort2(expected, ordering);
      isa::RunResult r = isa::run(program, in, fuel);
      if (r.reason != isa::HaltReason::completed) return false;
      if (r.output[0] != expected[0] || r.output[1] != expected[1]) return false;
    }
  }

  // Stage 2: full verification.
  return full_verify(program, target, ordering, fuel);
}

isa::Program canonicalize(const isa::Program& program) {
  std::vector<int> mapping(program.reg_names.size(), -1);
  int next = 0;
  auto visit = [&](int reg) {
    if (reg >= 0 && mapping[static_cast<std::size_t>(reg)] < 0)
      mapping[static_cast<std::size_t>(reg)] = next++;
  };
  auto visit_operand = [&](const Operand& o) {
    if (o.kind == Operand::Kind::reg) visit(o.reg);
    if (o.kind == Operand::Kind::mem) {
      visit(o.base);
      visit(o.index);
    }
  };
  for (const Instruction& ins : program.instructions) {
    visit_operand(ins.src);
    visit_operand(ins.dst);
  }

  Program out;
  out.reg_names.resize(static_cast<std::size_t>(next));
  out.reg_widths.resize(static_cast<std::size_t>(next));
  for (std::size_t old = 0; old < mapping.size(); ++old) {
    if (mapping[old] < 0) continue;  // unused registers are dropped
    out.reg_names[static_cast<std::size_t>(mapping[old])] = "r" + std::to_string(mapping[old]);
    out.reg_widths[static_cast<std::size_t>(mapping[old])] = program.reg_widths[old];
  }
  auto remap_operand = [&](Operand o) {
    if (o.kind == Operand::Kind::reg) o.reg = mapping[static_cast<std::size_t>(o.reg)];
    if (o.kind == Operand::Kind::mem) {
      if (o.base >= 0) o.base = mapping[static_cast<std::size_t>(o.base)];
      if (o.index >= 0) o.index = mapping[static_cast<std::size_t>(o.index)];
    }
    return o;
  };
  for (const Instruction& ins : program.instructions) {
    Instruction copy = ins;
    copy.src = remap_operand(ins.src);
    copy.dst = remap_operand(ins.dst);
    out.instructions.push_back(copy);
  }
  out.labels = program.labels;
  out.data_symbols = program.data_symbols;
  out.data_offsets = program.data_offsets;
  out.data = program.data;
  return out;
}

namespace {

RefutationRow make_row(const std::string& name, std::string_view source, Ordering ordering) {
  RefutationRow row;
  row.name = name;
  row.ordering = ordering;
  try {
    Program program = isa::parse_program(source);
    row.instructions = isa::instruction_count(program);
    row.branchless = isa::is_branchless(program);
    row.verified = check_candidate(program, Target::sort3, ordering);
  } catch (const isa::ParseError&) {
    row.verified = false;
  }
  return row;
}

}  // namespace

RefutationSummary refutation_summary() {
  return refutation_summary(assets::listing1_source(), assets::listing2_source());
}

RefutationSummary refutation_summary(std::string_view listing1_text,
                                     std::string_view listing2_text) {
  RefutationSummary summary;
  summary.rows.push_back(make_row("listing1", listing1_text, Ordering::signed32));
  summary.rows.push_back(make_row("listing2", listing2_text, Ordering::unsigned32));
  summary.claim_refuted = true;
  for (const RefutationRow& row : summary.rows) {
    if (!row.verified || row.instructions >= 17 || row.instructions <= 0)
      summary.claim_refuted = false;
  }
  return summary;
}

std::string SearchResult::to_json() const {
  json j;
  j["target"] = target_name(target);
  j["ordering"] = kernels::ordering_name(ordering);
  j["max_len"] = max_len;
  j["found"] = json::array();
  for (const FoundProgram& f : found) {
    j["found"].push_back({{"program", isa::render_program(f.program)},
                          {"length", f.length},
                          {"branchless", f.branchless}});
  }
  j["candidates_enumerated"] = candidates_enumerated;
  j["pruned_by_reason"] = pruned_by_reason;
  j["exhausted"] = exhausted;
  j["completed_length"] = completed_length;
  j["elapsed_seconds"] = elapsed_seconds;
  return j.dump(2);
}

std::string Cursor::to_json() const {
  json j;
  j["next_length"] = next_length;
  j["candidates_enumerated"] = candidates_enumerated;
  j["pruned_by_reason"] = pruned_by_reason;
  j["elapsed_seconds"] = elapsed_seconds;
  return j.dump(2);
}

std::optional<Cursor> Cursor::from_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  Cursor c;
  try {
    c.next_length = j.at("next_length").get<int>();
    c.candidates_enumerated = j.at("candidates_enumerated").get<std::uint64_t>();
    c.pruned_by_reason =
        j.at("pruned_by_reason").get<std::map<std::string, std::uint64_t>>();
    c.elapsed_seconds = j.at("elapsed_seconds").get<double>();
  } catch (const json::exception&) {
    return std::nullopt;
  }
  return c;
}

std::string RefutationSummary::to_json() const {
  json j;
  j["rows"] = json::array();
  for (const RefutationRow& row : rows) {
    j["rows"].push_back({{"name", row.name},
                         {"instructions", row.instructions},
                         {"branchless", row.branchless},
                         {"ordering", kernels::ordering_name(row.ordering)},
                         {"verified", row.verified}});
  }
  j["claim_refuted"] = claim_refuted;
  return j.dump(2);
}

std::string RefutationSummary::to_text() const {
  std::ostringstream out;
  out << "program    instructions  branchless  ordering  verified\n";
  for (const RefutationRow& row : rows) {
    out << row.name << std::string(11 - row.name.size(), ' ')
        << row.instructions << std::string(row.instructions >= 10 ? 12 : 13, ' ')
        << (row.branchless ? "yes" : "no ") << "         "
        << kernels::ordering_name(row.ordering)
        << std::string(10 - std::string(kernels::ordering_name(row.ordering)).size(), ' ')
        << (row.verified ? "pass" : "FAIL") << "\n";
  }
  out << "claim_refuted: " << (claim_refuted ? "true" : "false");
  if (claim_refuted) out << "  (correct sort3 programs exist below 17 instructions)";
  out << "\n";
  return out.str();
}

}  // namespace sort3lab::search
