#include "sort3lab/machine.hpp"

#include <cstring>

namespace sort3lab::isa {

namespace {

constexpr std::uint64_t mask_of(Width w) {
  switch (w) {
    case Width::byte: return 0xFFull;
    case Width::dword: return 0xFFFFFFFFull;
    case Width::qword: return ~0ull;
  }
  return ~0ull;
}

constexpr int bits_of(Width w) { return static_cast<int>(w) * 8; }

std::uint64_t read_reg(const MachineState& s, int r, Width w) {
  return s.regs[static_cast<std::size_t>(r)] & mask_of(w);
}

void write_reg(MachineState& s, int r, Width w, std::uint64_t v) {
  auto& slot = s.regs[static_cast<std::size_t>(r)];
  switch (w) {
    case Width::byte:
      slot = (slot & ~0xFFull) | (v & 0xFFull);  // byte writes preserve upper bits
      break;
    case Width::dword:
      slot = v & 0xFFFFFFFFull;  // dword writes zero the upper 32 bits
      break;
    case Width::qword:
      slot = v;
      break;
  }
}

std::uint64_t effective_address(const MachineState& s, const Program& p, const Operand& o) {
  std::uint64_t addr = o.sym >= 0 ? p.data_offsets[static_cast<std::size_t>(o.sym)] : 0;
  addr += static_cast<std::uint64_t>(static_cast<std::int64_t>(o.disp));
  if (o.base >= 0) addr += s.regs[static_cast<std::size_t>(o.base)];
  if (o.index >= 0) addr += s.regs[static_cast<std::size_t>(o.index)] * o.scale;
  return addr;
}

struct MemRef {
  const std::uint8_t* base = nullptr;  // segment start (read path)
  std::uint64_t addr = 0;
  bool in_data = false;
  bool ok = false;
};

MemRef resolve_mem(const MachineState& s, const Program& p, const Operand& o, unsigned bytes) {
  MemRef ref;
  ref.addr = effective_address(s, p, o);
  ref.in_data = o.sym >= 0;
  std::uint64_t limit = ref.in_data ? p.data.size() : s.buffer_size;
  // A wrapped (negative) address exceeds the segment limit as well.
  ref.ok = ref.addr <= limit && ref.addr + bytes <= limit;
  ref.base = ref.in_data ? p.data.data() : s.buffer.data();
  return ref;
}

std::uint64_t load_le(const std::uint8_t* p, unsigned bytes) {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void store_le(std::uint8_t* p, unsigned bytes, std::uint64_t v) {
  for (unsigned i = 0; i < bytes; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

struct FlagResult {
  std::uint64_t value;
  Flags flags;
};

FlagResult sub_with_borrow(std::uint64_t a, std::uint64_t b, bool borrow, Width w) {
  const std::uint64_t m = mask_of(w);
  const int top = bits_of(w) - 1;
  FlagResult r;
  r.value = (a - b - (borrow ? 1 : 0)) & m;
  r.flags.cf = a < b || (borrow && a == b);
  r.flags.zf = r.value == 0;
  r.flags.sf = (r.value >> top) & 1;
  r.flags.of = (((a ^ b) & (a ^ r.value)) >> top) & 1;
  return r;
}

FlagResult add_with_carry(std::uint64_t a, std::uint64_t b, bool carry, Width w) {
  const std::uint64_t m = mask_of(w);
  const int top = bits_of(w) - 1;
  FlagResult r;
  r.value = (a + b + (carry ? 1 : 0)) & m;
  r.flags.cf = r.value < a || (carry && r.value == a);
  r.flags.zf = r.value == 0;
  r.flags.sf = (r.value >> top) & 1;
  r.flags.of = (((a ^ r.value) & (b ^ r.value)) >> top) & 1;
  return r;
}

}  // namespace

std::int32_t MachineState::buffer_cell(int i) const {
  std::uint32_t v = 0;
  std::memcpy(&v, buffer.data() + 4 * i, 4);
  return static_cast<std::int32_t>(v);
}

void MachineState::set_buffer_cell(int i, std::int32_t v) {
  auto u = static_cast<std::uint32_t>(v);
  std::memcpy(buffer.data() + 4 * i, &u, 4);
}

StepStatus step(MachineState& state, const Program& program) {
  const Instruction& ins = program.instructions[static_cast<std::size_t>(state.ip)];
  const Width w = ins.width;
  const unsigned bytes = static_cast<unsigned>(w);

  // Reads an operand value, reporting faults without mutating state.
  auto read_operand = [&](const Operand& o, std::uint64_t& out) -> StepStatus {
    switch (o.kind) {
      case Operand::Kind::reg:
        out = read_reg(state, o.reg, w);
        return StepStatus::ok;
      case Operand::Kind::imm:
        out = static_cast<std::uint64_t>(o.imm) & mask_of(w);
        return StepStatus::ok;
      case Operand::Kind::mem: {
        MemRef ref = resolve_mem(state, program, o, bytes);
        if (!ref.ok) return StepStatus::bad_access;
        out = load_le(ref.base + ref.addr, bytes);
        return StepStatus::ok;
      }
      default:
        return StepStatus::bad_access;
    }
  };

  auto write_operand = [&](const Operand& o, std::uint64_t v) -> StepStatus {
    if (o.kind == Operand::Kind::reg) {
      write_reg(state, o.reg, w, v);
      return StepStatus::ok;
    }
    MemRef ref = resolve_mem(state, program, o, bytes);
    if (ref.in_data) return StepStatus::data_write;
    if (!ref.ok) return StepStatus::bad_access;
    store_le(state.buffer.data() + ref.addr, bytes, v);
    return StepStatus::ok;
  };

  auto retire_next = [&] {
    state.ip += 1;
    state.executed += 1;
  };

  switch (ins.op) {
    case Opcode::mov: {
      std::uint64_t v;
      if (auto st = read_operand(ins.src, v); st != StepStatus::ok) return st;
      // Probe the destination before writing so faults leave state untouched.
      if (auto st = write_operand(ins.dst, v); st != StepStatus::ok) return st;
      retire_next();
      return StepStatus::ok;
    }
    case Opcode::movsb_sx: {
      MemRef ref = resolve_mem(state, program, ins.src, 1);
      if (!ref.ok) return StepStatus::bad_access;
      auto byte = static_cast<std::int8_t>(ref.base[ref.addr]);
      // Sign-extends through all 64 bits regardless of the destination's
      // declared width.
      state.regs[static_cast<std::size_t>(ins.dst.reg)] =
          static_cast<std::uint64_t>(static_cast<std::int64_t>(byte));
      retire_next();
      return StepStatus::ok;
    }
    case Opcode::cmp: {
      std::uint64_t a, b;
      if (auto st = read_operand(ins.dst, a); st != StepStatus::ok) return st;
      if (auto st = read_operand(ins.src, b); st != StepStatus::ok) return st;
      state.flags = sub_with_borrow(a, b, false, w).flags;
      retire_next();
      return StepStatus::ok;
    }
    case Opcode::sbb: {
      std::uint64_t a, b;
      if (auto st = read_operand(ins.dst, a); st != StepStatus::ok) return st;
      if (auto st = read_operand(ins.src, b); st != StepStatus::ok) return st;
      FlagResult r = sub_with_borrow(a, b, state.flags.cf, w);
      if (auto st = write_operand(ins.dst, r.value); st != StepStatus::ok) return st;
      state.flags = r.flags;
      retire_next();
      return StepStatus::ok;
    }
    case Opcode::adc: {
      std::uint64_t a, b;
      if (auto st = read_operand(ins.dst, a); st != StepStatus::ok) return st;
      if (auto st = read_operand(ins.src, b); st != StepStatus::ok) return st;
      FlagResult r = add_with_carry(a, b, state.flags.cf, w);
      if (auto st = write_operand(ins.dst, r.value); st != StepStatus::ok) return st;
      state.flags = r.flags;
      retire_next();
      return StepStatus::ok;
    }
    case Opcode::cmovg: {
      std::uint64_t src, dst;
      if (auto st = read_operand(ins.src, src); st != StepStatus::ok) return st;
      if (auto st = read_operand(ins.dst, dst); st != StepStatus::ok) return st;
      bool greater = !state.flags.zf && state.flags.sf == state.flags.of;
      // The destination register is written either way (a dword cmov zeroes
      // the upper bits even when the move does not happen).
      write_reg(state, ins.dst.reg, w, greater ? src : dst);
      retire_next();
      return StepStatus::ok;
    }
    case Opcode::jle: {
      bool le = state.flags.zf || state.flags.sf != state.flags.of;
      state.ip = le ? ins.dst.target : state.ip + 1;
      state.executed += 1;
      return StepStatus::ok;
    }
    case Opcode::jmp: {
      state.ip = ins.dst.target;
      state.executed += 1;
      return StepStatus::ok;
    }
  }
  return StepStatus::bad_access;
}

std::string_view halt_reason_name(HaltReason reason) {
  switch (reason) {
    case HaltReason::completed: return "completed";
    case HaltReason::out_of_fuel: return "out_of_fuel";
    case HaltReason::memory_fault: return "memory_fault";
  }
  return "?";
}

RunResult run(const Program& program, std::span<const std::int32_t> input, std::uint64_t fuel) {
  MachineState state;
  state.buffer_size = static_cast<std::uint32_t>(4 * input.size());
  for (std::size_t i = 0; i < input.size(); ++i)
    state.set_buffer_cell(static_cast<int>(i), input[i]);

  RunResult result;
  result.cells = static_cast<int>(input.size());

  const auto len = static_cast<std::int32_t>(program.instructions.size());
  while (state.ip < len) {
    if (state.executed >= fuel) {
      result.reason = HaltReason::out_of_fuel;
      result.executed = state.executed;
      return result;
    }
    const std::int32_t before = state.ip;
    StepStatus status = step(state, program);
    if (status != StepStatus::ok) {
      result.reason = HaltReason::memory_fault;
      result.executed = state.executed;
      result.fault = std::string(status == StepStatus::data_write
                                     ? "write to the read-only data segment"
                                     : "memory access outside segment bounds") +
                     " at instruction " + std::to_string(before);
      return result;
    }
    if (state.ip <= before) result.backward_jumps += 1;
  }

  result.reason = HaltReason::completed;
  result.executed = state.executed;
  for (int i = 0; i < result.cells; ++i) result.output[static_cast<std::size_t>(i)] = state.buffer_cell(i);
  return result;
}

}  // namespace sort3lab::isa
