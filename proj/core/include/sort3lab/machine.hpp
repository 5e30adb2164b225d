#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

#include "sort3lab/isa.hpp"

// Execution model for the assembly subset.  A MachineState is a value:
// registers, the four status flags, a small little-endian buffer segment
// (the array being sorted) and an instruction pointer.  The read-only data
// segment lives in the Program.

namespace sort3lab::isa {

struct Flags {
  bool cf = false;  // unsigned borrow / carry
  bool zf = false;
  bool sf = false;
  bool of = false;

  bool operator==(const Flags&) const = default;
};

inline constexpr std::uint32_t kMaxBufferBytes = 16;
inline constexpr std::uint64_t kDefaultFuel = 1024;

struct MachineState {
  std::array<std::uint64_t, kMaxRegisters> regs{};
  Flags flags;
  std::array<std::uint8_t, kMaxBufferBytes> buffer{};
  std::uint32_t buffer_size = 12;
  std::int32_t ip = 0;
  std::uint64_t executed = 0;

  std::int32_t buffer_cell(int i) const;         // little-endian dword at byte offset 4*i
  void set_buffer_cell(int i, std::int32_t v);
};

enum class StepStatus : std::uint8_t {
  ok,
  bad_access,   // effective address outside the addressed segment
  data_write,   // store into the read-only data segment
};

// Executes exactly one instruction.  Precondition: 0 <= ip < instruction count.
// On a fault the state is left unmodified except for `executed`/`ip` which are
// untouched; the caller decides how to report it.
StepStatus step(MachineState& state, const Program& program);

enum class HaltReason : std::uint8_t { completed, out_of_fuel, memory_fault };

std::string_view halt_reason_name(HaltReason reason);

struct RunResult {
  std::array<std::int32_t, 3> output{};  // first `cells` entries are meaningful
  int cells = 0;
  std::uint64_t executed = 0;
  std::uint64_t backward_jumps = 0;      // retired jumps whose target is <= their own index
  HaltReason reason = HaltReason::completed;
  std::string fault;                     // set when reason == memory_fault
};

// Loads `input` little-endian into the buffer (2 or 3 dwords), zeroes all
// registers and flags, and executes until the instruction pointer falls off
// the end or `fuel` instructions have retired.
RunResult run(const Program& program, std::span<const std::int32_t> input,
              std::uint64_t fuel = kDefaultFuel);

}  // namespace sort3lab::isa
