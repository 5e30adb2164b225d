#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Parsing, rendering and metrics for the AT&T-style assembly subset used by
// small fixed-size sort programs: mov / movsb (sign-extending byte load) /
// cmp / cmovg / jle / jmp / sbb / adc over named registers, a little-endian
// read-write buffer segment and a read-only data segment.
//
// Program files are UTF-8 text, one instruction or label per line.  Comments
// start with `//` or `#`.  A header block of `# reg <name> <width>` and
// `# data <name> = <byte>,<byte>,...` lines declares register widths and
// read-only data tables.  Inline-asm style `%=` label suffixes are accepted
// and stripped.

namespace sort3lab::isa {

enum class Width : std::uint8_t { byte = 1, dword = 4, qword = 8 };

enum class Opcode : std::uint8_t { mov, movsb_sx, cmp, cmovg, jle, jmp, sbb, adc };

std::string_view opcode_name(Opcode op);

struct Operand {
  enum class Kind : std::uint8_t { none, reg, imm, mem, label };

  Kind kind = Kind::none;
  int reg = -1;            // register index (kind == reg)
  std::int64_t imm = 0;    // immediate value (kind == imm)
  int sym = -1;            // data symbol index, -1 = buffer segment (kind == mem)
  std::int32_t disp = 0;   // signed displacement in bytes (kind == mem)
  int base = -1;           // base register index, -1 = none (kind == mem)
  int index = -1;          // index register index, -1 = none (kind == mem)
  std::uint8_t scale = 1;  // 1, 2, 4 or 8; meaningful only with an index register
  int target = -1;         // resolved instruction index (kind == label)

  static Operand make_reg(int r);
  static Operand make_imm(std::int64_t v);
  static Operand make_mem(int sym, std::int32_t disp, int base, int index, std::uint8_t scale);
  static Operand make_label(int target);

  bool operator==(const Operand&) const = default;
};

// Operands are stored in AT&T order: source first, destination second.
// jle/jmp carry a single label operand in `dst`.
struct Instruction {
  Opcode op = Opcode::mov;
  Width width = Width::dword;  // operation width; movsb_sx loads a byte and writes 64 bits
  Operand src;
  Operand dst;

  bool operator==(const Instruction&) const = default;
};

struct Program {
  std::vector<Instruction> instructions;
  std::vector<std::string> reg_names;           // register index -> name
  std::vector<Width> reg_widths;                // declared width per register
  std::map<std::string, int> labels;            // label -> instruction index in [0, len]
  std::vector<std::string> data_symbols;        // data symbol names
  std::vector<std::uint32_t> data_offsets;      // byte offset of each symbol in `data`
  std::vector<std::uint8_t> data;               // read-only data segment

  int reg_index(std::string_view name) const;   // -1 when absent
  bool operator==(const Program&) const = default;
};

struct ParseError : std::runtime_error {
  ParseError(int line, const std::string& message);
  int line;  // 1-based source line, 0 when not tied to a line
};

// Parses a program from source text.  Throws ParseError on unknown mnemonics,
// malformed operands, undefined or duplicate labels, or inconsistent widths.
Program parse_program(std::string_view text);

// Renders a program back to source text; parse_program(render_program(p)) == p.
std::string render_program(const Program& program);

// Number of instructions; labels are not instructions.
int instruction_count(const Program& program);

// True iff the program contains no jle/jmp.  cmovg is not a branch.
bool is_branchless(const Program& program);

inline constexpr int kMaxRegisters = 16;

}  // namespace sort3lab::isa
