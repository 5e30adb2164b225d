#include "sort3lab/isa.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace sort3lab::isa {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

bool is_ident(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_ident_char);
}

// Strips a trailing inline-asm uniquifier ("loop_start%=" -> "loop_start").
std::string_view strip_uniquifier(std::string_view s) {
  if (s.size() >= 2 && s.substr(s.size() - 2) == "%=") s.remove_suffix(2);
  return s;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) return std::nullopt;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    base = 16;
    s.remove_prefix(2);
  }
  std::uint64_t magnitude = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), magnitude, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  auto value = static_cast<std::int64_t>(magnitude);
  return negative ? -value : value;
}

// Natural widths for conventional x86-64 register names; anything else
// defaults to qword unless declared in the header.
std::optional<Width> conventional_width(std::string_view name) {
  static const std::unordered_map<std::string_view, Width> table = [] {
    std::unordered_map<std::string_view, Width> t;
    for (auto r : {"eax", "ebx", "ecx", "edx", "esi", "edi", "esp", "ebp"}) t[r] = Width::dword;
    for (auto r : {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rsp", "rbp"}) t[r] = Width::qword;
    for (auto r : {"al", "bl", "cl", "dl", "sil", "dil", "spl", "bpl"}) t[r] = Width::byte;
    return t;
  }();
  if (auto it = table.find(name); it != table.end()) return it->second;
  if (name.size() >= 2 && name[0] == 'r' && std::isdigit(static_cast<unsigned char>(name[1]))) {
    std::size_t digits = 1;
    while (1 + digits < name.size() && std::isdigit(static_cast<unsigned char>(name[1 + digits])))
      ++digits;
    std::string_view num = name.substr(1, digits);
    std::string_view rest = name.substr(1 + digits);
    if (num == "8" || num == "9" || num == "10" || num == "11" || num == "12" || num == "13" ||
        num == "14" || num == "15") {
      if (rest.empty()) return Width::qword;
      if (rest == "d") return Width::dword;
      if (rest == "b") return Width::byte;
    }
  }
  return std::nullopt;
}

std::optional<Width> width_from_name(std::string_view s) {
  if (s == "byte") return Width::byte;
  if (s == "dword") return Width::dword;
  if (s == "qword") return Width::qword;
  return std::nullopt;
}

std::string_view width_name(Width w) {
  switch (w) {
    case Width::byte: return "byte";
    case Width::dword: return "dword";
    case Width::qword: return "qword";
  }
  return "?";
}

struct MnemonicInfo {
  Opcode op;
  std::optional<Width> suffix;  // explicit operation width, if the spelling carries one
};

std::optional<MnemonicInfo> lookup_mnemonic(std::string_view m) {
  static const std::unordered_map<std::string_view, MnemonicInfo> table = {
      {"mov", {Opcode::mov, std::nullopt}},
      {"movl", {Opcode::mov, Width::dword}},
      {"movq", {Opcode::mov, Width::qword}},
      {"movsb", {Opcode::movsb_sx, std::nullopt}},
      {"movsbq", {Opcode::movsb_sx, std::nullopt}},
      {"cmp", {Opcode::cmp, std::nullopt}},
      {"cmpl", {Opcode::cmp, Width::dword}},
      {"cmpq", {Opcode::cmp, Width::qword}},
      {"cmovg", {Opcode::cmovg, std::nullopt}},
      {"cmovgl", {Opcode::cmovg, Width::dword}},
      {"cmovgq", {Opcode::cmovg, Width::qword}},
      {"jle", {Opcode::jle, std::nullopt}},
      {"jmp", {Opcode::jmp, std::nullopt}},
      {"sbb", {Opcode::sbb, std::nullopt}},
      {"sbbl", {Opcode::sbb, Width::dword}},
      {"sbbq", {Opcode::sbb, Width::qword}},
      {"adc", {Opcode::adc, std::nullopt}},
      {"adcl", {Opcode::adc, Width::dword}},
      {"adcq", {Opcode::adc, Width::qword}},
  };
  auto it = table.find(m);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

// Splits an operand list on commas that are not inside parentheses.
std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(') ++depth;
    else if (s[i] == ')') --depth;
    else if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

struct ParserState {
  Program prog;
  // Width authority: header-declared or conventionally named registers pin
  // the operation width; other names merely default to qword.
  std::vector<bool> reg_authoritative;

  int intern_reg(std::string_view name, int line) {
    if (int idx = prog.reg_index(name); idx >= 0) return idx;
    if (static_cast<int>(prog.reg_names.size()) >= kMaxRegisters)
      throw ParseError(line, "too many registers (limit " + std::to_string(kMaxRegisters) + ")");
    auto conventional = conventional_width(name);
    prog.reg_names.emplace_back(name);
    prog.reg_widths.push_back(conventional.value_or(Width::qword));
    reg_authoritative.push_back(conventional.has_value());
    return static_cast<int>(prog.reg_names.size()) - 1;
  }
};

// Parses "%name" or "%[name]".
std::optional<std::string_view> parse_reg_name(std::string_view s) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '%') return std::nullopt;
  s.remove_prefix(1);
  if (s.front() == '[') {
    if (s.back() != ']') return std::nullopt;
    s = s.substr(1, s.size() - 2);
  }
  if (!is_ident(s)) return std::nullopt;
  return s;
}

Operand parse_memory_operand(ParserState& ps, std::string_view text, int line) {
  std::string_view disp_part = text;
  std::string_view paren_part;
  if (auto open = text.find('('); open != std::string_view::npos) {
    if (text.back() != ')') throw ParseError(line, "malformed memory operand: " + std::string(text));
    disp_part = trim(text.substr(0, open));
    paren_part = text.substr(open + 1, text.size() - open - 2);
  }

  Operand op;
  op.kind = Operand::Kind::mem;

  if (!disp_part.empty()) {
    std::string_view sym_part, offset_part;
    if (std::isalpha(static_cast<unsigned char>(disp_part.front())) || disp_part.front() == '_') {
      std::size_t split = disp_part.find_first_of("+-");
      sym_part = trim(disp_part.substr(0, split));
      if (split != std::string_view::npos) offset_part = trim(disp_part.substr(split));
    } else {
      offset_part = disp_part;
    }
    if (!sym_part.empty()) {
      auto it = std::find(ps.prog.data_symbols.begin(), ps.prog.data_symbols.end(), sym_part);
      if (it == ps.prog.data_symbols.end())
        throw ParseError(line, "unknown data symbol: " + std::string(sym_part));
      op.sym = static_cast<int>(it - ps.prog.data_symbols.begin());
    }
    if (!offset_part.empty()) {
      auto v = parse_int(offset_part);
      if (!v || *v < INT32_MIN || *v > INT32_MAX)
        throw ParseError(line, "malformed displacement: " + std::string(disp_part));
      op.disp = static_cast<std::int32_t>(*v);
    }
  }

  if (!paren_part.empty() || text.find('(') != std::string_view::npos) {
    auto parts = split_operands(paren_part);
    if (parts.empty() || parts.size() > 3)
      throw ParseError(line, "malformed memory operand: " + std::string(text));
    if (!parts[0].empty()) {
      auto base = parse_reg_name(parts[0]);
      if (!base) throw ParseError(line, "malformed base register: " + std::string(parts[0]));
      op.base = ps.intern_reg(*base, line);
    }
    if (parts.size() >= 2) {
      auto index = parse_reg_name(parts[1]);
      if (!index) throw ParseError(line, "malformed index register: " + std::string(parts[1]));
      op.index = ps.intern_reg(*index, line);
      op.scale = 1;
      if (parts.size() == 3) {
        auto scale = parse_int(parts[2]);
        if (!scale || (*scale != 1 && *scale != 2 && *scale != 4 && *scale != 8))
          throw ParseError(line, "scale must be 1, 2, 4 or 8");
        op.scale = static_cast<std::uint8_t>(*scale);
      }
    }
  }
  return op;
}

Operand parse_operand(ParserState& ps, std::string_view text, bool jump_target, int line,
                      std::string* label_out) {
  text = trim(text);
  if (text.empty()) throw ParseError(line, "empty operand");

  if (jump_target) {
    std::string_view name = strip_uniquifier(text);
    if (!is_ident(name)) throw ParseError(line, "malformed label operand: " + std::string(text));
    *label_out = std::string(name);
    Operand op;
    op.kind = Operand::Kind::label;
    return op;
  }

  if (text.front() == '%') {
    auto name = parse_reg_name(text);
    if (!name) throw ParseError(line, "malformed register operand: " + std::string(text));
    return Operand::make_reg(ps.intern_reg(*name, line));
  }

  if (text.front() == '$') {
    auto v = parse_int(text.substr(1));
    if (!v) throw ParseError(line, "malformed immediate: " + std::string(text));
    return Operand::make_imm(*v);
  }

  return parse_memory_operand(ps, text, line);
}

void handle_directive(ParserState& ps, std::string_view body, int line) {
  body = trim(body);
  if (body.rfind("reg ", 0) == 0) {
    std::istringstream in{std::string(body)};
    std::string kw, name, width;
    in >> kw >> name >> width;
    std::string extra;
    if (!(in >> extra).eof() || name.empty() || width.empty())
      throw ParseError(line, "malformed register declaration");
    auto w = width_from_name(width);
    if (!w) throw ParseError(line, "unknown register width: " + width);
    if (ps.prog.reg_index(name) >= 0) throw ParseError(line, "duplicate register declaration: " + name);
    int idx = ps.intern_reg(name, line);
    ps.prog.reg_widths[idx] = *w;
    ps.reg_authoritative[idx] = true;
    return;
  }
  if (body.rfind("data ", 0) == 0) {
    std::size_t eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "malformed data declaration");
    std::string name{trim(body.substr(5, eq - 5))};
    if (!is_ident(name)) throw ParseError(line, "malformed data symbol name: " + name);
    if (std::find(ps.prog.data_symbols.begin(), ps.prog.data_symbols.end(), name) !=
        ps.prog.data_symbols.end())
      throw ParseError(line, "duplicate data symbol: " + name);
    std::vector<std::uint8_t> bytes;
    for (std::string_view item : split_operands(body.substr(eq + 1))) {
      auto v = parse_int(item);
      if (!v || *v < -128 || *v > 255)
        throw ParseError(line, "data byte out of range: " + std::string(item));
      bytes.push_back(static_cast<std::uint8_t>(*v & 0xFF));
    }
    if (bytes.empty()) throw ParseError(line, "empty data table: " + name);
    ps.prog.data_symbols.push_back(name);
    ps.prog.data_offsets.push_back(static_cast<std::uint32_t>(ps.prog.data.size()));
    ps.prog.data.insert(ps.prog.data.end(), bytes.begin(), bytes.end());
    return;
  }
  // Any other "#" line is a plain comment.
}

Width infer_width(const ParserState& ps, const Instruction& ins,
                  std::optional<Width> suffix, int line) {
  if (ins.op == Opcode::movsb_sx) return Width::byte;
  if (ins.op == Opcode::jle || ins.op == Opcode::jmp) return Width::qword;

  std::optional<Width> pinned;   // from declared/conventional registers
  bool has_reg_operand = false;
  for (const Operand* o : {&ins.src, &ins.dst}) {
    if (o->kind != Operand::Kind::reg) continue;
    has_reg_operand = true;
    if (!ps.reg_authoritative[static_cast<std::size_t>(o->reg)]) continue;
    Width w = ps.prog.reg_widths[static_cast<std::size_t>(o->reg)];
    if (pinned && *pinned != w)
      throw ParseError(line, "operand width mismatch between registers");
    pinned = w;
  }
  if (suffix) return *suffix;  // an explicit suffix always wins
  if (pinned) return *pinned;
  if (has_reg_operand) return Width::qword;  // undeclared names default to qword
  throw ParseError(line, "cannot infer operation width; use a width suffix");
}

void validate_shapes(const Instruction& ins, int line) {
  auto kind = [](const Operand& o) { return o.kind; };
  using K = Operand::Kind;
  switch (ins.op) {
    case Opcode::jle:
    case Opcode::jmp:
      return;
    case Opcode::movsb_sx:
      if (kind(ins.src) != K::mem) throw ParseError(line, "movsb source must be a memory operand");
      if (kind(ins.dst) != K::reg) throw ParseError(line, "movsb destination must be a register");
      return;
    case Opcode::cmovg:
      if (kind(ins.dst) != K::reg) throw ParseError(line, "cmovg destination must be a register");
      if (kind(ins.src) == K::imm) throw ParseError(line, "cmovg source cannot be an immediate");
      return;
    default:
      if (kind(ins.src) == K::mem && kind(ins.dst) == K::mem)
        throw ParseError(line, "at most one memory operand is allowed");
      if (kind(ins.dst) == K::imm) throw ParseError(line, "destination cannot be an immediate");
      return;
  }
}

struct Line {
  int number;
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 1;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back({number++, text.substr(start, end - start)});
    start = end + 1;
    if (end == text.size()) break;
  }
  return lines;
}

// Removes `//` and `#` comments from an instruction/label line.
std::string_view strip_comments(std::string_view s) {
  if (auto pos = s.find("//"); pos != std::string_view::npos) s = s.substr(0, pos);
  if (auto pos = s.find('#'); pos != std::string_view::npos) s = s.substr(0, pos);
  return trim(s);
}

}  // namespace

Operand Operand::make_reg(int r) {
  Operand o;
  o.kind = Kind::reg;
  o.reg = r;
  return o;
}

Operand Operand::make_imm(std::int64_t v) {
  Operand o;
  o.kind = Kind::imm;
  o.imm = v;
  return o;
}

Operand Operand::make_mem(int sym, std::int32_t disp, int base, int index, std::uint8_t scale) {
  Operand o;
  o.kind = Kind::mem;
  o.sym = sym;
  o.disp = disp;
  o.base = base;
  o.index = index;
  o.scale = scale;
  return o;
}

Operand Operand::make_label(int target) {
  Operand o;
  o.kind = Kind::label;
  o.target = target;
  return o;
}

std::string_view opcode_name(Opcode op) {
  switch (op) {
    case Opcode::mov: return "mov";
    case Opcode::movsb_sx: return "movsb";
    case Opcode::cmp: return "cmp";
    case Opcode::cmovg: return "cmovg";
    case Opcode::jle: return "jle";
    case Opcode::jmp: return "jmp";
    case Opcode::sbb: return "sbb";
    case Opcode::adc: return "adc";
  }
  return "?";
}

int Program::reg_index(std::string_view name) const {
  for (std::size_t i = 0; i < reg_names.size(); ++i)
    if (reg_names[i] == name) return static_cast<int>(i);
  return -1;
}

ParseError::ParseError(int line_number, const std::string& message)
    : std::runtime_error(line_number > 0 ? "line " + std::to_string(line_number) + ": " + message
                                         : message),
      line(line_number) {}

Program parse_program(std::string_view text) {
  ParserState ps;
  auto lines = split_lines(text);

  // Pass 1: header directives (register widths, data tables).
  for (const Line& ln : lines) {
    std::string_view s = trim(ln.text);
    if (!s.empty() && s.front() == '#') handle_directive(ps, s.substr(1), ln.number);
  }

  // Pass 2: labels and instructions.
  struct PendingLabel {
    std::size_t instr;
    std::string name;
    int line;
  };
  std::vector<PendingLabel> pending;

  for (const Line& ln : lines) {
    std::string_view s = trim(ln.text);
    if (s.empty() || s.front() == '#') continue;
    s = strip_comments(s);
    if (s.empty()) continue;

    if (s.back() == ':') {
      std::string_view name = strip_uniquifier(trim(s.substr(0, s.size() - 1)));
      if (!is_ident(name)) throw ParseError(ln.number, "malformed label: " + std::string(s));
      auto [it, inserted] =
          ps.prog.labels.emplace(std::string(name), static_cast<int>(ps.prog.instructions.size()));
      if (!inserted) throw ParseError(ln.number, "duplicate label: " + std::string(name));
      continue;
    }

    std::size_t msplit = s.find_first_of(" \t");
    std::string_view mnemonic = s.substr(0, msplit);
    auto info = lookup_mnemonic(mnemonic);
    if (!info) throw ParseError(ln.number, "unknown mnemonic: " + std::string(mnemonic));

    auto operands = split_operands(msplit == std::string_view::npos ? "" : s.substr(msplit));
    bool is_jump = info->op == Opcode::jle || info->op == Opcode::jmp;
    if (is_jump && operands.size() != 1)
      throw ParseError(ln.number, std::string(mnemonic) + " takes exactly one label operand");
    if (!is_jump && operands.size() != 2)
      throw ParseError(ln.number, std::string(mnemonic) + " takes exactly two operands");

    Instruction ins;
    ins.op = info->op;
    std::string label_name;
    if (is_jump) {
      ins.dst = parse_operand(ps, operands[0], true, ln.number, &label_name);
      pending.push_back({ps.prog.instructions.size(), label_name, ln.number});
    } else {
      ins.src = parse_operand(ps, operands[0], false, ln.number, nullptr);
      ins.dst = parse_operand(ps, operands[1], false, ln.number, nullptr);
    }
    validate_shapes(ins, ln.number);
    ins.width = infer_width(ps, ins, info->suffix, ln.number);
    ps.prog.instructions.push_back(ins);
  }

  for (const PendingLabel& p : pending) {
    auto it = ps.prog.labels.find(p.name);
    if (it == ps.prog.labels.end()) throw ParseError(p.line, "undefined label: " + p.name);
    ps.prog.instructions[p.instr].dst.target = it->second;
  }

  return std::move(ps.prog);
}

namespace {

std::string render_operand(const Program& p, const Operand& o) {
  switch (o.kind) {
    case Operand::Kind::reg:
      return "%[" + p.reg_names[o.reg] + "]";
    case Operand::Kind::imm:
      return "$" + std::to_string(o.imm);
    case Operand::Kind::mem: {
      std::string out;
      if (o.sym >= 0) {
        out += p.data_symbols[o.sym];
        if (o.disp > 0) out += "+" + std::to_string(o.disp);
        if (o.disp < 0) out += std::to_string(o.disp);
      } else if (o.disp != 0 || (o.base < 0 && o.index < 0)) {
        out += std::to_string(o.disp);
      }
      if (o.base >= 0 || o.index >= 0) {
        out += "(";
        if (o.base >= 0) out += "%[" + p.reg_names[o.base] + "]";
        if (o.index >= 0) {
          out += ",%[" + p.reg_names[o.index] + "]," + std::to_string(o.scale);
        }
        out += ")";
      }
      return out;
    }
    case Operand::Kind::label:
    case Operand::Kind::none:
      return "";
  }
  return "";
}

// What parse_program would infer for this instruction without a suffix;
// nullopt when inference would fail or mismatch.
std::optional<Width> renderer_inferred_width(const Program& p, const Instruction& ins) {
  std::optional<Width> inferred;
  for (const Operand* o : {&ins.src, &ins.dst}) {
    if (o->kind != Operand::Kind::reg) continue;
    Width w = p.reg_widths[o->reg];
    if (inferred && *inferred != w) return std::nullopt;
    inferred = w;
  }
  return inferred;
}

}  // namespace

std::string render_program(const Program& program) {
  std::string out;
  for (std::size_t i = 0; i < program.reg_names.size(); ++i) {
    out += "# reg " + program.reg_names[i] + " " +
           std::string(width_name(program.reg_widths[i])) + "\n";
  }
  for (std::size_t i = 0; i < program.data_symbols.size(); ++i) {
    out += "# data " + program.data_symbols[i] + " =";
    std::uint32_t begin = program.data_offsets[i];
    std::uint32_t end = i + 1 < program.data_offsets.size()
                            ? program.data_offsets[i + 1]
                            : static_cast<std::uint32_t>(program.data.size());
    for (std::uint32_t b = begin; b < end; ++b) {
      out += (b == begin ? " " : ",");
      out += std::to_string(static_cast<int>(static_cast<std::int8_t>(program.data[b])));
    }
    out += "\n";
  }

  std::multimap<int, std::string_view> labels_at;
  for (const auto& [name, index] : program.labels) labels_at.emplace(index, name);

  int len = static_cast<int>(program.instructions.size());
  for (int i = 0; i <= len; ++i) {
    for (auto [it, stop] = labels_at.equal_range(i); it != stop; ++it)
      out += std::string(it->second) + ":\n";
    if (i == len) break;
    const Instruction& ins = program.instructions[i];
    std::string mnemonic{opcode_name(ins.op)};
    if (ins.op != Opcode::movsb_sx && ins.op != Opcode::jle && ins.op != Opcode::jmp) {
      if (renderer_inferred_width(program, ins) != ins.width)
        mnemonic += ins.width == Width::dword ? "l" : "q";
    }
    if (ins.op == Opcode::jle || ins.op == Opcode::jmp) {
      std::string_view target_name = "?";
      for (const auto& [name, index] : program.labels)
        if (index == ins.dst.target) target_name = name;
      out += mnemonic + " " + std::string(target_name) + "\n";
    } else {
      out += mnemonic + " " + render_operand(program, ins.src) + ", " +
             render_operand(program, ins.dst) + "\n";
    }
  }
  return out;
}

int instruction_count(const Program& program) {
  return static_cast<int>(program.instructions.size());
}

bool is_branchless(const Program& program) {
  return std::none_of(program.instructions.begin(), program.instructions.end(),
                      [](const Instruction& i) {
                        return i.op == Opcode::jle || i.op == Opcode::jmp;
                      });
}

}  // namespace sort3lab::isa
