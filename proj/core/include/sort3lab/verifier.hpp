#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sort3lab/isa.hpp"
#include "sort3lab/kernels.hpp"
#include "sort3lab/machine.hpp"

// Ordering-pattern enumeration and oracle-based checking of sort3 subjects
// (portable kernels or interpreted programs) over exhaustive and randomized
// test domains.

namespace sort3lab::verify {

using kernels::Ordering;
using kernels::Triple;

// One of the 13 ordering patterns three numbers can fall in.  The
// representative is the rank-compressed triple over {0,1,2}: its value set is
// a prefix {0}, {0,1} or {0,1,2}.
struct Pattern {
  int index = 0;
  Triple representative{};
};

// All 13 patterns in lexicographic order of their representatives.
const std::array<Pattern, 13>& patterns();

// Dense ranks of t under the ordering; the canonical member of t's pattern.
Triple representative_of(const Triple& t, Ordering ordering);

// Index of the pattern t belongs to.  classify(representative) is the identity.
int classify(const Triple& t, Ordering ordering);

struct Domain {
  enum class Kind : std::uint8_t { patterns, grid, random, extremes };

  Kind kind = Kind::patterns;
  std::int32_t lo = 0, hi = 0;   // grid
  std::uint64_t seed = 0;        // random
  std::uint64_t count = 0;       // random

  static Domain make_patterns();
  static Domain make_grid(std::int32_t lo, std::int32_t hi);
  static Domain make_random(std::uint64_t seed, std::uint64_t n);
  static Domain make_extremes();

  // "patterns", "grid:<lo>:<hi>", "random:<seed>:<n>", "extremes"
  std::string describe() const;
  // Parses the `describe` syntax; nullopt on malformed input.
  static std::optional<Domain> parse(std::string_view text);

  std::vector<Triple> cases() const;
};

struct Failure {
  Triple input{};
  Triple expected{};
  Triple actual{};
  std::string reason;  // "mismatch", "not a permutation of input", fuel/fault notes
};

struct VerifyReport {
  std::string subject;
  std::string domain;
  std::string ordering;
  std::uint64_t cases = 0;
  std::uint64_t failures_total = 0;
  std::vector<Failure> failures;  // first 16 only
  bool pass() const { return failures_total == 0; }

  std::string to_json() const;
  std::string to_text() const;
};

inline constexpr std::size_t kMaxRecordedFailures = 16;

// A subject maps an input triple to an output triple or a failure note.
struct Subject {
  std::string name;
  std::function<std::optional<Triple>(const Triple&, std::string& fault)> apply;
};

Subject kernel_subject(const kernels::Kernel& kernel, Ordering ordering);
Subject program_subject(std::string name, const isa::Program& program,
                        std::uint64_t fuel = isa::kDefaultFuel);

// Runs the subject over every case, comparing against the insertion-sort
// oracle under `ordering` and independently checking multiset preservation.
VerifyReport verify_sorter(const Subject& subject, const Domain& domain, Ordering ordering);

// Convenience overloads resolving a registered kernel name or a program.
VerifyReport verify_sorter(std::string_view kernel_name, const Domain& domain, Ordering ordering);
VerifyReport verify_sorter(const isa::Program& program, std::string_view name,
                           const Domain& domain, Ordering ordering,
                           std::uint64_t fuel = isa::kDefaultFuel);

}  // namespace sort3lab::verify
