#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

// Portable reference implementations of the three short sort3 algorithms plus
// the ground-truth oracle.  All kernels sort three 32-bit integers in place.
// Conditional selects are written in the branch-free ternary shape
// (load flag, two selects, store) rather than via min/max helpers, so the
// emitted code mirrors the assembly-level counterparts.

namespace sort3lab::kernels {

enum class Ordering : std::uint8_t { signed32, unsigned32 };

std::string_view ordering_name(Ordering o);

using Triple = std::array<std::int32_t, 3>;
using Pair = std::array<std::int32_t, 2>;

inline bool less(std::int32_t x, std::int32_t y, Ordering o) {
  return o == Ordering::signed32
             ? x < y
             : static_cast<std::uint32_t>(x) < static_cast<std::uint32_t>(y);
}

// Three data-independent compare-exchanges: (1,2), (0,2), (0,1).  Signed.
void sort3_network(std::int32_t* p);

// Loop form: conditionally swap (a,b), stop once b <= p[2], else rotate
// p[2] into b.  Signed; behaviourally identical to interpreting listing1.s.
void sort3_loop(std::int32_t* p);

// Table form: packs the three comparison outcomes into an index
// i = -4*[b<a] + 2*[c<b] + [c<a] and scatters a, b, c through an 8-entry
// destination table per value.  The comparison follows `ordering`.
void sort3_table(std::int32_t* p, Ordering ordering);

// Insertion sort of three values; the correctness reference for everything else.
void oracle_sort3(std::int32_t* p, Ordering ordering);

// Two-element conditional-select sort (signed) and its oracle.
void sort2_select(std::int32_t* p);
void oracle_sort2(std::int32_t* p, Ordering ordering);

// The 24-byte destination table used by sort3_table; entries equal to 9 are
// unreachable (they correspond to impossible comparison outcomes).
const std::array<std::int8_t, 24>& dest_table();

struct Kernel {
  std::string_view name;
  void (*fn)(std::int32_t*, Ordering);  // fixed-behaviour kernels ignore the ordering argument
  Ordering default_ordering;
};

// Registered kernels: "network", "loop", "table", "oracle".
const std::vector<Kernel>& kernel_registry();
const Kernel* find_kernel(std::string_view name);

}  // namespace sort3lab::kernels
