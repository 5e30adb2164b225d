#include <doctest.h>

#include <algorithm>
#include <array>

#include "sort3lab/assets.hpp"
#include "sort3lab/kernels.hpp"
#include "sort3lab/machine.hpp"
#include "sort3lab/rng.hpp"

using namespace sort3lab;
using kernels::Ordering;
using kernels::Triple;

namespace {

// Independent reference for the oracle itself.
Triple std_sorted(Triple t, Ordering o) {
  if (o == Ordering::signed32) {
    std::sort(t.begin(), t.end());
  } else {
    std::sort(t.begin(), t.end(), [](std::int32_t a, std::int32_t b) {
      return static_cast<std::uint32_t>(a) < static_cast<std::uint32_t>(b);
    });
  }
  return t;
}

Triple apply(void (*fn)(std::int32_t*), Triple t) {
  fn(t.data());
  return t;
}

Triple apply_table(Triple t, Ordering o) {
  kernels::sort3_table(t.data(), o);
  return t;
}

const std::array<Triple, 13> kReps = {{{0, 0, 0},
                                       {0, 0, 1},
                                       {0, 1, 0},
                                       {0, 1, 1},
                                       {0, 1, 2},
                                       {0, 2, 1},
                                       {1, 0, 0},
                                       {1, 0, 1},
                                       {1, 0, 2},
                                       {1, 1, 0},
                                       {1, 2, 0},
                                       {2, 0, 1},
                                       {2, 1, 0}}};

}  // namespace

TEST_CASE("sort3_network examples") {
  CHECK(apply(kernels::sort3_network, {1, 2, 3}) == Triple{1, 2, 3});
  CHECK(apply(kernels::sort3_network, {3, 2, 1}) == std_sorted({3, 2, 1}, Ordering::signed32));
  for (const Triple& t : kReps) {
    Triple out = apply(kernels::sort3_network, t);
    CHECK(std::is_sorted(out.begin(), out.end()));
  }
}

TEST_CASE("sort3_loop examples") {
  CHECK(apply(kernels::sort3_loop, {2, 1, 0}) == Triple{0, 1, 2});
  CHECK(apply(kernels::sort3_loop, {0, 0, 0}) == Triple{0, 0, 0});
  CHECK(apply(kernels::sort3_loop, {-5, 7, -5}) == Triple{-5, -5, 7});
}

TEST_CASE("sort3_table examples") {
  CHECK(apply_table({0, 1, 2}, Ordering::signed32) == Triple{0, 1, 2});
  CHECK(apply_table({3, 1, 2}, Ordering::signed32) == Triple{1, 2, 3});
  // Unsigned: 0xFFFFFFFF is the largest value.
  CHECK(apply_table({-1, 0, 0}, Ordering::unsigned32) == Triple{0, 0, -1});
}

TEST_CASE("oracle_sort3 examples") {
  Triple t{2, 0, 1};
  kernels::oracle_sort3(t.data(), Ordering::signed32);
  CHECK(t == Triple{0, 1, 2});
  t = {1, 1, 0};
  kernels::oracle_sort3(t.data(), Ordering::signed32);
  CHECK(t == Triple{0, 1, 1});
  t = {-1, 0, 0};
  kernels::oracle_sort3(t.data(), Ordering::unsigned32);
  CHECK(t == Triple{0, 0, -1});
}

TEST_CASE("oracle matches std::sort on exhaustive and random domains") {
  SplitMix64 rng(7);
  for (Ordering o : {Ordering::signed32, Ordering::unsigned32}) {
    for (std::int32_t a = -2; a <= 2; ++a)
      for (std::int32_t b = -2; b <= 2; ++b)
        for (std::int32_t c = -2; c <= 2; ++c) {
          Triple t{a, b, c};
          kernels::oracle_sort3(t.data(), o);
          CHECK(t == std_sorted({a, b, c}, o));
        }
    for (int k = 0; k < 20000; ++k) {
      Triple in{rng.next_i32(), rng.next_i32(), rng.next_i32()};
      Triple t = in;
      kernels::oracle_sort3(t.data(), o);
      CHECK(t == std_sorted(in, o));
    }
  }
}

TEST_CASE("kernels agree with the oracle and preserve the multiset") {
  SplitMix64 rng(123);
  auto check_one = [&](const Triple& in) {
    Triple expected_signed = std_sorted(in, Ordering::signed32);
    CHECK(apply(kernels::sort3_network, in) == expected_signed);
    CHECK(apply(kernels::sort3_loop, in) == expected_signed);
    CHECK(apply_table(in, Ordering::signed32) == expected_signed);
    CHECK(apply_table(in, Ordering::unsigned32) == std_sorted(in, Ordering::unsigned32));

    Triple out = apply(kernels::sort3_network, in);
    CHECK(std::is_permutation(out.begin(), out.end(), in.begin()));
  };

  for (std::int32_t a = -2; a <= 2; ++a)
    for (std::int32_t b = -2; b <= 2; ++b)
      for (std::int32_t c = -2; c <= 2; ++c) check_one({a, b, c});
  for (int k = 0; k < 100000; ++k)
    check_one({rng.next_i32(), rng.next_i32(), rng.next_i32()});
}

TEST_CASE("sorting a sorted triple is the identity") {
  SplitMix64 rng(55);
  for (int k = 0; k < 1000; ++k) {
    Triple t = std_sorted({rng.next_i32(), rng.next_i32(), rng.next_i32()}, Ordering::signed32);
    CHECK(apply(kernels::sort3_network, t) == t);
    CHECK(apply(kernels::sort3_loop, t) == t);
  }
}

TEST_CASE("sort2 kernels") {
  auto pair = [](std::int32_t a, std::int32_t b) { return std::array<std::int32_t, 2>{a, b}; };
  auto run2 = [&](std::array<std::int32_t, 2> p) {
    kernels::sort2_select(p.data());
    return p;
  };
  CHECK(run2(pair(2, 1)) == pair(1, 2));
  CHECK(run2(pair(1, 2)) == pair(1, 2));
  CHECK(run2(pair(-1, -2)) == pair(-2, -1));
  auto p = pair(0, -1);
  kernels::oracle_sort2(p.data(), Ordering::unsigned32);
  CHECK(p == pair(0, -1));  // 0xFFFFFFFF is unsigned-largest
}

TEST_CASE("interpreter cross-check: portable kernels match the interpreted programs") {
  const isa::Program listing1 = isa::parse_program(assets::listing1_source());
  const isa::Program listing2 = isa::parse_program(assets::listing2_source());

  auto check_one = [&](const Triple& in) {
    isa::RunResult r1 = isa::run(listing1, in);
    REQUIRE(r1.reason == isa::HaltReason::completed);
    CHECK(r1.output == apply(kernels::sort3_loop, in));

    isa::RunResult r2 = isa::run(listing2, in);
    REQUIRE(r2.reason == isa::HaltReason::completed);
    CHECK(r2.output == apply_table(in, Ordering::unsigned32));
  };

  for (const Triple& rep : kReps) check_one(rep);
  SplitMix64 rng(99);
  for (int k = 0; k < 10000; ++k) {
    // Non-negative triples: the domain where all orderings agree.
    check_one({static_cast<std::int32_t>(rng.next() & 0x7FFFFFFF),
               static_cast<std::int32_t>(rng.next() & 0x7FFFFFFF),
               static_cast<std::int32_t>(rng.next() & 0x7FFFFFFF)});
  }
}

TEST_CASE("kernel registry") {
  CHECK(kernels::kernel_registry().size() == 4);
  CHECK(kernels::find_kernel("network") != nullptr);
  CHECK(kernels::find_kernel("loop") != nullptr);
  CHECK(kernels::find_kernel("table") != nullptr);
  CHECK(kernels::find_kernel("oracle") != nullptr);
  CHECK(kernels::find_kernel("quicksort") == nullptr);
}

TEST_CASE("dest table sentinel entries sit at the unreachable offsets") {
  const auto& dest = kernels::dest_table();
  for (int block = 0; block < 3; ++block) {
    CHECK(dest[static_cast<std::size_t>(8 * block + 2)] == 9);
    CHECK(dest[static_cast<std::size_t>(8 * block + 5)] == 9);
    for (int k = 0; k < 8; ++k) {
      if (k == 2 || k == 5) continue;
      std::int8_t v = dest[static_cast<std::size_t>(8 * block + k)];
      CHECK(v >= 0);
      CHECK(v <= 2);
    }
  }
}
