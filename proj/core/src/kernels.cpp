#include "sort3lab/kernels.hpp"

namespace sort3lab::kernels {

std::string_view ordering_name(Ordering o) {
  return o == Ordering::signed32 ? "signed" : "unsigned";
}

void sort3_network(std::int32_t* p) {
  std::int32_t a = p[0];
  std::int32_t b = p[1];
  std::int32_t c = p[2];

  bool flag = c < b;
  std::int32_t d = b;
  b = flag ? c : b;
  c = flag ? d : c;

  flag = c < a;
  d = a;
  a = flag ? c : a;
  c = flag ? d : c;
  p[2] = c;

  flag = b < a;
  d = a;
  a = flag ? b : a;
  b = flag ? d : b;
  p[0] = a;
  p[1] = b;
}

void sort3_loop(std::int32_t* p) {
  std::int32_t a = p[0];
  std::int32_t b = p[1];
  for (;;) {
    std::int32_t c = a;
    bool flag = b < a;
    a = flag ? b : a;
    b = flag ? c : b;
    flag = p[2] < b;
    if (!flag) break;
    c = b;
    b = p[2];
    p[2] = c;
  }
  p[0] = a;
  p[1] = b;
}

const std::array<std::int8_t, 24>& dest_table() {
  static const std::array<std::int8_t, 24> dest = {
      1, 2, 9, 2, 0, 9, 0, 1,  //
      0, 0, 9, 1, 1, 9, 2, 2,  //
      2, 1, 9, 0, 2, 9, 1, 0,  //
  };
  return dest;
}

void sort3_table(std::int32_t* p, Ordering ordering) {
  const auto& dest = dest_table();
  std::int32_t a = p[0];
  std::int32_t b = p[1];
  std::int32_t c = p[2];

  std::int64_t i = less(b, a, ordering) ? -1 : 0;
  i = 2 * i + (less(c, b, ordering) ? 1 : 0);
  i = 2 * i + (less(c, a, ordering) ? 1 : 0);

  p[dest[static_cast<std::size_t>(i + 4)]] = a;
  p[dest[static_cast<std::size_t>(i + 12)]] = b;
  p[dest[static_cast<std::size_t>(i + 20)]] = c;
}

void oracle_sort3(std::int32_t* p, Ordering ordering) {
  for (int k = 1; k < 3; ++k) {
    std::int32_t v = p[k];
    int j = k;
    while (j > 0 && less(v, p[j - 1], ordering)) {
      p[j] = p[j - 1];
      --j;
    }
    p[j] = v;
  }
}

void sort2_select(std::int32_t* p) {
  std::int32_t a = p[0];
  std::int32_t b = p[1];
  bool flag = b < a;
  std::int32_t d = a;
  a = flag ? b : a;
  b = flag ? d : b;
  p[0] = a;
  p[1] = b;
}

void oracle_sort2(std::int32_t* p, Ordering ordering) {
  if (less(p[1], p[0], ordering)) {
    std::int32_t t = p[0];
    p[0] = p[1];
    p[1] = t;
  }
}

namespace {

void network_entry(std::int32_t* p, Ordering) { sort3_network(p); }
void loop_entry(std::int32_t* p, Ordering) { sort3_loop(p); }
void table_entry(std::int32_t* p, Ordering o) { sort3_table(p, o); }
void oracle_entry(std::int32_t* p, Ordering o) { oracle_sort3(p, o); }

}  // namespace

const std::vector<Kernel>& kernel_registry() {
  static const std::vector<Kernel> registry = {
      {"network", network_entry, Ordering::signed32},
      {"loop", loop_entry, Ordering::signed32},
      {"table", table_entry, Ordering::signed32},
      {"oracle", oracle_entry, Ordering::signed32},
  };
  return registry;
}

const Kernel* find_kernel(std::string_view name) {
  for (const Kernel& k : kernel_registry())
    if (k.name == name) return &k;
  return nullptr;
}

}  // namespace sort3lab::kernels
