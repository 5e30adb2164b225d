#include "sort3lab/assets.hpp"

namespace sort3lab::assets {

namespace {

// Kept in sync with core/assets/listing1.s (checked by a unit test).
constexpr std::string_view kListing1 =
    R"(# reg a dword
# reg b dword
# reg c dword
# reg p qword
mov (%[p]), %[a]           // int a = *p;
mov 4(%[p]), %[b]          // int b = *(p + 1);
loop_start%=:              // for(;;) {
mov %[a], %[c]             // int c = a;
cmp %[b], %[a]             // bool flag = b < a;
cmovg %[b], %[a]           // a = flag ? b : a;
cmovg %[c], %[b]           // b = flag ? c : b;
cmp 8(%[p]), %[b]          // flag = *(p + 2) < b;
jle loop_end%=             // if (!flag) break;
mov %[b], %[c]             // c = b;
mov 8(%[p]), %[b]          // b = *(p + 2);
mov %[c], 8(%[p])          // *(p + 2) = c;
jmp loop_start%=           // }
loop_end%=:
mov %[a], (%[p])           // *p = a;
mov %[b], 4(%[p])          // *(p + 1) = b;
)";

// Kept in sync with core/assets/listing2.s (checked by a unit test).
constexpr std::string_view kListing2 =
    R"(# reg a dword
# reg b dword
# reg c dword
# reg i qword
# reg j qword
# reg p qword
# data dest = 1,2,9,2,0,9,0,1,0,0,9,1,1,9,2,2,2,1,9,0,2,9,1,0
mov (%[p]), %[a]           // int a = p[0];
mov 4(%[p]), %[b]          // int b = p[1];
mov 8(%[p]), %[c]          // int c = p[2];
cmp %[a], %[b]             // int flag = b < a;
sbb %[i], %[i]             // int i = flag ? -1 : 0;
cmp %[b], %[c]             // flag = c < b;
adc %[i], %[i]             // i = 2 * i + flag;
cmp %[a], %[c]             // flag = c < a;
adc %[i], %[i]             // i = 2 * i + flag;
movsb dest+4(%[i]), %[j]   // int j = dest[i + 4];
mov %[a], (%[p],%[j],4)    // p[j] = a;
movsb dest+12(%[i]), %[j]  // j = dest[i + 12];
mov %[b], (%[p],%[j],4)    // p[j] = b;
movsb dest+20(%[i]), %[j]  // j = dest[i + 20];
mov %[c], (%[p],%[j],4)    // p[j] = c;
)";

}  // namespace

std::string_view listing1_source() { return kListing1; }
std::string_view listing2_source() { return kListing2; }

std::string_view find(std::string_view name) {
  if (name == "listing1.s" || name == "listing1") return kListing1;
  if (name == "listing2.s" || name == "listing2") return kListing2;
  return {};
}

}  // namespace sort3lab::assets
