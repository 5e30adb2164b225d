#pragma once

#include <string_view>

// The two reference sort3 programs shipped with the project, embedded so the
// CLI works without access to the installed asset files.  The same text lives
// in core/assets/listing1.s and core/assets/listing2.s.

namespace sort3lab::assets {

// 14 instructions, contains a loop (two labels).  Sorts under signed order.
std::string_view listing1_source();

// 15 instructions, branchless; packs comparison outcomes through the carry
// flag, so it sorts under unsigned 32-bit order.
std::string_view listing2_source();

// Returns the embedded source for "listing1.s"/"listing2.s", or an empty view.
std::string_view find(std::string_view name);

}  // namespace sort3lab::assets
