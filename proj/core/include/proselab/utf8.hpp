#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace proselab::utf8 {

// Decodes UTF-8 into Unicode scalar values. Bytes that are not part of a
// well-formed sequence are mapped to U+DC80..U+DCFF (surrogate escape) so
// that encode(decode(s)) == s for every byte string.
std::u32string decode(std::string_view bytes);

std::string encode(std::u32string_view code_points);

// Number of scalar values decode() would produce.
std::size_t length(std::string_view bytes);

}  // namespace proselab::utf8
