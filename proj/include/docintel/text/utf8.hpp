#pragma once

#include <string>
#include <string_view>

namespace docintel::text {

// Decodes UTF-8; ill-formed sequences become U+FFFD.
std::u32string decode_utf8(std::string_view bytes);

std::string encode_utf8(std::u32string_view code_points);

// Round-trips through decode/encode so the result is always valid UTF-8.
std::string sanitize_utf8(std::string_view bytes);

// Number of code points in valid UTF-8.
std::size_t utf8_length(std::string_view valid_utf8);

bool is_space(char32_t c);

}  // namespace docintel::text
