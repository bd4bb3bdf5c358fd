#pragma once

#include <cstddef>
#include <string>
#include <string_view>

// Code-point arithmetic over UTF-8 strings. Every offset that crosses a
// public API boundary is a code-point index; byte offsets stay in here.
namespace storyweave::utf8 {

// Throws Error(invalid_argument) on malformed input.
void validate(std::string_view text);

bool is_valid(std::string_view text) noexcept;

// Number of code points. Assumes valid UTF-8.
std::size_t length(std::string_view text) noexcept;

// Byte offset of code point `index`; `index == length(text)` maps to
// text.size(). Throws Error(range) past the end.
std::size_t byte_offset(std::string_view text, std::size_t index);

// Code points [start, end) as a byte substring.
std::string_view substr(std::string_view text, std::size_t start,
                        std::size_t end);

// Decodes the code point at byte offset `pos` and advances `pos`.
char32_t decode(std::string_view text, std::size_t& pos) noexcept;

// Unicode White_Space property.
bool is_space(char32_t cp) noexcept;

std::string_view trim(std::string_view text) noexcept;
std::string_view trim_left(std::string_view text) noexcept;
std::string_view trim_right(std::string_view text) noexcept;

bool ends_with_space(std::string_view text) noexcept;

}  // namespace storyweave::utf8
