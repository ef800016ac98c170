#pragma once

#include <string>
#include <string_view>
#include <vector>

// UTF-8 text helpers. Everything here takes and returns UTF-8.
namespace clinex::text {

bool is_valid_utf8(std::string_view s);

/// Unicode NFC. Invalid sequences are replaced with U+FFFD.
std::string nfc(std::string_view s);

/// Full Unicode case folding (after NFC).
std::string fold_case(std::string_view s);

/// Trim Unicode whitespace at both ends and collapse inner runs to one ASCII space.
std::string collapse_whitespace(std::string_view s);

std::string_view trim(std::string_view s);

/// Key used for label and keyword matching: NFC, case-folded, whitespace
/// collapsed, Arabic yeh/kaf unified with their Persian forms.
std::string match_key(std::string_view s);

/// Splits on '\n', dropping a trailing '\r' from each line.
std::vector<std::string_view> split_lines(std::string_view s);

}  // namespace clinex::text
