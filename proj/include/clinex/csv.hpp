#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal RFC-4180 reader/writer: quoted fields, doubled quotes, embedded newlines.
namespace clinex::csv {

struct Row {
    std::vector<std::string> cells;
    std::size_t line = 0;  // 1-based physical line where the record starts
};

/// Throws Error(MalformedRecord) on an unterminated quoted field.
std::vector<Row> parse(std::string_view data);

std::string escape(std::string_view cell);
std::string join(const std::vector<std::string>& cells);

}  // namespace clinex::csv
