#include "clinex/csv.hpp"

#include "clinex/error.hpp"

namespace clinex::csv {

std::vector<Row> parse(std::string_view data) {
    std::vector<Row> rows;
    Row row;
    std::string cell;
    bool quoted = false;
    bool at_record_start = true;
    std::size_t line = 1;
    std::size_t quote_line = 0;

    auto end_record = [&] {
        row.cells.push_back(std::move(cell));
        cell.clear();
        rows.push_back(std::move(row));
        row = Row{};
        at_record_start = true;
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        const char c = data[i];
        if (at_record_start) {
            row.line = line;
            at_record_start = false;
        }
        if (quoted) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                quoted = true;
                quote_line = line;
                break;
            case ',':
                row.cells.push_back(std::move(cell));
                cell.clear();
                break;
            case '\r':
                if (i + 1 < data.size() && data[i + 1] == '\n') break;
                cell.push_back(c);
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                cell.push_back(c);
        }
    }
    if (quoted) {
        throw Error(ErrorKind::MalformedRecord,
                    "line " + std::to_string(quote_line) + ": unterminated quoted field");
    }
    if (!at_record_start) end_record();
    return rows;
}

std::string escape(std::string_view cell) {
    if (cell.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(cell);
    std::string out = "\"";
    for (const char c : cell) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(cells[i]);
    }
    return out;
}

}  // namespace clinex::csv
