#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace xvars::csv {

struct Row {
    std::size_t line = 0;  // 1-based line where the row starts
    std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quoted fields may contain commas,
/// newlines and doubled quotes. Throws Error(Schema) on an unterminated quote.
std::vector<Row> parse(std::string_view text);

std::string quote(std::string_view field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace xvars::csv
