#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace epicast::csv {

struct Record {
    std::vector<std::string> fields;
    std::size_t line = 0; // 1-based physical line where the record starts
};

/// RFC 4180 reader: comma separated, double-quoted fields may contain commas,
/// doubled quotes and line breaks. CRLF and LF endings are both accepted and a
/// leading UTF-8 byte-order mark is dropped. Blank lines are skipped.
std::vector<Record> parse(std::string_view text);

/// Quotes a field only when it needs it.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string> &fields);

/// Shortest decimal text that round-trips the double exactly. Integral values
/// print without a fractional part.
std::string format_number(double value);

std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

} // namespace epicast::csv
