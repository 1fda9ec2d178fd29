#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace mimic::csv {

/// One parsed record with its 1-based source line.
struct Record {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

/// RFC 4180-style reader: comma separated, double-quoted fields with "" escapes.
/// Blank lines are skipped; a trailing CR is stripped.
std::vector<Record> read(std::istream& in);

std::string escape(std::string_view field);

/// Fixed 6-significant-digit formatting used for every numeric output.
std::string format_number(double value);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace mimic::csv
