#include "mimic/csv.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace mimic::csv {

std::vector<Record> read(std::istream& in) {
    std::vector<Record> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t start_line = line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (start_line == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        Record rec;
        rec.line = start_line;
        std::string field;
        bool quoted = false;
        std::size_t i = 0;
        for (;;) {
            if (i == line.size()) {
                if (quoted) {
                    // Quoted field spans a newline.
                    std::string next;
                    if (!std::getline(in, next)) break;
                    ++line_no;
                    if (!next.empty() && next.back() == '\r') next.pop_back();
                    field += '\n';
                    line = std::move(next);
                    i = 0;
                    continue;
                }
                break;
            }
            const char c = line[i++];
            if (quoted) {
                if (c == '"') {
                    if (i < line.size() && line[i] == '"') {
                        field += '"';
                        ++i;
                    } else {
                        quoted = false;
                    }
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                rec.fields.push_back(std::move(field));
                field.clear();
            } else {
                field += c;
            }
        }
        rec.fields.push_back(std::move(field));
        records.push_back(std::move(rec));
    }
    return records;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_number(double value) {
    if (std::isnan(value)) return "NA";
    if (std::isinf(value)) return value > 0 ? "Inf" : "-Inf";
    if (value == 0.0) value = 0.0;  // drop negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << escape(fields[i]);
    }
    out << '\n';
}

}  // namespace mimic::csv
