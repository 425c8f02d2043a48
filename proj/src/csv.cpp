#include "covpanel/csv.hpp"

#include "covpanel/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace covpanel {

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

CsvTable read_csv_stream(std::istream& in, const std::string& origin) {
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) fail("EmptyFile", origin + " has no header row");
    table.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != table.header.size())
            fail("BadCsvRow", origin + ": row with " + std::to_string(fields.size()) +
                                  " fields, header has " + std::to_string(table.header.size()));
        table.rows.push_back(std::move(fields));
    }
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("FileNotFound", "cannot open " + path);
    return read_csv_stream(in, path);
}

std::string format_number(double x) {
    if (std::isnan(x)) return "";
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

} // namespace covpanel
