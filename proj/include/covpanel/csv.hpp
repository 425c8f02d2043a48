#ifndef COVPANEL_CSV_HPP
#define COVPANEL_CSV_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace covpanel {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 if absent
};

/// Reads a comma-separated file with a header row. Handles double-quoted
/// fields (embedded commas and doubled quotes); no embedded newlines.
CsvTable read_csv(const std::string& path);
CsvTable read_csv_stream(std::istream& in, const std::string& origin);

std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_quote(const std::string& field);

/// Shortest round-trip decimal form of x; empty string for NaN (missing).
std::string format_number(double x);

} // namespace covpanel

#endif
