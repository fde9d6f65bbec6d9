#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sce::csv {

/// 17 significant digits; parses back to the same double.
std::string format_double(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Comma-separated, header row required, blank lines skipped, cells trimmed.
/// Quoting is not supported.
Table read(std::istream& in);
Table read_file(const std::string& path);

/// Strict numeric parse; throws LocatedError(Parse) with the 1-based data
/// row and the column label.
double parse_cell(const std::string& cell, std::size_t row, const std::string& column);

}  // namespace sce::csv
