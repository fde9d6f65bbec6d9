#include "sce/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>

#include "sce/error.hpp"

namespace sce::csv {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Table read(std::istream& in) {
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw LocatedError(ErrorKind::Parse,
                               "row " + std::to_string(t.rows.size() + 1) + " has " +
                                   std::to_string(cells.size()) + " cells, header has " +
                                   std::to_string(t.header.size()),
                               t.rows.size() + 1, "");
        }
        t.rows.push_back(std::move(cells));
    }
    if (!have_header) throw Error(ErrorKind::Parse, "empty CSV input");
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return read(in);
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& column) {
    if (!cell.empty()) {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() + cell.size() && errno != ERANGE && std::isfinite(v)) {
            return v;
        }
    }
    throw LocatedError(ErrorKind::Parse,
                       "non-numeric cell '" + cell + "' at row " + std::to_string(row) +
                           ", column " + column,
                       row, column);
}

}  // namespace sce::csv
