#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sce/covariance.hpp"
#include "sce/csv.hpp"
#include "sce/io.hpp"

namespace sce {

std::string_view to_string(Transform t) {
    switch (t) {
        case Transform::Level: return "level";
        case Transform::Log: return "log";
        case Transform::Diff1: return "diff1";
        case Transform::Diff2: return "diff2";
        case Transform::LogDiff1: return "log_diff1";
        case Transform::LogDiff2: return "log_diff2";
    }
    return "level";
}

Transform transform_from_string(std::string_view s) {
    for (auto t : {Transform::Level, Transform::Log, Transform::Diff1, Transform::Diff2, Transform::LogDiff1,
                   Transform::LogDiff2}) {
        if (to_string(t) == s) return t;
    }
    throw Error(ErrorKind::InvalidArgument, "unknown transform '" + std::string(s) + "'");
}

std::size_t transform_lag(Transform t) {
    switch (t) {
        case Transform::Diff1:
        case Transform::LogDiff1: return 1;
        case Transform::Diff2:
        case Transform::LogDiff2: return 2;
        default: return 0;
    }
}

TransformMap parse_transform_map(const std::string& spec) {
    TransformMap out;
    std::istringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
        if (item.empty()) continue;
        const auto colon = item.rfind(':');
        if (colon == std::string::npos || colon == 0) {
            throw Error(ErrorKind::InvalidArgument, "transform entry '" + item + "' is not label:code");
        }
        out[item.substr(0, colon)] = transform_from_string(item.substr(colon + 1));
    }
    return out;
}

std::vector<double> apply_transform(const std::vector<double>& raw, Transform t, const std::string& column) {
    std::vector<double> x = raw;
    if (t == Transform::Log || t == Transform::LogDiff1 || t == Transform::LogDiff2) {
        for (std::size_t r = 0; r < x.size(); ++r) {
            if (!(x[r] > 0.0)) {
                throw LocatedError(ErrorKind::Data,
                                   "log transform of nonpositive value " + csv::format_double(x[r]) + " at row " +
                                       std::to_string(r + 1) + ", column " + column,
                                   r + 1, column);
            }
            x[r] = std::log(x[r]);
        }
    }
    for (std::size_t d = 0; d < transform_lag(t); ++d) {
        if (x.empty()) break;
        std::vector<double> diff(x.size() - 1);
        for (std::size_t r = 1; r < x.size(); ++r) diff[r - 1] = x[r] - x[r - 1];
        x = std::move(diff);
    }
    return x;
}

TimeSeriesPanel ingest(std::istream& in, const IngestOptions& opts) {
    const auto table = csv::read(in);
    for (const auto& [label, code] : opts.transforms) {
        if (std::find(table.header.begin(), table.header.end(), label) == table.header.end()) {
            throw Error(ErrorKind::InvalidArgument, "transform given for unknown column '" + label + "'");
        }
    }
    std::vector<std::string> labels;
    std::vector<std::vector<double>> columns;
    std::vector<Transform> codes;
    std::optional<std::vector<double>> time;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        std::vector<double> raw(table.rows.size());
        for (std::size_t r = 0; r < table.rows.size(); ++r) raw[r] = csv::parse_cell(table.rows[r][c], r + 1, table.header[c]);
        if (opts.time_column && table.header[c] == *opts.time_column) {
            time = std::move(raw);
            continue;
        }
        const auto it = opts.transforms.find(table.header[c]);
        const Transform code = it == opts.transforms.end() ? Transform::Level : it->second;
        labels.push_back(table.header[c]);
        columns.push_back(apply_transform(raw, code, table.header[c]));
        codes.push_back(code);
    }
    if (opts.time_column && !time) throw Error(ErrorKind::InvalidArgument, "time column '" + *opts.time_column + "' not found");
    if (labels.empty()) throw Error(ErrorKind::InvalidArgument, "input has no variable columns");

    std::size_t max_lag = 0;
    for (auto c : codes) max_lag = std::max(max_lag, transform_lag(c));
    if (table.rows.size() < max_lag + 2) {
        throw Error(ErrorKind::InsufficientData, "fewer than 2 rows remain after differencing (" +
                                                     std::to_string(table.rows.size()) + " rows, max lag " +
                                                     std::to_string(max_lag) + ")");
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const std::size_t drop = max_lag - transform_lag(codes[c]);
        columns[c].erase(columns[c].begin(), columns[c].begin() + static_cast<std::ptrdiff_t>(drop));
    }
    if (time) time->erase(time->begin(), time->begin() + static_cast<std::ptrdiff_t>(max_lag));

    TimeSeriesPanel panel(std::move(labels), std::move(columns), std::move(time));
    return opts.standardize ? standardize(panel) : panel;
}

TimeSeriesPanel ingest_file(const std::string& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    return ingest(in, opts);
}

}  // namespace sce
