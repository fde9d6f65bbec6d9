#include "sce/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "sce/csv.hpp"
#include "sce/error.hpp"

namespace sce {

TimeSeriesPanel::TimeSeriesPanel(std::vector<std::string> labels,
                                 std::vector<std::vector<double>> columns,
                                 std::optional<std::vector<double>> time_index)
    : labels_(std::move(labels)), time_index_(std::move(time_index)) {
    if (labels_.empty()) throw Error(ErrorKind::InvalidArgument, "panel: need at least one column");
    if (columns.size() != labels_.size()) {
        throw Error(ErrorKind::InvalidArgument, "panel: label count does not match column count");
    }
    rows_ = columns.front().size();
    if (rows_ < 2) throw Error(ErrorKind::InsufficientData, "panel: need at least 2 rows, got " + std::to_string(rows_));
    std::unordered_set<std::string> seen;
    for (const auto& l : labels_) {
        if (!seen.insert(l).second) throw Error(ErrorKind::InvalidArgument, "panel: duplicate label '" + l + "'");
    }
    values_.reserve(rows_ * labels_.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].size() != rows_) throw Error(ErrorKind::InvalidArgument, "panel: ragged column " + labels_[j]);
        for (std::size_t t = 0; t < rows_; ++t) {
            if (!std::isfinite(columns[j][t])) {
                throw LocatedError(ErrorKind::Data,
                                   "panel: missing or non-finite value at row " + std::to_string(t + 1) +
                                       ", column " + labels_[j],
                                   t + 1, labels_[j]);
            }
        }
        values_.insert(values_.end(), columns[j].begin(), columns[j].end());
    }
    if (time_index_) {
        if (time_index_->size() != rows_) throw Error(ErrorKind::InvalidArgument, "panel: time index length");
        if (!std::is_sorted(time_index_->begin(), time_index_->end())) {
            throw Error(ErrorKind::InvalidArgument, "panel: time index must be monotone");
        }
    }
}

std::size_t TimeSeriesPanel::find(const std::string& label) const {
    return static_cast<std::size_t>(std::find(labels_.begin(), labels_.end(), label) - labels_.begin());
}

TimeSeriesPanel TimeSeriesPanel::slice_rows(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows_) throw Error(ErrorKind::InvalidArgument, "panel: row slice out of range");
    std::vector<std::vector<double>> cols(this->cols());
    for (std::size_t j = 0; j < cols.size(); ++j) {
        const auto c = column(j);
        cols[j].assign(c.begin() + static_cast<std::ptrdiff_t>(begin), c.begin() + static_cast<std::ptrdiff_t>(end));
    }
    std::optional<std::vector<double>> ti;
    if (time_index_) {
        ti.emplace(time_index_->begin() + static_cast<std::ptrdiff_t>(begin),
                   time_index_->begin() + static_cast<std::ptrdiff_t>(end));
    }
    return TimeSeriesPanel(labels_, std::move(cols), std::move(ti));
}

TimeSeriesPanel TimeSeriesPanel::select_columns(std::span<const std::size_t> index) const {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> cols;
    for (auto j : index) {
        if (j >= this->cols()) throw Error(ErrorKind::InvalidArgument, "panel: column index out of range");
        labels.push_back(labels_[j]);
        cols.emplace_back(column(j).begin(), column(j).end());
    }
    return TimeSeriesPanel(std::move(labels), std::move(cols), time_index_);
}

std::string to_csv(const TimeSeriesPanel& p) {
    std::ostringstream out;
    for (std::size_t j = 0; j < p.cols(); ++j) out << (j ? "," : "") << p.labels()[j];
    out << '\n';
    for (std::size_t t = 0; t < p.rows(); ++t) {
        for (std::size_t j = 0; j < p.cols(); ++j) out << (j ? "," : "") << csv::format_double(p(t, j));
        out << '\n';
    }
    return out.str();
}

void write_csv_file(const TimeSeriesPanel& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << to_csv(p);
}

}  // namespace sce
