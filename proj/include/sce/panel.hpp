#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sce {

/// T×J panel of observations (rows = time, columns = variables). Stored
/// column-major so per-variable work touches contiguous memory.
class TimeSeriesPanel {
public:
    TimeSeriesPanel() = default;

    /// `columns[j]` holds the T observations of variable j.
    TimeSeriesPanel(std::vector<std::string> labels, std::vector<std::vector<double>> columns,
                    std::optional<std::vector<double>> time_index = std::nullopt);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return labels_.size(); }
    double operator()(std::size_t t, std::size_t j) const { return values_[j * rows_ + t]; }
    std::span<const double> column(std::size_t j) const { return {values_.data() + j * rows_, rows_}; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    const std::optional<std::vector<double>>& time_index() const noexcept { return time_index_; }

    /// Index of a label, or cols() when absent.
    std::size_t find(const std::string& label) const;

    /// Rows [begin, end).
    TimeSeriesPanel slice_rows(std::size_t begin, std::size_t end) const;
    TimeSeriesPanel select_columns(std::span<const std::size_t> index) const;

    bool operator==(const TimeSeriesPanel&) const = default;

private:
    std::size_t rows_ = 0;
    std::vector<std::string> labels_;
    std::vector<double> values_;
    std::optional<std::vector<double>> time_index_;
};

/// CSV with a header of labels and one row per period, 17 significant digits.
std::string to_csv(const TimeSeriesPanel& p);
void write_csv_file(const TimeSeriesPanel& p, const std::string& path);

}  // namespace sce
