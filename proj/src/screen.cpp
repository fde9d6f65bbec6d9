#include <algorithm>
#include <cmath>
#include <numeric>

#include "sce/covariance.hpp"
#include "sce/csv.hpp"
#include "sce/error.hpp"
#include "sce/pipeline.hpp"

namespace sce {

namespace {

std::size_t require_label(const TimeSeriesPanel& panel, const std::string& label) {
    const std::size_t r = panel.find(label);
    if (r == panel.cols()) throw Error(ErrorKind::InvalidArgument, "response '" + label + "' is not a panel column");
    if (panel.cols() < 2) throw Error(ErrorKind::InvalidArgument, "screen: need at least one predictor");
    return r;
}

ScreenResult finish_screen(const SymMatrix& full, std::size_t response, double threshold,
                           std::vector<std::string> labels) {
    const SymMatrix reg = hard_threshold(full, threshold);
    ScreenResult out;
    out.threshold = threshold;
    out.response = response;
    out.labels = std::move(labels);

    double largest = 0.0;
    for (std::size_t k = 0; k < reg.dim(); ++k) {
        if (k == response) continue;
        largest = std::max(largest, std::abs(full(k, response)));
        if (reg(k, response) != 0.0) out.kept.push_back(k);
    }
    if (out.kept.empty()) {
        throw Error(ErrorKind::EmptyScreen, "empty screen: threshold " + csv::format_double(threshold) +
                                                " exceeds every |correlation| with the response (largest " +
                                                csv::format_double(largest) + ")");
    }
    std::stable_sort(out.kept.begin(), out.kept.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(reg(a, response)) > std::abs(reg(b, response));
    });
    std::vector<std::size_t> index = out.kept;
    index.push_back(response);
    out.regularized = reg.submatrix(index);
    for (auto k : out.kept) {
        out.response_corr.push_back(reg(k, response));
        out.response_signs.push_back(reg(k, response) > 0.0 ? 1 : -1);
    }
    return out;
}

}  // namespace

ScreenResult screen(const TimeSeriesPanel& panel, const std::string& response_label, CvConfig cv) {
    const std::size_t response = require_label(panel, response_label);
    const TimeSeriesPanel z = standardize(panel);
    const SymMatrix full = spearman_matrix(z);
    if (cv.grid.empty()) cv.grid = default_grid(full);
    CvResult sel = select_threshold(z, cv, MatrixKind::Spearman);
    auto out = finish_screen(full, response, sel.selected, panel.labels());
    out.cv = std::move(sel);
    return out;
}

ScreenResult screen_at(const TimeSeriesPanel& panel, const std::string& response_label, double threshold) {
    const std::size_t response = require_label(panel, response_label);
    const SymMatrix full = spearman_matrix(standardize(panel));
    auto out = finish_screen(full, response, threshold, panel.labels());
    out.cv.grid = {threshold};
    out.cv.losses = {0.0};
    out.cv.selected = threshold;
    return out;
}

nlohmann::json to_json(const ScreenResult& s) {
    nlohmann::json kept = nlohmann::json::array();
    for (std::size_t a = 0; a < s.kept.size(); ++a) {
        kept.push_back({{"index", s.kept[a]},
                        {"label", s.labels[s.kept[a]]},
                        {"correlation", s.response_corr[a]},
                        {"sign", s.response_signs[a]}});
    }
    return {{"threshold", s.threshold},
            {"response", s.labels[s.response]},
            {"K", s.kept.size()},
            {"kept", kept},
            {"cv", to_json(s.cv)},
            {"regularized", to_json(s.regularized)}};
}

}  // namespace sce
