#include "psyeval/stats.hpp"

#include "psyeval/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace psyeval {

namespace {

bool constant(std::span<const double> v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end();
}

double mean(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ContractViolation("pearson: length mismatch (" + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()) + ")");
    }
    if (x.size() < 2) {
        throw ContractViolation("pearson: at least two points required");
    }
    if (constant(x) || constant(y)) {
        return std::nullopt;
    }
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // sqrt of the product keeps pearson(x, x) == 1 exactly
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double population_variance(std::span<const double> values) {
    if (values.empty()) {
        throw ContractViolation("population_variance: empty input");
    }
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(values.size());
}

RealMatrix::RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ContractViolation("RealMatrix: data size does not match shape");
    }
}

std::vector<double> RealMatrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

std::optional<double> cronbach_alpha(const RealMatrix& item_scores, AlphaFormula formula) {
    const auto k = item_scores.cols();
    if (k < 2) {
        throw ContractViolation("cronbach_alpha: at least two items required");
    }
    if (item_scores.rows() < 2) {
        throw ContractViolation("cronbach_alpha: at least two subjects required");
    }
    std::vector<double> totals(item_scores.rows());
    for (std::size_t r = 0; r < item_scores.rows(); ++r) {
        const auto row = item_scores.row(r);
        totals[r] = std::accumulate(row.begin(), row.end(), 0.0);
    }
    if (constant(totals)) {
        return std::nullopt;
    }
    double item_variance_sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        item_variance_sum += population_variance(item_scores.column(c));
    }
    const double ratio = item_variance_sum / population_variance(totals);
    const double scale = static_cast<double>(k) / static_cast<double>(k - 1);
    return formula == AlphaFormula::Standard ? scale * (1.0 - ratio) : scale * ratio;
}

}  // namespace psyeval
