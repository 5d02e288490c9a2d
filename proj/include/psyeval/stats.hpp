#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace psyeval {

/// Sample Pearson correlation. nullopt when either vector is constant.
/// Throws ContractViolation for unequal lengths or fewer than two points.
[[nodiscard]] std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

/// Mean of (x - mean)^2 over all elements (1/N normalisation).
[[nodiscard]] double population_variance(std::span<const double> values);

/// Dense row-major matrix; rows are subjects, columns are items.
class RealMatrix {
public:
    RealMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    RealMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::vector<double> column(std::size_t c) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

enum class AlphaFormula {
    /// k/(k-1) * (1 - sum(item variances) / variance(total))
    Standard,
    /// k/(k-1) * sum(item variances) / variance(total), as sometimes printed
    PrintedRatio,
};

/// Cronbach's alpha over a subjects x items matrix, population variances
/// throughout. nullopt when the total-score variance is zero. Throws
/// ContractViolation for fewer than two items or two subjects.
[[nodiscard]] std::optional<double> cronbach_alpha(const RealMatrix& item_scores,
                                                   AlphaFormula formula = AlphaFormula::Standard);

}  // namespace psyeval
