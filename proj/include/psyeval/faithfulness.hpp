#pragma once

#include "psyeval/scoring.hpp"
#include "psyeval/stats.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psyeval {

/// A coefficient that may be undefined, with notes on degenerate input.
struct MetricValue {
    std::optional<double> value;
    std::vector<std::string> flags;
};

/// Scores of one scale x dimension keyed by subject label.
struct ScoreSeries {
    std::string scale_id;
    std::string dimension_code;
    std::map<std::string, double> points;
};

/// Per-item averages of every subject in `table` for one dimension.
[[nodiscard]] ScoreSeries series_from(const ScoreTable& table, std::string_view dimension_code);

/// Average Pearson correlation over ordered repetition pairs (u, v). With the
/// diagonal the normalisation is T^2, without it T(T-1). Pairs involving a
/// constant vector are undefined and left out; nullopt when none remain.
[[nodiscard]] std::optional<double> subject_retest(std::span<const std::vector<int>> repetitions,
                                                   bool include_diagonal = true);

struct TrcOptions {
    bool include_diagonal = true;
};

/// Test-retest consistency: the mean of subject_retest over every subject with
/// a non-zero temperature and at least two repetitions. Temperature-0 subjects
/// are excluded and flagged.
[[nodiscard]] MetricValue trc(const ScoreMatrix& matrix, std::string_view dimension_code, TrcOptions options = {});

/// Internal consistency: Cronbach's alpha over the subjects x items matrix of
/// voted keyed scores.
[[nodiscard]] MetricValue inc(const ScoreMatrix& matrix, std::string_view dimension_code,
                              AlphaFormula formula = AlphaFormula::Standard);

/// External consistency: Pearson correlation of two scales' scores for the
/// same dimension across the same subjects. Throws ContractViolation for
/// mismatched subjects, the same scale twice or different dimensions.
/// Undefined, and flagged, below three subjects.
[[nodiscard]] MetricValue exc(const ScoreSeries& x, const ScoreSeries& y);

/// Behavioural consistency: Pearson correlation of scale scores with criterion
/// scores in [0,1]. Throws ContractViolation for mismatched subjects or
/// criterion values outside [0,1].
[[nodiscard]] MetricValue bc(const ScoreSeries& scores, const ScoreSeries& criterion);

/// The inputs needed for one scale's rows of a faithfulness table.
struct ScaleEvaluation {
    ScoreMatrix matrix;
    ScoreTable table;
};

struct DimensionFaithfulness {
    std::string scale_id;
    std::string dimension_code;
    MetricValue trc;               // diagonal included
    MetricValue trc_off_diagonal;  // u != v only
    MetricValue inc;               // standard alpha
    MetricValue inc_printed;       // bare variance ratio
    std::map<std::string, MetricValue> exc;  // partner scale -> coefficient
    std::optional<MetricValue> bc;           // nullopt when no criterion scores exist
};

struct FaithfulnessReport {
    std::vector<std::string> scales;
    std::vector<std::string> dimensions;
    std::vector<DimensionFaithfulness> cells;
    std::vector<std::string> sources;  // run-store ids (and behaviour-store id) used

    [[nodiscard]] const DimensionFaithfulness* find(std::string_view scale_id, std::string_view dimension) const;
};

/// Criterion scores per dimension, keyed by subject label.
using CriterionSeries = std::map<std::string, ScoreSeries, std::less<>>;

/// Computes every metric for every (scale, dimension). ExC pairs each scale
/// with every other scale sharing the dimension code, over the subjects both
/// scales have (dropped subjects are flagged). BC is computed only when a
/// criterion series exists for the dimension.
[[nodiscard]] FaithfulnessReport evaluate_faithfulness(std::span<const ScaleEvaluation> scales,
                                                       const CriterionSeries* criteria = nullptr,
                                                       std::vector<std::string> extra_sources = {});

}  // namespace psyeval
