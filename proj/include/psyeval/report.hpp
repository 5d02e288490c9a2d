#pragma once

#include "psyeval/behavior.hpp"
#include "psyeval/faithfulness.hpp"
#include "psyeval/norms.hpp"
#include "psyeval/scoring.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psyeval {

enum class ReportFormat { Table, Delimited, Machine };

[[nodiscard]] ReportFormat parse_report_format(std::string_view text);

/// A rendered section before formatting: header, rows of cells and footnotes.
struct TextTable {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> notes;
};

/// Aligned columns (Table) or comma-separated values with a leading title
/// comment line (Delimited). Machine is not a text-table format.
[[nodiscard]] std::string render_text_table(const TextTable& table, ReportFormat format);

/// Which variant of the two ambiguous metrics to display.
struct MetricDisplay {
    bool trc_include_diagonal = true;
    AlphaFormula alpha = AlphaFormula::Standard;
};

/// Digits shown for a value: 2 in tables, 6 in delimited output.
[[nodiscard]] int display_decimals(ReportFormat format) noexcept;

[[nodiscard]] TextTable score_text_table(const ScoreTable& table, ReportFormat format);

/// Rows per scale: TrC, InC, ExC against each partner scale, BC, and the
/// human InC reference when the norms carry one. Columns are dimensions.
[[nodiscard]] TextTable faithfulness_text_table(const FaithfulnessReport& report, const NormProfile* norms,
                                                MetricDisplay display, ReportFormat format);

struct CrsTable {
    std::string store_id;
    CrsMode mode = CrsMode::Indicator;
    std::vector<CriterionScore> scores;
};

[[nodiscard]] TextTable crs_text_table(const CrsTable& crs, ReportFormat format);

/// Per endpoint and dimension: the per-item average for each scale (mean over
/// the endpoint's temperatures), the mean of those across scales, and the
/// human norm.
struct NormRow {
    std::string endpoint_id;
    std::string dimension_code;
    std::map<std::string, double> per_scale;
    double pooled = 0.0;
    double human = 0.0;
};

struct NormComparison {
    std::string norm_source;
    std::vector<NormRow> rows;

    [[nodiscard]] const NormRow* find(std::string_view endpoint_id, std::string_view dimension) const;
};

[[nodiscard]] NormComparison compare_norms(std::span<const ScoreTable> tables, const NormProfile& norms);

/// True when the human mean lies strictly between the pooled averages of the two endpoints.
[[nodiscard]] bool human_between(const NormComparison& comparison, std::string_view low_endpoint,
                                 std::string_view high_endpoint, std::string_view dimension);

[[nodiscard]] TextTable norm_text_table(const NormComparison& comparison, ReportFormat format);

/// Everything `report` emits. Optional parts are left out when absent.
struct ReportBundle {
    std::vector<ScoreTable> scores;
    std::optional<FaithfulnessReport> faithfulness;
    std::optional<CrsTable> crs;
    std::optional<NormProfile> norms;
    MetricDisplay display;
};

/// Human-readable sections, or for Machine one JSON document with full
/// precision, flags and the store ids every section was computed from.
/// Output depends only on store contents, never on paths or time.
[[nodiscard]] std::string render_report(const ReportBundle& bundle, ReportFormat format);

}  // namespace psyeval
