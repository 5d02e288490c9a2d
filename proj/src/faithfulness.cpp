#include "psyeval/faithfulness.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <algorithm>
#include <set>

namespace psyeval {

ScoreSeries series_from(const ScoreTable& table, std::string_view dimension_code) {
    ScoreSeries series{table.scale_id, std::string(dimension_code), {}};
    for (const auto& score : table.scores) {
        if (score.dimension_code == dimension_code) {
            series.points[score.subject.label()] = score.per_item_average();
        }
    }
    return series;
}

std::optional<double> subject_retest(std::span<const std::vector<int>> repetitions, bool include_diagonal) {
    std::vector<std::vector<double>> reps;
    reps.reserve(repetitions.size());
    for (const auto& r : repetitions) {
        reps.emplace_back(r.begin(), r.end());
    }
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t u = 0; u < reps.size(); ++u) {
        for (std::size_t v = 0; v < reps.size(); ++v) {
            if (u == v && !include_diagonal) {
                continue;
            }
            if (auto r = pearson(reps[u], reps[v])) {
                sum += *r;
                ++defined;
            }
        }
    }
    if (defined == 0) {
        return std::nullopt;
    }
    return sum / static_cast<double>(defined);
}

MetricValue trc(const ScoreMatrix& matrix, std::string_view dimension_code, TrcOptions options) {
    MetricValue out;
    std::size_t zero_temperature = 0;
    double sum = 0.0;
    std::size_t contributing = 0;
    for (const auto& subject : matrix.subjects()) {
        if (subject.temperature == 0.0) {
            ++zero_temperature;
            continue;
        }
        const int reps = matrix.repetition_count(subject);
        if (reps < 2) {
            out.flags.push_back(subject.label() + ": fewer than two repetitions, excluded");
            continue;
        }
        const auto vectors = repetition_vectors(matrix, subject, dimension_code);
        std::size_t constant = 0;
        for (const auto& v : vectors) {
            constant += std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) == v.end() ? 1 : 0;
        }
        if (constant > 0) {
            out.flags.push_back(subject.label() + ": " + std::to_string(constant) + " of " +
                                std::to_string(vectors.size()) +
                                " repetition vectors have zero variance; their pairs are undefined and excluded");
        }
        const auto r = subject_retest(vectors, options.include_diagonal);
        if (!r) {
            out.flags.push_back(subject.label() + ": no defined repetition pair, excluded");
            continue;
        }
        sum += *r;
        ++contributing;
    }
    if (zero_temperature > 0) {
        out.flags.push_back(std::to_string(zero_temperature) + " temperature-0 subjects excluded (single repetition)");
    }
    if (contributing == 0) {
        out.flags.push_back("no eligible subjects");
        return out;
    }
    out.value = sum / static_cast<double>(contributing);
    return out;
}

MetricValue inc(const ScoreMatrix& matrix, std::string_view dimension_code, AlphaFormula formula) {
    MetricValue out;
    const auto& items = matrix.scale().dimension(dimension_code).items;
    std::vector<double> data;
    std::size_t rows = 0;
    for (const auto& subject : matrix.subjects()) {
        std::vector<double> row;
        row.reserve(items.size());
        for (const auto& item : items) {
            if (auto s = matrix.voted_score(subject, item.ordinal)) {
                row.push_back(*s);
            }
        }
        if (row.size() != items.size()) {
            out.flags.push_back(subject.label() + ": incomplete item scores, excluded");
            continue;
        }
        data.insert(data.end(), row.begin(), row.end());
        ++rows;
    }
    if (items.size() < 2) {
        out.flags.push_back("fewer than two items");
        return out;
    }
    if (rows < 2) {
        out.flags.push_back("fewer than two subjects");
        return out;
    }
    out.value = cronbach_alpha(RealMatrix(rows, items.size(), std::move(data)), formula);
    if (!out.value) {
        out.flags.push_back("zero total-score variance across subjects");
    }
    return out;
}

namespace {

void require_same_subjects(const ScoreSeries& x, const ScoreSeries& y, const char* op) {
    if (x.points.size() != y.points.size() ||
        !std::equal(x.points.begin(), x.points.end(), y.points.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
        throw ContractViolation(std::string(op) + ": series cover different subjects");
    }
}

MetricValue correlate(const ScoreSeries& x, const ScoreSeries& y) {
    MetricValue out;
    if (x.points.size() < 3) {
        out.flags.push_back("fewer than three subjects (" + std::to_string(x.points.size()) + ")");
        return out;
    }
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& [subject, value] : x.points) {
        xs.push_back(value);
        ys.push_back(y.points.at(subject));
    }
    out.value = pearson(xs, ys);
    if (!out.value) {
        out.flags.push_back("zero variance in " + std::string(std::adjacent_find(xs.begin(), xs.end(),
                                                                               std::not_equal_to<>()) == xs.end()
                                                                    ? x.scale_id
                                                                    : y.scale_id) +
                            " series");
    }
    return out;
}

ScoreSeries restrict_to(const ScoreSeries& s, const std::set<std::string>& subjects) {
    ScoreSeries out{s.scale_id, s.dimension_code, {}};
    for (const auto& [subject, value] : s.points) {
        if (subjects.contains(subject)) {
            out.points.emplace(subject, value);
        }
    }
    return out;
}

std::set<std::string> common_subjects(const ScoreSeries& a, const ScoreSeries& b) {
    std::set<std::string> out;
    for (const auto& [subject, _] : a.points) {
        if (b.points.contains(subject)) {
            out.insert(subject);
        }
    }
    return out;
}

}  // namespace

MetricValue exc(const ScoreSeries& x, const ScoreSeries& y) {
    if (x.scale_id == y.scale_id) {
        throw ContractViolation("exc: both series come from scale " + x.scale_id);
    }
    if (x.dimension_code != y.dimension_code) {
        throw ContractViolation("exc: dimensions differ (" + x.dimension_code + " vs " + y.dimension_code + ")");
    }
    require_same_subjects(x, y, "exc");
    return correlate(x, y);
}

MetricValue bc(const ScoreSeries& scores, const ScoreSeries& criterion) {
    require_same_subjects(scores, criterion, "bc");
    for (const auto& [subject, value] : criterion.points) {
        if (!(value >= 0.0 && value <= 1.0)) {
            throw ContractViolation("bc: criterion score for " + subject + " outside [0,1]");
        }
    }
    return correlate(scores, criterion);
}

const DimensionFaithfulness* FaithfulnessReport::find(std::string_view scale_id, std::string_view dimension) const {
    for (const auto& cell : cells) {
        if (cell.scale_id == scale_id && cell.dimension_code == dimension) {
            return &cell;
        }
    }
    return nullptr;
}

FaithfulnessReport evaluate_faithfulness(std::span<const ScaleEvaluation> scales, const CriterionSeries* criteria,
                                         std::vector<std::string> extra_sources) {
    FaithfulnessReport report;
    for (const auto& s : scales) {
        report.scales.push_back(s.table.scale_id);
        report.sources.push_back(s.table.store_id);
        for (const auto& code : s.matrix.scale().dimension_codes()) {
            if (std::find(report.dimensions.begin(), report.dimensions.end(), code) == report.dimensions.end()) {
                report.dimensions.push_back(code);
            }
        }
    }
    for (auto& src : extra_sources) {
        report.sources.push_back(std::move(src));
    }

    for (const auto& s : scales) {
        for (const auto& code : s.matrix.scale().dimension_codes()) {
            DimensionFaithfulness cell;
            cell.scale_id = s.table.scale_id;
            cell.dimension_code = code;
            cell.trc = trc(s.matrix, code, {true});
            cell.trc_off_diagonal = trc(s.matrix, code, {false});
            cell.inc = inc(s.matrix, code, AlphaFormula::Standard);
            cell.inc_printed = inc(s.matrix, code, AlphaFormula::PrintedRatio);

            const auto own = series_from(s.table, code);
            for (const auto& other : scales) {
                if (&other == &s || other.table.scale_id == s.table.scale_id ||
                    other.matrix.scale().find_dimension(code) == nullptr) {
                    continue;
                }
                const auto theirs = series_from(other.table, code);
                const auto common = common_subjects(own, theirs);
                auto value = exc(restrict_to(own, common), restrict_to(theirs, common));
                const auto dropped = own.points.size() + theirs.points.size() - 2 * common.size();
                if (dropped > 0) {
                    value.flags.push_back(std::to_string(dropped) + " subjects present in only one scale, excluded");
                }
                cell.exc.emplace(other.table.scale_id, std::move(value));
            }

            if (criteria != nullptr) {
                if (auto it = criteria->find(code); it != criteria->end()) {
                    const auto common = common_subjects(own, it->second);
                    auto value = bc(restrict_to(own, common), restrict_to(it->second, common));
                    const auto dropped = own.points.size() - common.size();
                    if (dropped > 0) {
                        value.flags.push_back(std::to_string(dropped) + " subjects without criterion scores, excluded");
                    }
                    cell.bc = std::move(value);
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

}  // namespace psyeval
