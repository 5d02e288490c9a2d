#include "psyeval/scoring.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace psyeval {

DimensionScore dimension_score(std::span<const VotedChoice> voted, const Scale& scale,
                               std::string_view dimension_code) {
    const auto& dim = scale.dimension(dimension_code);
    DimensionScore out;
    out.scale_id = scale.id;
    out.dimension_code = dim.code;
    out.item_count = static_cast<int>(dim.items.size());
    if (!voted.empty()) {
        out.subject = voted.front().subject;
    }

    std::map<int, const VotedChoice*> by_ordinal;
    for (const auto& v : voted) {
        if (v.subject != out.subject) {
            throw ContractViolation("dimension_score: votes from more than one subject");
        }
        if (v.dimension_code != dim.code || (!v.scale_id.empty() && v.scale_id != scale.id)) {
            throw ContractViolation("dimension_score: vote for item " + std::to_string(v.item_ordinal) +
                                    " belongs to another dimension");
        }
        if (!by_ordinal.emplace(v.item_ordinal, &v).second) {
            throw ContractViolation("dimension_score: duplicate vote for item " + std::to_string(v.item_ordinal));
        }
    }
    for (const auto& item : dim.items) {
        auto it = by_ordinal.find(item.ordinal);
        if (it == by_ordinal.end()) {
            throw IncompleteDimensionError("dimension " + dim.code + " of " + scale.id + ": no vote for item " +
                                           std::to_string(item.ordinal));
        }
        out.total += key_score(item, it->second->choice, scale.options);
        out.imputations += it->second->imputed ? 1 : 0;
        by_ordinal.erase(it);
    }
    if (!by_ordinal.empty()) {
        throw ContractViolation("dimension_score: vote for unknown item " + std::to_string(by_ordinal.begin()->first));
    }
    return out;
}

ScoreMatrix ScoreMatrix::from_records(std::span<const TrialRecord> records, const Scale& scale) {
    ScoreMatrix m;
    m.scale_ = std::make_shared<const Scale>(scale);
    std::map<std::pair<Subject, int>, std::vector<TrialRecord>> groups;
    std::set<Subject> subjects;
    for (const auto& r : records) {
        if (r.scale_id != scale.id) {
            throw ValidationError("score matrix: record from scale '" + r.scale_id + "' in a " + scale.id + " matrix");
        }
        const auto [dim, item] = scale.find_item(r.item_ordinal);
        if (item == nullptr || dim->code != r.dimension_code) {
            throw ValidationError("score matrix: unknown item " + std::to_string(r.item_ordinal) + " in dimension " +
                                  r.dimension_code);
        }
        if (r.keyed_score < scale.options.min_score() || r.keyed_score > scale.options.max_score()) {
            throw ValidationError("score matrix: keyed score " + std::to_string(r.keyed_score) + " out of range");
        }
        if (!m.trials_.emplace(std::tuple{r.subject, r.item_ordinal, r.repetition_index}, r.keyed_score).second) {
            throw ValidationError("score matrix: duplicate trial for " + r.subject.label() + " item " +
                                  std::to_string(r.item_ordinal) + " repetition " +
                                  std::to_string(r.repetition_index));
        }
        m.imputed_[{r.subject, r.item_ordinal, r.repetition_index}] = r.imputed;
        m.repetitions_[r.subject].insert(r.repetition_index);
        subjects.insert(r.subject);
        groups[{r.subject, r.item_ordinal}].push_back(r);
    }
    m.subjects_.assign(subjects.begin(), subjects.end());
    for (const auto& [key, group] : groups) {
        auto choice = vote(group, scale.options);
        const auto* item = scale.find_item(key.second).second;
        const int score = key_score(*item, choice.choice, scale.options);
        m.voted_.emplace(key, Voted{std::move(choice), score});
    }
    return m;
}

std::optional<int> ScoreMatrix::trial_score(const Subject& subject, int item_ordinal, int repetition) const {
    auto it = trials_.find({subject, item_ordinal, repetition});
    if (it == trials_.end()) {
        return std::nullopt;
    }
    return it->second;
}

int ScoreMatrix::repetition_count(const Subject& subject) const {
    auto it = repetitions_.find(subject);
    return it == repetitions_.end() ? 0 : static_cast<int>(it->second.size());
}

const VotedChoice* ScoreMatrix::voted(const Subject& subject, int item_ordinal) const {
    auto it = voted_.find({subject, item_ordinal});
    return it == voted_.end() ? nullptr : &it->second.choice;
}

std::optional<int> ScoreMatrix::voted_score(const Subject& subject, int item_ordinal) const {
    auto it = voted_.find({subject, item_ordinal});
    if (it == voted_.end()) {
        return std::nullopt;
    }
    return it->second.score;
}

std::vector<VotedChoice> ScoreMatrix::voted_for_dimension(const Subject& subject,
                                                          std::string_view dimension_code) const {
    std::vector<VotedChoice> out;
    for (const auto& item : scale_->dimension(dimension_code).items) {
        if (const auto* v = voted(subject, item.ordinal)) {
            out.push_back(*v);
        }
    }
    return out;
}

std::size_t ScoreMatrix::imputations(const Subject& subject, std::string_view dimension_code) const {
    std::size_t n = 0;
    for (const auto& item : scale_->dimension(dimension_code).items) {
        auto lo = imputed_.lower_bound({subject, item.ordinal, std::numeric_limits<int>::min()});
        for (; lo != imputed_.end() && std::get<0>(lo->first) == subject && std::get<1>(lo->first) == item.ordinal;
             ++lo) {
            n += lo->second ? 1 : 0;
        }
    }
    return n;
}

std::vector<std::vector<int>> repetition_vectors(const ScoreMatrix& matrix, const Subject& subject,
                                                 std::string_view dimension_code, std::optional<int> requested) {
    const int stored = matrix.repetition_count(subject);
    if (requested && *requested > stored) {
        throw ContractViolation("repetition_vectors: " + std::to_string(*requested) + " repetitions requested for " +
                                subject.label() + ", " + std::to_string(stored) + " stored");
    }
    const int count = requested.value_or(stored);
    const auto& items = matrix.scale().dimension(dimension_code).items;
    std::vector<std::vector<int>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int rep = 0; rep < count; ++rep) {
        std::vector<int> vec;
        vec.reserve(items.size());
        for (const auto& item : items) {
            auto score = matrix.trial_score(subject, item.ordinal, rep);
            if (!score) {
                throw IncompleteDimensionError("repetition " + std::to_string(rep) + " of " + subject.label() +
                                               " lacks item " + std::to_string(item.ordinal));
            }
            vec.push_back(*score);
        }
        out.push_back(std::move(vec));
    }
    return out;
}

ScoreTable score_table(const ScoreMatrix& matrix, std::string store_id, RunSummary summary, ScoreOptions options) {
    const auto& scale = matrix.scale();
    if (summary.completed == 0 || matrix.subjects().empty()) {
        throw IncompleteRunError("run for scale " + scale.id + " has no completed trials; nothing to score");
    }
    if (!summary.scorable() && !options.allow_incomplete) {
        throw IncompleteRunError("run for scale " + scale.id + " is incomplete (" + std::to_string(summary.completed) +
                                 " of " + std::to_string(summary.planned) + " trials, " +
                                 std::to_string(summary.failed) + " failed); pass --allow-incomplete to score anyway");
    }
    ScoreTable table;
    table.scale_id = scale.id;
    table.store_id = std::move(store_id);
    table.summary = summary;
    if (!summary.scorable()) {
        table.flags.push_back("scored with --allow-incomplete: " + std::to_string(summary.planned - summary.completed) +
                              " planned trials absent");
    }
    if (summary.imputed > 0) {
        table.flags.push_back(std::to_string(summary.imputed) + " UNPARSED trials imputed with the neutral score");
    }
    for (const auto& subject : matrix.subjects()) {
        for (const auto& dim : scale.dimensions) {
            const auto voted = matrix.voted_for_dimension(subject, dim.code);
            try {
                auto score = dimension_score(voted, scale, dim.code);
                score.subject = subject;
                score.imputations = matrix.imputations(subject, dim.code);
                table.scores.push_back(std::move(score));
            } catch (const IncompleteDimensionError& e) {
                if (!options.allow_incomplete) {
                    throw;
                }
                table.flags.push_back(std::string("skipped: ") + e.what());
            }
        }
    }
    return table;
}

ScoreTable score_table(const RunStore& store, ScoreOptions options) {
    const auto summary = store.summary();
    if (store.records().empty()) {
        throw IncompleteRunError("run store " + store.path().string() + " is empty; nothing to score");
    }
    const auto matrix = ScoreMatrix::from_records(store.records(), store.scale());
    return score_table(matrix, store.id(), summary, options);
}

}  // namespace psyeval
