#pragma once

#include "psyeval/administration.hpp"
#include "psyeval/error.hpp"
#include "psyeval/scale.hpp"

#include <map>
#include <memory>
#include <set>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace psyeval {

class IncompleteDimensionError : public Error {
public:
    explicit IncompleteDimensionError(const std::string& message) : Error(ErrorKind::IncompleteRun, message) {}
};

/// Sum of keyed scores over one subject x dimension. Stored as an exact
/// integer; the per-item average is derived on demand.
struct DimensionScore {
    Subject subject;
    std::string scale_id;
    std::string dimension_code;
    int total = 0;
    int item_count = 0;
    std::size_t imputations = 0;

    [[nodiscard]] double per_item_average() const noexcept {
        return static_cast<double>(total) / static_cast<double>(item_count);
    }
};

/// Total over one voted choice per item of `dimension_code`: positive items
/// score by the positive mapping, negative items by the reversed one.
/// Throws IncompleteDimensionError when an item has no vote and
/// ContractViolation for duplicate or foreign votes.
[[nodiscard]] DimensionScore dimension_score(std::span<const VotedChoice> voted, const Scale& scale,
                                             std::string_view dimension_code);

/// Per-repetition keyed scores plus the voted view for one scale.
class ScoreMatrix {
public:
    /// Indexes every record and votes each subject x item. Throws
    /// ValidationError on duplicate trials or records from another scale.
    [[nodiscard]] static ScoreMatrix from_records(std::span<const TrialRecord> records, const Scale& scale);

    [[nodiscard]] const Scale& scale() const noexcept { return *scale_; }
    [[nodiscard]] const std::vector<Subject>& subjects() const noexcept { return subjects_; }

    [[nodiscard]] std::optional<int> trial_score(const Subject& subject, int item_ordinal, int repetition) const;
    /// Number of distinct repetitions stored for the subject.
    [[nodiscard]] int repetition_count(const Subject& subject) const;

    [[nodiscard]] const VotedChoice* voted(const Subject& subject, int item_ordinal) const;
    [[nodiscard]] std::optional<int> voted_score(const Subject& subject, int item_ordinal) const;
    /// Voted choices of the subject for the dimension's items that have votes.
    [[nodiscard]] std::vector<VotedChoice> voted_for_dimension(const Subject& subject,
                                                               std::string_view dimension_code) const;
    /// Imputed trials of the subject within the dimension.
    [[nodiscard]] std::size_t imputations(const Subject& subject, std::string_view dimension_code) const;

private:
    struct Voted {
        VotedChoice choice;
        int score;
    };

    std::shared_ptr<const Scale> scale_;
    std::vector<Subject> subjects_;
    std::map<std::tuple<Subject, int, int>, int> trials_;
    std::map<std::tuple<Subject, int, int>, bool> imputed_;
    std::map<Subject, std::set<int>> repetitions_;
    std::map<std::pair<Subject, int>, Voted> voted_;
};

/// One vector of keyed item scores per stored repetition, in item-ordinal
/// order. When `requested` exceeds the stored repetition count this is a
/// ContractViolation; a hole in any vector is an IncompleteDimensionError.
[[nodiscard]] std::vector<std::vector<int>> repetition_vectors(const ScoreMatrix& matrix, const Subject& subject,
                                                               std::string_view dimension_code,
                                                               std::optional<int> requested = std::nullopt);

struct ScoreTable {
    std::string scale_id;
    std::string store_id;
    RunSummary summary;
    std::vector<DimensionScore> scores;  // subject-major, dimensions in scale order
    std::vector<std::string> flags;
};

struct ScoreOptions {
    /// Score a run with failed or missing trials; incomplete dimensions are
    /// skipped and flagged.
    bool allow_incomplete = false;
};

/// Every subject x dimension score of a run. Throws IncompleteRunError for an
/// empty store or a non-scorable run without the override.
[[nodiscard]] ScoreTable score_table(const RunStore& store, ScoreOptions options = {});

/// Same, from an already-built matrix (the store id and summary are supplied by the caller).
[[nodiscard]] ScoreTable score_table(const ScoreMatrix& matrix, std::string store_id, RunSummary summary,
                                     ScoreOptions options = {});

}  // namespace psyeval
