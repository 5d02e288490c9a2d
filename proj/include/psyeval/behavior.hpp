#pragma once

#include "psyeval/administration.hpp"
#include "psyeval/classifier.hpp"
#include "psyeval/error.hpp"
#include "psyeval/faithfulness.hpp"
#include "psyeval/gateway.hpp"
#include "psyeval/prompt.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace psyeval {

enum class OccasionSource { Generated, Curated };

struct Occasion {
    std::string dimension_code;
    std::string text;
    OccasionSource source = OccasionSource::Generated;
    bool accepted = false;
    /// Case-folded text equals an earlier candidate of the same dimension.
    bool duplicate = false;

    friend bool operator==(const Occasion&, const Occasion&) = default;
};

/// Trims, drops surrounding quotes and a trailing full stop, collapses inner whitespace.
[[nodiscard]] std::string normalize_occasion(std::string_view text);

/// Sets `duplicate` on every occasion whose case-folded text repeats an earlier one.
void flag_duplicates(std::vector<Occasion>& occasions);

/// Accepted occasions, in order. Throws ValidationError when two accepted
/// occasions coincide case-folded or more than `max_accepted` are accepted.
[[nodiscard]] std::vector<Occasion> accepted_occasions(std::span<const Occasion> occasions,
                                                       std::size_t max_accepted = 35);

/// Accepts the first `limit` non-duplicate candidates and rejects the rest.
void auto_accept(std::vector<Occasion>& occasions, std::size_t limit = 35);

struct OccasionGeneration {
    std::vector<Occasion> occasions;
    std::vector<std::string> errors;
};

/// Asks the generator for `count` candidates at temperature 1, one call per
/// candidate. A failing call ends generation with what was collected so far.
[[nodiscard]] OccasionGeneration generate_occasions(Gateway& gateway, std::string_view generator_endpoint,
                                                    const PromptTemplate& occasion_template,
                                                    std::string_view dimension_code, std::string_view factor,
                                                    std::size_t count = 40, int max_tokens = 32);

/// Review state of one candidate in a curation file.
enum class ReviewMark { Accept, Reject, Pending };

struct ReviewEntry {
    Occasion occasion;
    ReviewMark mark = ReviewMark::Pending;
};

/// Tab-separated "mark<TAB>dimension<TAB>occasion" lines; mark is y, n or ?.
/// Lines starting with '#' are comments. Duplicates are written as n.
void write_review_file(const std::filesystem::path& path, std::span<const Occasion> occasions,
                       bool mark_accepted = false);
[[nodiscard]] std::vector<ReviewEntry> read_review_file(const std::filesystem::path& path);
/// Occasions with accepted set from the marks. Throws ValidationError naming
/// the file when any entry is still pending.
[[nodiscard]] std::vector<Occasion> apply_review(std::span<const ReviewEntry> entries,
                                                 const std::filesystem::path& origin);

struct PseudoExample {
    std::string dimension_code;
    std::string occasion;
    Polarity polarity = Polarity::Positive;
    int slot = 0;
    std::string description;

    friend bool operator==(const PseudoExample&, const PseudoExample&) = default;
};

struct MissingSlot {
    std::string occasion;
    Polarity polarity = Polarity::Positive;
    int slot = 0;
    std::string reason;
};

struct PseudoDataset {
    std::vector<PseudoExample> examples;
    std::vector<MissingSlot> missing;
    std::size_t generated_now = 0;
    std::size_t skipped = 0;
};

struct PseudoDatasetOptions {
    int per_polarity = 10;
    double temperature = 1.0;
    int max_tokens = 256;
    /// Line-delimited dataset file to resume from and append to; empty keeps
    /// everything in memory.
    std::filesystem::path dataset_file;
};

/// For every accepted occasion and both polarities, `per_polarity`
/// descriptions from the generator. The template binds [POLARITY] ("is" or
/// "is not"), [FACTOR] and [OCCASION]. An empty generation is retried once
/// and then recorded as a missing slot.
[[nodiscard]] PseudoDataset generate_pseudo_dataset(Gateway& gateway, std::string_view generator_endpoint,
                                                    const PromptTemplate& pseudo_template,
                                                    std::span<const Occasion> occasions,
                                                    std::string_view dimension_code, std::string_view factor,
                                                    PseudoDatasetOptions options = {});

/// Reads a dataset file: {dimension, occasion, polarity, description[, slot]} per line.
[[nodiscard]] std::vector<PseudoExample> read_pseudo_dataset(const std::filesystem::path& path);

struct BehaviorDescription {
    Subject subject;
    std::string dimension_code;
    std::string occasion;
    int generation_index = 0;
    std::string prompt;
    std::string text;

    friend bool operator==(const BehaviorDescription&, const BehaviorDescription&) = default;
};

struct ElicitationPlan {
    std::vector<double> temperatures{0.0, 0.2, 0.5, 0.8, 1.0};
    int generations_nonzero = 3;
    int generations_zero = 1;
    int max_tokens = 256;

    [[nodiscard]] int generations_for(double temperature) const noexcept {
        return temperature == 0.0 ? generations_zero : generations_nonzero;
    }
};

/// Descriptions per endpoint for one dimension: occasions x generations summed over temperatures.
[[nodiscard]] std::size_t planned_description_count(const ElicitationPlan& plan, std::size_t occasion_count);

struct BehaviorFailure {
    Subject subject;
    std::string dimension_code;
    std::string occasion;
    int generation_index = 0;
    std::string error;
};

struct Elicitation {
    std::vector<BehaviorDescription> descriptions;
    std::vector<BehaviorFailure> failures;
};

/// One description per (temperature, generation, occasion) from `endpoint`.
/// The template binds [OCCASION]; the call index is the generation index.
[[nodiscard]] Elicitation elicit_behaviors(Gateway& gateway, std::string_view endpoint,
                                           const PromptTemplate& elicitation_template,
                                           std::span<const Occasion> occasions, std::string_view dimension_code,
                                           const ElicitationPlan& plan = {});

enum class CrsMode { Indicator, Probability };

[[nodiscard]] std::string_view to_string(CrsMode mode) noexcept;
[[nodiscard]] CrsMode parse_crs_mode(std::string_view text);

/// Criterion score over one set of verdicts: the fraction labelled positive
/// (Indicator) or the mean p_positive (Probability). Throws ContractViolation
/// for an empty set.
[[nodiscard]] double crs(std::span<const ClassifierVerdict> verdicts, CrsMode mode);

struct VerdictRecord {
    BehaviorDescription description;
    std::optional<ClassifierVerdict> verdict;  // nullopt: classifier gave no usable label
};

/// Classifies one description. ClassificationError propagates.
[[nodiscard]] VerdictRecord classify(const BehaviorDescription& description, ClassifierClient& classifier);

struct CriterionScore {
    std::string endpoint_id;
    std::optional<double> temperature;  // nullopt: pooled over the endpoint's temperatures
    std::string dimension_code;
    double value = 0.0;
    std::size_t n_descriptions = 0;
    std::size_t unparsed = 0;
    CrsMode mode = CrsMode::Indicator;

    [[nodiscard]] std::string label() const;
};

/// Per-subject scores followed by per-endpoint pooled scores, for every
/// (subject, dimension) with at least one usable verdict. Unparsed verdicts
/// are counted and left out.
[[nodiscard]] std::vector<CriterionScore> criterion_scores(std::span<const VerdictRecord> verdicts, CrsMode mode);

/// Per-subject criterion scores arranged for behavioural consistency.
[[nodiscard]] CriterionSeries criterion_series(std::span<const CriterionScore> scores);

/// Everything the behaviour stage needs besides the gateway and classifier.
struct BehaviorSpec {
    std::vector<std::string> dimensions{"EXT", "AGR", "CONS", "EMO", "OPEN"};
    /// Trait adjective per dimension, bound to [FACTOR].
    std::map<std::string, std::string, std::less<>> factors;
    std::string generator_endpoint;
    std::vector<std::string> subject_endpoints;
    ElicitationPlan elicitation;
    std::size_t occasion_candidates = 40;
    std::size_t occasions_accepted = 35;
    int pseudo_per_polarity = 10;
    /// Curated occasions per dimension; when present they replace generation.
    std::map<std::string, std::vector<std::string>, std::less<>> curated_occasions;
    CrsMode mode = CrsMode::Indicator;
    /// Word limit for occasion, pseudo-example and behaviour generations.
    int generation_max_tokens = 256;
};

[[nodiscard]] std::map<std::string, std::string, std::less<>> default_factors();

struct BehaviorTemplates {
    PromptTemplate occasion;
    PromptTemplate pseudo;
    PromptTemplate elicitation;
};

struct BehaviorOptions {
    bool auto_accept = false;
};

/// Thrown when a review file still has pending candidates.
class CurationRequiredError : public ValidationError {
public:
    CurationRequiredError(const std::filesystem::path& review_file, std::size_t pending)
        : ValidationError("occasions in " + review_file.string() + " are not curated (" + std::to_string(pending) +
                          " pending); mark each candidate y or n, or pass --auto-accept"),
          review_file_(review_file) {}
    [[nodiscard]] const std::filesystem::path& review_file() const noexcept { return review_file_; }

private:
    std::filesystem::path review_file_;
};

/// Directory of one behaviour run: manifest.json, occasions_<DIM>.tsv,
/// dataset_<DIM>.jsonl, behaviors.jsonl, failures.jsonl, verdicts.jsonl and
/// crs.json. Record files are append-only and resumable.
class BehaviorStore {
public:
    [[nodiscard]] static BehaviorStore open(const std::filesystem::path& dir);

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return dir_; }
    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] CrsMode mode() const noexcept { return mode_; }
    [[nodiscard]] const std::vector<VerdictRecord>& verdicts() const noexcept { return verdicts_; }
    [[nodiscard]] std::vector<CriterionScore> scores() const { return criterion_scores(verdicts_, mode_); }
    [[nodiscard]] std::vector<CriterionScore> scores(CrsMode mode) const { return criterion_scores(verdicts_, mode); }

private:
    std::filesystem::path dir_;
    std::string id_;
    CrsMode mode_ = CrsMode::Indicator;
    std::vector<VerdictRecord> verdicts_;
};

struct BehaviorDimensionSummary {
    std::string dimension_code;
    std::size_t occasions = 0;
    std::size_t pseudo_examples = 0;
    std::size_t missing_examples = 0;
    std::size_t descriptions = 0;
    std::vector<std::string> notes;
};

struct BehaviorResult {
    std::string store_id;
    std::vector<BehaviorDimensionSummary> dimensions;
    std::size_t failures = 0;
    std::size_t unparsed = 0;
    std::vector<CriterionScore> scores;
};

/// Runs occasion curation, pseudo-dataset generation, elicitation,
/// classification and scoring into `dir`, resuming whatever is already there.
/// Throws CurationRequiredError when a review file has pending candidates and
/// auto-accept is off.
[[nodiscard]] BehaviorResult run_behavior(const BehaviorSpec& spec, const BehaviorTemplates& templates,
                                          Gateway& gateway, ClassifierClient& classifier,
                                          const std::filesystem::path& dir, BehaviorOptions options = {});

}  // namespace psyeval
