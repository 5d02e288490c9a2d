#pragma once

#include "psyeval/gateway.hpp"
#include "psyeval/prompt.hpp"
#include "psyeval/scale.hpp"

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace psyeval {

namespace detail {
class JsonLineWriter;
}

/// One (endpoint, sampling temperature) pair.
struct Subject {
    std::string endpoint_id;
    double temperature = 0.0;

    /// "endpoint@temperature", e.g. "text-davinci-003@0.2".
    [[nodiscard]] std::string label() const;

    friend auto operator<=>(const Subject&, const Subject&) = default;
    friend bool operator==(const Subject&, const Subject&) = default;
};

struct RunPlan {
    std::string scale_id;
    std::vector<std::string> endpoints;
    std::vector<double> temperatures{0.0, 0.2, 0.5, 0.8, 1.0};
    int repetitions_nonzero = 4;
    int repetitions_zero = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] int repetitions_for(double temperature) const noexcept {
        return temperature == 0.0 ? repetitions_zero : repetitions_nonzero;
    }
    /// Endpoints x temperatures, in plan order.
    [[nodiscard]] std::vector<Subject> subjects() const;

    friend bool operator==(const RunPlan&, const RunPlan&) = default;
};

/// Throws ValidationError naming the broken invariant.
void validate_plan(const RunPlan& plan);

/// Number of trials the plan administers over a scale with `item_count` items.
[[nodiscard]] std::size_t planned_trial_count(const RunPlan& plan, std::size_t item_count);

struct TrialRecord {
    Subject subject;
    std::string scale_id;
    std::string dimension_code;
    int item_ordinal = 0;
    int repetition_index = 0;
    std::string prompt;
    std::string raw_text;
    std::optional<std::string> parsed_choice;  // nullopt is UNPARSED
    bool imputed = false;
    int keyed_score = 0;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct TrialKey {
    Subject subject;
    int item_ordinal = 0;
    int repetition_index = 0;

    friend auto operator<=>(const TrialKey&, const TrialKey&) = default;
};

[[nodiscard]] inline TrialKey key_of(const TrialRecord& r) {
    return {r.subject, r.item_ordinal, r.repetition_index};
}

struct TrialFailure {
    Subject subject;
    std::string scale_id;
    int item_ordinal = 0;
    int repetition_index = 0;
    std::string error;
};

struct VotedChoice {
    Subject subject;
    std::string scale_id;
    std::string dimension_code;
    int item_ordinal = 0;
    std::string choice;
    std::map<std::string, int> vote_counts;
    bool tie_broken = false;
    /// No repetition produced a readable letter; choice is the neutral option.
    bool imputed = false;
};

/// Plurality vote over one subject x item. UNPARSED records do not vote. Ties
/// go to the letter whose positive score is closest to the scale midpoint,
/// then to the alphabetically earlier letter. Throws ContractViolation on
/// empty or mixed input.
[[nodiscard]] VotedChoice vote(std::span<const TrialRecord> records, const LikertMapping& mapping);

/// Marks an UNPARSED record as imputed with the neutral score. Throws
/// ContractViolation for a parsed record or a mapping without a neutral option.
[[nodiscard]] TrialRecord impute(TrialRecord record, const LikertMapping& mapping);

struct RunManifest {
    RunPlan plan;
    std::string scale_sha256;
    std::map<std::string, std::string> template_hashes;

    friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

struct RunSummary {
    std::size_t planned = 0;
    std::size_t completed = 0;
    std::size_t failed = 0;   // planned trials whose latest attempt failed
    std::size_t missing = 0;  // planned trials never attempted
    std::size_t imputed = 0;

    [[nodiscard]] bool scorable() const noexcept { return planned > 0 && completed == planned; }
};

/// Directory holding manifest.json, scale.json, trials.jsonl and
/// failures.jsonl. Record files are append-only, one JSON object per line;
/// a trailing line without a newline is an interrupted write and is ignored.
class RunStore {
public:
    /// Creates the directory, or reopens it when its manifest matches. Throws
    /// ValidationError when an existing store was made for a different plan.
    [[nodiscard]] static RunStore create_or_open(const std::filesystem::path& dir, const RunManifest& manifest,
                                                 const Scale& scale);
    [[nodiscard]] static RunStore open(const std::filesystem::path& dir);

    RunStore(RunStore&&) noexcept;
    RunStore& operator=(RunStore&&) noexcept;
    ~RunStore();

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return dir_; }
    [[nodiscard]] const RunManifest& manifest() const noexcept { return manifest_; }
    [[nodiscard]] const Scale& scale() const noexcept { return scale_; }
    /// Content hash of the manifest; identifies the store in reports.
    [[nodiscard]] const std::string& id() const noexcept { return id_; }

    [[nodiscard]] const std::vector<TrialRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const std::vector<TrialFailure>& failures() const noexcept { return failures_; }
    [[nodiscard]] bool has_trial(const TrialKey& key) const { return keys_.contains(key); }

    void append(const TrialRecord& record);
    void append_failure(const TrialFailure& failure);

    [[nodiscard]] RunSummary summary() const;

private:
    RunStore(std::filesystem::path dir, RunManifest manifest, Scale scale, std::string id);
    void load_records();

    std::filesystem::path dir_;
    RunManifest manifest_;
    Scale scale_;
    std::string id_;
    std::vector<TrialRecord> records_;
    std::vector<TrialFailure> failures_;
    std::set<TrialKey> keys_;
    std::unique_ptr<detail::JsonLineWriter> trials_writer_;
    std::unique_ptr<detail::JsonLineWriter> failures_writer_;
};

struct AdministerOptions {
    /// Trials per concurrently executed batch; each batch is appended in plan order.
    std::size_t batch_size = 64;
    /// Called after every batch with (done, planned).
    std::function<void(std::size_t, std::size_t)> progress;
};

struct AdministerResult {
    RunStore store;
    std::size_t skipped = 0;
    std::size_t completed_now = 0;
    std::size_t failed_now = 0;
    std::size_t requeried = 0;
    RunSummary summary;
};

/// Administers every item of `scale` to every subject of `plan`, repeating per
/// temperature, and appends one TrialRecord per trial to the store at
/// `store_dir`. Trials already in the store are skipped. Endpoint failures are
/// recorded in failures.jsonl and leave the run non-scorable.
[[nodiscard]] AdministerResult administer(const RunPlan& plan, const Scale& scale, Gateway& gateway,
                                          const PromptTemplate& item_template,
                                          const std::filesystem::path& store_dir, AdministerOptions options = {});

}  // namespace psyeval
