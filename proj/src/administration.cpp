#include "psyeval/administration.hpp"

#include "parallel.hpp"
#include "psyeval/choice_parser.hpp"
#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace psyeval {

std::string Subject::label() const {
    return endpoint_id + "@" + format_temperature(temperature);
}

std::vector<Subject> RunPlan::subjects() const {
    std::vector<Subject> out;
    out.reserve(endpoints.size() * temperatures.size());
    for (const auto& ep : endpoints) {
        for (double t : temperatures) {
            out.push_back({ep, t});
        }
    }
    return out;
}

void validate_plan(const RunPlan& plan) {
    if (plan.scale_id.empty()) {
        throw ValidationError("run plan: scale_id must be non-empty");
    }
    if (plan.endpoints.empty()) {
        throw ValidationError("run plan: at least one endpoint required");
    }
    if (std::set<std::string>(plan.endpoints.begin(), plan.endpoints.end()).size() != plan.endpoints.size()) {
        throw ValidationError("run plan: duplicate endpoint");
    }
    if (plan.temperatures.empty()) {
        throw ValidationError("run plan: at least one temperature required");
    }
    std::set<double> seen;
    for (double t : plan.temperatures) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw ValidationError("run plan: temperature " + format_temperature(t) + " outside [0,1]");
        }
        if (!seen.insert(t).second) {
            throw ValidationError("run plan: duplicate temperature " + format_temperature(t));
        }
    }
    if (plan.repetitions_nonzero < 2) {
        throw ValidationError("run plan: repetitions_nonzero must be >= 2");
    }
    if (plan.repetitions_zero < 1) {
        throw ValidationError("run plan: repetitions_zero must be >= 1");
    }
}

std::size_t planned_trial_count(const RunPlan& plan, std::size_t item_count) {
    std::size_t reps = 0;
    for (double t : plan.temperatures) {
        reps += static_cast<std::size_t>(plan.repetitions_for(t));
    }
    return plan.endpoints.size() * reps * item_count;
}

VotedChoice vote(std::span<const TrialRecord> records, const LikertMapping& mapping) {
    if (records.empty()) {
        throw ContractViolation("vote: no records");
    }
    const auto& first = records.front();
    VotedChoice out;
    out.subject = first.subject;
    out.scale_id = first.scale_id;
    out.dimension_code = first.dimension_code;
    out.item_ordinal = first.item_ordinal;
    for (const auto& r : records) {
        if (r.subject != first.subject || r.item_ordinal != first.item_ordinal || r.scale_id != first.scale_id) {
            throw ContractViolation("vote: records span more than one subject x item");
        }
        if (r.parsed_choice) {
            if (!mapping.index_of(*r.parsed_choice)) {
                throw InvalidChoiceError("vote: choice '" + *r.parsed_choice + "' not in mapping");
            }
            ++out.vote_counts[*r.parsed_choice];
        }
    }
    if (out.vote_counts.empty()) {
        const auto neutral = mapping.neutral_index();
        if (!neutral) {
            throw ContractViolation("vote: nothing parsed and the mapping has no neutral option");
        }
        out.choice = mapping.letter(*neutral);
        out.imputed = true;
        return out;
    }
    int best = 0;
    for (const auto& [_, n] : out.vote_counts) {
        best = std::max(best, n);
    }
    std::vector<std::string> tied;
    for (const auto& [letter, n] : out.vote_counts) {
        if (n == best) {
            tied.push_back(letter);
        }
    }
    if (tied.size() > 1) {
        const double mid = mapping.midpoint();
        auto distance = [&](const std::string& letter) {
            return std::abs(mapping.positive_scores()[*mapping.index_of(letter)] - mid);
        };
        std::sort(tied.begin(), tied.end(), [&](const std::string& a, const std::string& b) {
            const auto da = distance(a);
            const auto db = distance(b);
            return da != db ? da < db : a < b;
        });
        out.tie_broken = true;
    }
    out.choice = tied.front();
    return out;
}

TrialRecord impute(TrialRecord record, const LikertMapping& mapping) {
    if (record.parsed_choice) {
        throw ContractViolation("impute: record for item " + std::to_string(record.item_ordinal) + " was parsed");
    }
    const auto neutral = mapping.neutral_score();
    if (!neutral) {
        throw ContractViolation("impute: mapping has no neutral option");
    }
    record.imputed = true;
    record.keyed_score = *neutral;
    return record;
}

namespace {

struct Trial {
    Subject subject;
    const DimensionSpec* dimension;
    const ScaleItem* item;
    int repetition;
    int repetitions;
};

struct TrialOutcome {
    std::optional<TrialRecord> record;
    std::optional<TrialFailure> failure;
    bool requeried = false;
};

TrialOutcome run_trial(const Trial& trial, const Scale& scale, Gateway& gateway, const PromptTemplate& tmpl) {
    TrialOutcome outcome;
    TrialRecord record;
    record.subject = trial.subject;
    record.scale_id = scale.id;
    record.dimension_code = trial.dimension->code;
    record.item_ordinal = trial.item->ordinal;
    record.repetition_index = trial.repetition;
    record.prompt = render_prompt(tmpl, {{"ITEM", trial.item->text}});
    try {
        // The re-query on UNPARSED uses a call index past every repetition so
        // scripted replays stay deterministic.
        const std::uint64_t first_call = static_cast<std::uint64_t>(trial.repetition);
        auto completion = gateway.complete(trial.subject.endpoint_id, record.prompt, trial.subject.temperature,
                                           CallOptions{first_call, std::nullopt});
        auto choice = parse_choice(completion.raw_text, scale.options);
        if (!choice) {
            outcome.requeried = true;
            completion = gateway.complete(trial.subject.endpoint_id, record.prompt, trial.subject.temperature,
                                          CallOptions{first_call + static_cast<std::uint64_t>(trial.repetitions),
                                                      std::nullopt});
            choice = parse_choice(completion.raw_text, scale.options);
        }
        record.raw_text = std::move(completion.raw_text);
        record.parsed_choice = std::move(choice);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Endpoint) {
            throw;
        }
        outcome.failure = TrialFailure{trial.subject, scale.id, trial.item->ordinal, trial.repetition, e.what()};
        return outcome;
    }
    if (record.parsed_choice) {
        record.keyed_score = key_score(*trial.item, *record.parsed_choice, scale.options);
    } else {
        record = impute(std::move(record), scale.options);
    }
    outcome.record = std::move(record);
    return outcome;
}

}  // namespace

AdministerResult administer(const RunPlan& plan, const Scale& scale, Gateway& gateway,
                            const PromptTemplate& item_template, const std::filesystem::path& store_dir,
                            AdministerOptions options) {
    validate_plan(plan);
    validate_scale(scale);
    if (plan.scale_id != scale.id) {
        throw ValidationError("administer: plan is for scale '" + plan.scale_id + "', got '" + scale.id + "'");
    }
    for (const auto& ep : plan.endpoints) {
        (void)gateway.endpoint(ep);
    }
    RunManifest manifest{plan, sha256_hex(serialize_scale(scale)), {{item_template.id(), item_template.hash()}}};
    AdministerResult result{RunStore::create_or_open(store_dir, manifest, scale), 0, 0, 0, 0, {}};
    auto& store = result.store;

    const auto items = scale.questionnaire();
    std::vector<Trial> pending;
    for (const auto& subject : plan.subjects()) {
        const int reps = plan.repetitions_for(subject.temperature);
        for (int rep = 0; rep < reps; ++rep) {
            for (const auto& [dim, item] : items) {
                if (store.has_trial({subject, item->ordinal, rep})) {
                    ++result.skipped;
                    continue;
                }
                pending.push_back({subject, dim, item, rep, reps});
            }
        }
    }

    const auto planned = planned_trial_count(plan, scale.item_count());
    const auto batch_size = std::max<std::size_t>(1, options.batch_size);
    for (std::size_t begin = 0; begin < pending.size(); begin += batch_size) {
        const auto end = std::min(pending.size(), begin + batch_size);
        std::vector<TrialOutcome> outcomes(end - begin);
        detail::parallel_for(outcomes.size(), gateway.max_in_flight(), [&](std::size_t i) {
            outcomes[i] = run_trial(pending[begin + i], scale, gateway, item_template);
        });
        for (auto& outcome : outcomes) {
            result.requeried += outcome.requeried ? 1 : 0;
            if (outcome.record) {
                store.append(*outcome.record);
                ++result.completed_now;
            } else {
                store.append_failure(*outcome.failure);
                ++result.failed_now;
            }
        }
        if (options.progress) {
            options.progress(result.skipped + end, planned);
        }
    }
    result.summary = store.summary();
    return result;
}

}  // namespace psyeval
