#include "psyeval/behavior.hpp"

#include "json_io.hpp"
#include "parallel.hpp"
#include "psyeval/choice_parser.hpp"
#include "psyeval/util.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace psyeval {

using detail::json;

std::string normalize_occasion(std::string_view text) {
    auto s = trim(text);
    // Strip wrapping quotes and a trailing full stop, repeatedly, in any order.
    for (bool changed = true; changed && !s.empty();) {
        changed = false;
        if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
            s = trim(s.substr(1, s.size() - 2));
            changed = true;
        } else if (s.back() == '.') {
            s = trim(s.substr(0, s.size() - 1));
            changed = true;
        }
    }
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = true;
            continue;
        }
        if (space && !out.empty()) {
            out.push_back(' ');
        }
        space = false;
        out.push_back(c);
    }
    return out;
}

void flag_duplicates(std::vector<Occasion>& occasions) {
    std::set<std::pair<std::string, std::string>> seen;
    for (auto& o : occasions) {
        o.duplicate = !seen.insert({o.dimension_code, to_lower_ascii(o.text)}).second;
    }
}

std::vector<Occasion> accepted_occasions(std::span<const Occasion> occasions, std::size_t max_accepted) {
    std::vector<Occasion> out;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& o : occasions) {
        if (!o.accepted) {
            continue;
        }
        if (!seen.insert({o.dimension_code, to_lower_ascii(o.text)}).second) {
            throw ValidationError("occasion '" + o.text + "' accepted twice for " + o.dimension_code);
        }
        out.push_back(o);
    }
    if (out.size() > max_accepted) {
        throw ValidationError(std::to_string(out.size()) + " occasions accepted, at most " +
                              std::to_string(max_accepted) + " allowed");
    }
    return out;
}

void auto_accept(std::vector<Occasion>& occasions, std::size_t limit) {
    std::size_t taken = 0;
    for (auto& o : occasions) {
        o.accepted = !o.duplicate && !o.text.empty() && taken < limit;
        taken += o.accepted ? 1 : 0;
    }
}

OccasionGeneration generate_occasions(Gateway& gateway, std::string_view generator_endpoint,
                                      const PromptTemplate& occasion_template, std::string_view dimension_code,
                                      std::string_view factor, std::size_t count, int max_tokens) {
    OccasionGeneration out;
    const auto prompt = render_prompt(occasion_template, {{"FACTOR", std::string(factor)}});
    for (std::size_t i = 0; i < count; ++i) {
        try {
            const auto completion =
                gateway.complete(generator_endpoint, prompt, 1.0, CallOptions{i, max_tokens});
            out.occasions.push_back(
                {std::string(dimension_code), normalize_occasion(completion.raw_text), OccasionSource::Generated});
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Endpoint) {
                throw;
            }
            out.errors.push_back("candidate " + std::to_string(i) + ": " + e.what());
            break;
        }
    }
    flag_duplicates(out.occasions);
    return out;
}

void write_review_file(const std::filesystem::path& path, std::span<const Occasion> occasions, bool mark_accepted) {
    std::ostringstream out;
    out << "# mark each candidate y (accept) or n (reject); ? is pending\n";
    for (const auto& o : occasions) {
        char mark = '?';
        if (o.duplicate) {
            mark = 'n';
        } else if (mark_accepted) {
            mark = o.accepted ? 'y' : 'n';
        }
        out << mark << '\t' << o.dimension_code << '\t' << o.text << '\n';
    }
    write_text_file_atomic(path, out.str());
}

std::vector<ReviewEntry> read_review_file(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<ReviewEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty() || line.front() == '#') {
            continue;
        }
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos) {
            throw ParseError(path.string(), "line " + std::to_string(line_no),
                             "expected mark<TAB>dimension<TAB>occasion");
        }
        const auto mark = to_lower_ascii(trim(line.substr(0, t1)));
        ReviewEntry entry;
        if (mark == "y") {
            entry.mark = ReviewMark::Accept;
        } else if (mark == "n") {
            entry.mark = ReviewMark::Reject;
        } else if (mark == "?") {
            entry.mark = ReviewMark::Pending;
        } else {
            throw ParseError(path.string(), "line " + std::to_string(line_no), "mark must be y, n or ?");
        }
        entry.occasion.dimension_code = trim(line.substr(t1 + 1, t2 - t1 - 1));
        entry.occasion.text = normalize_occasion(line.substr(t2 + 1));
        entry.occasion.source = OccasionSource::Curated;
        entry.occasion.accepted = entry.mark == ReviewMark::Accept;
        out.push_back(std::move(entry));
    }
    std::vector<Occasion> occasions;
    for (const auto& e : out) {
        occasions.push_back(e.occasion);
    }
    flag_duplicates(occasions);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].occasion.duplicate = occasions[i].duplicate;
    }
    return out;
}

std::vector<Occasion> apply_review(std::span<const ReviewEntry> entries, const std::filesystem::path& origin) {
    const auto pending = static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.mark == ReviewMark::Pending; }));
    if (pending > 0) {
        throw CurationRequiredError(origin, pending);
    }
    std::vector<Occasion> out;
    for (const auto& e : entries) {
        out.push_back(e.occasion);
        out.back().accepted = e.mark == ReviewMark::Accept;
    }
    return out;
}

namespace {

json example_to_json(const PseudoExample& e) {
    return {{"dimension", e.dimension_code},
            {"occasion", e.occasion},
            {"polarity", polarity_label(e.polarity)},
            {"description", e.description},
            {"slot", e.slot}};
}

PseudoExample example_from_json(const json& j) {
    PseudoExample e;
    e.dimension_code = j.at("dimension").get<std::string>();
    e.occasion = j.at("occasion").get<std::string>();
    e.polarity = parse_polarity(j.at("polarity").get<std::string>());
    e.description = j.at("description").get<std::string>();
    e.slot = j.value("slot", 0);
    return e;
}

json description_to_json(const BehaviorDescription& d) {
    return {{"subject", detail::to_json(d.subject)},
            {"dimension", d.dimension_code},
            {"occasion", d.occasion},
            {"generation_index", d.generation_index},
            {"prompt", d.prompt},
            {"text", d.text}};
}

BehaviorDescription description_from_json(const json& j) {
    return {detail::subject_from_json(j.at("subject")), j.at("dimension").get<std::string>(),
            j.at("occasion").get<std::string>(),        j.at("generation_index").get<int>(),
            j.at("prompt").get<std::string>(),          j.at("text").get<std::string>()};
}

json failure_to_json(const BehaviorFailure& f) {
    return {{"subject", detail::to_json(f.subject)},
            {"dimension", f.dimension_code},
            {"occasion", f.occasion},
            {"generation_index", f.generation_index},
            {"error", f.error}};
}

json verdict_to_json(const VerdictRecord& v) {
    auto j = description_to_json(v.description);
    if (v.verdict) {
        j["label"] = polarity_label(v.verdict->label);
        j["p_positive"] = v.verdict->p_positive;
        j["classifier_id"] = v.verdict->classifier_id;
    } else {
        j["label"] = kUnparsed;
        j["p_positive"] = nullptr;
        j["classifier_id"] = nullptr;
    }
    return j;
}

VerdictRecord verdict_from_json(const json& j) {
    VerdictRecord v{description_from_json(j), std::nullopt};
    const auto label = j.at("label").get<std::string>();
    if (label != kUnparsed) {
        v.verdict = make_verdict(parse_polarity(label), j.at("p_positive").get<double>(),
                                 j.at("classifier_id").get<std::string>());
    }
    return v;
}

using DescriptionKey = std::tuple<Subject, std::string, std::string, int>;

DescriptionKey key_of(const BehaviorDescription& d) {
    return {d.subject, d.dimension_code, d.occasion, d.generation_index};
}

template <typename T>
std::vector<T> read_records(const std::filesystem::path& path, T (*from)(const json&)) {
    std::vector<T> out;
    for (const auto& line : detail::read_json_lines(path)) {
        try {
            out.push_back(from(line));
        } catch (const json::exception& e) {
            throw ParseError(path.string(), "record " + std::to_string(out.size() + 1), e.what());
        } catch (const ValidationError& e) {
            throw ParseError(path.string(), "record " + std::to_string(out.size() + 1), e.what());
        }
    }
    return out;
}

/// Runs `tasks` concurrently in batches, handing each batch's results to
/// `sink` in task order.
template <typename Task, typename Result, typename Run, typename Sink>
void run_batches(const std::vector<Task>& tasks, int workers, Run run, Sink sink) {
    constexpr std::size_t kBatch = 64;
    for (std::size_t begin = 0; begin < tasks.size(); begin += kBatch) {
        const auto end = std::min(tasks.size(), begin + kBatch);
        std::vector<Result> results(end - begin);
        detail::parallel_for(results.size(), workers, [&](std::size_t i) { results[i] = run(tasks[begin + i]); });
        for (auto& r : results) {
            sink(r);
        }
    }
}

struct ElicitTask {
    Subject subject;
    const Occasion* occasion;
    int generation;
};

struct ElicitOutcome {
    std::optional<BehaviorDescription> description;
    std::optional<BehaviorFailure> failure;
};

Elicitation elicit_impl(Gateway& gateway, std::string_view endpoint, const PromptTemplate& tmpl,
                        std::span<const Occasion> occasions, std::string_view dimension_code,
                        const ElicitationPlan& plan, const std::set<DescriptionKey>* done,
                        detail::JsonLineWriter* out_file, detail::JsonLineWriter* fail_file) {
    for (double t : plan.temperatures) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw ValidationError("elicitation: temperature " + format_temperature(t) + " outside [0,1]");
        }
    }
    if (plan.generations_nonzero < 1 || plan.generations_zero < 1) {
        throw ValidationError("elicitation: generations per temperature must be >= 1");
    }
    std::vector<ElicitTask> tasks;
    for (double t : plan.temperatures) {
        const Subject subject{std::string(endpoint), t};
        for (int g = 0; g < plan.generations_for(t); ++g) {
            for (const auto& o : occasions) {
                if (done != nullptr && done->contains({subject, std::string(dimension_code), o.text, g})) {
                    continue;
                }
                tasks.push_back({subject, &o, g});
            }
        }
    }
    Elicitation out;
    run_batches<ElicitTask, ElicitOutcome>(
        tasks, gateway.max_in_flight(),
        [&](const ElicitTask& task) {
            ElicitOutcome outcome;
            BehaviorDescription d{task.subject, std::string(dimension_code), task.occasion->text, task.generation,
                                  render_prompt(tmpl, {{"OCCASION", task.occasion->text}}), {}};
            try {
                auto c = gateway.complete(
                    endpoint, d.prompt, task.subject.temperature,
                    CallOptions{static_cast<std::uint64_t>(task.generation), plan.max_tokens});
                d.text = trim(c.raw_text);
                if (d.text.empty()) {
                    throw EndpointError("empty description");
                }
                outcome.description = std::move(d);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Endpoint) {
                    throw;
                }
                outcome.failure =
                    BehaviorFailure{task.subject, std::string(dimension_code), task.occasion->text, task.generation,
                                    e.what()};
            }
            return outcome;
        },
        [&](ElicitOutcome& outcome) {
            if (outcome.description) {
                if (out_file != nullptr) {
                    out_file->write(description_to_json(*outcome.description));
                }
                out.descriptions.push_back(std::move(*outcome.description));
            } else {
                if (fail_file != nullptr) {
                    fail_file->write(failure_to_json(*outcome.failure));
                }
                out.failures.push_back(std::move(*outcome.failure));
            }
        });
    return out;
}

}  // namespace

PseudoDataset generate_pseudo_dataset(Gateway& gateway, std::string_view generator_endpoint,
                                      const PromptTemplate& pseudo_template, std::span<const Occasion> occasions,
                                      std::string_view dimension_code, std::string_view factor,
                                      PseudoDatasetOptions options) {
    if (options.per_polarity < 1) {
        throw ValidationError("pseudo dataset: per_polarity must be >= 1");
    }
    PseudoDataset out;
    std::set<std::tuple<std::string, Polarity, int>> done;
    std::unique_ptr<detail::JsonLineWriter> writer;
    if (!options.dataset_file.empty()) {
        for (auto& e : read_records<PseudoExample>(options.dataset_file, &example_from_json)) {
            if (e.dimension_code == dimension_code && done.insert({e.occasion, e.polarity, e.slot}).second) {
                out.examples.push_back(std::move(e));
            }
        }
        out.skipped = out.examples.size();
        writer = std::make_unique<detail::JsonLineWriter>(options.dataset_file);
    }

    struct Task {
        const Occasion* occasion;
        Polarity polarity;
        int slot;
    };
    struct Outcome {
        std::optional<PseudoExample> example;
        std::optional<MissingSlot> missing;
    };
    std::vector<Task> tasks;
    for (const auto& o : occasions) {
        if (!o.accepted) {
            throw ContractViolation("pseudo dataset: occasion '" + o.text + "' is not accepted");
        }
        for (auto polarity : {Polarity::Positive, Polarity::Negative}) {
            for (int slot = 0; slot < options.per_polarity; ++slot) {
                if (!done.contains({o.text, polarity, slot})) {
                    tasks.push_back({&o, polarity, slot});
                }
            }
        }
    }

    run_batches<Task, Outcome>(
        tasks, gateway.max_in_flight(),
        [&](const Task& task) {
            Outcome outcome;
            const auto prompt = render_prompt(
                pseudo_template, {{"POLARITY", task.polarity == Polarity::Positive ? "is" : "is not"},
                                  {"FACTOR", std::string(factor)},
                                  {"OCCASION", task.occasion->text}});
            std::string reason = "empty generation after retry";
            for (int attempt = 0; attempt < 2; ++attempt) {
                const auto call = static_cast<std::uint64_t>(task.slot + attempt * options.per_polarity);
                try {
                    auto c = gateway.complete(generator_endpoint, prompt, options.temperature,
                                              CallOptions{call, options.max_tokens});
                    auto text = trim(c.raw_text);
                    if (!text.empty()) {
                        outcome.example = PseudoExample{std::string(dimension_code), task.occasion->text,
                                                        task.polarity, task.slot, std::move(text)};
                        return outcome;
                    }
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::Endpoint) {
                        throw;
                    }
                    reason = e.what();
                    break;
                }
            }
            outcome.missing = MissingSlot{task.occasion->text, task.polarity, task.slot, reason};
            return outcome;
        },
        [&](Outcome& outcome) {
            if (outcome.example) {
                if (writer) {
                    writer->write(example_to_json(*outcome.example));
                }
                out.examples.push_back(std::move(*outcome.example));
                ++out.generated_now;
            } else {
                out.missing.push_back(std::move(*outcome.missing));
            }
        });
    return out;
}

std::vector<PseudoExample> read_pseudo_dataset(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw NotFoundError("pseudo dataset not found: " + path.string());
    }
    return read_records<PseudoExample>(path, &example_from_json);
}

std::size_t planned_description_count(const ElicitationPlan& plan, std::size_t occasion_count) {
    std::size_t per_occasion = 0;
    for (double t : plan.temperatures) {
        per_occasion += static_cast<std::size_t>(plan.generations_for(t));
    }
    return per_occasion * occasion_count;
}

Elicitation elicit_behaviors(Gateway& gateway, std::string_view endpoint, const PromptTemplate& elicitation_template,
                             std::span<const Occasion> occasions, std::string_view dimension_code,
                             const ElicitationPlan& plan) {
    return elicit_impl(gateway, endpoint, elicitation_template, occasions, dimension_code, plan, nullptr, nullptr,
                       nullptr);
}

std::string_view to_string(CrsMode mode) noexcept {
    return mode == CrsMode::Indicator ? "indicator" : "probability";
}

CrsMode parse_crs_mode(std::string_view text) {
    const auto lower = to_lower_ascii(text);
    if (lower == "indicator") {
        return CrsMode::Indicator;
    }
    if (lower == "probability") {
        return CrsMode::Probability;
    }
    throw ValidationError("unknown CrS mode '" + std::string(text) + "' (expected indicator or probability)");
}

double crs(std::span<const ClassifierVerdict> verdicts, CrsMode mode) {
    if (verdicts.empty()) {
        throw ContractViolation("crs: no verdicts");
    }
    double sum = 0.0;
    for (const auto& v : verdicts) {
        if (mode == CrsMode::Indicator) {
            sum += v.label == Polarity::Positive ? 1.0 : 0.0;
        } else {
            sum += v.p_positive;
        }
    }
    return sum / static_cast<double>(verdicts.size());
}

VerdictRecord classify(const BehaviorDescription& description, ClassifierClient& classifier) {
    return {description, classifier.classify(description.dimension_code, description.text)};
}

std::string CriterionScore::label() const {
    return temperature ? Subject{endpoint_id, *temperature}.label() : endpoint_id;
}

std::vector<CriterionScore> criterion_scores(std::span<const VerdictRecord> verdicts, CrsMode mode) {
    struct Bucket {
        std::vector<ClassifierVerdict> usable;
        std::size_t unparsed = 0;
    };
    std::vector<std::string> dimensions;
    std::map<std::pair<Subject, std::string>, Bucket> per_subject;
    std::map<std::pair<std::string, std::string>, Bucket> pooled;
    for (const auto& v : verdicts) {
        const auto& d = v.description;
        if (std::find(dimensions.begin(), dimensions.end(), d.dimension_code) == dimensions.end()) {
            dimensions.push_back(d.dimension_code);
        }
        auto& s = per_subject[{d.subject, d.dimension_code}];
        auto& p = pooled[{d.subject.endpoint_id, d.dimension_code}];
        if (v.verdict) {
            s.usable.push_back(*v.verdict);
            p.usable.push_back(*v.verdict);
        } else {
            ++s.unparsed;
            ++p.unparsed;
        }
    }
    auto dim_rank = [&](const std::string& code) {
        return std::find(dimensions.begin(), dimensions.end(), code) - dimensions.begin();
    };
    std::vector<CriterionScore> out;
    for (const auto& [key, bucket] : per_subject) {
        if (!bucket.usable.empty()) {
            out.push_back({key.first.endpoint_id, key.first.temperature, key.second, crs(bucket.usable, mode),
                           bucket.usable.size() + bucket.unparsed, bucket.unparsed, mode});
        }
    }
    for (const auto& [key, bucket] : pooled) {
        if (!bucket.usable.empty()) {
            out.push_back({key.first, std::nullopt, key.second, crs(bucket.usable, mode),
                           bucket.usable.size() + bucket.unparsed, bucket.unparsed, mode});
        }
    }
    std::stable_sort(out.begin(), out.end(), [&](const CriterionScore& a, const CriterionScore& b) {
        const auto ka = std::make_tuple(!a.temperature.has_value(), a.endpoint_id, a.temperature.value_or(0.0),
                                        dim_rank(a.dimension_code));
        const auto kb = std::make_tuple(!b.temperature.has_value(), b.endpoint_id, b.temperature.value_or(0.0),
                                        dim_rank(b.dimension_code));
        return ka < kb;
    });
    return out;
}

CriterionSeries criterion_series(std::span<const CriterionScore> scores) {
    CriterionSeries out;
    for (const auto& s : scores) {
        if (!s.temperature) {
            continue;
        }
        auto [it, _] = out.try_emplace(s.dimension_code, ScoreSeries{"behavior", s.dimension_code, {}});
        it->second.points[s.label()] = s.value;
    }
    return out;
}

std::map<std::string, std::string, std::less<>> default_factors() {
    return {{"EXT", "extraverted"},
            {"AGR", "agreeable"},
            {"CONS", "conscientious"},
            {"EMO", "emotionally stable"},
            {"OPEN", "open to experience"}};
}

namespace {

constexpr std::string_view kBehaviorFormat = "psyeval-behavior/1";

json manifest_for(const BehaviorSpec& spec, const BehaviorTemplates& templates, const ClassifierClient& classifier) {
    json curated = json::object();
    for (const auto& [dim, list] : spec.curated_occasions) {
        curated[dim] = list;
    }
    json factors = json::object();
    for (const auto& [dim, factor] : spec.factors) {
        factors[dim] = factor;
    }
    return {{"format", kBehaviorFormat},
            {"dimensions", spec.dimensions},
            {"factors", factors},
            {"generator_endpoint", spec.generator_endpoint},
            {"subject_endpoints", spec.subject_endpoints},
            {"temperatures", spec.elicitation.temperatures},
            {"generations_nonzero", spec.elicitation.generations_nonzero},
            {"generations_zero", spec.elicitation.generations_zero},
            {"occasion_candidates", spec.occasion_candidates},
            {"occasions_accepted", spec.occasions_accepted},
            {"pseudo_per_polarity", spec.pseudo_per_polarity},
            {"curated_occasions", curated},
            {"mode", to_string(spec.mode)},
            {"generation_max_tokens", spec.generation_max_tokens},
            {"classifier", classifier.id()},
            {"templates",
             {{templates.occasion.id(), templates.occasion.hash()},
              {templates.pseudo.id(), templates.pseudo.hash()},
              {templates.elicitation.id(), templates.elicitation.hash()}}}};
}

std::string manifest_text(const json& manifest) {
    return manifest.dump(2) + "\n";
}

std::vector<Occasion> curate(const BehaviorSpec& spec, const BehaviorTemplates& templates, Gateway& gateway,
                             const std::string& dim, const std::string& factor, const std::filesystem::path& review,
                             BehaviorOptions options, BehaviorDimensionSummary& summary) {
    if (!std::filesystem::exists(review)) {
        std::vector<Occasion> occasions;
        bool accepted = false;
        if (auto it = spec.curated_occasions.find(dim); it != spec.curated_occasions.end()) {
            for (const auto& text : it->second) {
                occasions.push_back({dim, normalize_occasion(text), OccasionSource::Curated, true});
            }
            flag_duplicates(occasions);
            accepted = true;
        } else {
            auto generated = generate_occasions(gateway, spec.generator_endpoint, templates.occasion, dim, factor,
                                                spec.occasion_candidates, 32);
            occasions = std::move(generated.occasions);
            for (auto& e : generated.errors) {
                summary.notes.push_back("occasion generation: " + e);
            }
        }
        write_review_file(review, occasions, accepted);
    }
    auto entries = read_review_file(review);
    for (const auto& e : entries) {
        if (e.occasion.dimension_code != dim) {
            throw ValidationError(review.string() + ": entry for dimension " + e.occasion.dimension_code +
                                  " in the " + dim + " review file");
        }
    }
    const bool pending = std::any_of(entries.begin(), entries.end(),
                                     [](const ReviewEntry& e) { return e.mark == ReviewMark::Pending; });
    if (pending && options.auto_accept) {
        std::vector<Occasion> candidates;
        for (const auto& e : entries) {
            candidates.push_back(e.occasion);
            candidates.back().duplicate = e.occasion.duplicate || e.mark == ReviewMark::Reject;
        }
        auto_accept(candidates, spec.occasions_accepted);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            entries[i].mark = candidates[i].accepted ? ReviewMark::Accept : ReviewMark::Reject;
            entries[i].occasion.accepted = candidates[i].accepted;
        }
        std::vector<Occasion> rewritten;
        for (const auto& e : entries) {
            rewritten.push_back(e.occasion);
            rewritten.back().duplicate = false;
        }
        write_review_file(review, rewritten, true);
        summary.notes.push_back("auto-accepted " +
                                std::to_string(std::count_if(candidates.begin(), candidates.end(),
                                                             [](const Occasion& o) { return o.accepted; })) +
                                " occasions");
    }
    auto accepted = accepted_occasions(apply_review(entries, review), spec.occasions_accepted);
    if (accepted.empty()) {
        throw ValidationError(review.string() + ": no accepted occasions for " + dim);
    }
    return accepted;
}

}  // namespace

BehaviorStore BehaviorStore::open(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw NotFoundError("behavior store not found: " + dir.string());
    }
    const auto text = read_text_file(manifest_path);
    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(manifest_path.string(), "byte " + std::to_string(e.byte), e.what());
    }
    if (manifest.value("format", "") != kBehaviorFormat) {
        throw ValidationError(manifest_path.string() + ": not a behavior store manifest");
    }
    BehaviorStore store;
    store.dir_ = dir;
    store.id_ = sha256_hex(text).substr(0, 16);
    store.mode_ = parse_crs_mode(manifest.at("mode").get<std::string>());
    store.verdicts_ = read_records<VerdictRecord>(dir / "verdicts.jsonl", &verdict_from_json);
    return store;
}

BehaviorResult run_behavior(const BehaviorSpec& spec, const BehaviorTemplates& templates, Gateway& gateway,
                            ClassifierClient& classifier, const std::filesystem::path& dir, BehaviorOptions options) {
    if (spec.dimensions.empty()) {
        throw ValidationError("behavior: no dimensions");
    }
    if (spec.subject_endpoints.empty()) {
        throw ValidationError("behavior: no subject endpoints");
    }
    (void)gateway.endpoint(spec.generator_endpoint);
    for (const auto& ep : spec.subject_endpoints) {
        (void)gateway.endpoint(ep);
    }
    for (const auto& dim : spec.dimensions) {
        if (!spec.factors.contains(dim)) {
            throw ValidationError("behavior: no trait adjective for dimension " + dim);
        }
    }

    std::filesystem::create_directories(dir);
    const auto manifest = manifest_text(manifest_for(spec, templates, classifier));
    const auto manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path)) {
        if (read_text_file(manifest_path) != manifest) {
            throw ValidationError("behavior store " + dir.string() +
                                  " was created with a different configuration; use a new directory");
        }
    } else {
        write_text_file_atomic(manifest_path, manifest);
    }

    BehaviorResult result;
    result.store_id = sha256_hex(manifest).substr(0, 16);

    std::set<DescriptionKey> described;
    std::vector<BehaviorDescription> descriptions;
    for (auto& d : read_records<BehaviorDescription>(dir / "behaviors.jsonl", &description_from_json)) {
        if (described.insert(key_of(d)).second) {
            descriptions.push_back(std::move(d));
        }
    }
    detail::JsonLineWriter behavior_file(dir / "behaviors.jsonl");
    detail::JsonLineWriter failure_file(dir / "failures.jsonl");

    std::vector<std::pair<std::string, std::vector<Occasion>>> occasion_sets;
    for (const auto& dim : spec.dimensions) {
        BehaviorDimensionSummary summary;
        summary.dimension_code = dim;
        const auto& factor = spec.factors.find(dim)->second;
        auto occasions = curate(spec, templates, gateway, dim, factor, dir / ("occasions_" + dim + ".tsv"), options,
                                summary);
        summary.occasions = occasions.size();

        PseudoDatasetOptions pseudo_options;
        pseudo_options.per_polarity = spec.pseudo_per_polarity;
        pseudo_options.max_tokens = spec.generation_max_tokens;
        pseudo_options.dataset_file = dir / ("dataset_" + dim + ".jsonl");
        auto dataset = generate_pseudo_dataset(gateway, spec.generator_endpoint, templates.pseudo, occasions, dim,
                                               factor, pseudo_options);
        summary.pseudo_examples = dataset.examples.size();
        summary.missing_examples = dataset.missing.size();
        for (const auto& m : dataset.missing) {
            summary.notes.push_back("pseudo example missing: " + m.occasion + " " +
                                    std::string(polarity_label(m.polarity)) + " slot " + std::to_string(m.slot) +
                                    ": " + m.reason);
        }
        occasion_sets.emplace_back(dim, std::move(occasions));
        result.dimensions.push_back(std::move(summary));
    }

    auto plan = spec.elicitation;
    plan.max_tokens = spec.generation_max_tokens;
    for (const auto& ep : spec.subject_endpoints) {
        for (std::size_t i = 0; i < occasion_sets.size(); ++i) {
            const auto& [dim, occasions] = occasion_sets[i];
            auto elicited = elicit_impl(gateway, ep, templates.elicitation, occasions, dim, plan, &described,
                                        &behavior_file, &failure_file);
            result.failures += elicited.failures.size();
            for (auto& d : elicited.descriptions) {
                described.insert(key_of(d));
                descriptions.push_back(std::move(d));
            }
        }
    }
    for (auto& summary : result.dimensions) {
        summary.descriptions = static_cast<std::size_t>(
            std::count_if(descriptions.begin(), descriptions.end(),
                          [&](const BehaviorDescription& d) { return d.dimension_code == summary.dimension_code; }));
    }

    std::vector<VerdictRecord> verdicts;
    std::set<DescriptionKey> classified;
    for (auto& v : read_records<VerdictRecord>(dir / "verdicts.jsonl", &verdict_from_json)) {
        if (classified.insert(key_of(v.description)).second) {
            verdicts.push_back(std::move(v));
        }
    }
    std::vector<const BehaviorDescription*> pending;
    for (const auto& d : descriptions) {
        if (!classified.contains(key_of(d))) {
            pending.push_back(&d);
        }
    }
    detail::JsonLineWriter verdict_file(dir / "verdicts.jsonl");
    run_batches<const BehaviorDescription*, VerdictRecord>(
        pending, gateway.max_in_flight(), [&](const BehaviorDescription* d) { return classify(*d, classifier); },
        [&](VerdictRecord& v) {
            verdict_file.write(verdict_to_json(v));
            verdicts.push_back(std::move(v));
        });

    result.unparsed = static_cast<std::size_t>(
        std::count_if(verdicts.begin(), verdicts.end(), [](const VerdictRecord& v) { return !v.verdict; }));
    result.scores = criterion_scores(verdicts, spec.mode);

    json crs_doc = {{"store_id", result.store_id}, {"mode", to_string(spec.mode)}, {"scores", json::array()}};
    for (const auto& s : result.scores) {
        crs_doc["scores"].push_back({{"subject", s.label()},
                                     {"dimension", s.dimension_code},
                                     {"value", s.value},
                                     {"n_descriptions", s.n_descriptions},
                                     {"unparsed", s.unparsed}});
    }
    write_text_file_atomic(dir / "crs.json", crs_doc.dump(2) + "\n");
    return result;
}

}  // namespace psyeval
