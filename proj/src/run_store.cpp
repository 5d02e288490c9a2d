#include "json_io.hpp"

#include "psyeval/choice_parser.hpp"
#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <sstream>

namespace psyeval {

namespace detail {

json to_json(const Subject& subject) {
    return {{"endpoint_id", subject.endpoint_id}, {"temperature", subject.temperature}};
}

Subject subject_from_json(const json& j) {
    return {j.at("endpoint_id").get<std::string>(), j.at("temperature").get<double>()};
}

json to_json(const RunPlan& plan) {
    return {{"scale_id", plan.scale_id},
            {"endpoints", plan.endpoints},
            {"temperatures", plan.temperatures},
            {"repetitions_nonzero", plan.repetitions_nonzero},
            {"repetitions_zero", plan.repetitions_zero},
            {"seed", plan.seed}};
}

RunPlan plan_from_json(const json& j) {
    RunPlan plan;
    plan.scale_id = j.at("scale_id").get<std::string>();
    plan.endpoints = j.at("endpoints").get<std::vector<std::string>>();
    plan.temperatures = j.at("temperatures").get<std::vector<double>>();
    plan.repetitions_nonzero = j.at("repetitions_nonzero").get<int>();
    plan.repetitions_zero = j.at("repetitions_zero").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    return plan;
}

json to_json(const TrialRecord& r) {
    return {{"subject", to_json(r.subject)},
            {"scale_id", r.scale_id},
            {"dimension_code", r.dimension_code},
            {"item_ordinal", r.item_ordinal},
            {"repetition_index", r.repetition_index},
            {"prompt", r.prompt},
            {"raw_text", r.raw_text},
            {"parsed_choice", r.parsed_choice ? *r.parsed_choice : std::string(kUnparsed)},
            {"imputed", r.imputed},
            {"keyed_score", r.keyed_score}};
}

TrialRecord trial_from_json(const json& j) {
    TrialRecord r;
    r.subject = subject_from_json(j.at("subject"));
    r.scale_id = j.at("scale_id").get<std::string>();
    r.dimension_code = j.at("dimension_code").get<std::string>();
    r.item_ordinal = j.at("item_ordinal").get<int>();
    r.repetition_index = j.at("repetition_index").get<int>();
    r.prompt = j.at("prompt").get<std::string>();
    r.raw_text = j.at("raw_text").get<std::string>();
    auto choice = j.at("parsed_choice").get<std::string>();
    if (choice != kUnparsed) {
        r.parsed_choice = std::move(choice);
    }
    r.imputed = j.at("imputed").get<bool>();
    r.keyed_score = j.at("keyed_score").get<int>();
    return r;
}

json to_json(const TrialFailure& f) {
    return {{"subject", to_json(f.subject)},
            {"scale_id", f.scale_id},
            {"item_ordinal", f.item_ordinal},
            {"repetition_index", f.repetition_index},
            {"error", f.error}};
}

TrialFailure failure_from_json(const json& j) {
    return {subject_from_json(j.at("subject")), j.at("scale_id").get<std::string>(), j.at("item_ordinal").get<int>(),
            j.at("repetition_index").get<int>(), j.at("error").get<std::string>()};
}

json to_json(const RunManifest& m) {
    return {{"format", "psyeval-run/1"},
            {"plan", to_json(m.plan)},
            {"scale_sha256", m.scale_sha256},
            {"templates", m.template_hashes}};
}

RunManifest manifest_from_json(const json& j) {
    if (j.value("format", "") != "psyeval-run/1") {
        throw ValidationError("run manifest: unsupported format");
    }
    RunManifest m;
    m.plan = plan_from_json(j.at("plan"));
    m.scale_sha256 = j.at("scale_sha256").get<std::string>();
    m.template_hashes = j.at("templates").get<std::map<std::string, std::string>>();
    return m;
}

std::vector<json> read_json_lines(const std::filesystem::path& path) {
    std::vector<json> out;
    if (!std::filesystem::exists(path)) {
        return out;
    }
    const auto content = read_text_file(path);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        if (nl == std::string::npos) {
            break;
        }
        ++line_no;
        const std::string_view line(content.data() + pos, nl - pos);
        pos = nl + 1;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw ParseError(path.string(), "line " + std::to_string(line_no), e.what());
        }
    }
    return out;
}

void repair_json_lines(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        return;
    }
    const auto size = std::filesystem::file_size(path);
    if (size == 0) {
        return;
    }
    {
        std::ifstream in(path, std::ios::binary);
        in.seekg(static_cast<std::streamoff>(size - 1));
        if (in.get() == '\n') {
            return;
        }
    }
    const auto content = read_text_file(path);
    const auto last = content.rfind('\n');
    std::filesystem::resize_file(path, last == std::string::npos ? 0 : last + 1);
}

JsonLineWriter::JsonLineWriter(const std::filesystem::path& path) : path_(path) {
    repair_json_lines(path_);
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) {
        throw ValidationError("cannot open for append: " + path_.string());
    }
}

void JsonLineWriter::write(const json& record) {
    out_ << record.dump() << '\n';
    out_.flush();
    if (!out_) {
        throw ValidationError("write failed: " + path_.string());
    }
}

}  // namespace detail

using detail::json;

namespace {

constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kScaleFile = "scale.json";
constexpr const char* kTrialsFile = "trials.jsonl";
constexpr const char* kFailuresFile = "failures.jsonl";

std::string manifest_text(const RunManifest& manifest) {
    return detail::to_json(manifest).dump(2) + "\n";
}

std::string store_id(const std::string& manifest_text) {
    return sha256_hex(manifest_text).substr(0, 16);
}

}  // namespace

RunStore::RunStore(std::filesystem::path dir, RunManifest manifest, Scale scale, std::string id)
    : dir_(std::move(dir)), manifest_(std::move(manifest)), scale_(std::move(scale)), id_(std::move(id)) {}

RunStore::RunStore(RunStore&&) noexcept = default;
RunStore& RunStore::operator=(RunStore&&) noexcept = default;
RunStore::~RunStore() = default;

RunStore RunStore::create_or_open(const std::filesystem::path& dir, const RunManifest& manifest, const Scale& scale) {
    if (manifest.plan.scale_id != scale.id) {
        throw ValidationError("run store: plan scale '" + manifest.plan.scale_id + "' does not match scale '" +
                              scale.id + "'");
    }
    const auto text = manifest_text(manifest);
    const auto manifest_path = dir / kManifestFile;
    if (std::filesystem::exists(manifest_path)) {
        if (read_text_file(manifest_path) != text) {
            throw ValidationError("run store " + dir.string() +
                                  " was created for a different plan, scale or template; use a new directory");
        }
    } else {
        std::filesystem::create_directories(dir);
        write_text_file_atomic(dir / kScaleFile, serialize_scale(scale));
        write_text_file_atomic(manifest_path, text);
    }
    return open(dir);
}

RunStore RunStore::open(const std::filesystem::path& dir) {
    const auto manifest_path = dir / kManifestFile;
    if (!std::filesystem::exists(manifest_path)) {
        throw NotFoundError("not a run store (no manifest.json): " + dir.string());
    }
    const auto text = read_text_file(manifest_path);
    RunManifest manifest;
    try {
        manifest = detail::manifest_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw ParseError(manifest_path.string(), "field $", e.what());
    }
    const auto scale_text = read_text_file(dir / kScaleFile);
    if (sha256_hex(scale_text) != manifest.scale_sha256) {
        throw ValidationError("run store " + dir.string() + ": scale.json does not match the manifest hash");
    }
    auto scale = parse_scale(scale_text, (dir / kScaleFile).string());
    RunStore store(dir, std::move(manifest), std::move(scale), store_id(text));
    store.load_records();
    return store;
}

void RunStore::load_records() {
    const auto trials_path = dir_ / kTrialsFile;
    for (const auto& line : detail::read_json_lines(trials_path)) {
        try {
            auto record = detail::trial_from_json(line);
            if (!keys_.insert(key_of(record)).second) {
                throw ValidationError("run store " + dir_.string() + ": duplicate trial for " +
                                      record.subject.label() + " item " + std::to_string(record.item_ordinal));
            }
            records_.push_back(std::move(record));
        } catch (const json::exception& e) {
            throw ParseError(trials_path.string(), "record", e.what());
        }
    }
    for (const auto& line : detail::read_json_lines(dir_ / kFailuresFile)) {
        try {
            failures_.push_back(detail::failure_from_json(line));
        } catch (const json::exception& e) {
            throw ParseError((dir_ / kFailuresFile).string(), "record", e.what());
        }
    }
}

void RunStore::append(const TrialRecord& record) {
    const auto key = key_of(record);
    if (keys_.contains(key)) {
        throw ContractViolation("run store: trial already recorded for " + record.subject.label() + " item " +
                                std::to_string(record.item_ordinal));
    }
    if (!trials_writer_) {
        trials_writer_ = std::make_unique<detail::JsonLineWriter>(dir_ / kTrialsFile);
    }
    trials_writer_->write(detail::to_json(record));
    keys_.insert(key);
    records_.push_back(record);
}

void RunStore::append_failure(const TrialFailure& failure) {
    if (!failures_writer_) {
        failures_writer_ = std::make_unique<detail::JsonLineWriter>(dir_ / kFailuresFile);
    }
    failures_writer_->write(detail::to_json(failure));
    failures_.push_back(failure);
}

RunSummary RunStore::summary() const {
    RunSummary s;
    s.planned = planned_trial_count(manifest_.plan, scale_.item_count());
    s.completed = records_.size();
    std::set<TrialKey> failed;
    for (const auto& f : failures_) {
        TrialKey key{f.subject, f.item_ordinal, f.repetition_index};
        if (!keys_.contains(key)) {
            failed.insert(key);
        }
    }
    s.failed = failed.size();
    s.missing = s.planned - std::min(s.planned, s.completed + s.failed);
    for (const auto& r : records_) {
        s.imputed += r.imputed ? 1 : 0;
    }
    return s;
}

}  // namespace psyeval
