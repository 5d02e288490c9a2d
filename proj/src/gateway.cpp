#include "psyeval/gateway.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>

namespace psyeval {

using nlohmann::json;

namespace {

std::int64_t temperature_key(double temperature) {
    return std::llround(temperature * 1000.0);
}

}  // namespace

void validate_endpoint(const ModelEndpoint& endpoint) {
    if (endpoint.id.empty()) {
        throw ValidationError("endpoint: id must be non-empty");
    }
    if (endpoint.max_tokens < 1) {
        throw ValidationError("endpoint " + endpoint.id + ": max_tokens must be >= 1");
    }
    if (endpoint.max_retries < 0) {
        throw ValidationError("endpoint " + endpoint.id + ": max_retries must be >= 0");
    }
    if (endpoint.base_url.empty()) {
        throw ValidationError("endpoint " + endpoint.id + ": base_url must be non-empty");
    }
}

void ScriptedFixture::add(Record record) {
    auto& slot = records_[Key{record.prompt_sha256, temperature_key(record.temperature)}];
    auto [it, inserted] = slot.insert_or_assign(record.call_index, std::move(record.text));
    if (inserted) {
        ++size_;
    }
}

void ScriptedFixture::add_for_prompt(std::string_view prompt, double temperature,
                                     std::optional<std::uint64_t> call_index, std::string text) {
    add(Record{sha256_hex(prompt), temperature, call_index, std::move(text)});
}

const std::string* ScriptedFixture::find(std::string_view prompt_sha256, double temperature,
                                         std::uint64_t call_index) const {
    auto it = records_.find(Key{std::string(prompt_sha256), temperature_key(temperature)});
    if (it == records_.end() || it->second.empty()) {
        return nullptr;
    }
    const auto& by_index = it->second;
    if (temperature_key(temperature) == 0) {
        // nullopt sorts first, so a wildcard record wins, then the lowest index
        return &by_index.begin()->second;
    }
    if (auto exact = by_index.find(call_index); exact != by_index.end()) {
        return &exact->second;
    }
    if (auto any = by_index.find(std::nullopt); any != by_index.end()) {
        return &any->second;
    }
    return nullptr;
}

ScriptedFixture ScriptedFixture::parse(std::string_view document, std::string_view origin) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(origin), "byte " + std::to_string(e.byte), e.what());
    }
    if (!doc.is_array()) {
        throw ParseError(std::string(origin), "field $", "expected an array of fixture records");
    }
    ScriptedFixture fixture;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        const auto path = "field $[" + std::to_string(i) + "]";
        try {
            Record r;
            r.prompt_sha256 = rec.at("prompt_sha256").get<std::string>();
            r.temperature = rec.at("temperature").get<double>();
            if (rec.contains("call_index") && !rec.at("call_index").is_null()) {
                r.call_index = rec.at("call_index").get<std::uint64_t>();
            }
            r.text = rec.at("text").get<std::string>();
            fixture.add(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(std::string(origin), path, e.what());
        }
    }
    return fixture;
}

ScriptedFixture ScriptedFixture::load(const std::filesystem::path& path) {
    return parse(read_text_file(path), path.string());
}

void ScriptedFixture::save(const std::filesystem::path& path) const {
    json doc = json::array();
    for (const auto& [key, by_index] : records_) {
        for (const auto& [index, text] : by_index) {
            json rec = {{"prompt_sha256", std::get<0>(key)},
                        {"temperature", static_cast<double>(std::get<1>(key)) / 1000.0},
                        {"text", text}};
            rec["call_index"] = index ? json(*index) : json(nullptr);
            doc.push_back(std::move(rec));
        }
    }
    write_text_file_atomic(path, doc.dump(1) + "\n");
}

std::string truncate_words(std::string_view text, int max_words) {
    int words = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (pos == text.size()) {
            break;
        }
        if (words == max_words) {
            return trim(text.substr(0, pos));
        }
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        ++words;
    }
    return std::string(text);
}

ScriptedBackend::ScriptedBackend(std::shared_ptr<const ScriptedFixture> fixture, std::string endpoint_id)
    : fixture_(std::move(fixture)), endpoint_id_(std::move(endpoint_id)) {
    if (!fixture_) {
        throw ValidationError("scripted backend: fixture required");
    }
}

std::string ScriptedBackend::generate(const GenerationRequest& request) {
    const auto digest = sha256_hex(request.prompt);
    const auto* text = fixture_->find(digest, request.temperature, request.call_index);
    if (text == nullptr) {
        throw FixtureGapError("scripted endpoint " + endpoint_id_ + ": no fixture for prompt " +
                              digest.substr(0, 12) + " at temperature " +
                              format_temperature(request.temperature) + ", call " +
                              std::to_string(request.call_index));
    }
    return truncate_words(*text, request.max_tokens);
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt) const {
    double ms = static_cast<double>(initial_delay.count()) * std::pow(multiplier, std::max(0, attempt - 1));
    ms = std::min(ms, static_cast<double>(max_delay.count()));
    return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

Gateway::Gateway(int max_in_flight)
    : max_in_flight_(max_in_flight > 0 ? max_in_flight : throw ValidationError("gateway: max_in_flight must be >= 1")),
      in_flight_(max_in_flight) {}

void Gateway::add_endpoint(ModelEndpoint endpoint, std::shared_ptr<CompletionBackend> backend) {
    validate_endpoint(endpoint);
    if (!backend) {
        throw ValidationError("endpoint " + endpoint.id + ": backend required");
    }
    if (entries_.contains(endpoint.id)) {
        throw ValidationError("gateway: duplicate endpoint id '" + endpoint.id + "'");
    }
    auto id = endpoint.id;
    entries_.emplace(std::move(id), Entry{std::move(endpoint), std::move(backend)});
}

void Gateway::add_scripted_endpoint(ModelEndpoint endpoint, std::shared_ptr<const ScriptedFixture> fixture) {
    endpoint.base_url = std::string(kScriptedBaseUrl);
    auto backend = std::make_shared<ScriptedBackend>(std::move(fixture), endpoint.id);
    add_endpoint(std::move(endpoint), std::move(backend));
}

void Gateway::add_live_endpoint(ModelEndpoint endpoint, RetryPolicy retry) {
    auto backend = std::make_shared<HttpBackend>(endpoint, retry);
    add_endpoint(std::move(endpoint), std::move(backend));
}

bool Gateway::has_endpoint(std::string_view id) const {
    return entries_.find(id) != entries_.end();
}

const ModelEndpoint& Gateway::endpoint(std::string_view id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        throw NotFoundError("gateway: unknown endpoint '" + std::string(id) + "'");
    }
    return it->second.endpoint;
}

std::uint64_t Gateway::next_call_index(const std::string& endpoint_id, const std::string& prompt,
                                       double temperature) {
    std::lock_guard lock(counter_mutex_);
    return counters_[{endpoint_id, sha256_hex(prompt), temperature}]++;
}

Completion Gateway::complete(std::string_view endpoint_id, const std::string& prompt, double temperature,
                             CallOptions options) {
    if (!(temperature >= 0.0 && temperature <= 1.0)) {
        throw ContractViolation("complete: temperature " + std::to_string(temperature) + " outside [0,1]");
    }
    auto it = entries_.find(endpoint_id);
    if (it == entries_.end()) {
        throw NotFoundError("gateway: unknown endpoint '" + std::string(endpoint_id) + "'");
    }
    const auto& entry = it->second;
    const auto call_index = options.call_index ? *options.call_index
                                               : next_call_index(entry.endpoint.id, prompt, temperature);
    const int max_tokens = options.max_tokens.value_or(entry.endpoint.max_tokens);
    if (max_tokens < 1) {
        throw ContractViolation("complete: max_tokens must be >= 1");
    }

    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<>& sem;
        ~Release() { sem.release(); }
    } release{in_flight_};

    const auto start = std::chrono::steady_clock::now();
    auto text = entry.backend->generate(GenerationRequest{prompt, temperature, max_tokens, call_index});
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    return Completion{prompt, std::move(text), temperature, latency, entry.endpoint.id};
}

}  // namespace psyeval
