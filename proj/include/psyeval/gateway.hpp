#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace psyeval {

/// base_url value marking an endpoint served from a recorded fixture.
inline constexpr std::string_view kScriptedBaseUrl = "scripted";

enum class ApiStyle { Completion, Chat };

struct ModelEndpoint {
    std::string id;
    std::string base_url;
    /// Name of the environment variable holding the bearer token; empty for none.
    std::string api_key_env;
    int max_tokens = 20;
    std::chrono::milliseconds request_timeout{30000};
    int max_retries = 3;
    ApiStyle api_style = ApiStyle::Completion;

    [[nodiscard]] bool scripted() const noexcept { return base_url == kScriptedBaseUrl; }
};

/// Throws ValidationError when id is empty or max_tokens < 1.
void validate_endpoint(const ModelEndpoint& endpoint);

struct Completion {
    std::string prompt;
    std::string raw_text;
    double temperature = 0.0;
    std::chrono::milliseconds latency{0};
    std::string endpoint_id;
};

struct GenerationRequest {
    const std::string& prompt;
    double temperature;
    int max_tokens;
    std::uint64_t call_index;
};

class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;
    /// Raw generation text. Throws EndpointError or FixtureGapError.
    virtual std::string generate(const GenerationRequest& request) = 0;
};

/// Recorded generations keyed by (prompt SHA-256, temperature, call index).
/// A record without a call index answers every call. At temperature 0 the call
/// index is ignored and the lowest-indexed record wins.
class ScriptedFixture {
public:
    struct Record {
        std::string prompt_sha256;
        double temperature = 0.0;
        std::optional<std::uint64_t> call_index;
        std::string text;
    };

    void add(Record record);
    void add_for_prompt(std::string_view prompt, double temperature, std::optional<std::uint64_t> call_index,
                        std::string text);
    [[nodiscard]] const std::string* find(std::string_view prompt_sha256, double temperature,
                                          std::uint64_t call_index) const;
    [[nodiscard]] std::size_t size() const noexcept { return size_; }

    /// JSON array of {prompt_sha256, temperature, call_index, text}.
    [[nodiscard]] static ScriptedFixture load(const std::filesystem::path& path);
    [[nodiscard]] static ScriptedFixture parse(std::string_view document, std::string_view origin);
    void save(const std::filesystem::path& path) const;

private:
    // temperature is stored in thousandths so lookups are exact
    using Key = std::tuple<std::string, std::int64_t>;
    std::map<Key, std::map<std::optional<std::uint64_t>, std::string>, std::less<>> records_;
    std::size_t size_ = 0;
};

/// Replays a fixture; output is truncated to max_tokens whitespace-separated words.
class ScriptedBackend final : public CompletionBackend {
public:
    explicit ScriptedBackend(std::shared_ptr<const ScriptedFixture> fixture, std::string endpoint_id = {});
    std::string generate(const GenerationRequest& request) override;

private:
    std::shared_ptr<const ScriptedFixture> fixture_;
    std::string endpoint_id_;
};

struct RetryPolicy {
    std::chrono::milliseconds initial_delay{250};
    double multiplier = 2.0;
    std::chrono::milliseconds max_delay{8000};

    [[nodiscard]] std::chrono::milliseconds delay_for(int attempt) const;
};

/// Completion-style ({model, prompt, temperature, max_tokens} -> choices[].text)
/// or chat-style (messages -> choices[].message.content) HTTP(S) endpoint.
/// Transport errors, 429 and 5xx are retried with exponential backoff.
class HttpBackend final : public CompletionBackend {
public:
    HttpBackend(ModelEndpoint endpoint, RetryPolicy retry = {});
    std::string generate(const GenerationRequest& request) override;

private:
    ModelEndpoint endpoint_;
    RetryPolicy retry_;
    std::string api_key_;
};

/// Shortest whitespace-delimited prefix holding at most `max_words` words.
[[nodiscard]] std::string truncate_words(std::string_view text, int max_words);

struct CallOptions {
    /// Explicit call index; when absent a per-(endpoint, prompt, temperature)
    /// counter supplies the next one.
    std::optional<std::uint64_t> call_index;
    std::optional<int> max_tokens;
};

/// Routes completion requests to registered endpoints with a shared limit on
/// in-flight requests.
class Gateway {
public:
    explicit Gateway(int max_in_flight = 4);

    void add_endpoint(ModelEndpoint endpoint, std::shared_ptr<CompletionBackend> backend);
    void add_scripted_endpoint(ModelEndpoint endpoint, std::shared_ptr<const ScriptedFixture> fixture);
    /// Registers an HttpBackend for a live endpoint.
    void add_live_endpoint(ModelEndpoint endpoint, RetryPolicy retry = {});

    [[nodiscard]] bool has_endpoint(std::string_view id) const;
    [[nodiscard]] const ModelEndpoint& endpoint(std::string_view id) const;
    [[nodiscard]] int max_in_flight() const noexcept { return max_in_flight_; }

    /// Throws ContractViolation for temperature outside [0,1], NotFoundError
    /// for an unknown endpoint, EndpointError/FixtureGapError from the backend.
    Completion complete(std::string_view endpoint_id, const std::string& prompt, double temperature,
                        CallOptions options = {});

private:
    struct Entry {
        ModelEndpoint endpoint;
        std::shared_ptr<CompletionBackend> backend;
    };

    std::uint64_t next_call_index(const std::string& endpoint_id, const std::string& prompt, double temperature);

    int max_in_flight_;
    std::map<std::string, Entry, std::less<>> entries_;
    std::counting_semaphore<> in_flight_;
    std::mutex counter_mutex_;
    std::map<std::tuple<std::string, std::string, double>, std::uint64_t> counters_;
};

}  // namespace psyeval
