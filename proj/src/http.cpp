// HTTP transport for live completion endpoints and the remote classifier.
// cpp-httplib is confined to this translation unit.
#include "psyeval/classifier.hpp"
#include "psyeval/error.hpp"
#include "psyeval/gateway.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

namespace psyeval {

using nlohmann::json;

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // prefix without trailing slash
};

SplitUrl split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw ValidationError("invalid endpoint url '" + std::string(url) + "': missing scheme");
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ValidationError("invalid endpoint url '" + std::string(url) + "': scheme must be http or https");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    if (path_start == std::string_view::npos) {
        out.origin = std::string(url);
    } else {
        out.origin = std::string(url.substr(0, path_start));
        out.path = std::string(url.substr(path_start));
    }
    while (!out.path.empty() && out.path.back() == '/') {
        out.path.pop_back();
    }
    return out;
}

void configure(httplib::Client& client, std::chrono::milliseconds timeout) {
    const auto secs = static_cast<time_t>(timeout.count() / 1000);
    const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
}

bool retryable_status(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

HttpBackend::HttpBackend(ModelEndpoint endpoint, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), retry_(retry) {
    validate_endpoint(endpoint_);
    split_url(endpoint_.base_url);
    if (!endpoint_.api_key_env.empty()) {
        const char* key = std::getenv(endpoint_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ValidationError("endpoint " + endpoint_.id + ": environment variable " + endpoint_.api_key_env +
                                  " is not set");
        }
        api_key_ = key;
    }
}

std::string HttpBackend::generate(const GenerationRequest& request) {
    const auto url = split_url(endpoint_.base_url);
    json body = {{"model", endpoint_.id}, {"temperature", request.temperature}, {"max_tokens", request.max_tokens}};
    std::string path = url.path;
    if (endpoint_.api_style == ApiStyle::Chat) {
        body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
        path += "/chat/completions";
    } else {
        body["prompt"] = request.prompt;
        path += "/completions";
    }
    const auto payload = body.dump();

    httplib::Client client(url.origin);
    configure(client, endpoint_.request_timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    std::string last_error;
    for (int attempt = 1; attempt <= endpoint_.max_retries + 1; ++attempt) {
        if (attempt > 1) {
            std::this_thread::sleep_for(retry_.delay_for(attempt - 1));
        }
        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_error = httplib::to_string(result.error());
            continue;
        }
        if (retryable_status(result->status)) {
            last_error = "HTTP " + std::to_string(result->status);
            continue;
        }
        if (result->status != 200) {
            throw EndpointError("endpoint " + endpoint_.id + ": HTTP " + std::to_string(result->status) + ": " +
                                result->body.substr(0, 200));
        }
        try {
            const auto reply = json::parse(result->body);
            const auto& choice = reply.at("choices").at(0);
            if (endpoint_.api_style == ApiStyle::Chat) {
                return choice.at("message").at("content").get<std::string>();
            }
            return choice.at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw EndpointError("endpoint " + endpoint_.id + ": malformed response: " + e.what());
        }
    }
    throw EndpointError("endpoint " + endpoint_.id + ": giving up after " + std::to_string(endpoint_.max_retries + 1) +
                        " attempts: " + last_error);
}

RemoteClassifier::RemoteClassifier(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    split_url(base_url_);
}

std::optional<ClassifierVerdict> RemoteClassifier::classify(std::string_view dimension, std::string_view text) {
    const auto url = split_url(base_url_);
    httplib::Client client(url.origin);
    configure(client, timeout_);
    const json body = {{"dimension", dimension}, {"text", text}};
    auto result = client.Post(url.path + "/classify", body.dump(), "application/json");
    if (!result) {
        throw ClassificationError("classifier " + base_url_ + " unreachable: " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw ClassificationError("classifier " + base_url_ + ": HTTP " + std::to_string(result->status) + ": " +
                                  result->body.substr(0, 200));
    }
    try {
        const auto reply = json::parse(result->body);
        const auto label = parse_polarity(reply.at("label").get<std::string>());
        return make_verdict(label, reply.at("p_positive").get<double>(), id());
    } catch (const json::exception& e) {
        throw ClassificationError("classifier " + base_url_ + ": malformed response: " + e.what());
    } catch (const ValidationError& e) {
        throw ClassificationError("classifier " + base_url_ + ": " + e.what());
    }
}

}  // namespace psyeval
