#include "psyeval/config.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace psyeval {

using nlohmann::json;

namespace {

class Reader {
public:
    Reader(std::string origin, std::filesystem::path base) : origin_(std::move(origin)), base_(std::move(base)) {}

    void allow(const json& obj, const std::string& where, std::initializer_list<std::string_view> keys) const {
        if (!obj.is_object()) {
            throw ParseError(origin_, where, "expected an object");
        }
        for (const auto& [key, _] : obj.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                throw ParseError(origin_, where + "." + key, "unknown key");
            }
        }
    }

    template <typename T>
    T get(const json& obj, const std::string& where, const char* key) const {
        if (!obj.contains(key)) {
            throw ParseError(origin_, where + "." + key, "required key missing");
        }
        try {
            return obj.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ParseError(origin_, where + "." + key, e.what());
        }
    }

    template <typename T>
    T get_or(const json& obj, const std::string& where, const char* key, T fallback) const {
        return obj.contains(key) ? get<T>(obj, where, key) : fallback;
    }

    /// Resolves against the config directory and checks the file exists.
    std::filesystem::path file(const json& obj, const std::string& where, const char* key) const {
        auto p = std::filesystem::path(get<std::string>(obj, where, key));
        if (p.is_relative()) {
            p = base_ / p;
        }
        if (!std::filesystem::exists(p)) {
            throw NotFoundError(origin_ + ": " + where + "." + key + ": file not found: " + p.string());
        }
        return p;
    }

    std::filesystem::path dir(const json& obj, const std::string& where, const char* key,
                              std::string_view fallback) const {
        auto p = std::filesystem::path(get_or<std::string>(obj, where, key, std::string(fallback)));
        return p.is_relative() ? base_ / p : p;
    }

    [[noreturn]] void fail(const std::string& where, const std::string& what) const {
        throw ParseError(origin_, where, what);
    }

private:
    std::string origin_;
    std::filesystem::path base_;
};

EndpointConfig read_endpoint(const Reader& r, const json& j, const std::string& where) {
    r.allow(j, where,
            {"id", "base_url", "api_key_env", "max_tokens", "timeout_ms", "max_retries", "api_style", "fixture"});
    EndpointConfig out;
    auto& ep = out.endpoint;
    ep.id = r.get<std::string>(j, where, "id");
    ep.base_url = r.get<std::string>(j, where, "base_url");
    ep.api_key_env = r.get_or<std::string>(j, where, "api_key_env", "");
    ep.max_tokens = r.get_or<int>(j, where, "max_tokens", ep.max_tokens);
    ep.request_timeout = std::chrono::milliseconds(r.get_or<int>(j, where, "timeout_ms", 30000));
    ep.max_retries = r.get_or<int>(j, where, "max_retries", ep.max_retries);
    const auto style = r.get_or<std::string>(j, where, "api_style", "completion");
    if (style == "completion") {
        ep.api_style = ApiStyle::Completion;
    } else if (style == "chat") {
        ep.api_style = ApiStyle::Chat;
    } else {
        r.fail(where + ".api_style", "expected completion or chat");
    }
    if (ep.scripted()) {
        out.fixture = r.file(j, where, "fixture");
    } else if (j.contains("fixture")) {
        r.fail(where + ".fixture", "only scripted endpoints take a fixture");
    }
    validate_endpoint(ep);
    return out;
}

ClassifierConfig read_classifier(const Reader& r, const json& j) {
    const std::string where = "$.classifier";
    r.allow(j, where, {"kind", "fixture", "url", "endpoint", "template"});
    ClassifierConfig out;
    const auto kind = r.get<std::string>(j, where, "kind");
    if (kind == "scripted") {
        out.kind = ClassifierKind::Scripted;
        out.fixture = r.file(j, where, "fixture");
    } else if (kind == "remote") {
        out.kind = ClassifierKind::Remote;
        out.url = r.get<std::string>(j, where, "url");
    } else if (kind == "judge") {
        out.kind = ClassifierKind::Judge;
        out.endpoint = r.get<std::string>(j, where, "endpoint");
        out.judge_template = r.file(j, where, "template");
    } else {
        r.fail(where + ".kind", "expected scripted, remote or judge");
    }
    return out;
}

BehaviorConfig read_behavior(const Reader& r, const json& j) {
    const std::string where = "$.behavior";
    r.allow(j, where,
            {"output_dir", "dimensions", "factors", "generator_endpoint", "subject_endpoints", "temperatures",
             "generations_nonzero", "generations_zero", "occasion_candidates", "occasions_accepted",
             "pseudo_per_polarity", "curated_occasions", "mode", "max_tokens"});
    BehaviorConfig out;
    auto& s = out.spec;
    out.output_dir = r.dir(j, where, "output_dir", "behavior");
    s.dimensions = r.get_or(j, where, "dimensions", s.dimensions);
    s.factors = default_factors();
    if (j.contains("factors")) {
        for (const auto& [dim, factor] : r.get<std::map<std::string, std::string>>(j, where, "factors")) {
            s.factors.insert_or_assign(dim, factor);
        }
    }
    s.generator_endpoint = r.get<std::string>(j, where, "generator_endpoint");
    s.subject_endpoints = r.get<std::vector<std::string>>(j, where, "subject_endpoints");
    s.elicitation.temperatures = r.get_or(j, where, "temperatures", s.elicitation.temperatures);
    s.elicitation.generations_nonzero = r.get_or(j, where, "generations_nonzero", s.elicitation.generations_nonzero);
    s.elicitation.generations_zero = r.get_or(j, where, "generations_zero", s.elicitation.generations_zero);
    s.occasion_candidates = r.get_or(j, where, "occasion_candidates", s.occasion_candidates);
    s.occasions_accepted = r.get_or(j, where, "occasions_accepted", s.occasions_accepted);
    s.pseudo_per_polarity = r.get_or(j, where, "pseudo_per_polarity", s.pseudo_per_polarity);
    s.generation_max_tokens = r.get_or(j, where, "max_tokens", s.generation_max_tokens);
    s.mode = parse_crs_mode(r.get_or<std::string>(j, where, "mode", "indicator"));
    if (j.contains("curated_occasions")) {
        const auto& curated = j.at("curated_occasions");
        if (!curated.is_object()) {
            r.fail(where + ".curated_occasions", "expected an object keyed by dimension");
        }
        for (const auto& [dim, value] : curated.items()) {
            if (std::find(s.dimensions.begin(), s.dimensions.end(), dim) == s.dimensions.end()) {
                r.fail(where + ".curated_occasions." + dim, "not one of the behavior dimensions");
            }
            s.curated_occasions[dim] = r.get<std::vector<std::string>>(curated, where + ".curated_occasions",
                                                                       dim.c_str());
        }
    }
    return out;
}

}  // namespace

std::filesystem::path RunConfig::store_dir(std::string_view scale_id) const {
    return output_dir / std::string(scale_id);
}

RunConfig parse_config(std::string_view document, const std::filesystem::path& origin) {
    const auto src = origin.string();
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(src, "byte " + std::to_string(e.byte), e.what());
    }
    const Reader r(src, origin.has_parent_path() ? origin.parent_path() : std::filesystem::path("."));
    r.allow(doc, "$", {"output_dir", "in_flight", "endpoints", "scales", "plan", "templates", "classifier", "behavior"});

    RunConfig cfg;
    cfg.origin = origin;
    cfg.output_dir = r.dir(doc, "$", "output_dir", "runs");
    cfg.in_flight = r.get_or(doc, "$", "in_flight", cfg.in_flight);
    if (cfg.in_flight < 1) {
        throw ValidationError(src + ": in_flight must be >= 1");
    }

    const auto endpoints = r.get<json>(doc, "$", "endpoints");
    if (!endpoints.is_array() || endpoints.empty()) {
        r.fail("$.endpoints", "expected a non-empty array");
    }
    for (std::size_t i = 0; i < endpoints.size(); ++i) {
        cfg.endpoints.push_back(read_endpoint(r, endpoints[i], "$.endpoints[" + std::to_string(i) + "]"));
    }
    auto known = [&](const std::string& id) {
        return std::any_of(cfg.endpoints.begin(), cfg.endpoints.end(),
                           [&](const EndpointConfig& e) { return e.endpoint.id == id; });
    };
    for (std::size_t i = 0; i < cfg.endpoints.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            if (cfg.endpoints[i].endpoint.id == cfg.endpoints[k].endpoint.id) {
                throw ValidationError(src + ": duplicate endpoint id " + cfg.endpoints[i].endpoint.id);
            }
        }
    }

    if (doc.contains("scales")) {
        const auto& scales = doc.at("scales");
        if (!scales.is_array()) {
            r.fail("$.scales", "expected an array of paths");
        }
        for (std::size_t i = 0; i < scales.size(); ++i) {
            cfg.scales.push_back(r.file(json{{"path", scales[i]}}, "$.scales[" + std::to_string(i) + "]", "path"));
        }
    }

    if (doc.contains("plan")) {
        const auto& p = doc.at("plan");
        r.allow(p, "$.plan", {"endpoints", "temperatures", "repetitions_nonzero", "repetitions_zero", "seed"});
        cfg.plan.endpoints = r.get<std::vector<std::string>>(p, "$.plan", "endpoints");
        cfg.plan.temperatures = r.get_or(p, "$.plan", "temperatures", cfg.plan.temperatures);
        cfg.plan.repetitions_nonzero = r.get_or(p, "$.plan", "repetitions_nonzero", cfg.plan.repetitions_nonzero);
        cfg.plan.repetitions_zero = r.get_or(p, "$.plan", "repetitions_zero", cfg.plan.repetitions_zero);
        cfg.plan.seed = r.get_or<std::uint64_t>(p, "$.plan", "seed", 0);
        for (const auto& id : cfg.plan.endpoints) {
            if (!known(id)) {
                throw ValidationError(src + ": plan endpoint '" + id + "' is not defined under endpoints");
            }
        }
    }

    if (doc.contains("templates")) {
        const auto& t = doc.at("templates");
        const std::string where = "$.templates";
        r.allow(t, where, {"item_assessment", "occasion_generation", "pseudo_description", "behavior_elicitation"});
        if (t.contains("item_assessment")) {
            cfg.templates.item_assessment = r.file(t, where, "item_assessment");
        }
        if (t.contains("occasion_generation")) {
            cfg.templates.occasion_generation = r.file(t, where, "occasion_generation");
        }
        if (t.contains("pseudo_description")) {
            cfg.templates.pseudo_description = r.file(t, where, "pseudo_description");
        }
        if (t.contains("behavior_elicitation")) {
            cfg.templates.behavior_elicitation = r.file(t, where, "behavior_elicitation");
        }
    }

    if (doc.contains("classifier")) {
        cfg.classifier = read_classifier(r, doc.at("classifier"));
        if (cfg.classifier->kind == ClassifierKind::Judge && !known(cfg.classifier->endpoint)) {
            throw ValidationError(src + ": judge endpoint '" + cfg.classifier->endpoint + "' is not defined");
        }
    }
    if (doc.contains("behavior")) {
        cfg.behavior = read_behavior(r, doc.at("behavior"));
        const auto& s = cfg.behavior->spec;
        if (!known(s.generator_endpoint)) {
            throw ValidationError(src + ": behavior generator '" + s.generator_endpoint + "' is not defined");
        }
        for (const auto& id : s.subject_endpoints) {
            if (!known(id)) {
                throw ValidationError(src + ": behavior subject '" + id + "' is not defined");
            }
        }
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_text_file(path), path);
}

std::unique_ptr<Gateway> build_gateway(const RunConfig& config) {
    auto gateway = std::make_unique<Gateway>(config.in_flight);
    for (const auto& e : config.endpoints) {
        if (e.endpoint.scripted()) {
            gateway->add_scripted_endpoint(e.endpoint,
                                           std::make_shared<const ScriptedFixture>(ScriptedFixture::load(e.fixture)));
        } else {
            gateway->add_live_endpoint(e.endpoint);
        }
    }
    return gateway;
}

std::unique_ptr<ClassifierClient> build_classifier(const RunConfig& config, Gateway& gateway) {
    if (!config.classifier) {
        throw ValidationError(config.origin.string() +
                              ": no classifier configured; set classifier.kind to scripted, remote or judge");
    }
    const auto& c = *config.classifier;
    switch (c.kind) {
        case ClassifierKind::Scripted:
            return std::make_unique<ScriptedClassifier>(ScriptedClassifier::load(c.fixture));
        case ClassifierKind::Remote:
            return std::make_unique<RemoteClassifier>(c.url);
        case ClassifierKind::Judge: {
            std::map<std::string, std::string, std::less<>> factors =
                config.behavior ? config.behavior->spec.factors : default_factors();
            return std::make_unique<JudgeClassifier>(gateway, c.endpoint,
                                                     load_template(c.judge_template, "judge", {"FACTOR", "BEHAVIOR"}),
                                                     std::move(factors));
        }
    }
    throw ContractViolation("unknown classifier kind");
}

}  // namespace psyeval
