#pragma once

#include "psyeval/administration.hpp"
#include "psyeval/behavior.hpp"
#include "psyeval/classifier.hpp"
#include "psyeval/gateway.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace psyeval {

struct EndpointConfig {
    ModelEndpoint endpoint;
    /// Recorded generations; required when base_url is "scripted".
    std::filesystem::path fixture;
};

struct ClassifierConfig {
    ClassifierKind kind = ClassifierKind::Scripted;
    std::filesystem::path fixture;  // scripted
    std::string url;                // remote
    std::string endpoint;           // judge
    std::filesystem::path judge_template;
};

struct TemplatePaths {
    std::filesystem::path item_assessment;
    std::filesystem::path occasion_generation;
    std::filesystem::path pseudo_description;
    std::filesystem::path behavior_elicitation;
};

struct BehaviorConfig {
    BehaviorSpec spec;
    std::filesystem::path output_dir;
};

/// Parsed configuration file. Relative paths are resolved against the
/// directory holding the file.
struct RunConfig {
    std::filesystem::path origin;
    std::filesystem::path output_dir;
    int in_flight = 4;
    std::vector<EndpointConfig> endpoints;
    std::vector<std::filesystem::path> scales;
    RunPlan plan;  // scale_id is filled per scale
    TemplatePaths templates;
    std::optional<ClassifierConfig> classifier;
    std::optional<BehaviorConfig> behavior;

    /// Store directory for one scale: output_dir/<scale id>.
    [[nodiscard]] std::filesystem::path store_dir(std::string_view scale_id) const;
};

/// Throws ParseError for malformed JSON or unknown keys, NotFoundError naming
/// any referenced file that does not exist, ValidationError otherwise.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);
[[nodiscard]] RunConfig parse_config(std::string_view document, const std::filesystem::path& origin);

/// Gateway with every configured endpoint registered.
[[nodiscard]] std::unique_ptr<Gateway> build_gateway(const RunConfig& config);

/// Classifier client from the config. Throws ValidationError naming the
/// three kinds when no classifier is configured.
[[nodiscard]] std::unique_ptr<ClassifierClient> build_classifier(const RunConfig& config, Gateway& gateway);

}  // namespace psyeval
