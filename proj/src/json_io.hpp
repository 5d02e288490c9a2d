#pragma once

#include "psyeval/administration.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace psyeval::detail {

using nlohmann::json;

json to_json(const Subject& subject);
Subject subject_from_json(const json& j);

json to_json(const RunPlan& plan);
RunPlan plan_from_json(const json& j);

json to_json(const TrialRecord& record);
TrialRecord trial_from_json(const json& j);

json to_json(const TrialFailure& failure);
TrialFailure failure_from_json(const json& j);

json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const json& j);

/// Complete lines of a line-delimited JSON file. A trailing fragment without a
/// newline is dropped. Missing file yields no lines.
std::vector<json> read_json_lines(const std::filesystem::path& path);

/// Truncates an interrupted trailing line so appends start on a fresh line.
void repair_json_lines(const std::filesystem::path& path);

/// Appends one record line and flushes.
class JsonLineWriter {
public:
    explicit JsonLineWriter(const std::filesystem::path& path);
    void write(const json& record);

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

}  // namespace psyeval::detail
