#pragma once

#include "psyeval/administration.hpp"
#include "psyeval/behavior.hpp"
#include "psyeval/classifier.hpp"
#include "psyeval/gateway.hpp"
#include "psyeval/prompt.hpp"
#include "psyeval/scale.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace psyeval::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

[[nodiscard]] std::filesystem::path data_dir();
[[nodiscard]] std::filesystem::path test_data_dir();
[[nodiscard]] Scale bundled_scale(std::string_view file_stem);
[[nodiscard]] PromptTemplate item_template();
[[nodiscard]] BehaviorTemplates behavior_templates();

/// Letter that yields `keyed_score` on `item`.
[[nodiscard]] std::string letter_for(const ScaleItem& item, int keyed_score, const LikertMapping& mapping);

/// Raw model text for one call: (subject, call index, item, dimension).
/// Call indices at or past the repetition count are re-queries.
using Persona = std::function<std::string(const Subject&, std::uint64_t, const ScaleItem&, const DimensionSpec&)>;

/// Fixture answering every trial (and its re-query) of `plan` for one
/// endpoint of `scale`.
[[nodiscard]] std::shared_ptr<ScriptedFixture> administration_fixture(const Scale& scale, const PromptTemplate& tmpl,
                                                                      const RunPlan& plan,
                                                                      const std::string& endpoint,
                                                                      const Persona& persona);

/// Deterministic persona with item-level variety and consistent repetitions:
/// the keyed score depends on (endpoint, dimension, temperature, item) only.
[[nodiscard]] Persona stable_persona();

/// One published per-item mean: model x dimension on NEO and BFM.
struct PublishedMean {
    std::string model;
    std::string dimension;
    double neo;
    double bfm;
};

/// Per-item means per model and dimension (three completion models).
[[nodiscard]] const std::vector<PublishedMean>& published_means();

/// Persona whose per-endpoint, per-dimension per-item average over the plan's
/// temperatures equals round(target * k * S) / (k * S), where S is the number of temperatures.
[[nodiscard]] Persona target_mean_persona(const Scale& scale, const RunPlan& plan,
                                          std::function<double(const std::string&, const std::string&)> target);

/// Synthetic scale: `dims` dimensions with `items` items each and random keying.
[[nodiscard]] Scale synthetic_scale(std::mt19937_64& rng, int dims, int items);

/// Builds a gateway with one scripted endpoint per (id, fixture) pair.
[[nodiscard]] std::unique_ptr<Gateway> scripted_gateway(
    const std::vector<std::pair<std::string, std::shared_ptr<ScriptedFixture>>>& endpoints, int in_flight = 4);

/// Everything the behaviour pipeline needs for a scripted end-to-end run.
struct BehaviorWorld {
    BehaviorSpec spec;
    std::unique_ptr<Gateway> gateway;
    std::shared_ptr<ScriptedClassifier> classifier;
    /// (endpoint, temperature, dimension) -> number of positive verdicts, total
    std::map<std::tuple<std::string, double, std::string>, std::pair<int, int>> expected_counts;
    /// (endpoint, temperature, dimension) -> sum of p_positive
    std::map<std::tuple<std::string, double, std::string>, double> expected_p_sum;
};

/// Scripted world: 40 generated occasion candidates per dimension of which 5
/// repeat earlier ones case-folded, 10/10 pseudo descriptions per occasion,
/// subject descriptions per (temperature, generation, occasion) and a
/// verdict per description.
[[nodiscard]] BehaviorWorld behavior_world(const std::vector<std::string>& subjects,
                                           const std::vector<std::string>& dimensions);

}  // namespace psyeval::testing
