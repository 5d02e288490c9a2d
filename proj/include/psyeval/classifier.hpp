#pragma once

#include "psyeval/gateway.hpp"
#include "psyeval/prompt.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace psyeval {

enum class Polarity { Positive, Negative };

/// "y" / "n", the labels used in datasets and on the classifier wire.
[[nodiscard]] std::string_view polarity_label(Polarity polarity) noexcept;
/// Parses "y"/"n" (also "yes"/"no", "positive"/"negative"). Throws ValidationError.
[[nodiscard]] Polarity parse_polarity(std::string_view label);

struct ClassifierVerdict {
    Polarity label = Polarity::Negative;
    double p_positive = 0.0;
    std::string classifier_id;
};

/// Builds a verdict, enforcing p in [0,1] and label == POSITIVE <=> p >= 0.5.
[[nodiscard]] ClassifierVerdict make_verdict(Polarity label, double p_positive, std::string classifier_id);

enum class ClassifierKind { Scripted, Remote, Judge };

[[nodiscard]] std::string_view to_string(ClassifierKind kind) noexcept;

class ClassifierClient {
public:
    virtual ~ClassifierClient() = default;
    /// nullopt when the classifier produced no usable label (JUDGE only).
    /// Throws ClassificationError when the classifier cannot be reached.
    virtual std::optional<ClassifierVerdict> classify(std::string_view dimension, std::string_view text) = 0;
    [[nodiscard]] virtual std::string id() const = 0;
    [[nodiscard]] virtual ClassifierKind kind() const noexcept = 0;
};

/// Verdicts looked up by (dimension, SHA-256 of text). The fixture file is a
/// JSON array of {dimension, text | text_sha256, label, p_positive}.
class ScriptedClassifier final : public ClassifierClient {
public:
    ScriptedClassifier() = default;
    [[nodiscard]] static ScriptedClassifier load(const std::filesystem::path& path);

    void add(std::string dimension, std::string_view text, Polarity label, double p_positive);
    void save(const std::filesystem::path& path) const;
    [[nodiscard]] std::size_t size() const noexcept { return verdicts_.size(); }

    std::optional<ClassifierVerdict> classify(std::string_view dimension, std::string_view text) override;
    [[nodiscard]] std::string id() const override { return "scripted"; }
    [[nodiscard]] ClassifierKind kind() const noexcept override { return ClassifierKind::Scripted; }

private:
    struct Entry {
        Polarity label;
        double p_positive;
    };
    std::map<std::pair<std::string, std::string>, Entry> verdicts_;
};

/// Client for the classification service: POST {base_url}/classify with
/// {"dimension","text"}; the reply is {"label": "y"|"n", "p_positive"}.
class RemoteClassifier final : public ClassifierClient {
public:
    explicit RemoteClassifier(std::string base_url,
                              std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));

    std::optional<ClassifierVerdict> classify(std::string_view dimension, std::string_view text) override;
    [[nodiscard]] std::string id() const override { return "remote:" + base_url_; }
    [[nodiscard]] ClassifierKind kind() const noexcept override { return ClassifierKind::Remote; }

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

/// Zero-shot yes/no labelling through a model endpoint. The template binds
/// [FACTOR] (trait adjective) and [BEHAVIOR] (the description). An answer
/// that is neither yes nor no is retried once, then reported as nullopt.
class JudgeClassifier final : public ClassifierClient {
public:
    JudgeClassifier(Gateway& gateway, std::string endpoint_id, PromptTemplate judge_template,
                    std::map<std::string, std::string, std::less<>> factors);

    std::optional<ClassifierVerdict> classify(std::string_view dimension, std::string_view text) override;
    [[nodiscard]] std::string id() const override { return "judge:" + endpoint_id_; }
    [[nodiscard]] ClassifierKind kind() const noexcept override { return ClassifierKind::Judge; }

private:
    Gateway& gateway_;
    std::string endpoint_id_;
    PromptTemplate template_;
    std::map<std::string, std::string, std::less<>> factors_;
};

/// "yes" / "no" as the first such word in a judge answer, case-insensitive.
[[nodiscard]] std::optional<Polarity> parse_yes_no(std::string_view answer) noexcept;

}  // namespace psyeval
