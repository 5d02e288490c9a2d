#include "psyeval/classifier.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <nlohmann/json.hpp>

#include <cctype>

namespace psyeval {

using nlohmann::json;

std::string_view polarity_label(Polarity polarity) noexcept {
    return polarity == Polarity::Positive ? "y" : "n";
}

Polarity parse_polarity(std::string_view label) {
    const auto lower = to_lower_ascii(label);
    if (lower == "y" || lower == "yes" || lower == "positive") {
        return Polarity::Positive;
    }
    if (lower == "n" || lower == "no" || lower == "negative") {
        return Polarity::Negative;
    }
    throw ValidationError("unknown polarity label '" + std::string(label) + "'");
}

ClassifierVerdict make_verdict(Polarity label, double p_positive, std::string classifier_id) {
    if (!(p_positive >= 0.0 && p_positive <= 1.0)) {
        throw ValidationError("verdict: p_positive " + std::to_string(p_positive) + " outside [0,1]");
    }
    if ((label == Polarity::Positive) != (p_positive >= 0.5)) {
        throw ValidationError("verdict: label " + std::string(polarity_label(label)) +
                              " inconsistent with p_positive " + std::to_string(p_positive));
    }
    return ClassifierVerdict{label, p_positive, std::move(classifier_id)};
}

std::string_view to_string(ClassifierKind kind) noexcept {
    switch (kind) {
        case ClassifierKind::Scripted:
            return "scripted";
        case ClassifierKind::Remote:
            return "remote";
        case ClassifierKind::Judge:
            return "judge";
    }
    return "unknown";
}

void ScriptedClassifier::add(std::string dimension, std::string_view text, Polarity label, double p_positive) {
    (void)make_verdict(label, p_positive, id());
    verdicts_.insert_or_assign({std::move(dimension), sha256_hex(text)}, Entry{label, p_positive});
}

ScriptedClassifier ScriptedClassifier::load(const std::filesystem::path& path) {
    const auto origin = path.string();
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(origin, "byte " + std::to_string(e.byte), e.what());
    }
    if (!doc.is_array()) {
        throw ParseError(origin, "field $", "expected an array of verdict records");
    }
    ScriptedClassifier out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        try {
            auto dimension = rec.at("dimension").get<std::string>();
            const auto digest = rec.contains("text") ? sha256_hex(rec.at("text").get<std::string>())
                                                     : rec.at("text_sha256").get<std::string>();
            const auto label = parse_polarity(rec.at("label").get<std::string>());
            const auto p = rec.at("p_positive").get<double>();
            (void)make_verdict(label, p, "scripted");
            out.verdicts_.insert_or_assign({std::move(dimension), digest}, Entry{label, p});
        } catch (const json::exception& e) {
            throw ParseError(origin, "field $[" + std::to_string(i) + "]", e.what());
        } catch (const ValidationError& e) {
            throw ParseError(origin, "field $[" + std::to_string(i) + "]", e.what());
        }
    }
    return out;
}

void ScriptedClassifier::save(const std::filesystem::path& path) const {
    json doc = json::array();
    for (const auto& [key, entry] : verdicts_) {
        doc.push_back({{"dimension", key.first},
                       {"text_sha256", key.second},
                       {"label", polarity_label(entry.label)},
                       {"p_positive", entry.p_positive}});
    }
    write_text_file_atomic(path, doc.dump(1) + "\n");
}

std::optional<ClassifierVerdict> ScriptedClassifier::classify(std::string_view dimension, std::string_view text) {
    auto it = verdicts_.find({std::string(dimension), sha256_hex(text)});
    if (it == verdicts_.end()) {
        throw ClassificationError("scripted classifier: no verdict for " + std::string(dimension) + " text " +
                                  sha256_hex(text).substr(0, 12));
    }
    return ClassifierVerdict{it->second.label, it->second.p_positive, id()};
}

std::optional<Polarity> parse_yes_no(std::string_view answer) noexcept {
    std::size_t pos = 0;
    while (pos < answer.size()) {
        if (!std::isalpha(static_cast<unsigned char>(answer[pos]))) {
            ++pos;
            continue;
        }
        const auto begin = pos;
        while (pos < answer.size() && std::isalpha(static_cast<unsigned char>(answer[pos]))) {
            ++pos;
        }
        const auto word = to_lower_ascii(answer.substr(begin, pos - begin));
        if (word == "yes") {
            return Polarity::Positive;
        }
        if (word == "no") {
            return Polarity::Negative;
        }
    }
    return std::nullopt;
}

JudgeClassifier::JudgeClassifier(Gateway& gateway, std::string endpoint_id, PromptTemplate judge_template,
                                 std::map<std::string, std::string, std::less<>> factors)
    : gateway_(gateway),
      endpoint_id_(std::move(endpoint_id)),
      template_(std::move(judge_template)),
      factors_(std::move(factors)) {
    (void)gateway_.endpoint(endpoint_id_);
}

std::optional<ClassifierVerdict> JudgeClassifier::classify(std::string_view dimension, std::string_view text) {
    auto factor = factors_.find(dimension);
    if (factor == factors_.end()) {
        throw ClassificationError("judge classifier: no trait adjective for dimension " + std::string(dimension));
    }
    const auto prompt = render_prompt(template_, {{"FACTOR", factor->second}, {"BEHAVIOR", std::string(text)}});
    for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
        Completion completion;
        try {
            completion = gateway_.complete(endpoint_id_, prompt, 0.0, CallOptions{attempt, std::nullopt});
        } catch (const Error& e) {
            throw ClassificationError("judge classifier: " + std::string(e.what()));
        }
        if (auto label = parse_yes_no(completion.raw_text)) {
            return ClassifierVerdict{*label, *label == Polarity::Positive ? 1.0 : 0.0, id()};
        }
    }
    return std::nullopt;
}

}  // namespace psyeval
