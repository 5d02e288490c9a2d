#include "psyeval/norms.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace psyeval {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view origin,
                    const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ParseError(std::string(origin), where, "unknown key '" + key + "'");
        }
    }
}

}  // namespace

NormProfile parse_norms(std::string_view document, std::string_view origin) {
    const std::string src(origin);
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(src, "byte " + std::to_string(e.byte), e.what());
    }
    if (!doc.is_object()) {
        throw ParseError(src, "$", "expected an object");
    }
    reject_unknown(doc, {"source", "note", "per_item_mean", "human_inc"}, src, "$");
    NormProfile out;
    out.sha256 = sha256_hex(document);
    try {
        out.source = doc.at("source").get<std::string>();
        out.note = doc.value("note", "");
        for (const auto& [dim, value] : doc.at("per_item_mean").items()) {
            const auto mean = value.get<double>();
            if (!(mean >= 1.0 && mean <= 5.0)) {
                throw ValidationError(src + ": per_item_mean." + dim + " = " + std::to_string(mean) +
                                      " outside [1,5]");
            }
            out.per_item_mean.emplace(dim, mean);
        }
        if (doc.contains("human_inc")) {
            for (const auto& [scale, dims] : doc.at("human_inc").items()) {
                for (const auto& [dim, value] : dims.items()) {
                    const auto alpha = value.get<double>();
                    if (!(alpha >= -1.0 && alpha <= 1.0)) {
                        throw ValidationError(src + ": human_inc." + scale + "." + dim + " outside [-1,1]");
                    }
                    out.human_inc[scale].emplace(dim, alpha);
                }
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(src, "$", e.what());
    }
    if (out.source.empty()) {
        throw ValidationError(src + ": source must name where the norms come from");
    }
    if (out.per_item_mean.empty()) {
        throw ValidationError(src + ": per_item_mean is empty");
    }
    return out;
}

NormProfile load_norms(const std::filesystem::path& path) {
    return parse_norms(read_text_file(path), path.string());
}

void validate_norms_cover(const NormProfile& norms, const Scale& scale) {
    for (const auto& code : scale.dimension_codes()) {
        if (!norms.per_item_mean.contains(code)) {
            throw ValidationError("norm profile has no mean for dimension " + code + " of scale " + scale.id);
        }
    }
}

}  // namespace psyeval
