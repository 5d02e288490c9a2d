#pragma once

#include "psyeval/scale.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace psyeval {

/// Human reference values: per-item mean per dimension and, optionally,
/// human internal consistency per scale and dimension.
struct NormProfile {
    std::string source;
    std::string note;
    std::map<std::string, double, std::less<>> per_item_mean;
    std::map<std::string, std::map<std::string, double, std::less<>>, std::less<>> human_inc;
    std::string sha256;  // of the file the profile was read from
};

/// Throws ParseError on malformed JSON or unknown keys, ValidationError for
/// means outside [1,5] or alphas outside [-1,1].
[[nodiscard]] NormProfile load_norms(const std::filesystem::path& path);
[[nodiscard]] NormProfile parse_norms(std::string_view document, std::string_view origin);

/// Throws ValidationError unless the profile has a mean for every dimension of `scale`.
void validate_norms_cover(const NormProfile& norms, const Scale& scale);

}  // namespace psyeval
