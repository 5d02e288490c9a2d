#pragma once

#include "psyeval/scale.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace psyeval {

/// Stored in place of a letter when no option could be read from a generation.
inline constexpr std::string_view kUnparsed = "UNPARSED";

/// First standalone option letter in `raw_text`, or nullopt (UNPARSED).
///
/// A token is a maximal run of letters/digits. It is an option when it equals
/// a label case-insensitively and it is either marked as an option (preceded
/// by "(" or followed by ")", "." or ":") or written in upper case. Bare
/// lower-case letters are skipped so the article "a" never reads as option A.
[[nodiscard]] std::optional<std::string> parse_choice(std::string_view raw_text,
                                                      const LikertMapping& mapping) noexcept;

}  // namespace psyeval
