#include "psyeval/choice_parser.hpp"

#include <cctype>

namespace psyeval {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::optional<std::string> parse_choice(std::string_view raw_text, const LikertMapping& mapping) noexcept {
    std::size_t pos = 0;
    while (pos < raw_text.size()) {
        if (!is_word_char(raw_text[pos])) {
            ++pos;
            continue;
        }
        const auto begin = pos;
        while (pos < raw_text.size() && is_word_char(raw_text[pos])) {
            ++pos;
        }
        const auto word = raw_text.substr(begin, pos - begin);
        if (word.size() != 1) {
            continue;
        }
        const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
        const std::string letter(1, upper);
        if (!mapping.index_of(letter)) {
            continue;
        }
        const bool opened = begin > 0 && raw_text[begin - 1] == '(';
        const char next = pos < raw_text.size() ? raw_text[pos] : '\0';
        const bool marked = opened || next == ')' || next == '.' || next == ':';
        const bool uppercase = word[0] == upper;
        if (marked || uppercase) {
            return letter;
        }
    }
    return std::nullopt;
}

}  // namespace psyeval
