#include "psyeval/prompt.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

namespace psyeval {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::string token(std::string_view name) {
    return "[" + std::string(name) + "]";
}

}  // namespace

PromptTemplate::PromptTemplate(std::string id, std::string body, std::vector<std::string> required_placeholders)
    : id_(std::move(id)), body_(std::move(body)), required_(std::move(required_placeholders)) {
    for (const auto& name : required_) {
        const auto n = count_occurrences(body_, token(name));
        if (n != 1) {
            throw ValidationError("prompt template '" + id_ + "': placeholder " + token(name) + " occurs " +
                                  std::to_string(n) + " times, expected exactly once");
        }
    }
}

std::string PromptTemplate::hash() const {
    return sha256_hex(body_);
}

std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings) {
    std::string missing;
    for (const auto& name : tmpl.required_placeholders()) {
        if (bindings.find(name) == bindings.end()) {
            missing += missing.empty() ? name : ", " + name;
        }
    }
    if (!missing.empty()) {
        throw RenderError("prompt template '" + tmpl.id() + "': missing bindings: " + missing);
    }
    // Single left-to-right pass so bound values are never re-scanned.
    const auto& body = tmpl.body();
    std::string out;
    out.reserve(body.size());
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto open = body.find('[', pos);
        if (open == std::string::npos) {
            out.append(body, pos);
            break;
        }
        out.append(body, pos, open - pos);
        const auto close = body.find(']', open + 1);
        if (close == std::string::npos) {
            out.append(body, open);
            break;
        }
        const std::string_view name(body.data() + open + 1, close - open - 1);
        if (auto it = bindings.find(name); it != bindings.end()) {
            out += it->second;
            pos = close + 1;
        } else {
            out += '[';
            pos = open + 1;
        }
    }
    return out;
}

PromptTemplate load_template(const std::filesystem::path& path, std::string id,
                             std::vector<std::string> required_placeholders) {
    return PromptTemplate(std::move(id), read_text_file(path), std::move(required_placeholders));
}

}  // namespace psyeval
