#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace psyeval {

/// Text with bracketed placeholders such as "[ITEM]". Each required
/// placeholder occurs in the body exactly once.
class PromptTemplate {
public:
    PromptTemplate(std::string id, std::string body, std::vector<std::string> required_placeholders);

    [[nodiscard]] const std::string& id() const noexcept { return id_; }
    [[nodiscard]] const std::string& body() const noexcept { return body_; }
    [[nodiscard]] const std::vector<std::string>& required_placeholders() const noexcept { return required_; }
    /// SHA-256 of the body; run manifests record it.
    [[nodiscard]] std::string hash() const;

private:
    std::string id_;
    std::string body_;
    std::vector<std::string> required_;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

/// Substitutes every bound "[NAME]" in the body. Throws RenderError listing
/// the required names that have no binding.
[[nodiscard]] std::string render_prompt(const PromptTemplate& tmpl, const Bindings& bindings);

[[nodiscard]] PromptTemplate load_template(const std::filesystem::path& path, std::string id,
                                           std::vector<std::string> required_placeholders);

}  // namespace psyeval
