#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace psyeval {

enum class Keying { Positive, Negative };

[[nodiscard]] std::string_view to_string(Keying keying) noexcept;

struct ScaleItem {
    int ordinal = 0;  // 1-based questionnaire position, unique within the scale
    std::string text;
    Keying keying = Keying::Positive;

    friend bool operator==(const ScaleItem&, const ScaleItem&) = default;
};

struct DimensionSpec {
    std::string code;
    std::string label;
    std::vector<ScaleItem> items;  // ordinal order

    friend bool operator==(const DimensionSpec&, const DimensionSpec&) = default;
};

struct LikertOption {
    std::string letter;
    std::string description;

    friend bool operator==(const LikertOption&, const LikertOption&) = default;
};

/// Option letters and the score each letter earns under positive and
/// negative keying. The negative scores are the positive scores reversed.
class LikertMapping {
public:
    LikertMapping(std::vector<LikertOption> options, std::vector<int> positive_scores,
                  std::vector<int> negative_scores);

    /// A..E scored 1..5 (reversed for negative keying).
    static LikertMapping five_point();

    [[nodiscard]] const std::vector<LikertOption>& options() const noexcept { return options_; }
    [[nodiscard]] const std::vector<int>& positive_scores() const noexcept { return positive_; }
    [[nodiscard]] const std::vector<int>& negative_scores() const noexcept { return negative_; }
    [[nodiscard]] std::size_t size() const noexcept { return options_.size(); }

    /// Index of `letter` among the labels; exact match, case-sensitive.
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view letter) const noexcept;
    [[nodiscard]] const std::string& letter(std::size_t index) const { return options_.at(index).letter; }

    [[nodiscard]] int min_score() const noexcept { return positive_.front(); }
    [[nodiscard]] int max_score() const noexcept { return positive_.back(); }
    /// (min + max) / 2; may be fractional for even option counts.
    [[nodiscard]] double midpoint() const noexcept { return (min_score() + max_score()) / 2.0; }

    /// The middle option scores the same under either keying. Only odd option
    /// counts have one.
    [[nodiscard]] std::optional<std::size_t> neutral_index() const noexcept;
    [[nodiscard]] std::optional<int> neutral_score() const noexcept;

    friend bool operator==(const LikertMapping&, const LikertMapping&) = default;

private:
    std::vector<LikertOption> options_;
    std::vector<int> positive_;
    std::vector<int> negative_;
};

struct Scale {
    std::string id;
    std::string name;
    std::vector<DimensionSpec> dimensions;
    LikertMapping options = LikertMapping::five_point();
    /// Provenance header fields (source, verify_against, transcribed), echoed on save.
    std::map<std::string, std::string> provenance;

    [[nodiscard]] const DimensionSpec* find_dimension(std::string_view code) const noexcept;
    [[nodiscard]] const DimensionSpec& dimension(std::string_view code) const;
    [[nodiscard]] std::vector<std::string> dimension_codes() const;
    [[nodiscard]] std::size_t item_count() const noexcept;

    /// Lookup by ordinal: the item and the code of the dimension that owns it.
    [[nodiscard]] std::pair<const DimensionSpec*, const ScaleItem*> find_item(int ordinal) const noexcept;

    /// All items across dimensions in questionnaire (ordinal) order.
    [[nodiscard]] std::vector<std::pair<const DimensionSpec*, const ScaleItem*>> questionnaire() const;

    friend bool operator==(const Scale&, const Scale&) = default;
};

/// Throws ValidationError naming the first broken invariant.
void validate_scale(const Scale& scale);

/// Additionally checks the five Big-Five codes are present and nothing else.
void validate_big_five(const Scale& scale);

inline constexpr std::string_view kBigFiveCodes[] = {"EXT", "AGR", "CONS", "EMO", "OPEN"};

/// Parses a scale document; `origin` names the source in error messages.
[[nodiscard]] Scale parse_scale(std::string_view document, std::string_view origin = "<scale>");
[[nodiscard]] Scale load_scale(const std::filesystem::path& path);
[[nodiscard]] std::string serialize_scale(const Scale& scale);

/// Keyed score for `choice` on `item`. Throws InvalidChoiceError for a letter
/// outside the mapping.
[[nodiscard]] int key_score(const ScaleItem& item, std::string_view choice, const LikertMapping& mapping);

/// Items of one dimension in ordinal order. Throws NotFoundError.
[[nodiscard]] const std::vector<ScaleItem>& items_for_dimension(const Scale& scale, std::string_view code);

/// Immutable scales keyed by id.
class ScaleRegistry {
public:
    /// Throws ValidationError on a duplicate id.
    void add(Scale scale);
    [[nodiscard]] const Scale& get(std::string_view id) const;
    [[nodiscard]] bool contains(std::string_view id) const noexcept;
    [[nodiscard]] std::vector<std::string> ids() const;

private:
    std::map<std::string, std::shared_ptr<const Scale>, std::less<>> scales_;
};

}  // namespace psyeval
