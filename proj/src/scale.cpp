#include "psyeval/scale.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace psyeval {

using nlohmann::json;

std::string_view to_string(Keying keying) noexcept {
    return keying == Keying::Positive ? "+" : "-";
}

LikertMapping::LikertMapping(std::vector<LikertOption> options, std::vector<int> positive_scores,
                             std::vector<int> negative_scores)
    : options_(std::move(options)),
      positive_(std::move(positive_scores)),
      negative_(std::move(negative_scores)) {
    if (options_.size() < 2) {
        throw ValidationError("likert mapping: at least two options required");
    }
    if (positive_.size() != options_.size() || negative_.size() != options_.size()) {
        throw ValidationError("likert mapping: labels, positive_scores and negative_scores differ in length");
    }
    std::set<std::string> seen;
    for (const auto& opt : options_) {
        if (opt.letter.empty()) {
            throw ValidationError("likert mapping: empty option letter");
        }
        if (!seen.insert(opt.letter).second) {
            throw ValidationError("likert mapping: duplicate option letter '" + opt.letter + "'");
        }
    }
    for (std::size_t i = 1; i < positive_.size(); ++i) {
        if (positive_[i] <= positive_[i - 1]) {
            throw ValidationError("likert mapping: positive_scores must be strictly increasing");
        }
    }
    if (!std::equal(positive_.begin(), positive_.end(), negative_.rbegin())) {
        throw ValidationError("likert mapping: negative_scores must be positive_scores reversed");
    }
}

LikertMapping LikertMapping::five_point() {
    return LikertMapping(
        {{"A", "Very Inaccurate"},
         {"B", "Moderately Inaccurate"},
         {"C", "Neither Accurate Nor Inaccurate"},
         {"D", "Moderately Accurate"},
         {"E", "Very Accurate"}},
        {1, 2, 3, 4, 5}, {5, 4, 3, 2, 1});
}

std::optional<std::size_t> LikertMapping::index_of(std::string_view letter) const noexcept {
    for (std::size_t i = 0; i < options_.size(); ++i) {
        if (options_[i].letter == letter) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> LikertMapping::neutral_index() const noexcept {
    if (options_.size() % 2 == 0) {
        return std::nullopt;
    }
    return options_.size() / 2;
}

std::optional<int> LikertMapping::neutral_score() const noexcept {
    if (auto idx = neutral_index()) {
        return positive_[*idx];
    }
    return std::nullopt;
}

const DimensionSpec* Scale::find_dimension(std::string_view code) const noexcept {
    for (const auto& dim : dimensions) {
        if (dim.code == code) {
            return &dim;
        }
    }
    return nullptr;
}

const DimensionSpec& Scale::dimension(std::string_view code) const {
    if (const auto* dim = find_dimension(code)) {
        return *dim;
    }
    throw NotFoundError("scale " + id + ": unknown dimension code '" + std::string(code) + "'");
}

std::vector<std::string> Scale::dimension_codes() const {
    std::vector<std::string> codes;
    codes.reserve(dimensions.size());
    for (const auto& dim : dimensions) {
        codes.push_back(dim.code);
    }
    return codes;
}

std::size_t Scale::item_count() const noexcept {
    std::size_t n = 0;
    for (const auto& dim : dimensions) {
        n += dim.items.size();
    }
    return n;
}

std::pair<const DimensionSpec*, const ScaleItem*> Scale::find_item(int ordinal) const noexcept {
    for (const auto& dim : dimensions) {
        for (const auto& item : dim.items) {
            if (item.ordinal == ordinal) {
                return {&dim, &item};
            }
        }
    }
    return {nullptr, nullptr};
}

std::vector<std::pair<const DimensionSpec*, const ScaleItem*>> Scale::questionnaire() const {
    std::vector<std::pair<const DimensionSpec*, const ScaleItem*>> out;
    out.reserve(item_count());
    for (const auto& dim : dimensions) {
        for (const auto& item : dim.items) {
            out.emplace_back(&dim, &item);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.second->ordinal < b.second->ordinal; });
    return out;
}

void validate_scale(const Scale& scale) {
    if (scale.id.empty()) {
        throw ValidationError("scale: id must be non-empty");
    }
    if (scale.dimensions.empty()) {
        throw ValidationError("scale " + scale.id + ": no dimensions");
    }
    std::set<std::string> codes;
    std::set<std::string> texts;
    std::set<int> ordinals;
    for (const auto& dim : scale.dimensions) {
        if (dim.code.empty()) {
            throw ValidationError("scale " + scale.id + ": empty dimension code");
        }
        if (!codes.insert(dim.code).second) {
            throw ValidationError("scale " + scale.id + ": duplicate dimension code '" + dim.code + "'");
        }
        if (dim.items.empty()) {
            throw ValidationError("scale " + scale.id + ": dimension " + dim.code + " has no items");
        }
        int previous = 0;
        for (const auto& item : dim.items) {
            if (item.text.empty()) {
                throw ValidationError("scale " + scale.id + ": dimension " + dim.code + ": empty item text");
            }
            if (item.ordinal < 1) {
                throw ValidationError("scale " + scale.id + ": item ordinal must be >= 1");
            }
            if (item.ordinal <= previous) {
                throw ValidationError("scale " + scale.id + ": dimension " + dim.code +
                                      ": items not in ordinal order");
            }
            previous = item.ordinal;
            if (!ordinals.insert(item.ordinal).second) {
                throw ValidationError("scale " + scale.id + ": duplicate item ordinal " +
                                      std::to_string(item.ordinal));
            }
            if (!texts.insert(item.text).second) {
                throw ValidationError("scale " + scale.id + ": duplicate item text '" + item.text + "'");
            }
        }
    }
}

void validate_big_five(const Scale& scale) {
    validate_scale(scale);
    if (scale.dimensions.size() != std::size(kBigFiveCodes)) {
        throw ValidationError("scale " + scale.id + ": expected exactly 5 Big-Five dimensions");
    }
    for (auto code : kBigFiveCodes) {
        if (scale.find_dimension(code) == nullptr) {
            throw ValidationError("scale " + scale.id + ": missing Big-Five dimension " + std::string(code));
        }
    }
}

namespace {

std::size_t line_of(std::string_view doc, std::size_t byte) {
    byte = std::min(byte, doc.size());
    return 1 + static_cast<std::size_t>(std::count(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

class FieldReader {
public:
    explicit FieldReader(std::string origin) : origin_(std::move(origin)) {}

    const json& require(const json& obj, const std::string& key, const std::string& path) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        auto it = obj.find(key);
        if (it == obj.end()) {
            fail(path + "." + key, "missing field");
        }
        return *it;
    }

    std::string string_at(const json& obj, const std::string& key, const std::string& path) const {
        const auto& v = require(obj, key, path);
        if (!v.is_string()) {
            fail(path + "." + key, "expected a string");
        }
        return v.get<std::string>();
    }

    int int_at(const json& v, const std::string& path) const {
        if (!v.is_number_integer()) {
            fail(path, "expected an integer");
        }
        return v.get<int>();
    }

    const json& array_at(const json& obj, const std::string& key, const std::string& path) const {
        const auto& v = require(obj, key, path);
        if (!v.is_array()) {
            fail(path + "." + key, "expected an array");
        }
        return v;
    }

    void only_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                   const std::string& path) const {
        for (const auto& [key, _] : obj.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                fail(path + "." + key, "unknown field");
            }
        }
    }

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        throw ParseError(origin_, "field " + path, what);
    }

private:
    std::string origin_;
};

}  // namespace

Scale parse_scale(std::string_view document, std::string_view origin) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(origin), "line " + std::to_string(line_of(document, e.byte)), e.what());
    }
    FieldReader r{std::string(origin)};
    const std::string root = "$";
    if (!doc.is_object()) {
        r.fail(root, "expected an object");
    }
    r.only_keys(doc,
                {"id", "name", "source", "verify_against", "transcribed", "options", "positive_scores",
                 "negative_scores", "dimensions"},
                root);

    Scale scale;
    scale.id = r.string_at(doc, "id", root);
    scale.name = r.string_at(doc, "name", root);
    for (const char* key : {"source", "verify_against", "transcribed"}) {
        if (doc.contains(key)) {
            scale.provenance[key] = r.string_at(doc, key, root);
        }
    }

    std::vector<LikertOption> options;
    const auto& opts = r.array_at(doc, "options", root);
    for (std::size_t i = 0; i < opts.size(); ++i) {
        const auto path = root + ".options[" + std::to_string(i) + "]";
        r.only_keys(opts[i], {"letter", "description"}, path);
        options.push_back({r.string_at(opts[i], "letter", path), r.string_at(opts[i], "description", path)});
    }
    auto read_scores = [&](const char* key) {
        std::vector<int> out;
        const auto& arr = r.array_at(doc, key, root);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            out.push_back(r.int_at(arr[i], root + "." + key + "[" + std::to_string(i) + "]"));
        }
        return out;
    };
    try {
        scale.options = LikertMapping(std::move(options), read_scores("positive_scores"),
                                      read_scores("negative_scores"));
    } catch (const ValidationError& e) {
        throw ParseError(std::string(origin), "field $.options", e.what());
    }

    const auto& dims = r.array_at(doc, "dimensions", root);
    for (std::size_t d = 0; d < dims.size(); ++d) {
        const auto path = root + ".dimensions[" + std::to_string(d) + "]";
        r.only_keys(dims[d], {"code", "label", "items"}, path);
        DimensionSpec dim;
        dim.code = r.string_at(dims[d], "code", path);
        dim.label = r.string_at(dims[d], "label", path);
        const auto& items = r.array_at(dims[d], "items", path);
        for (std::size_t j = 0; j < items.size(); ++j) {
            const auto ipath = path + ".items[" + std::to_string(j) + "]";
            r.only_keys(items[j], {"ordinal", "text", "keying"}, ipath);
            ScaleItem item;
            item.ordinal = r.int_at(r.require(items[j], "ordinal", ipath), ipath + ".ordinal");
            item.text = r.string_at(items[j], "text", ipath);
            const auto keying = r.string_at(items[j], "keying", ipath);
            if (keying == "+") {
                item.keying = Keying::Positive;
            } else if (keying == "-") {
                item.keying = Keying::Negative;
            } else {
                r.fail(ipath + ".keying", "expected \"+\" or \"-\", got \"" + keying + "\"");
            }
            dim.items.push_back(std::move(item));
        }
        std::stable_sort(dim.items.begin(), dim.items.end(),
                         [](const ScaleItem& a, const ScaleItem& b) { return a.ordinal < b.ordinal; });
        scale.dimensions.push_back(std::move(dim));
    }
    validate_scale(scale);
    return scale;
}

Scale load_scale(const std::filesystem::path& path) {
    return parse_scale(read_text_file(path), path.string());
}

std::string serialize_scale(const Scale& scale) {
    json doc = json::object();
    doc["id"] = scale.id;
    doc["name"] = scale.name;
    for (const auto& [key, value] : scale.provenance) {
        doc[key] = value;
    }
    json options = json::array();
    for (const auto& opt : scale.options.options()) {
        options.push_back({{"letter", opt.letter}, {"description", opt.description}});
    }
    doc["options"] = std::move(options);
    doc["positive_scores"] = scale.options.positive_scores();
    doc["negative_scores"] = scale.options.negative_scores();
    json dims = json::array();
    for (const auto& dim : scale.dimensions) {
        json items = json::array();
        for (const auto& item : dim.items) {
            items.push_back({{"ordinal", item.ordinal}, {"text", item.text}, {"keying", to_string(item.keying)}});
        }
        dims.push_back({{"code", dim.code}, {"label", dim.label}, {"items", std::move(items)}});
    }
    doc["dimensions"] = std::move(dims);
    return doc.dump(2) + "\n";
}

int key_score(const ScaleItem& item, std::string_view choice, const LikertMapping& mapping) {
    const auto idx = mapping.index_of(choice);
    if (!idx) {
        throw InvalidChoiceError("invalid choice '" + std::string(choice) + "' for item " +
                                 std::to_string(item.ordinal));
    }
    return item.keying == Keying::Positive ? mapping.positive_scores()[*idx] : mapping.negative_scores()[*idx];
}

const std::vector<ScaleItem>& items_for_dimension(const Scale& scale, std::string_view code) {
    return scale.dimension(code).items;
}

void ScaleRegistry::add(Scale scale) {
    validate_scale(scale);
    auto id = scale.id;
    if (scales_.contains(id)) {
        throw ValidationError("scale registry: duplicate scale id '" + id + "'");
    }
    scales_.emplace(std::move(id), std::make_shared<const Scale>(std::move(scale)));
}

const Scale& ScaleRegistry::get(std::string_view id) const {
    auto it = scales_.find(id);
    if (it == scales_.end()) {
        throw NotFoundError("scale registry: unknown scale '" + std::string(id) + "'");
    }
    return *it->second;
}

bool ScaleRegistry::contains(std::string_view id) const noexcept {
    return scales_.find(id) != scales_.end();
}

std::vector<std::string> ScaleRegistry::ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : scales_) {
        out.push_back(id);
    }
    return out;
}

}  // namespace psyeval
