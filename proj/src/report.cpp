#include "psyeval/report.hpp"

#include "psyeval/error.hpp"
#include "psyeval/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>
#include <sstream>

namespace psyeval {

using nlohmann::json;

ReportFormat parse_report_format(std::string_view text) {
    const auto lower = to_lower_ascii(text);
    if (lower == "table") {
        return ReportFormat::Table;
    }
    if (lower == "delimited") {
        return ReportFormat::Delimited;
    }
    if (lower == "machine") {
        return ReportFormat::Machine;
    }
    throw ValidationError("unknown format '" + std::string(text) + "' (expected table, delimited or machine)");
}

int display_decimals(ReportFormat format) noexcept {
    return format == ReportFormat::Table ? 2 : 6;
}

namespace {

bool numeric_cell(const std::string& cell) {
    return !cell.empty() && cell.find_first_not_of("0123456789.-") == std::string::npos;
}

std::string csv_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) {
        return cell;
    }
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string show(const MetricValue& m, int decimals) {
    return m.value ? format_fixed(*m.value, decimals) : "UNDEFINED";
}

/// Cell text plus a footnote marker when the value carries flags.
std::string show_flagged(const MetricValue& m, int decimals, std::vector<std::string>& notes,
                         const std::string& context) {
    auto cell = show(m, decimals);
    if (!m.flags.empty()) {
        std::string joined;
        for (const auto& f : m.flags) {
            joined += (joined.empty() ? "" : "; ") + f;
        }
        notes.push_back(context + ": " + joined);
        cell += "[" + std::to_string(notes.size()) + "]";
    }
    return cell;
}

json metric_json(const MetricValue& m) {
    return {{"value", m.value ? json(*m.value) : json(nullptr)}, {"flags", m.flags}};
}

}  // namespace

std::string render_text_table(const TextTable& table, ReportFormat format) {
    std::ostringstream out;
    if (format == ReportFormat::Delimited) {
        out << "# " << table.title << '\n';
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            out << (c ? "," : "") << csv_cell(table.header[c]);
        }
        out << '\n';
        for (const auto& row : table.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                out << (c ? "," : "") << csv_cell(row[c]);
            }
            out << '\n';
        }
        for (std::size_t i = 0; i < table.notes.size(); ++i) {
            out << "# [" << i + 1 << "] " << table.notes[i] << '\n';
        }
        return out.str();
    }
    if (format != ReportFormat::Table) {
        throw ContractViolation("render_text_table: machine output is not a text table");
    }
    std::vector<std::size_t> width(table.header.size(), 0);
    auto measure = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    };
    measure(table.header);
    for (const auto& row : table.rows) {
        measure(row);
    }
    auto line = [&](const std::vector<std::string>& row, bool header) {
        std::string text;
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto pad = std::string(width[c] - row[c].size(), ' ');
            const bool right = !header && c > 0 && (numeric_cell(row[c]) || row[c].find('[') != std::string::npos);
            text += (c ? "  " : "") + (right ? pad + row[c] : row[c] + pad);
        }
        while (!text.empty() && text.back() == ' ') {
            text.pop_back();
        }
        out << text << '\n';
    };
    out << table.title << '\n';
    line(table.header, true);
    std::size_t total = 0;
    for (auto w : width) {
        total += w;
    }
    out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
    for (const auto& row : table.rows) {
        line(row, false);
    }
    for (std::size_t i = 0; i < table.notes.size(); ++i) {
        out << "  [" << i + 1 << "] " << table.notes[i] << '\n';
    }
    return out.str();
}

TextTable score_text_table(const ScoreTable& table, ReportFormat format) {
    const int d = display_decimals(format);
    TextTable out;
    out.title = "Scores: " + table.scale_id + " (store " + table.store_id + ")";
    out.header = {"subject", "dimension", "total", "items", "per_item", "imputed"};
    for (const auto& s : table.scores) {
        out.rows.push_back({s.subject.label(), s.dimension_code, std::to_string(s.total),
                            std::to_string(s.item_count), format_fixed(s.per_item_average(), d),
                            std::to_string(s.imputations)});
    }
    out.notes = table.flags;
    return out;
}

TextTable faithfulness_text_table(const FaithfulnessReport& report, const NormProfile* norms, MetricDisplay display,
                                  ReportFormat format) {
    const int d = display_decimals(format);
    TextTable out;
    std::string sources;
    for (const auto& s : report.sources) {
        sources += (sources.empty() ? "" : ", ") + s;
    }
    out.title = std::string("Faithfulness (TrC ") + (display.trc_include_diagonal ? "with" : "without") +
                " u=v pairs, InC " + (display.alpha == AlphaFormula::Standard ? "standard alpha" : "printed ratio") +
                "; stores " + sources + ")";
    out.header = {"scale", "metric"};
    for (const auto& dim : report.dimensions) {
        out.header.push_back(dim);
    }
    for (const auto& scale : report.scales) {
        auto row_for = [&](const std::string& metric, auto pick) {
            std::vector<std::string> row{scale, metric};
            for (const auto& dim : report.dimensions) {
                const auto* cell = report.find(scale, dim);
                row.push_back(cell ? pick(*cell, scale + " " + metric + " " + dim) : "-");
            }
            out.rows.push_back(std::move(row));
        };
        row_for("TrC", [&](const DimensionFaithfulness& c, const std::string& ctx) {
            return show_flagged(display.trc_include_diagonal ? c.trc : c.trc_off_diagonal, d, out.notes, ctx);
        });
        row_for("InC", [&](const DimensionFaithfulness& c, const std::string& ctx) {
            return show_flagged(display.alpha == AlphaFormula::Standard ? c.inc : c.inc_printed, d, out.notes, ctx);
        });
        std::set<std::string> partners;
        for (const auto& c : report.cells) {
            if (c.scale_id == scale) {
                for (const auto& [partner, _] : c.exc) {
                    partners.insert(partner);
                }
            }
        }
        for (const auto& partner : partners) {
            row_for("ExC(" + partner + ")", [&](const DimensionFaithfulness& c, const std::string& ctx) {
                auto it = c.exc.find(partner);
                return it == c.exc.end() ? std::string("-") : show_flagged(it->second, d, out.notes, ctx);
            });
        }
        row_for("BC", [&](const DimensionFaithfulness& c, const std::string& ctx) {
            return c.bc ? show_flagged(*c.bc, d, out.notes, ctx) : std::string("unavailable");
        });
        if (norms != nullptr) {
            if (auto it = norms->human_inc.find(scale); it != norms->human_inc.end()) {
                std::vector<std::string> row{scale, "InC(human)"};
                for (const auto& dim : report.dimensions) {
                    auto v = it->second.find(dim);
                    row.push_back(v == it->second.end() ? "-" : format_fixed(v->second, 2));
                }
                out.rows.push_back(std::move(row));
            }
        }
    }
    return out;
}

TextTable crs_text_table(const CrsTable& crs, ReportFormat format) {
    const int d = display_decimals(format);
    TextTable out;
    out.title = "Criterion scores (" + std::string(to_string(crs.mode)) + " mode; store " + crs.store_id + ")";
    out.header = {"subject", "dimension", "crs", "descriptions", "unparsed"};
    for (const auto& s : crs.scores) {
        out.rows.push_back({s.temperature ? s.label() : s.label() + " (pooled)", s.dimension_code,
                            format_fixed(s.value, d), std::to_string(s.n_descriptions), std::to_string(s.unparsed)});
    }
    return out;
}

const NormRow* NormComparison::find(std::string_view endpoint_id, std::string_view dimension) const {
    for (const auto& r : rows) {
        if (r.endpoint_id == endpoint_id && r.dimension_code == dimension) {
            return &r;
        }
    }
    return nullptr;
}

NormComparison compare_norms(std::span<const ScoreTable> tables, const NormProfile& norms) {
    NormComparison out;
    out.norm_source = norms.source;
    std::vector<std::string> endpoints;
    std::vector<std::string> dimensions;
    // (endpoint, dimension) -> scale -> (sum, n)
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::pair<double, int>>> acc;
    for (const auto& t : tables) {
        for (const auto& s : t.scores) {
            if (std::find(endpoints.begin(), endpoints.end(), s.subject.endpoint_id) == endpoints.end()) {
                endpoints.push_back(s.subject.endpoint_id);
            }
            if (std::find(dimensions.begin(), dimensions.end(), s.dimension_code) == dimensions.end()) {
                dimensions.push_back(s.dimension_code);
            }
            auto& cell = acc[{s.subject.endpoint_id, s.dimension_code}][t.scale_id];
            cell.first += s.per_item_average();
            cell.second += 1;
        }
    }
    for (const auto& ep : endpoints) {
        for (const auto& dim : dimensions) {
            auto it = acc.find({ep, dim});
            if (it == acc.end()) {
                continue;
            }
            auto human = norms.per_item_mean.find(dim);
            if (human == norms.per_item_mean.end()) {
                throw ValidationError("norm profile has no mean for dimension " + dim);
            }
            NormRow row{ep, dim, {}, 0.0, human->second};
            for (const auto& [scale, sum_n] : it->second) {
                row.per_scale[scale] = sum_n.first / sum_n.second;
                row.pooled += row.per_scale[scale];
            }
            row.pooled /= static_cast<double>(row.per_scale.size());
            out.rows.push_back(std::move(row));
        }
    }
    return out;
}

bool human_between(const NormComparison& comparison, std::string_view low_endpoint, std::string_view high_endpoint,
                   std::string_view dimension) {
    const auto* low = comparison.find(low_endpoint, dimension);
    const auto* high = comparison.find(high_endpoint, dimension);
    if (low == nullptr || high == nullptr) {
        throw NotFoundError("norm comparison has no row for " + std::string(low == nullptr ? low_endpoint
                                                                                           : high_endpoint) +
                            " " + std::string(dimension));
    }
    const auto lo = std::min(low->pooled, high->pooled);
    const auto hi = std::max(low->pooled, high->pooled);
    return lo < low->human && low->human < hi;
}

TextTable norm_text_table(const NormComparison& comparison, ReportFormat format) {
    const int d = display_decimals(format);
    TextTable out;
    out.title = "Per-item averages against human norms (" + comparison.norm_source + ")";
    std::vector<std::string> scales;
    for (const auto& r : comparison.rows) {
        for (const auto& [scale, _] : r.per_scale) {
            if (std::find(scales.begin(), scales.end(), scale) == scales.end()) {
                scales.push_back(scale);
            }
        }
    }
    std::sort(scales.begin(), scales.end());
    out.header = {"endpoint", "dimension"};
    for (const auto& s : scales) {
        out.header.push_back(s);
    }
    out.header.insert(out.header.end(), {"pooled", "human"});
    for (const auto& r : comparison.rows) {
        std::vector<std::string> row{r.endpoint_id, r.dimension_code};
        for (const auto& s : scales) {
            auto it = r.per_scale.find(s);
            row.push_back(it == r.per_scale.end() ? "-" : format_fixed(it->second, d));
        }
        row.push_back(format_fixed(r.pooled, d));
        row.push_back(format_fixed(r.human, d));
        out.rows.push_back(std::move(row));
    }
    return out;
}

namespace {

json machine_report(const ReportBundle& b) {
    json doc = {{"format", "psyeval-report/1"}};
    json sources = json::array();
    json scores = json::array();
    for (const auto& t : b.scores) {
        sources.push_back(t.store_id);
        json rows = json::array();
        for (const auto& s : t.scores) {
            rows.push_back({{"subject", s.subject.label()},
                            {"endpoint", s.subject.endpoint_id},
                            {"temperature", s.subject.temperature},
                            {"dimension", s.dimension_code},
                            {"total", s.total},
                            {"items", s.item_count},
                            {"per_item_average", s.per_item_average()},
                            {"imputations", s.imputations}});
        }
        scores.push_back({{"scale", t.scale_id},
                          {"store_id", t.store_id},
                          {"planned", t.summary.planned},
                          {"completed", t.summary.completed},
                          {"imputed", t.summary.imputed},
                          {"flags", t.flags},
                          {"rows", rows}});
    }
    doc["scores"] = scores;

    if (b.faithfulness) {
        json cells = json::array();
        for (const auto& c : b.faithfulness->cells) {
            json exc = json::object();
            for (const auto& [partner, m] : c.exc) {
                exc[partner] = metric_json(m);
            }
            json cell = {{"scale", c.scale_id},
                         {"dimension", c.dimension_code},
                         {"trc", metric_json(c.trc)},
                         {"trc_off_diagonal", metric_json(c.trc_off_diagonal)},
                         {"inc", metric_json(c.inc)},
                         {"inc_printed_ratio", metric_json(c.inc_printed)},
                         {"exc", exc},
                         {"bc", c.bc ? metric_json(*c.bc) : json("unavailable")}};
            if (b.norms) {
                if (auto s = b.norms->human_inc.find(c.scale_id); s != b.norms->human_inc.end()) {
                    if (auto v = s->second.find(c.dimension_code); v != s->second.end()) {
                        cell["human_inc"] = v->second;
                    }
                }
            }
            cells.push_back(std::move(cell));
        }
        doc["faithfulness"] = {{"sources", b.faithfulness->sources}, {"cells", cells}};
    }

    if (b.crs) {
        sources.push_back(b.crs->store_id);
        json rows = json::array();
        for (const auto& s : b.crs->scores) {
            rows.push_back({{"subject", s.label()},
                            {"pooled", !s.temperature.has_value()},
                            {"dimension", s.dimension_code},
                            {"value", s.value},
                            {"n_descriptions", s.n_descriptions},
                            {"unparsed", s.unparsed}});
        }
        doc["crs"] = {{"store_id", b.crs->store_id}, {"mode", to_string(b.crs->mode)}, {"rows", rows}};
    }

    if (b.norms) {
        const auto comparison = compare_norms(b.scores, *b.norms);
        json rows = json::array();
        for (const auto& r : comparison.rows) {
            rows.push_back({{"endpoint", r.endpoint_id},
                            {"dimension", r.dimension_code},
                            {"per_scale", r.per_scale},
                            {"pooled", r.pooled},
                            {"human", r.human}});
        }
        doc["norms"] = {{"source", b.norms->source}, {"sha256", b.norms->sha256}, {"rows", rows}};
    }
    doc["sources"] = sources;
    return doc;
}

}  // namespace

std::string render_report(const ReportBundle& bundle, ReportFormat format) {
    if (format == ReportFormat::Machine) {
        return machine_report(bundle).dump(2) + "\n";
    }
    std::string out;
    auto section = [&](const TextTable& t) {
        out += (out.empty() ? "" : "\n") + render_text_table(t, format);
    };
    for (const auto& t : bundle.scores) {
        section(score_text_table(t, format));
    }
    if (bundle.faithfulness) {
        section(faithfulness_text_table(*bundle.faithfulness, bundle.norms ? &*bundle.norms : nullptr,
                                        bundle.display, format));
    }
    if (bundle.crs) {
        section(crs_text_table(*bundle.crs, format));
    }
    if (bundle.norms) {
        section(norm_text_table(compare_norms(bundle.scores, *bundle.norms), format));
    }
    return out;
}

}  // namespace psyeval
