#include "psyeval/commands.hpp"

#include "psyeval/config.hpp"
#include "psyeval/error.hpp"

#include <nlohmann/json.hpp>

namespace psyeval {

namespace {

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case ErrorKind::Endpoint:
            case ErrorKind::Classification:
                return kExitEndpoint;
            case ErrorKind::IncompleteRun:
                return kExitIncomplete;
            case ErrorKind::Validation:
            case ErrorKind::NotFound:
                return kExitValidation;
        }
        return kExitValidation;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed record: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}

PromptTemplate required_template(const std::filesystem::path& path, const char* key, std::string id,
                                 std::vector<std::string> placeholders) {
    if (path.empty()) {
        throw ValidationError(std::string("config: templates.") + key + " is required for this command");
    }
    return load_template(path, std::move(id), std::move(placeholders));
}

}  // namespace

int cmd_administer(const AdministerArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto config = load_config(args.config);
        if (config.scales.empty()) {
            throw ValidationError(args.config.string() + ": no scales listed");
        }
        if (config.plan.endpoints.empty()) {
            throw ValidationError(args.config.string() + ": plan.endpoints is required for administer");
        }
        const auto tmpl =
            required_template(config.templates.item_assessment, "item_assessment", "item_assessment", {"ITEM"});
        auto gateway = build_gateway(config);
        bool scorable = true;
        bool failed = false;
        for (const auto& path : config.scales) {
            const auto scale = load_scale(path);
            auto plan = config.plan;
            plan.scale_id = scale.id;
            const auto dir = config.store_dir(scale.id);
            auto result = administer(plan, scale, *gateway, tmpl, dir);
            const auto& s = result.summary;
            out << scale.id << ": store " << result.store.id() << " at " << dir.string() << '\n';
            if (result.skipped > 0) {
                out << "  skipped " << result.skipped << " completed trials\n";
            }
            out << "  planned " << s.planned << ", completed " << s.completed << " (" << result.completed_now
                << " now), failed " << s.failed << ", missing " << s.missing << ", imputed " << s.imputed
                << ", re-queried " << result.requeried << '\n';
            scorable = scorable && s.scorable();
            failed = failed || s.failed > 0;
        }
        if (!scorable) {
            err << "run incomplete: re-run administer to retry failed trials\n";
            return failed ? kExitEndpoint : kExitIncomplete;
        }
        return kExitOk;
    });
}

int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto store = RunStore::open(args.run);
        const auto table = score_table(store, {args.allow_incomplete});
        if (args.format == ReportFormat::Machine) {
            ReportBundle bundle;
            bundle.scores.push_back(table);
            out << render_report(bundle, args.format);
        } else {
            out << render_text_table(score_text_table(table, args.format), args.format);
        }
        return kExitOk;
    });
}

int cmd_behavior(const BehaviorArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto config = load_config(args.config);
        if (!config.behavior) {
            throw ValidationError(args.config.string() + ": no behavior section");
        }
        auto gateway = build_gateway(config);
        auto classifier = build_classifier(config, *gateway);
        const BehaviorTemplates templates{
            required_template(config.templates.occasion_generation, "occasion_generation", "occasion_generation",
                              {"FACTOR"}),
            required_template(config.templates.pseudo_description, "pseudo_description", "pseudo_description",
                              {"POLARITY", "FACTOR", "OCCASION"}),
            required_template(config.templates.behavior_elicitation, "behavior_elicitation", "behavior_elicitation",
                              {"OCCASION"})};
        const auto result = run_behavior(config.behavior->spec, templates, *gateway, *classifier,
                                         config.behavior->output_dir, {args.auto_accept});
        if (args.format != ReportFormat::Machine) {
            out << "behavior store " << result.store_id << " at " << config.behavior->output_dir.string() << '\n';
            for (const auto& d : result.dimensions) {
                out << "  " << d.dimension_code << ": " << d.occasions << " occasions, " << d.pseudo_examples
                    << " pseudo examples (" << d.missing_examples << " missing), " << d.descriptions
                    << " descriptions\n";
                for (const auto& n : d.notes) {
                    out << "    note: " << n << '\n';
                }
            }
            out << "  elicitation failures " << result.failures << ", unparsed verdicts " << result.unparsed
                << "\n\n";
            out << render_text_table(crs_text_table({result.store_id, config.behavior->spec.mode, result.scores},
                                                    args.format),
                                     args.format);
        } else {
            ReportBundle bundle;
            bundle.crs = CrsTable{result.store_id, config.behavior->spec.mode, result.scores};
            out << render_report(bundle, args.format);
        }
        return result.failures > 0 ? kExitEndpoint : kExitOk;
    });
}

ReportBundle build_report(std::span<const std::filesystem::path> runs,
                          const std::optional<std::filesystem::path>& behavior,
                          const std::optional<NormProfile>& norms, bool allow_incomplete, MetricDisplay display) {
    if (runs.empty()) {
        throw ValidationError("at least one run store is required");
    }
    ReportBundle bundle;
    bundle.display = display;
    bundle.norms = norms;
    std::vector<ScaleEvaluation> evaluations;
    for (const auto& dir : runs) {
        const auto store = RunStore::open(dir);
        if (norms) {
            validate_norms_cover(*norms, store.scale());
        }
        auto matrix = ScoreMatrix::from_records(store.records(), store.scale());
        auto table = score_table(matrix, store.id(), store.summary(), {allow_incomplete});
        for (const auto& e : evaluations) {
            if (e.table.scale_id == table.scale_id) {
                throw ValidationError("two run stores for scale " + table.scale_id);
            }
        }
        bundle.scores.push_back(table);
        evaluations.push_back({std::move(matrix), std::move(table)});
    }
    std::optional<CriterionSeries> criteria;
    std::vector<std::string> extra;
    if (behavior) {
        const auto store = BehaviorStore::open(*behavior);
        const auto scores = store.scores();
        criteria = criterion_series(scores);
        extra.push_back(store.id());
        bundle.crs = CrsTable{store.id(), store.mode(), scores};
    }
    bundle.faithfulness = evaluate_faithfulness(evaluations, criteria ? &*criteria : nullptr, std::move(extra));
    return bundle;
}

int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto bundle = build_report(args.runs, args.behavior, std::nullopt, args.allow_incomplete, args.display);
        if (args.format == ReportFormat::Machine) {
            bundle.scores.clear();
            bundle.crs.reset();
            out << render_report(bundle, args.format);
        } else {
            out << render_text_table(faithfulness_text_table(*bundle.faithfulness, nullptr, args.display, args.format),
                                     args.format);
        }
        return kExitOk;
    });
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto norms = load_norms(args.norm);
        const auto bundle = build_report(args.runs, args.behavior, norms, args.allow_incomplete, args.display);
        out << render_report(bundle, args.format);
        return kExitOk;
    });
}

}  // namespace psyeval
