#include "psyeval/commands.hpp"
#include "psyeval/error.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using psyeval::ReportFormat;

const std::map<std::string, ReportFormat> kFormats{
    {"table", ReportFormat::Table}, {"delimited", ReportFormat::Delimited}, {"machine", ReportFormat::Machine}};

const std::map<std::string, psyeval::AlphaFormula> kAlpha{{"standard", psyeval::AlphaFormula::Standard},
                                                          {"printed", psyeval::AlphaFormula::PrintedRatio}};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Administer personality scales to language models and evaluate the scores"};
    app.require_subcommand(1);
    int code = psyeval::kExitOk;

    psyeval::AdministerArgs administer;
    auto* cmd_admin = app.add_subcommand("administer", "Administer every configured scale; resumes an existing run");
    cmd_admin->add_option("--config", administer.config, "Run configuration file")->required()->check(CLI::ExistingFile);
    cmd_admin->callback([&] { code = psyeval::cmd_administer(administer, std::cout, std::cerr); });

    psyeval::ScoreArgs score;
    auto* cmd_score = app.add_subcommand("score", "Score one run store");
    cmd_score->add_option("--run", score.run, "Run store directory")->required();
    cmd_score->add_flag("--allow-incomplete", score.allow_incomplete, "Score despite failed or missing trials");
    cmd_score->add_option("--format", score.format, "table, delimited or machine")
        ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
    cmd_score->callback([&] { code = psyeval::cmd_score(score, std::cout, std::cerr); });

    psyeval::BehaviorArgs behavior;
    auto* cmd_behavior = app.add_subcommand("behavior", "Run the occasion-based behaviour test");
    cmd_behavior->add_option("--config", behavior.config, "Run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_behavior->add_flag("--auto-accept", behavior.auto_accept,
                           "Accept pending occasion candidates instead of stopping for review");
    cmd_behavior->add_option("--format", behavior.format, "table, delimited or machine")
        ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
    cmd_behavior->callback([&] { code = psyeval::cmd_behavior(behavior, std::cout, std::cerr); });

    psyeval::MetricsArgs metrics;
    bool metrics_off_diagonal = false;
    auto* cmd_metrics = app.add_subcommand("metrics", "Faithfulness metrics over run stores");
    cmd_metrics->add_option("--runs", metrics.runs, "Run store directories")->required();
    cmd_metrics->add_option("--behavior", metrics.behavior, "Behaviour store directory");
    cmd_metrics->add_flag("--allow-incomplete", metrics.allow_incomplete, "Use runs with failed or missing trials");
    cmd_metrics->add_flag("--exclude-diagonal", metrics_off_diagonal, "Show TrC without same-repetition pairs");
    cmd_metrics->add_option("--alpha", metrics.display.alpha, "standard or printed")
        ->transform(CLI::CheckedTransformer(kAlpha, CLI::ignore_case));
    cmd_metrics->add_option("--format", metrics.format, "table, delimited or machine")
        ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
    cmd_metrics->callback([&] {
        metrics.display.trc_include_diagonal = !metrics_off_diagonal;
        code = psyeval::cmd_metrics(metrics, std::cout, std::cerr);
    });

    psyeval::ReportArgs report;
    bool report_off_diagonal = false;
    auto* cmd_report = app.add_subcommand("report", "Scores, faithfulness, criterion scores and norm comparison");
    cmd_report->add_option("--runs", report.runs, "Run store directories")->required();
    cmd_report->add_option("--norm", report.norm, "Norm profile file")->required()->check(CLI::ExistingFile);
    cmd_report->add_option("--behavior", report.behavior, "Behaviour store directory");
    cmd_report->add_flag("--allow-incomplete", report.allow_incomplete, "Use runs with failed or missing trials");
    cmd_report->add_flag("--exclude-diagonal", report_off_diagonal, "Show TrC without same-repetition pairs");
    cmd_report->add_option("--alpha", report.display.alpha, "standard or printed")
        ->transform(CLI::CheckedTransformer(kAlpha, CLI::ignore_case));
    cmd_report->add_option("--format", report.format, "table, delimited or machine")
        ->transform(CLI::CheckedTransformer(kFormats, CLI::ignore_case));
    cmd_report->callback([&] {
        report.display.trc_include_diagonal = !report_off_diagonal;
        code = psyeval::cmd_report(report, std::cout, std::cerr);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : psyeval::kExitValidation;
    }
    return code;
}
