#pragma once

#include "psyeval/report.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace psyeval {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitEndpoint = 2,
    kExitIncomplete = 3,
};

struct AdministerArgs {
    std::filesystem::path config;
};

struct ScoreArgs {
    std::filesystem::path run;
    bool allow_incomplete = false;
    ReportFormat format = ReportFormat::Table;
};

struct BehaviorArgs {
    std::filesystem::path config;
    bool auto_accept = false;
    ReportFormat format = ReportFormat::Table;
};

struct MetricsArgs {
    std::vector<std::filesystem::path> runs;
    std::optional<std::filesystem::path> behavior;
    bool allow_incomplete = false;
    MetricDisplay display;
    ReportFormat format = ReportFormat::Table;
};

struct ReportArgs {
    std::vector<std::filesystem::path> runs;
    std::filesystem::path norm;
    std::optional<std::filesystem::path> behavior;
    bool allow_incomplete = false;
    MetricDisplay display;
    ReportFormat format = ReportFormat::Table;
};

/// Each command writes its result to `out` and diagnostics to `err`, and
/// returns an exit code: 1 for invalid input or configuration, 2 when an
/// endpoint or classifier failed, 3 when a run is incomplete.
int cmd_administer(const AdministerArgs& args, std::ostream& out, std::ostream& err);
int cmd_score(const ScoreArgs& args, std::ostream& out, std::ostream& err);
int cmd_behavior(const BehaviorArgs& args, std::ostream& out, std::ostream& err);
int cmd_metrics(const MetricsArgs& args, std::ostream& out, std::ostream& err);
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);

/// Report bundle for a set of run stores, the optional behaviour store and norms.
[[nodiscard]] ReportBundle build_report(std::span<const std::filesystem::path> runs,
                                        const std::optional<std::filesystem::path>& behavior,
                                        const std::optional<NormProfile>& norms, bool allow_incomplete,
                                        MetricDisplay display);

}  // namespace psyeval
