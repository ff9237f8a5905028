#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "selfreg/pipeline.hpp"
#include "selfreg/run_config.hpp"

namespace selfreg {

// Process exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitEstimation = 3;
inline constexpr int kExitIo = 4;

int exit_code_for(const std::exception& e);

/// Writes one simulated panel (with truth columns) for the configured condition.
void cmd_simulate(const RunConfig& config, const std::filesystem::path& out_path, std::ostream& log);

struct AnalyzeOptions {
    DerivativeKind derivative = DerivativeKind::spline;
    /// d or spar; the smoothing grid is searched when absent.
    std::optional<double> hyperparameter;
    RegressionMethod regression = RegressionMethod::lmm;
    bool homogeneous = false;
    SmoothingGrid grid = SmoothingGrid::defaults();
};

/// Files written to out_dir: fit.json (fixed effects, R^2, smoothing,
/// warnings), individuals.csv, reconstruction.csv and, after a grid search,
/// smoothing_trace.csv.
FitResult cmd_analyze(const std::filesystem::path& in_path, const AnalyzeOptions& options,
                      const std::filesystem::path& out_dir, std::ostream& log);

/// Files written to out_dir: config.json, summary.csv, replications.csv,
/// smoothing_traces.csv and report.md.
std::vector<ConditionRun> cmd_study(const RunConfig& config, const std::filesystem::path& out_dir,
                                    std::ostream& log);

/// Plot-ready long CSVs under study_dir/plots: smoothing_traces.csv,
/// bias_distribution.csv and example_trajectories.csv.
void cmd_report(const std::filesystem::path& study_dir, std::ostream& log);

/// One bundled reference row of the two-step results (parsed from the
/// shipped data file).
struct ReferenceRow {
    int condition = 0;
    DerivativeKind derivative = DerivativeKind::spline;
    std::optional<double> smoothing, r2r, r2g;
    struct Stat {
        std::optional<double> bias, lower, upper, n10, coverage;
    };
    Stat gamma, k_gamma, yeq_gamma;

    const Stat& get(Parameter p) const;
};

std::vector<ReferenceRow> reference_rows();

}  // namespace selfreg
