#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "selfreg/pipeline.hpp"
#include "selfreg/simulate.hpp"

namespace selfreg {

enum class Parameter { gamma, k_gamma, yeq_gamma };

std::string to_string(Parameter p);

struct StudyOptions {
    int n_reps = 100;
    std::uint64_t base_seed = 20190417;
    /// The smoothing hyperparameter is chosen once per condition, on the mean
    /// R^2 over the panels of the first `selection_panels` replications.
    int selection_panels = 10;
    SmoothingGrid grid = SmoothingGrid::defaults();
    /// Skips the grid search.
    std::optional<DerivativeSpec> fixed_smoothing;
    Execution exec = Execution::parallel;
};

struct ParameterEstimate {
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    Interval ci{std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double truth = std::numeric_limits<double>::quiet_NaN();
};

struct ReplicationRecord {
    int condition_id = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    double smoothing = 0.0;
    bool ok = false;
    std::string error;
    ParameterEstimate gamma, k_gamma, yeq_gamma;
    double r2_individual = std::numeric_limits<double>::quiet_NaN();  // R2r
    double r2_fixed = std::numeric_limits<double>::quiet_NaN();       // R2g

    const ParameterEstimate& get(Parameter p) const;
};

/// Bias statistics of one parameter. When the truth is zero the "bias" is
/// the raw estimate, and N10 counts estimates within 10% of the true
/// gain-times-rate scale.
struct ParameterSummary {
    bool available = false;
    bool raw = false;
    std::size_t n = 0;
    double median = std::numeric_limits<double>::quiet_NaN();
    double lower = std::numeric_limits<double>::quiet_NaN();  // 2.5%
    double upper = std::numeric_limits<double>::quiet_NaN();  // 97.5%
    double n10 = std::numeric_limits<double>::quiet_NaN();
    double coverage = std::numeric_limits<double>::quiet_NaN();
};

struct ConditionSummary {
    int condition_id = 0;
    DerivativeKind derivative = DerivativeKind::spline;
    RegressionMethod regression = RegressionMethod::lmm;
    bool homogeneous = false;
    double smoothing = 0.0;
    std::size_t replications = 0;
    std::size_t failures = 0;
    ParameterSummary gamma, k_gamma, yeq_gamma;
    double median_r2_individual = std::numeric_limits<double>::quiet_NaN();
    double median_r2_fixed = std::numeric_limits<double>::quiet_NaN();

    const ParameterSummary& get(Parameter p) const;
};

struct ConditionRun {
    SimulationCondition condition;
    DerivativeKind derivative = DerivativeKind::spline;
    std::optional<SmoothingChoice> choice;  // empty with fixed smoothing
    DerivativeSpec smoothing;
    std::vector<ReplicationRecord> records;
    ConditionSummary summary;
    std::string error;  // set when the whole condition failed

    bool ok() const { return error.empty(); }
};

/// Linear-interpolation sample quantile (type 7), p in [0, 1].
double quantile(std::vector<double> values, double p);

/// Replications of one condition with one derivative estimator. The
/// regression method and the homogeneous switch come from the condition;
/// smoothing is selected with the full (excited) model.
ConditionRun run_condition(const SimulationCondition& cond, DerivativeKind derivative,
                           const StudyOptions& options = {});

ConditionSummary summarize(const SimulationCondition& cond, DerivativeKind derivative,
                           double smoothing, const std::vector<ReplicationRecord>& records);

/// Every condition crossed with every derivative estimator and, when given,
/// every regression method (overriding the condition's own). A failing
/// condition is reported in its ConditionRun instead of aborting the study.
std::vector<ConditionRun> run_study(const std::vector<SimulationCondition>& conditions,
                                    const std::vector<DerivativeKind>& derivatives,
                                    const std::vector<RegressionMethod>& regressions,
                                    const StudyOptions& options = {});

}  // namespace selfreg
