#include "selfreg/study.hpp"

#include <algorithm>
#include <cmath>

#include "selfreg/errors.hpp"

namespace selfreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ParameterEstimate pack(double estimate, double se, const Interval& ci, double truth) {
    return {estimate, se, ci, truth};
}

ParameterSummary summarize_parameter(const std::vector<ReplicationRecord>& records, Parameter p,
                                     double tolerance_scale) {
    ParameterSummary s;
    std::vector<double> bias;
    std::size_t within = 0, covered = 0;
    for (const auto& r : records) {
        if (!r.ok) continue;
        const auto& e = r.get(p);
        if (!std::isfinite(e.estimate) || !std::isfinite(e.truth)) continue;
        s.raw = e.truth == 0.0;
        const double b = s.raw ? e.estimate : 100.0 * (e.estimate - e.truth) / e.truth;
        bias.push_back(b);
        within += s.raw ? std::abs(e.estimate) < 0.1 * tolerance_scale : std::abs(b) < 10.0;
        covered += e.ci.contains(e.truth);
    }
    if (bias.empty()) return s;
    s.available = true;
    s.n = bias.size();
    s.median = quantile(bias, 0.5);
    s.lower = quantile(bias, 0.025);
    s.upper = quantile(bias, 0.975);
    s.n10 = 100.0 * static_cast<double>(within) / static_cast<double>(s.n);
    s.coverage = 100.0 * static_cast<double>(covered) / static_cast<double>(s.n);
    return s;
}

double median_of(const std::vector<ReplicationRecord>& records, double ReplicationRecord::*field) {
    std::vector<double> v;
    for (const auto& r : records)
        if (r.ok && std::isfinite(r.*field)) v.push_back(r.*field);
    return v.empty() ? kNaN : quantile(std::move(v), 0.5);
}

}  // namespace

std::string to_string(Parameter p) {
    switch (p) {
        case Parameter::gamma: return "gamma";
        case Parameter::k_gamma: return "k_gamma";
        case Parameter::yeq_gamma: return "yeq_gamma";
    }
    return "?";
}

const ParameterEstimate& ReplicationRecord::get(Parameter p) const {
    switch (p) {
        case Parameter::gamma: return gamma;
        case Parameter::k_gamma: return k_gamma;
        case Parameter::yeq_gamma: return yeq_gamma;
    }
    return gamma;
}

const ParameterSummary& ConditionSummary::get(Parameter p) const {
    switch (p) {
        case Parameter::gamma: return gamma;
        case Parameter::k_gamma: return k_gamma;
        case Parameter::yeq_gamma: return yeq_gamma;
    }
    return gamma;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw ValidationError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("quantile probability must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ConditionSummary summarize(const SimulationCondition& cond, DerivativeKind derivative,
                           double smoothing, const std::vector<ReplicationRecord>& records) {
    ConditionSummary s;
    s.condition_id = cond.id;
    s.derivative = derivative;
    s.regression = cond.regression;
    s.homogeneous = cond.homogeneous;
    s.smoothing = smoothing;
    s.replications = records.size();
    s.failures = static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok; }));
    if (s.failures == s.replications)
        throw EstimationError("condition " + std::to_string(cond.id) + ": every replication failed");
    const double scale = std::abs(cond.decay_rate * cond.gain);
    s.gamma = summarize_parameter(records, Parameter::gamma, scale);
    s.k_gamma = summarize_parameter(records, Parameter::k_gamma, scale);
    s.yeq_gamma = summarize_parameter(records, Parameter::yeq_gamma, scale);
    s.median_r2_individual = median_of(records, &ReplicationRecord::r2_individual);
    s.median_r2_fixed = median_of(records, &ReplicationRecord::r2_fixed);
    return s;
}

ConditionRun run_condition(const SimulationCondition& cond, DerivativeKind derivative,
                           const StudyOptions& options) {
    cond.validate();
    if (options.n_reps < 1) throw ValidationError("n_reps must be at least 1");
    if (options.selection_panels < 1) throw ValidationError("selection_panels must be at least 1");

    ConditionRun run;
    run.condition = cond;
    run.derivative = derivative;
    const auto n = static_cast<std::size_t>(options.n_reps);
    std::vector<std::uint64_t> seeds(n);
    for (std::size_t r = 0; r < n; ++r)
        seeds[r] = derive_seed({options.base_seed, static_cast<std::uint64_t>(cond.id), r});

    // Panels of the selection replications are kept and reused below.
    std::vector<Panel> selection;
    if (options.fixed_smoothing) {
        if (options.fixed_smoothing->kind != derivative)
            throw ValidationError("fixed smoothing does not match the derivative estimator");
        run.smoothing = *options.fixed_smoothing;
    } else {
        const auto k = std::min(n, static_cast<std::size_t>(options.selection_panels));
        selection.resize(k);
        for_each_index(k, options.exec, [&](std::size_t r) {
            selection[r] = generate_panel(cond, seeds[r], Execution::serial);
        });
        run.choice = optimize_smoothing(selection, derivative, cond.regression, false, options.grid,
                                        options.exec);
        run.smoothing = run.choice->best;
    }

    const auto mean = cond.mean_params();
    const double truth_gamma = mean.decay_rate;
    const double truth_k = cond.homogeneous ? kNaN : mean.gain * mean.decay_rate;
    const double truth_y = mean.equilibrium * mean.decay_rate;

    run.records.resize(n);
    for_each_index(n, options.exec, [&](std::size_t r) {
        auto& rec = run.records[r];
        rec.condition_id = cond.id;
        rec.replication = static_cast<int>(r);
        rec.seed = seeds[r];
        rec.smoothing = run.smoothing.hyperparameter();
        try {
            const Panel panel = r < selection.size() ? selection[r]
                                                     : generate_panel(cond, seeds[r], Execution::serial);
            const auto fit = two_step_fit(panel, run.smoothing, cond.regression, cond.homogeneous,
                                          Execution::serial);
            rec.gamma = pack(fit.gamma, fit.se_gamma, fit.gamma_ci, truth_gamma);
            if (!cond.homogeneous)
                rec.k_gamma = pack(fit.k_gamma, fit.se_k_gamma, fit.k_gamma_ci, truth_k);
            rec.yeq_gamma = pack(fit.yeq_gamma, fit.se_yeq_gamma, fit.yeq_gamma_ci, truth_y);
            rec.r2_individual = fit.r2_individual_true.value_or(kNaN);
            rec.r2_fixed = fit.r2_fixed_true.value_or(kNaN);
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    });
    run.summary = summarize(cond, derivative, run.smoothing.hyperparameter(), run.records);
    return run;
}

std::vector<ConditionRun> run_study(const std::vector<SimulationCondition>& conditions,
                                    const std::vector<DerivativeKind>& derivatives,
                                    const std::vector<RegressionMethod>& regressions,
                                    const StudyOptions& options) {
    if (conditions.empty()) throw ValidationError("the study has no conditions");
    if (derivatives.empty()) throw ValidationError("the study has no derivative estimators");
    std::vector<ConditionRun> runs;
    for (const auto& base : conditions) {
        std::vector<SimulationCondition> variants;
        if (regressions.empty()) {
            variants.push_back(base);
        } else {
            for (auto m : regressions) {
                auto c = base;
                c.regression = m;
                variants.push_back(c);
            }
        }
        for (const auto& cond : variants) {
            for (auto kind : derivatives) {
                try {
                    runs.push_back(run_condition(cond, kind, options));
                } catch (const std::exception& e) {
                    ConditionRun failed;
                    failed.condition = cond;
                    failed.derivative = kind;
                    failed.error = e.what();
                    runs.push_back(std::move(failed));
                }
            }
        }
    }
    return runs;
}

}  // namespace selfreg
