#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "selfreg/pipeline.hpp"
#include "selfreg/simulate.hpp"
#include "selfreg/study.hpp"

namespace selfreg {

/// JSON run configuration. Every key is optional and unknown keys are
/// rejected. Defaults reproduce reference condition 1.
///
/// {
///   "condition": {"decay_rate": 0.0667, "shape": "two_steps", "n_obs": 50,
///                 "n_indiv": 50, "equilibrium": 0.5, "stn": 30,
///                 "regression": "lmm", "homogeneous": false, "gain": 1,
///                 "inter_indiv_sd_pct": 20},
///   "conditions": [1, 2] | "all",
///   "derivatives": ["fda", "glla"],
///   "regressions": ["lmm", "gee"],
///   "grid": {"embeddings": [3, 5], "spars": [0, 0.2], "refine_spar": true},
///   "n_reps": 100, "seed": 20190417, "selection_panels": 10,
///   "output_dir": "selfreg_out"
/// }
///
/// "decay_time" may replace "decay_rate". "conditions" selects rows of the
/// reference design for the study command; without it the study runs the
/// single "condition".
struct RunConfig {
    SimulationCondition condition;
    std::vector<int> table_conditions;
    std::vector<DerivativeKind> derivatives{DerivativeKind::spline, DerivativeKind::glla};
    std::vector<RegressionMethod> regressions;
    SmoothingGrid grid = SmoothingGrid::defaults();
    int n_reps = 100;
    std::uint64_t seed = 20190417;
    int selection_panels = 10;
    std::string output_dir = "selfreg_out";

    static RunConfig parse(const std::string& text, const std::string& source = "<config>");
    static RunConfig load(const std::filesystem::path& path);

    /// Conditions the study command runs.
    std::vector<SimulationCondition> study_conditions() const;
    StudyOptions study_options() const;
    std::string to_json() const;
    void validate() const;
};

}  // namespace selfreg
