#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selfreg/commands.hpp"
#include "selfreg/errors.hpp"

using namespace selfreg;

namespace {

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    if (out.empty()) throw ValidationError("empty list '" + text + "'");
    return out;
}

RunConfig base_config(const std::string& path) {
    return path.empty() ? RunConfig{} : RunConfig::load(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-step identification of first-order self-regulating systems from panel data"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Write a simulated panel CSV with truth columns");
    std::string sim_config, sim_out;
    std::optional<std::uint64_t> sim_seed;
    std::optional<int> sim_n_obs, sim_n_indiv, sim_condition;
    std::optional<double> sim_stn;
    sim->add_option("--config", sim_config, "JSON run configuration");
    sim->add_option("--condition", sim_condition, "Use reference condition 1..17 as the base");
    sim->add_option("--seed", sim_seed, "Random seed");
    sim->add_option("--n-obs", sim_n_obs, "Observations per individual");
    sim->add_option("--n-indiv", sim_n_indiv, "Number of individuals");
    sim->add_option("--stn", sim_stn, "Noise sd in % of each individual's range");
    sim->add_option("--out", sim_out, "Output CSV")->required();

    // analyze
    auto* ana = app.add_subcommand("analyze", "Fit the two-step model to a panel CSV");
    std::string ana_in, ana_out = "selfreg_fit", ana_derivative = "fda", ana_regression = "lmm";
    std::optional<double> ana_spar;
    std::optional<int> ana_embedding;
    bool ana_homogeneous = false;
    ana->add_option("input", ana_in, "Panel CSV (id,time,signal,excitation)")->required();
    ana->add_option("--derivative", ana_derivative, "fda or glla");
    ana->add_option("--spar", ana_spar, "Spline smoothing parameter in [0, 1]");
    ana->add_option("--embedding", ana_embedding, "GLLA embedding dimension");
    ana->add_option("--regression", ana_regression, "lmm, ols or gee");
    ana->add_flag("--homogeneous", ana_homogeneous, "Drop the excitation term");
    ana->add_option("--out", ana_out, "Output directory");

    // study
    auto* stu = app.add_subcommand("study", "Monte Carlo evaluation over simulation conditions");
    std::string stu_config, stu_out, stu_methods, stu_regressions, stu_conditions;
    std::optional<int> stu_reps, stu_selection;
    std::optional<std::uint64_t> stu_seed;
    stu->add_option("--config", stu_config, "JSON run configuration");
    stu->add_option("--conditions", stu_conditions, "Reference conditions, e.g. 1,2,15 or all");
    stu->add_option("--methods", stu_methods, "Derivative estimators, e.g. fda,glla");
    stu->add_option("--regressions", stu_regressions, "Regression methods, e.g. lmm,gee");
    stu->add_option("--reps", stu_reps, "Replications per condition");
    stu->add_option("--selection-panels", stu_selection, "Panels used to choose the smoothing");
    stu->add_option("--seed", stu_seed, "Base seed");
    stu->add_option("--out", stu_out, "Output directory (default: output_dir of the config)");

    // report
    auto* rep = app.add_subcommand("report", "Emit plot-ready CSVs from a study directory");
    std::string rep_dir;
    rep->add_option("study_dir", rep_dir, "Directory written by the study command")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*sim) {
            auto cfg = base_config(sim_config);
            if (sim_condition) cfg.condition = SimulationCondition::table(*sim_condition);
            if (sim_seed) cfg.seed = *sim_seed;
            if (sim_n_obs) cfg.condition.n_obs = *sim_n_obs;
            if (sim_n_indiv) cfg.condition.n_indiv = *sim_n_indiv;
            if (sim_stn) cfg.condition.stn = *sim_stn;
            cmd_simulate(cfg, sim_out, std::cerr);
        } else if (*ana) {
            AnalyzeOptions opt;
            opt.derivative = parse_derivative_kind(ana_derivative);
            opt.regression = parse_regression_method(ana_regression);
            opt.homogeneous = ana_homogeneous;
            if (ana_spar && ana_embedding) throw ValidationError("give --spar or --embedding, not both");
            if (ana_spar) {
                if (opt.derivative != DerivativeKind::spline)
                    throw ValidationError("--spar applies to --derivative fda");
                opt.hyperparameter = *ana_spar;
            }
            if (ana_embedding) {
                if (opt.derivative != DerivativeKind::glla)
                    throw ValidationError("--embedding applies to --derivative glla");
                opt.hyperparameter = *ana_embedding;
            }
            cmd_analyze(ana_in, opt, ana_out, std::cerr);
        } else if (*stu) {
            auto cfg = base_config(stu_config);
            if (!stu_conditions.empty()) {
                cfg.table_conditions.clear();
                if (stu_conditions == "all") {
                    for (int id = 1; id <= 17; ++id) cfg.table_conditions.push_back(id);
                } else {
                    for (const auto& s : split_list(stu_conditions)) {
                        try {
                            cfg.table_conditions.push_back(std::stoi(s));
                        } catch (const std::logic_error&) {
                            throw ValidationError("bad condition id '" + s + "'");
                        }
                    }
                }
            }
            if (!stu_methods.empty()) {
                cfg.derivatives.clear();
                for (const auto& s : split_list(stu_methods)) cfg.derivatives.push_back(parse_derivative_kind(s));
            }
            if (!stu_regressions.empty()) {
                cfg.regressions.clear();
                for (const auto& s : split_list(stu_regressions))
                    cfg.regressions.push_back(parse_regression_method(s));
            }
            if (stu_reps) cfg.n_reps = *stu_reps;
            if (stu_selection) cfg.selection_panels = *stu_selection;
            if (stu_seed) cfg.seed = *stu_seed;
            if (!stu_out.empty()) cfg.output_dir = stu_out;
            cmd_study(cfg, cfg.output_dir, std::cerr);
        } else if (*rep) {
            cmd_report(rep_dir, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}
