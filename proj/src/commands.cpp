#include "selfreg/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "selfreg/errors.hpp"
#include "selfreg/panel_csv.hpp"
#include "selfreg/reference_data.hpp"

namespace selfreg {

namespace fs = std::filesystem;

namespace {

constexpr Parameter kParameters[] = {Parameter::gamma, Parameter::k_gamma, Parameter::yeq_gamma};

std::string num(double x, int digits = 6) {
    if (!std::isfinite(x)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

std::string quoted(const std::string& text) {
    if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += "\"\"";
        else if (c == '\n' || c == '\r') out += ' ';
        else out += c;
    }
    return out + "\"";
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw IoError("cannot create output directory '" + dir.string() + "'");
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

// Minimal reader for the CSV files this module writes (quoted text fields allowed).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name, const fs::path& source) const {
        for (std::size_t k = 0; k < header.size(); ++k)
            if (header[k] == name) return k;
        throw ValidationError("'" + source.string() + "' has no column '" + name + "'");
    }
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out(1);
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    return out;
}

Table read_table(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("'" + path.string() + "' is empty");
    t.header = split_csv_line(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.header.size())
            throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header.size()) + " fields");
        t.rows.push_back(std::move(cells));
    }
    return t;
}

std::optional<double> opt_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw ValidationError("bad number '" + cell + "'");
        return v;
    } catch (const std::logic_error&) {
        throw ValidationError("bad number '" + cell + "' in reference data");
    }
}

std::string describe(const SimulationCondition& c) {
    std::ostringstream s;
    s << "decay rate " << num(c.decay_rate, 4) << ", " << c.shape.name() << ", n_obs " << c.n_obs
      << ", n_indiv " << c.n_indiv << ", y_eq " << num(c.equilibrium, 4) << ", noise " << num(c.stn, 4)
      << "%, " << to_string(c.regression) << (c.homogeneous ? ", homogeneous" : "");
    return s.str();
}

std::string smoothing_label(DerivativeKind kind, double h) {
    return kind == DerivativeKind::glla ? "d=" + num(h, 3) : "spar=" + num(h, 3);
}

}  // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const EstimationError*>(&e)) return kExitEstimation;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return kExitValidation;
    return kExitEstimation;
}

const ReferenceRow::Stat& ReferenceRow::get(Parameter p) const {
    switch (p) {
        case Parameter::gamma: return gamma;
        case Parameter::k_gamma: return k_gamma;
        case Parameter::yeq_gamma: return yeq_gamma;
    }
    return gamma;
}

std::vector<ReferenceRow> reference_rows() {
    std::istringstream in(generated::kReferenceValuesCsv);
    std::string line;
    std::vector<ReferenceRow> out;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (header.empty()) {
            header = cells;
            continue;
        }
        if (cells.size() != header.size()) throw ValidationError("malformed reference data row");
        std::map<std::string, std::string> cell;
        for (std::size_t k = 0; k < header.size(); ++k) cell[header[k]] = cells[k];
        ReferenceRow r;
        r.condition = std::stoi(cell["condition"]);
        r.derivative = parse_derivative_kind(cell["derivative"]);
        r.smoothing = opt_number(cell["smoothing"]);
        r.r2r = opt_number(cell["r2r"]);
        r.r2g = opt_number(cell["r2g"]);
        for (auto p : kParameters) {
            const auto key = to_string(p);
            auto& s = p == Parameter::gamma ? r.gamma : p == Parameter::k_gamma ? r.k_gamma : r.yeq_gamma;
            s.bias = opt_number(cell[key + "_bias"]);
            s.lower = opt_number(cell[key + "_lower"]);
            s.upper = opt_number(cell[key + "_upper"]);
            s.n10 = opt_number(cell[key + "_n10"]);
            s.coverage = opt_number(cell[key + "_cov"]);
        }
        out.push_back(r);
    }
    return out;
}

void cmd_simulate(const RunConfig& config, const fs::path& out_path, std::ostream& log) {
    config.validate();
    const auto panel = generate_panel(config.condition, config.seed);
    if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
    write_panel_csv(panel, out_path);
    log << "wrote " << panel.n_observations() << " observations of " << panel.individuals.size()
        << " individuals to " << out_path.string() << '\n';
}

FitResult cmd_analyze(const fs::path& in_path, const AnalyzeOptions& options, const fs::path& out_dir,
                      std::ostream& log) {
    const Panel panel = read_panel_csv(in_path);
    if (panel.individuals.size() < 2 && options.regression != RegressionMethod::ols)
        throw ValidationError("'" + in_path.string() + "' holds a single individual; " +
                              to_string(options.regression) +
                              " needs at least two, use --regression ols instead");
    std::optional<SmoothingChoice> choice;
    DerivativeSpec spec;
    if (options.hyperparameter) {
        const double h = *options.hyperparameter;
        if (options.derivative == DerivativeKind::glla) {
            if (h != std::round(h)) throw ValidationError("the GLLA embedding must be an integer");
            spec = DerivativeSpec::glla(static_cast<int>(h));
        } else {
            spec = DerivativeSpec::spline(h);
        }
    } else {
        choice = optimize_smoothing(panel, options.derivative, options.regression, false, options.grid);
        spec = choice->best;
        log << "smoothing search chose " << spec.describe() << " (R^2 " << num(choice->r2, 4) << ")\n";
    }
    FitResult fit;
    try {
        fit = two_step_fit(panel, spec, options.regression, options.homogeneous);
    } catch (const EstimationError& e) {
        throw EstimationError("analysis of '" + in_path.string() + "' with " + spec.describe() + " and " +
                              to_string(options.regression) + " failed: " + e.what());
    }
    if (options.homogeneous)
        fit.warnings.push_back("homogeneous model: the excitation is ignored, so the decay rate is "
                               "biased whenever the signal is excited");

    ensure_dir(out_dir);
    nlohmann::json j;
    j["input"] = in_path.string();
    j["derivative"] = to_string(spec.kind);
    j["smoothing"] = spec.hyperparameter();
    j["smoothing_searched"] = choice.has_value();
    j["regression"] = to_string(fit.method);
    j["homogeneous"] = fit.homogeneous;
    j["rows"] = fit.n_rows;
    auto param = [](double est, double se, const Interval& ci) {
        nlohmann::json p;
        p["estimate"] = std::isfinite(est) ? nlohmann::json(est) : nlohmann::json(nullptr);
        p["se"] = std::isfinite(se) ? nlohmann::json(se) : nlohmann::json(nullptr);
        p["ci_lower"] = std::isfinite(ci.lower) ? nlohmann::json(ci.lower) : nlohmann::json(nullptr);
        p["ci_upper"] = std::isfinite(ci.upper) ? nlohmann::json(ci.upper) : nlohmann::json(nullptr);
        return p;
    };
    j["gamma"] = param(fit.gamma, fit.se_gamma, fit.gamma_ci);
    if (!fit.homogeneous) j["k_gamma"] = param(fit.k_gamma, fit.se_k_gamma, fit.k_gamma_ci);
    j["yeq_gamma"] = param(fit.yeq_gamma, fit.se_yeq_gamma, fit.yeq_gamma_ci);
    auto finite_or_null = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    j["decay_time"] = finite_or_null(fit.decay_time);
    j["gain"] = finite_or_null(fit.gain);
    j["equilibrium"] = finite_or_null(fit.equilibrium);
    j["r2_fixed_observed"] = finite_or_null(fit.r2_fixed_observed);
    if (fit.r2_fixed_true) j["r2_fixed_noiseless"] = finite_or_null(*fit.r2_fixed_true);
    if (fit.r2_individual_true) j["r2_individual_noiseless"] = finite_or_null(*fit.r2_individual_true);
    j["excluded_individuals"] = fit.n_excluded;
    j["warnings"] = fit.warnings;
    {
        const auto path = out_dir / "fit.json";
        auto out = open_out(path);
        out << j.dump(2) << '\n';
        finish(out, path);
    }
    {
        const auto path = out_dir / "individuals.csv";
        auto out = open_out(path);
        out << "id,decay_rate,decay_time,gain,equilibrium,valid\n";
        for (const auto& e : fit.individuals)
            out << quoted(e.id) << ',' << num(e.decay_rate, 10) << ',' << num(e.decay_time, 10) << ','
                << num(e.gain, 10) << ',' << num(e.equilibrium, 10) << ',' << (e.valid ? 1 : 0) << '\n';
        finish(out, path);
    }
    {
        const auto path = out_dir / "reconstruction.csv";
        auto out = open_out(path);
        out << "id,time,observed,fitted_individual,fitted_fixed\n";
        for (std::size_t k = 0; k < panel.individuals.size(); ++k) {
            const auto& ind = panel.individuals[k];
            const auto& ri = fit.individual_reconstruction[k].values;
            const auto& rf = fit.fixed_reconstruction[k].values;
            for (std::size_t i = 0; i < ind.size(); ++i)
                out << quoted(ind.id) << ',' << num(ind.times[i], 10) << ',' << num(ind.signal[i], 10)
                    << ',' << (ri.empty() ? "" : num(ri[i], 10)) << ','
                    << (rf.empty() ? "" : num(rf[i], 10)) << '\n';
        }
        finish(out, path);
    }
    if (choice) {
        const auto path = out_dir / "smoothing_trace.csv";
        auto out = open_out(path);
        out << "hyperparameter,ok,r2,gamma,k_gamma,yeq_gamma,chosen\n";
        for (const auto& pt : choice->trace)
            out << num(pt.hyperparameter, 10) << ',' << (pt.ok ? 1 : 0) << ',' << num(pt.r2, 17) << ','
                << num(pt.gamma, 10) << ',' << num(pt.k_gamma, 10) << ',' << num(pt.yeq_gamma, 10) << ','
                << (std::abs(pt.hyperparameter - spec.hyperparameter()) < 1e-12 ? 1 : 0) << '\n';
        finish(out, path);
    }
    log << "gamma " << num(fit.gamma) << ", decay time " << num(fit.decay_time) << ", gain "
        << num(fit.gain) << ", equilibrium " << num(fit.equilibrium) << '\n';
    for (const auto& w : fit.warnings) log << "warning: " << w << '\n';
    return fit;
}

std::vector<ConditionRun> cmd_study(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
    config.validate();
    ensure_dir(out_dir);
    {
        const auto path = out_dir / "config.json";
        auto out = open_out(path);
        out << config.to_json() << '\n';
        finish(out, path);
    }
    const auto conditions = config.study_conditions();
    log << "running " << conditions.size() << " condition(s) x " << config.derivatives.size()
        << " derivative estimator(s), " << config.n_reps << " replications each\n";
    auto runs = run_study(conditions, config.derivatives, config.regressions, config.study_options());

    {
        const auto path = out_dir / "summary.csv";
        auto out = open_out(path);
        out << "condition,derivative,regression,homogeneous,smoothing,parameter,bias_mode,median,lower,"
               "upper,n10,coverage,median_r2r,median_r2g,replications,failures,error\n";
        for (const auto& run : runs) {
            const auto& c = run.condition;
            const std::string prefix = std::to_string(c.id) + ',' + to_string(run.derivative) + ',' +
                                       to_string(c.regression) + ',' + (c.homogeneous ? "1" : "0") + ',';
            if (!run.ok()) {
                out << prefix << ",,,,,,,,,,,," << quoted(run.error) << '\n';
                continue;
            }
            const auto& s = run.summary;
            for (auto p : kParameters) {
                const auto& ps = s.get(p);
                if (!ps.available) continue;
                out << prefix << num(s.smoothing, 10) << ',' << to_string(p) << ','
                    << (ps.raw ? "raw" : "relative_pct") << ',' << num(ps.median) << ',' << num(ps.lower)
                    << ',' << num(ps.upper) << ',' << num(ps.n10, 4) << ',' << num(ps.coverage, 4) << ','
                    << num(s.median_r2_individual, 4) << ',' << num(s.median_r2_fixed, 4) << ','
                    << s.replications << ',' << s.failures << ",\n";
            }
        }
        finish(out, path);
    }
    {
        const auto path = out_dir / "replications.csv";
        auto out = open_out(path);
        out << "condition,derivative,regression,replication,seed,smoothing,ok";
        for (auto p : kParameters) {
            const auto k = to_string(p);
            out << ',' << k << ',' << k << "_se," << k << "_lower," << k << "_upper," << k << "_true";
        }
        out << ",r2r,r2g,error\n";
        for (const auto& run : runs) {
            for (const auto& r : run.records) {
                out << r.condition_id << ',' << to_string(run.derivative) << ','
                    << to_string(run.condition.regression) << ',' << r.replication << ',' << r.seed << ','
                    << num(r.smoothing, 10) << ',' << (r.ok ? 1 : 0);
                for (auto p : kParameters) {
                    const auto& e = r.get(p);
                    out << ',' << num(e.estimate, 10) << ',' << num(e.se, 10) << ',' << num(e.ci.lower, 10)
                        << ',' << num(e.ci.upper, 10) << ',' << num(e.truth, 10);
                }
                out << ',' << num(r.r2_individual, 6) << ',' << num(r.r2_fixed, 6) << ',' << quoted(r.error)
                    << '\n';
            }
        }
        finish(out, path);
    }
    {
        const auto path = out_dir / "smoothing_traces.csv";
        auto out = open_out(path);
        out << "condition,derivative,regression,hyperparameter,ok,r2,gamma,k_gamma,yeq_gamma,chosen\n";
        for (const auto& run : runs) {
            if (!run.choice) continue;
            for (const auto& pt : run.choice->trace)
                out << run.condition.id << ',' << to_string(run.derivative) << ','
                    << to_string(run.condition.regression) << ',' << num(pt.hyperparameter, 10) << ','
                    << (pt.ok ? 1 : 0) << ',' << num(pt.r2, 17) << ',' << num(pt.gamma, 10) << ','
                    << num(pt.k_gamma, 10) << ',' << num(pt.yeq_gamma, 10) << ','
                    << (std::abs(pt.hyperparameter - run.smoothing.hyperparameter()) < 1e-12 ? 1 : 0)
                    << '\n';
        }
        finish(out, path);
    }
    {
        const auto refs = reference_rows();
        const auto path = out_dir / "report.md";
        auto out = open_out(path);
        out << "# Simulation study\n\n"
            << config.n_reps << " replications per condition, seed " << config.seed
            << ". Bias is the median relative bias in % with its [2.5; 97.5] percentile range "
               "(the raw estimate when the true value is 0). Reference columns hold the published "
               "two-step results for the same condition (1000 replications), where available.\n";
        for (const auto& run : runs) {
            const auto& c = run.condition;
            out << "\n## Condition " << c.id << ": " << to_string(run.derivative) << " + "
                << to_string(c.regression) << "\n\n" << describe(c) << "\n\n";
            if (!run.ok()) {
                out << "Failed: " << run.error << "\n";
                continue;
            }
            const auto& s = run.summary;
            const SimulationCondition table_default =
                c.id >= 1 && c.id <= 17 ? SimulationCondition::table(c.id) : c;
            const ReferenceRow* ref = nullptr;
            if (c.id >= 1 && c.id <= 17 && table_default.regression == c.regression)
                for (const auto& r : refs)
                    if (r.condition == c.id && r.derivative == run.derivative) ref = &r;
            out << "Smoothing " << smoothing_label(run.derivative, s.smoothing);
            if (ref && ref->smoothing)
                out << " (reference " << smoothing_label(run.derivative, *ref->smoothing) << ")";
            out << "; " << s.failures << " of " << s.replications << " replications failed.\n\n";
            out << "| parameter | bias | N10 | coverage | reference bias | reference N10 | reference coverage |\n"
                << "|---|---|---|---|---|---|---|\n";
            for (auto p : kParameters) {
                const auto& ps = s.get(p);
                if (!ps.available) continue;
                out << "| " << to_string(p) << " | " << num(ps.median, 3) << " [" << num(ps.lower, 3) << "; "
                    << num(ps.upper, 3) << "] | " << num(ps.n10, 3) << " | " << num(ps.coverage, 3) << " | ";
                if (ref && ref->get(p).bias) {
                    const auto& rs = ref->get(p);
                    out << num(*rs.bias, 3) << " [" << num(rs.lower.value_or(NAN), 3) << "; "
                        << num(rs.upper.value_or(NAN), 3) << "] | " << num(rs.n10.value_or(NAN), 3) << " | "
                        << num(rs.coverage.value_or(NAN), 3) << " |\n";
                } else {
                    out << " |  |  |\n";
                }
            }
            out << "\nMedian R2r " << num(s.median_r2_individual, 3) << ", R2g " << num(s.median_r2_fixed, 3);
            if (ref && ref->r2r)
                out << " (reference " << num(*ref->r2r, 3) << ", " << num(ref->r2g.value_or(NAN), 3) << ")";
            out << ".\n";
        }
        finish(out, path);
    }
    std::size_t failed = 0;
    for (const auto& run : runs) {
        if (!run.ok()) {
            ++failed;
            log << "condition " << run.condition.id << " (" << to_string(run.derivative)
                << ") failed: " << run.error << '\n';
        }
    }
    log << "wrote study outputs to " << out_dir.string() << '\n';
    if (failed == runs.size()) throw EstimationError("every condition of the study failed");
    return runs;
}

void cmd_report(const fs::path& study_dir, std::ostream& log) {
    const char* expected[] = {"config.json", "summary.csv", "replications.csv", "smoothing_traces.csv"};
    std::vector<std::string> missing;
    for (const char* name : expected)
        if (!fs::is_regular_file(study_dir / name)) missing.push_back(name);
    if (!missing.empty()) {
        std::string msg = "'" + study_dir.string() + "' is not a study directory; missing:";
        for (const auto& m : missing) msg += " " + m;
        throw IoError(msg + " (run the study command first)");
    }
    const auto config = RunConfig::load(study_dir / "config.json");
    const fs::path plots = study_dir / "plots";
    ensure_dir(plots);

    {
        // Traces are already long-format; copied so plots/ is self-contained.
        const auto src = study_dir / "smoothing_traces.csv";
        const auto dst = plots / "smoothing_traces.csv";
        std::error_code ec;
        fs::copy_file(src, dst, fs::copy_options::overwrite_existing, ec);
        if (ec) throw IoError("cannot copy '" + src.string() + "': " + ec.message());
    }

    const auto reps_path = study_dir / "replications.csv";
    const auto reps = read_table(reps_path);
    {
        const auto path = plots / "bias_distribution.csv";
        auto out = open_out(path);
        out << "condition,derivative,regression,parameter,replication,bias,bias_mode\n";
        const auto c_cond = reps.column("condition", reps_path), c_der = reps.column("derivative", reps_path),
                   c_reg = reps.column("regression", reps_path), c_rep = reps.column("replication", reps_path),
                   c_ok = reps.column("ok", reps_path);
        for (const auto& row : reps.rows) {
            if (row[c_ok] != "1") continue;
            for (auto p : kParameters) {
                const auto k = to_string(p);
                const auto est = opt_number(row[reps.column(k, reps_path)]);
                const auto truth = opt_number(row[reps.column(k + "_true", reps_path)]);
                if (!est || !truth) continue;
                const bool raw = *truth == 0.0;
                const double bias = raw ? *est : 100.0 * (*est - *truth) / *truth;
                out << row[c_cond] << ',' << row[c_der] << ',' << row[c_reg] << ',' << k << ',' << row[c_rep]
                    << ',' << num(bias, 8) << ',' << (raw ? "raw" : "relative_pct") << '\n';
            }
        }
        finish(out, path);
    }

    const auto summary_path = study_dir / "summary.csv";
    const auto summary = read_table(summary_path);
    {
        const auto path = plots / "example_trajectories.csv";
        auto out = open_out(path);
        out << "condition,derivative,regression,id,time,observed,noiseless,fitted_individual,fitted_fixed\n";
        const auto c_cond = summary.column("condition", summary_path),
                   c_der = summary.column("derivative", summary_path),
                   c_reg = summary.column("regression", summary_path),
                   c_smooth = summary.column("smoothing", summary_path);
        std::map<std::string, bool> done;
        for (const auto& row : summary.rows) {
            const auto key = row[c_cond] + '/' + row[c_der] + '/' + row[c_reg];
            const auto smoothing = opt_number(row[c_smooth]);
            if (done[key] || !smoothing) continue;
            done[key] = true;
            const int id = std::stoi(row[c_cond]);
            SimulationCondition cond =
                config.table_conditions.empty() ? config.condition : SimulationCondition::table(id);
            cond.regression = parse_regression_method(row[c_reg]);
            const auto kind = parse_derivative_kind(row[c_der]);
            const auto spec = kind == DerivativeKind::glla
                                  ? DerivativeSpec::glla(static_cast<int>(std::lround(*smoothing)))
                                  : DerivativeSpec::spline(*smoothing);
            // Replication 0 of the study, regenerated from its seed.
            const auto panel = generate_panel(cond, derive_seed({config.seed, static_cast<std::uint64_t>(cond.id), 0}));
            FitResult fit;
            try {
                fit = two_step_fit(panel, spec, cond.regression, cond.homogeneous);
            } catch (const EstimationError& e) {
                log << "skipping trajectories of " << key << ": " << e.what() << '\n';
                continue;
            }
            const std::size_t shown = std::min<std::size_t>(5, panel.individuals.size());
            for (std::size_t k = 0; k < shown; ++k) {
                const auto& ind = panel.individuals[k];
                const auto& ri = fit.individual_reconstruction[k].values;
                const auto& rf = fit.fixed_reconstruction[k].values;
                for (std::size_t i = 0; i < ind.size(); ++i)
                    out << row[c_cond] << ',' << row[c_der] << ',' << row[c_reg] << ',' << quoted(ind.id) << ','
                        << num(ind.times[i], 10) << ',' << num(ind.signal[i], 10) << ','
                        << num(ind.signal_true[i], 10) << ',' << (ri.empty() ? "" : num(ri[i], 10)) << ','
                        << (rf.empty() ? "" : num(rf[i], 10)) << '\n';
            }
        }
        finish(out, path);
    }
    log << "wrote plot data to " << plots.string() << '\n';
}

}  // namespace selfreg
