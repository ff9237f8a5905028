#include "selfreg/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "selfreg/errors.hpp"

namespace selfreg {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ValidationError(where + " must be a JSON object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
}

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(where + ": key '" + key + "' has the wrong type");
    }
}

void read_condition(const json& j, SimulationCondition& c) {
    const std::string where = "condition";
    reject_unknown(j, {"id", "decay_rate", "decay_time", "shape", "n_obs", "n_indiv", "equilibrium",
                       "stn", "regression", "homogeneous", "gain", "inter_indiv_sd_pct"},
                   where);
    if (j.contains("decay_rate") && j.contains("decay_time"))
        throw ValidationError("condition: give decay_rate or decay_time, not both");
    if (j.contains("id")) c.id = get_as<int>(j, "id", where);
    if (j.contains("decay_rate")) c.decay_rate = get_as<double>(j, "decay_rate", where);
    if (j.contains("decay_time")) {
        const double tau = get_as<double>(j, "decay_time", where);
        if (!(tau > 0.0)) throw ValidationError("condition: decay_time must be positive");
        c.decay_rate = 1.0 / tau;
    }
    if (j.contains("shape")) c.shape = ExcitationShape::parse(get_as<std::string>(j, "shape", where));
    if (j.contains("n_obs")) c.n_obs = get_as<int>(j, "n_obs", where);
    if (j.contains("n_indiv")) c.n_indiv = get_as<int>(j, "n_indiv", where);
    if (j.contains("equilibrium")) c.equilibrium = get_as<double>(j, "equilibrium", where);
    if (j.contains("stn")) c.stn = get_as<double>(j, "stn", where);
    if (j.contains("regression"))
        c.regression = parse_regression_method(get_as<std::string>(j, "regression", where));
    if (j.contains("homogeneous")) c.homogeneous = get_as<bool>(j, "homogeneous", where);
    if (j.contains("gain")) c.gain = get_as<double>(j, "gain", where);
    if (j.contains("inter_indiv_sd_pct"))
        c.inter_indiv_sd_pct = get_as<double>(j, "inter_indiv_sd_pct", where);
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(source + ": invalid JSON: " + e.what());
    }
    RunConfig cfg;
    try {
        reject_unknown(j, {"condition", "conditions", "derivatives", "regressions", "grid", "n_reps",
                           "seed", "selection_panels", "output_dir"},
                       source);
        if (j.contains("condition")) read_condition(j.at("condition"), cfg.condition);
        if (j.contains("conditions")) {
            const auto& c = j.at("conditions");
            if (c.is_string() && c.get<std::string>() == "all") {
                for (int id = 1; id <= 17; ++id) cfg.table_conditions.push_back(id);
            } else {
                cfg.table_conditions = get_as<std::vector<int>>(j, "conditions", source);
            }
        }
        if (j.contains("derivatives")) {
            cfg.derivatives.clear();
            for (const auto& s : get_as<std::vector<std::string>>(j, "derivatives", source))
                cfg.derivatives.push_back(parse_derivative_kind(s));
        }
        if (j.contains("regressions"))
            for (const auto& s : get_as<std::vector<std::string>>(j, "regressions", source))
                cfg.regressions.push_back(parse_regression_method(s));
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            reject_unknown(g, {"embeddings", "spars", "refine_spar"}, "grid");
            if (g.contains("embeddings")) cfg.grid.embeddings = get_as<std::vector<int>>(g, "embeddings", "grid");
            if (g.contains("spars")) cfg.grid.spars = get_as<std::vector<double>>(g, "spars", "grid");
            if (g.contains("refine_spar")) cfg.grid.refine_spar = get_as<bool>(g, "refine_spar", "grid");
        }
        if (j.contains("n_reps")) cfg.n_reps = get_as<int>(j, "n_reps", source);
        if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j, "seed", source);
        if (j.contains("selection_panels"))
            cfg.selection_panels = get_as<int>(j, "selection_panels", source);
        if (j.contains("output_dir")) cfg.output_dir = get_as<std::string>(j, "output_dir", source);
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(source, 0) == 0) throw;
        throw ValidationError(source + ": " + msg);
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

void RunConfig::validate() const {
    condition.validate();
    for (int id : table_conditions) SimulationCondition::table(id);
    if (derivatives.empty()) throw ValidationError("derivatives must not be empty");
    if (n_reps < 1) throw ValidationError("n_reps must be at least 1");
    if (selection_panels < 1) throw ValidationError("selection_panels must be at least 1");
    for (int d : grid.embeddings)
        if (d < 2) throw ValidationError("grid embeddings must be at least 2");
    for (double s : grid.spars)
        if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("grid spars must lie in [0, 1]");
    if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
}

std::vector<SimulationCondition> RunConfig::study_conditions() const {
    if (table_conditions.empty()) return {condition};
    std::vector<SimulationCondition> out;
    for (int id : table_conditions) out.push_back(SimulationCondition::table(id));
    return out;
}

StudyOptions RunConfig::study_options() const {
    StudyOptions o;
    o.n_reps = n_reps;
    o.base_seed = seed;
    o.selection_panels = selection_panels;
    o.grid = grid;
    return o;
}

std::string RunConfig::to_json() const {
    json c{{"id", condition.id},
           {"decay_rate", condition.decay_rate},
           {"shape", condition.shape.name()},
           {"n_obs", condition.n_obs},
           {"n_indiv", condition.n_indiv},
           {"equilibrium", condition.equilibrium},
           {"stn", condition.stn},
           {"regression", to_string(condition.regression)},
           {"homogeneous", condition.homogeneous},
           {"gain", condition.gain},
           {"inter_indiv_sd_pct", condition.inter_indiv_sd_pct}};
    json j{{"condition", c},
           {"n_reps", n_reps},
           {"seed", seed},
           {"selection_panels", selection_panels},
           {"output_dir", output_dir},
           {"grid", {{"embeddings", grid.embeddings}, {"spars", grid.spars}, {"refine_spar", grid.refine_spar}}}};
    if (!table_conditions.empty()) j["conditions"] = table_conditions;
    json d = json::array();
    for (auto k : derivatives) d.push_back(to_string(k));
    j["derivatives"] = d;
    if (!regressions.empty()) {
        json r = json::array();
        for (auto m : regressions) r.push_back(to_string(m));
        j["regressions"] = r;
    }
    return j.dump(2);
}

}  // namespace selfreg
