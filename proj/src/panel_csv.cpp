#include "selfreg/panel_csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "selfreg/errors.hpp"

namespace selfreg {

namespace {

constexpr std::array<const char*, 4> kRequired{"id", "time", "signal", "excitation"};
constexpr std::array<const char*, 4> kTruth{"signal_true", "tau_true", "k_true", "yeq_true"};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(const std::string& cell, const std::string& column, const std::string& where) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = first + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ValidationError(where + ": column '" + column + "' is not a finite number: '" + cell + "'");
    return v;
}

struct Pending {
    Individual ind;
    std::array<double, 3> truth{};  // tau, k, yeq
};

}  // namespace

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Panel parse_panel_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw ValidationError(source + ": empty file, expected a header line");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    const auto header = split(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t k = 0; k < header.size(); ++k) {
        const auto& name = header[k];
        const bool known = std::find(kRequired.begin(), kRequired.end(), name) != kRequired.end() ||
                           std::find(kTruth.begin(), kTruth.end(), name) != kTruth.end();
        if (!known)
            throw ValidationError(source + ":" + std::to_string(line_no) + ": unknown column '" +
                                  name + "'");
        if (!col.emplace(name, k).second)
            throw ValidationError(source + ":" + std::to_string(line_no) + ": duplicate column '" +
                                  name + "'");
    }
    for (const char* name : kRequired)
        if (!col.count(name))
            throw ValidationError(source + ": missing required column '" + std::string(name) + "'");
    std::size_t truth_cols = 0;
    for (const char* name : kTruth) truth_cols += col.count(name);
    if (truth_cols != 0 && truth_cols != kTruth.size())
        throw ValidationError(source + ": truth columns must be given all together (signal_true, "
                              "tau_true, k_true, yeq_true)");
    const bool with_truth = truth_cols == kTruth.size();

    std::vector<Pending> pending;
    std::map<std::string, std::size_t> index;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = source + ":" + std::to_string(line_no);
        const auto cells = split(line);
        if (cells.size() != header.size())
            throw ValidationError(where + ": expected " + std::to_string(header.size()) +
                                  " fields, found " + std::to_string(cells.size()));
        const auto& id = cells[col["id"]];
        if (id.empty()) throw ValidationError(where + ": empty id");
        auto [it, inserted] = index.emplace(id, pending.size());
        if (inserted) {
            pending.emplace_back();
            pending.back().ind.id = id;
        }
        auto& p = pending[it->second];
        auto& ind = p.ind;
        const double t = parse_number(cells[col["time"]], "time", where);
        if (!ind.times.empty() && !(t > ind.times.back()))
            throw ValidationError(where + ": time " + cells[col["time"]] +
                                  " is not after the previous time of id '" + id + "'");
        ind.times.push_back(t);
        ind.signal.push_back(parse_number(cells[col["signal"]], "signal", where));
        ind.excitation.push_back(parse_number(cells[col["excitation"]], "excitation", where));
        if (with_truth) {
            ind.signal_true.push_back(parse_number(cells[col["signal_true"]], "signal_true", where));
            const std::array<double, 3> truth{parse_number(cells[col["tau_true"]], "tau_true", where),
                                              parse_number(cells[col["k_true"]], "k_true", where),
                                              parse_number(cells[col["yeq_true"]], "yeq_true", where)};
            if (ind.times.size() == 1)
                p.truth = truth;
            else if (truth != p.truth)
                throw ValidationError(where + ": true parameters change within id '" + id + "'");
        }
    }

    Panel panel;
    for (auto& p : pending) {
        if (with_truth) {
            if (!(p.truth[0] > 0.0))
                throw ValidationError(source + ": tau_true of id '" + p.ind.id + "' must be positive");
            p.ind.truth = FirstOrderParams{1.0 / p.truth[0], p.truth[1], p.truth[2],
                                           p.ind.signal_true.front()};
        }
        panel.individuals.push_back(std::move(p.ind));
    }
    if (panel.individuals.empty()) throw ValidationError(source + ": no data rows");
    panel.validate();
    return panel;
}

Panel read_panel_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return parse_panel_csv(in, path.string());
}

void write_panel_csv(const Panel& panel, std::ostream& out) {
    panel.validate();
    const bool with_truth = panel.has_truth();
    out << "id,time,signal,excitation";
    if (with_truth) out << ",signal_true,tau_true,k_true,yeq_true";
    out << '\n';
    for (const auto& ind : panel.individuals) {
        if (ind.id.find_first_of(",\n\r\"") != std::string::npos)
            throw ValidationError("id '" + ind.id + "' contains a character not allowed in the CSV");
        for (std::size_t i = 0; i < ind.size(); ++i) {
            out << ind.id << ',' << format_number(ind.times[i]) << ',' << format_number(ind.signal[i])
                << ',' << format_number(ind.excitation[i]);
            if (with_truth)
                out << ',' << format_number(ind.signal_true[i]) << ','
                    << format_number(ind.truth->decay_time()) << ',' << format_number(ind.truth->gain)
                    << ',' << format_number(ind.truth->equilibrium);
            out << '\n';
        }
    }
}

void write_panel_csv(const Panel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    write_panel_csv(panel, out);
    out.flush();
    if (!out) throw IoError("failed while writing '" + path.string() + "'");
}

}  // namespace selfreg
