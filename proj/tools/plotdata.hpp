#pragma once

// Long-format (series, time, value) CSVs derived from a finished run.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scenario_runner.hpp"

namespace mgt::cli {

struct MissingArtifacts : Error {
    using Error::Error;
};

inline io::Table read_csv(const std::filesystem::path& p) {
    std::ifstream is(p);
    if (!is) throw Error("cannot read " + p.string());
    io::Table t;
    std::string line;
    if (!std::getline(is, line)) throw Error(p.string() + " is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            t.header.push_back(cell);
            t.columns.emplace_back();
        }
    }
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',') && c < t.columns.size()) {
            double x = 0;
            if (cell == "nan") x = std::numeric_limits<double>::quiet_NaN();
            else if (cell == "inf") x = std::numeric_limits<double>::infinity();
            else if (cell == "-inf") x = -std::numeric_limits<double>::infinity();
            else if (std::from_chars(cell.data(), cell.data() + cell.size(), x).ec != std::errc())
                throw Error(p.string() + ": bad number '" + cell + "'");
            t.columns[c++].push_back(x);
        }
        if (c != t.columns.size()) throw Error(p.string() + ": ragged row");
    }
    return t;
}

inline const std::vector<double>& column(const io::Table& t, const std::string& name, const std::string& file) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return t.columns[i];
    throw Error(file + " has no column '" + name + "'");
}

// Expected inputs per kind, and the series pulled from each.
struct PlotSource {
    std::string file;
    std::string x;
    std::vector<std::string> series;
};

inline std::vector<PlotSource> plot_sources(const std::string& kind) {
    if (kind == "free") return {{"energy.csv", "time", {"energy", "decaying_energy"}}};
    if (kind == "closed_loop" || kind == "match_g0")
        return {{"closed_loop.csv", "time", {"cost_cumulative", "ghat_norm", "consistency_gap"}}};
    if (kind == "dre" || kind == "optimize_g0")
        return {{"riccati_log.csv", "time", {"P_norm", "gain_norm", "G_cond", "residual"}}};
    if (kind == "oracle") return {{"riccati_log.csv", "time", {"P_norm", "gain_norm", "G_cond", "residual"}}};
    if (kind == "nonexistence") return {{"nonexistence.csv", "n", {"cost", "cost_zero"}}};
    if (kind == "spectrum") return {{"eigenvalues.csv", "re", {"im"}}};
    if (kind == "smooth_control" || kind == "L2_control") return {{"control.csv", "time", {"g_0"}}};
    if (kind == "full_validation") return {{"validation.csv", "criterion", {"passed", "measured", "threshold"}}};
    return {};
}

// Writes plot_<stem>.csv next to the run artifacts and records them in the
// manifest. Returns the written file names.
inline std::vector<std::string> emit_plotdata(const std::filesystem::path& dir) {
    const auto report_path = dir / "report.json";
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(report_path) || !std::filesystem::exists(manifest_path))
        throw MissingArtifacts("run directory " + dir.string() + " is incomplete; expected report.json and manifest.json");
    const json report = json::parse(slurp(report_path));
    const std::string kind = report.at("kind").get<std::string>();
    const auto sources = plot_sources(kind);

    std::vector<std::string> missing;
    for (const auto& s : sources)
        if (!std::filesystem::exists(dir / s.file)) missing.push_back(s.file);
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw MissingArtifacts("run directory " + dir.string() + " is missing expected files: " + list);
    }

    std::vector<std::string> written;
    for (const auto& s : sources) {
        const auto t = read_csv(dir / s.file);
        const auto& x = column(t, s.x, s.file);
        std::vector<io::LongRow> rows;
        for (const auto& name : s.series) {
            const auto& y = column(t, name, s.file);
            for (std::size_t k = 0; k < x.size(); ++k) rows.push_back({name, x[k], y[k]});
        }
        const std::string out = "plot_" + std::filesystem::path(s.file).stem().string() + ".csv";
        std::ofstream os(dir / out, std::ios::binary);
        io::write_long_csv(os, rows);
        written.push_back(out);
    }

    // Cost comparison rows from the report, where the run has them.
    const auto& res = report.at("results");
    std::vector<io::LongRow> costs;
    for (const char* key : {"cost", "riccati_cost", "closed_loop_cost", "cost_recomputed"})
        if (res.contains(key) && res.at(key).is_number()) costs.push_back({key, 0.0, res.at(key).get<double>()});
    if (!costs.empty()) {
        std::ofstream os(dir / "plot_costs.csv", std::ios::binary);
        io::write_long_csv(os, costs);
        written.push_back("plot_costs.csv");
    }

    json manifest = json::parse(slurp(manifest_path));
    auto& files = manifest["files"];
    for (const auto& w : written) {
        const std::string bytes = slurp(dir / w);
        json entry = {{"name", w}, {"bytes", bytes.size()}, {"sha256", sha256_hex(bytes)}};
        bool replaced = false;
        for (auto& f : files)
            if (f.at("name") == w) {
                f = entry;
                replaced = true;
            }
        if (!replaced) files.push_back(entry);
    }
    std::ofstream os(manifest_path, std::ios::binary);
    os << manifest.dump(2) << '\n';
    return written;
}

} // namespace mgt::cli
