#pragma once

// Plain-text artifacts.
//
// Triplet format:
//   # <name>
//   <rows> <cols> <nnz>
//   <row> <col> <value>      (0-based, row-major order, one per line)
//
// Numbers are printed with std::to_chars (shortest round-trip form), so
// identical data always produces identical bytes.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mgt/error.hpp"
#include "mgt/feedback.hpp"
#include "mgt/propagate.hpp"
#include "mgt/riccati.hpp"

namespace mgt::io {

inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

inline std::string fmt(Index i) { return std::to_string(i); }

inline void write_triplets(std::ostream& os, const Matrix& m, const std::string& name, double drop = 0.0) {
    Index nnz = 0;
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) nnz += std::abs(m(i, j)) > drop;
    os << "# " << name << '\n' << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            if (std::abs(m(i, j)) > drop) os << i << ' ' << j << ' ' << fmt(m(i, j)) << '\n';
}

inline Matrix read_triplets(std::istream& is, std::string* name = nullptr) {
    std::string line;
    while (std::getline(is, line) && (line.empty() || line[0] == '#'))
        if (name && line.size() > 2) *name = line.substr(2);
    std::istringstream header(line);
    Index rows = -1, cols = -1, nnz = -1;
    if (!(header >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
        throw InvalidArgument("triplet file: malformed header '" + line + "'");
    Matrix m = Matrix::Zero(rows, cols);
    for (Index k = 0; k < nnz; ++k) {
        Index i, j;
        std::string v;
        if (!(is >> i >> j >> v)) throw InvalidArgument("triplet file: expected " + std::to_string(nnz) + " entries");
        if (i < 0 || i >= rows || j < 0 || j >= cols) throw InvalidArgument("triplet file: index out of range");
        double x = 0;
        const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
        if (r.ec != std::errc()) throw InvalidArgument("triplet file: bad value '" + v + "'");
        m(i, j) = x;
    }
    return m;
}

inline void write_triplets_file(const std::string& path, const Matrix& m, const std::string& name) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    write_triplets(os, m, name);
}

inline Matrix read_triplets_file(const std::string& path, std::string* name = nullptr) {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    return read_triplets(is, name);
}

// Column-oriented CSV table.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    void add(std::string name, std::vector<double> values) {
        if (!columns.empty() && values.size() != columns.front().size())
            throw InvalidArgument("table column '" + name + "' has the wrong length");
        header.push_back(std::move(name));
        columns.push_back(std::move(values));
    }
    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << t.header[c];
    os << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << fmt(t.columns[c][r]);
        os << '\n';
    }
}

inline void write_csv_file(const std::string& path, const Table& t) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    write_csv(os, t);
}

inline Table trajectory_table(const Trajectory& tr, Index n_nodes) {
    Table t;
    t.add("time", tr.times);
    const char* blocks[] = {"u", "ut", "utt"};
    for (int b = 0; b < 3; ++b)
        for (Index i = 0; i < n_nodes; ++i) {
            std::vector<double> col(tr.n_times());
            for (Index k = 0; k < tr.n_times(); ++k) col[k] = tr.states(b * n_nodes + i, k);
            t.add(std::string(blocks[b]) + "_" + std::to_string(i), std::move(col));
        }
    return t;
}

inline Table control_table(const ControlSignal& g) {
    Table t;
    t.add("time", g.times);
    for (Index c = 0; c < g.n_control(); ++c) {
        std::vector<double> col(g.n_times());
        for (Index k = 0; k < g.n_times(); ++k) col[k] = g.values(c, k);
        t.add("g_" + std::to_string(c), std::move(col));
    }
    if (g.derivative)
        for (Index c = 0; c < g.n_control(); ++c) {
            std::vector<double> col(g.n_times());
            for (Index k = 0; k < g.n_times(); ++k) col[k] = (*g.derivative)(c, k);
            t.add("gt_" + std::to_string(c), std::move(col));
        }
    return t;
}

// Compact Riccati log: time, ||Pi||_F, ||F||_F, G condition, min singular value, residual.
inline Table riccati_log_table(const RiccatiSolution& sol) {
    Table t;
    std::vector<double> pn, gn;
    for (Index k = 0; k < sol.size(); ++k) {
        pn.push_back(sol.pi[k].norm());
        gn.push_back(sol.gains[k].norm());
    }
    t.add("time", sol.times);
    t.add("P_norm", pn);
    t.add("gain_norm", gn);
    t.add("G_cond", sol.G_cond);
    t.add("G_min_sv", sol.G_min_sv);
    t.add("residual", sol.residual_log);
    return t;
}

inline Table closed_loop_table(const StateSystem& sys, const ClosedLoopRun& run) {
    Table t;
    t.add("time", run.trajectory.times);
    t.add("cost_cumulative", run.cost_cumulative);
    std::vector<double> gn;
    for (Index k = 0; k < run.control.n_times(); ++k) gn.push_back(u_norm(sys, run.control.values.col(k)));
    t.add("ghat_norm", gn);
    t.add("consistency_gap", run.consistency_series);
    t.add("G_cond", run.G_condition);
    return t;
}

// Long format (series, time, value) for plotting tools.
struct LongRow {
    std::string series;
    double time;
    double value;
};

inline void write_long_csv(std::ostream& os, const std::vector<LongRow>& rows) {
    os << "series,time,value\n";
    for (const auto& r : rows) os << r.series << ',' << fmt(r.time) << ',' << fmt(r.value) << '\n';
}

} // namespace mgt::io
