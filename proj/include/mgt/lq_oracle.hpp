#pragma once

// Brute-force open-loop solver for the parametrized tracking problem
//
//   minimize  J(g) = int_0^T ||u - u_d||^2_{L2} + ||g||^2_U dt
//   subject to  y = w + B1 g,  w' = A w + Bhat g,  w(0) = y0 - B1 g0,
//
// over piecewise-linear controls on a uniform knot grid. The control-to-
// observation map is assembled one column per hat function and the normal
// equations are solved directly. Also hosts the non-existence demonstration
// for the unparametrized problem.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mgt/error.hpp"
#include "mgt/propagate.hpp"
#include "mgt/state_space.hpp"

namespace mgt {

enum class Quadrature { trapezoid, simpson };

// Quadrature weights on a sample grid. Simpson needs a uniform grid with an
// even number of intervals and falls back to the trapezoid rule otherwise.
inline std::vector<double> quadrature_weights(const std::vector<double>& times, Quadrature rule) {
    const std::size_t n = times.size();
    require(n >= 2, "quadrature needs at least two samples");
    std::vector<double> w(n, 0.0);
    const std::size_t intervals = n - 1;
    bool uniform = true;
    const double h = (times.back() - times.front()) / static_cast<double>(intervals);
    for (std::size_t k = 0; k < intervals; ++k)
        uniform = uniform && std::abs((times[k + 1] - times[k]) - h) <= 1e-9 * h;
    if (rule == Quadrature::simpson && uniform && intervals % 2 == 0) {
        for (std::size_t k = 0; k < n; ++k) w[k] = (k == 0 || k == n - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        for (auto& x : w) x *= h / 3.0;
        return w;
    }
    for (std::size_t k = 0; k < intervals; ++k) {
        const double dk = times[k + 1] - times[k];
        w[k] += 0.5 * dk;
        w[k + 1] += 0.5 * dk;
    }
    return w;
}

// J over a sampled trajectory: quadrature of (u-u_d)^T M (u-u_d) + g^T Wu g.
// `target` holds u_d on the trajectory grid (n_nodes x n_times) or is empty.
inline double cost(const StateSystem& sys, const Trajectory& y, const ControlSignal& g, const Matrix& target = {},
                   Quadrature rule = Quadrature::trapezoid) {
    g.validate();
    require(y.states.rows() == sys.n_state, "cost: trajectory has the wrong state dimension");
    require(g.n_control() == sys.n_control, "cost: control has the wrong number of channels");
    if (y.times.empty() || std::abs(y.times.front() - g.times.front()) > 1e-12 ||
        std::abs(y.times.back() - g.horizon()) > 1e-9 * std::max(1.0, g.horizon()))
        throw InvalidArgument("cost: trajectory and control are defined on different time grids");
    if (target.size() != 0)
        require(target.rows() == sys.n_nodes && target.cols() == y.n_times(), "cost: target shape mismatch");
    const auto w = quadrature_weights(y.times, rule);
    double total = 0;
    for (Index k = 0; k < y.n_times(); ++k) {
        Vector u = y.states.col(k).head(sys.n_nodes);
        if (target.size() != 0) u -= target.col(k);
        const Vector gk = g.value(y.times[k], Side::left);
        total += w[k] * (u.dot(sys.M * u) + gk.dot(sys.Wu * gk));
    }
    return total;
}

struct LQProblem {
    Vector y0;
    Vector g0;          // parameter g0 (length n_control)
    double horizon = 1;
    Index nt = 16;      // number of control knots, uniform on [0, T]
    Matrix target;      // u_d on the knot grid (n_nodes x nt), empty for 0
    Index substeps = 0; // integration steps per knot interval; 0 = automatic
    double rho_dt = 0.25;

    void validate(const StateSystem& sys) const {
        require(y0.size() == sys.n_state, "LQProblem: y0 has the wrong length");
        require(g0.size() == sys.n_control, "LQProblem: g0 has the wrong length");
        require(std::isfinite(horizon) && horizon > 0, "LQProblem: horizon must be positive");
        require(nt >= 2, "LQProblem: nt must be at least 2");
        if (target.size() != 0)
            require(target.rows() == sys.n_nodes && target.cols() == nt, "LQProblem: target shape mismatch");
    }
};

struct OpenLoopSolution {
    ControlSignal g_opt;  // on the knot grid, anchored at g0
    double cost = 0;      // from the assembled quadratic
    double cost_check = 0; // recomputed by forward propagation of g_opt
    Trajectory trajectory; // mild_L2, on the integration grid
    double normal_residual = 0;
    double gradient_bound = 0; // 1e-8 (1 + ||r0||)
    double condition_estimate = 1;
    double min_normal_eigenvalue = 1; // of I + L^* L, >= 1 in exact arithmetic
    std::optional<std::string> warning;
    Index substeps = 0;
};

namespace detail {

inline std::vector<double> knot_times(double horizon, Index nt) {
    std::vector<double> t(nt);
    for (Index k = 0; k < nt; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(nt - 1);
    return t;
}

inline Index oracle_substeps(const StateSystem& sys, const LQProblem& p) {
    if (p.substeps > 0) return p.substeps + (p.substeps % 2);
    const double dk = p.horizon / static_cast<double>(p.nt - 1);
    const double rho = spectral_radius(sys.A);
    Index s = static_cast<Index>(std::ceil(dk * rho / p.rho_dt));
    s = std::max<Index>(s, 2);
    return s + (s % 2);
}

// Time-mass matrix of the hat basis, Kronecker Wu: the exact Gram matrix of
// piecewise-linear controls in L2(0,T;U).
inline Matrix control_gram(const StateSystem& sys, Index nt, double dk) {
    const Index nc = sys.n_control;
    Matrix G = Matrix::Zero(nt * nc, nt * nc);
    for (Index k = 0; k < nt; ++k) {
        const double diag = (k == 0 || k == nt - 1) ? dk / 3.0 : 2.0 * dk / 3.0;
        G.block(k * nc, k * nc, nc, nc) += diag * sys.Wu;
        if (k + 1 < nt) {
            G.block(k * nc, (k + 1) * nc, nc, nc) += (dk / 6.0) * sys.Wu;
            G.block((k + 1) * nc, k * nc, nc, nc) += (dk / 6.0) * sys.Wu;
        }
    }
    return G;
}

// Stacked u-blocks of y on the integration grid, (n_nodes * n_steps+1).
inline Vector observe_u(const StateSystem& sys, const Trajectory& y) {
    Vector out(sys.n_nodes * y.n_times());
    for (Index k = 0; k < y.n_times(); ++k) out.segment(k * sys.n_nodes, sys.n_nodes) = y.states.col(k).head(sys.n_nodes);
    return out;
}

} // namespace detail

inline OpenLoopSolution solve_open_loop(const StateSystem& sys, const LQProblem& p) {
    p.validate(sys);
    const Index nc = sys.n_control, n = sys.n_nodes, nt = p.nt;
    const double dk = p.horizon / static_cast<double>(nt - 1);
    const Index s = detail::oracle_substeps(sys, p);
    const double dt = dk / static_cast<double>(s);
    const auto knots = detail::knot_times(p.horizon, nt);

    OpenLoopSolution sol;
    sol.substeps = s;

    // Free response (g = 0) from alpha = y0 - B1 g0, minus the target.
    const Vector alpha = p.y0 - sys.B1 * p.g0;
    const ControlSignal zero = ControlSignal::sampled(knots, Matrix::Zero(nc, nt));
    Trajectory free_w = propagate_w(sys, alpha, zero, dt);
    Vector r0 = detail::observe_u(sys, reconstruct_state(sys, free_w, zero));
    const Index n_fine = free_w.n_times();
    if (p.target.size() != 0) {
        ControlSignal target_sig = ControlSignal::sampled(knots, p.target);
        for (Index k = 0; k < n_fine; ++k) r0.segment(k * n, n) -= target_sig.value(free_w.times[k]);
    }
    const auto qw = quadrature_weights(free_w.times, Quadrature::simpson);

    // Control-to-observation map, one propagation per hat basis function.
    const Index n_unknowns = nt * nc;
    Matrix L(n * n_fine, n_unknowns);
    for (Index j = 0; j < nt; ++j)
        for (Index c = 0; c < nc; ++c) {
            Matrix basis = Matrix::Zero(nc, nt);
            basis(c, j) = 1.0;
            ControlSignal phi = ControlSignal::sampled(knots, basis);
            const Trajectory w = propagate_w(sys, Vector::Zero(sys.n_state), phi, dt);
            L.col(j * nc + c) = detail::observe_u(sys, reconstruct_state(sys, w, phi));
        }

    // Weighted observation: Q L and Q r0 with Q = diag(q_k) (x) M.
    Matrix QL(L.rows(), L.cols());
    Vector Qr0(r0.size());
    for (Index k = 0; k < n_fine; ++k) {
        QL.middleRows(k * n, n) = qw[k] * (sys.M * L.middleRows(k * n, n));
        Qr0.segment(k * n, n) = qw[k] * (sys.M * r0.segment(k * n, n));
    }
    const Matrix Gu = detail::control_gram(sys, nt, dk);
    Matrix normal = Gu + L.transpose() * QL;
    normal = (0.5 * (normal + normal.transpose())).eval();
    const Vector rhs = -(L.transpose() * Qr0);

    Eigen::LLT<Matrix> llt(normal);
    if (llt.info() != Eigen::Success)
        throw NumericalError("open-loop normal operator is not positive definite; the minimizer is not unique");
    const Vector g = llt.solve(rhs);

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(normal, Gu, Eigen::EigenvaluesOnly);
    if (ges.info() == Eigen::Success) {
        const auto& ev = ges.eigenvalues();
        sol.min_normal_eigenvalue = ev.minCoeff();
        sol.condition_estimate = ev.maxCoeff() / ev.minCoeff();
        if (!(sol.condition_estimate < 1e12))
            sol.warning = "normal equations are ill-conditioned (condition estimate " +
                          std::to_string(sol.condition_estimate) + ")";
    }

    // Gradient of J in the L2(0,T;U) geometry and its norm.
    const Vector grad_coords = normal * g - rhs;
    const Vector grad = Gu.llt().solve(grad_coords);
    sol.normal_residual = std::sqrt(std::max(0.0, grad.dot(grad_coords)));
    const double r0_norm = std::sqrt(std::max(0.0, r0.dot(Qr0)));
    sol.gradient_bound = 1e-8 * (1.0 + r0_norm);
    sol.cost = g.dot(normal * g) - 2.0 * g.dot(rhs) + r0.dot(Qr0);

    Matrix gv(nc, nt);
    for (Index j = 0; j < nt; ++j) gv.col(j) = g.segment(j * nc, nc);
    sol.g_opt = ControlSignal::sampled(knots, gv);
    sol.g_opt.g0_anchor = p.g0;

    sol.trajectory = propagate_L2_control(sys, p.y0, sol.g_opt, dt);
    Matrix target_fine;
    if (p.target.size() != 0) {
        ControlSignal target_sig = ControlSignal::sampled(knots, p.target);
        target_fine.resize(n, sol.trajectory.n_times());
        for (Index k = 0; k < sol.trajectory.n_times(); ++k) target_fine.col(k) = target_sig.value(sol.trajectory.times[k]);
    }
    sol.cost_check = cost(sys, sol.trajectory, sol.g_opt, target_fine, Quadrature::simpson);
    return sol;
}

// J for an explicit control in the parametrized problem, on the oracle grid.
inline double open_loop_cost(const StateSystem& sys, const LQProblem& p, const ControlSignal& g) {
    p.validate(sys);
    const double dk = p.horizon / static_cast<double>(p.nt - 1);
    const double dt = dk / static_cast<double>(detail::oracle_substeps(sys, p));
    ControlSignal anchored = g;
    anchored.g0_anchor = p.g0;
    const Trajectory y = propagate_L2_control(sys, p.y0, anchored, dt);
    Matrix target_fine;
    if (p.target.size() != 0) {
        ControlSignal target_sig = ControlSignal::sampled(detail::knot_times(p.horizon, p.nt), p.target);
        target_fine.resize(sys.n_nodes, y.n_times());
        for (Index k = 0; k < y.n_times(); ++k) target_fine.col(k) = target_sig.value(y.times[k]);
    }
    return cost(sys, y, anchored, target_fine, Quadrature::simpson);
}

struct NonexistenceResult {
    std::vector<Index> n;
    std::vector<double> costs; // J(g_n)
    double cost_zero = 0;      // J(0) from the same initial state
    double infimum() const { return costs.empty() ? cost_zero : *std::min_element(costs.begin(), costs.end()); }
};

// With y0 = B1 v, the controls g_n(t) = v max(0, 1 - n t / T) satisfy
// g_n(0) = v and ||g_n||_{L2} -> 0 while J(g_n) -> 0 < J(0): the infimum of
// the unparametrized problem is not attained.
inline NonexistenceResult nonexistence_demo(const StateSystem& sys, const Vector& v, Index n_max, double horizon = 2.0,
                                            Index nt = 256, Index substeps = 0) {
    require(v.size() == sys.n_control, "nonexistence_demo: v has the wrong length");
    require(n_max >= 1, "nonexistence_demo: n_max must be positive");
    require(nt >= 2, "nonexistence_demo: nt must be at least 2");
    LQProblem p;
    p.y0 = sys.B1 * v;
    p.g0 = v;
    p.horizon = horizon;
    p.nt = nt;
    p.substeps = substeps;
    const auto knots = detail::knot_times(horizon, nt);

    NonexistenceResult res;
    {
        LQProblem p0 = p;
        p0.g0 = Vector::Zero(sys.n_control);
        res.cost_zero = open_loop_cost(sys, p0, ControlSignal::sampled(knots, Matrix::Zero(sys.n_control, nt)));
    }
    for (Index m = 1; m <= n_max; ++m) {
        Matrix values(sys.n_control, nt);
        for (Index k = 0; k < nt; ++k)
            values.col(k) = v * std::max(0.0, 1.0 - static_cast<double>(m) * knots[k] / horizon);
        res.n.push_back(m);
        res.costs.push_back(open_loop_cost(sys, p, ControlSignal::sampled(knots, values)));
    }
    return res;
}

} // namespace mgt
