#pragma once

// Closed-loop synthesis from a Riccati solution, the g0 matching condition
// and optimization of the parameter g0 over a ball in U.
//
// The loop is integrated in w = y - B1 g:
//   w' = A w + Bhat g,   g(t) = -F(t) w(t),   F(t) = Bhat^* P(t),
// and y is recovered algebraically. The implicit form
//   g(t) = -G(t)^{-1} F(t) y(t),   G(t) = I - F(t) B1,
// is evaluated alongside as a consistency check.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mgt/error.hpp"
#include "mgt/lq_oracle.hpp"
#include "mgt/propagate.hpp"
#include "mgt/riccati.hpp"
#include "mgt/state_space.hpp"

namespace mgt {

struct ClosedLoopRun {
    Trajectory trajectory;   // y, tag closed_loop
    ControlSignal control;   // synthesized g on the loop grid, time measured from t_start
    Trajectory w_trajectory; // w = y - B1 g
    std::vector<double> cost_cumulative;
    std::vector<double> consistency_series;
    std::vector<double> G_condition;
    double cost = 0;
    double consistency_gap = 0;
    double max_control_norm = 0;
    double max_control_jump = 0;
    double consistency_tol = 1e-6;
    Vector alpha;
    Vector g0;
    double t_start = 0;

    bool consistent() const { return consistency_gap <= consistency_tol * std::max(max_control_norm, 1e-300); }
};

namespace detail {

// Pi on the global Riccati integration grid, re-integrated one snapshot
// interval at a time. Access is expected to be roughly monotone.
class PiCursor {
public:
    explicit PiCursor(const RiccatiSolution& sol) : sol_(sol) {}

    Index steps() const { return (sol_.size() - 1) * sol_.store_every; }

    const Matrix& at(Index i) {
        require(i >= 0 && i <= steps(), "Riccati grid index out of range");
        const Index stride = sol_.store_every;
        const Index k = std::min<Index>(i / stride, sol_.size() - 2);
        if (k != cached_) {
            segment_ = riccati_fine_segment(sol_, k);
            cached_ = k;
        }
        return segment_[static_cast<std::size_t>(i - k * stride)];
    }

private:
    const RiccatiSolution& sol_;
    std::vector<Matrix> segment_;
    Index cached_ = -1;
};

inline Index loop_ratio(const RiccatiSolution& ric, double dt) {
    if (dt <= 0) return 2;
    const double ratio = dt / ric.dt;
    const Index m = static_cast<Index>(std::llround(ratio));
    if (m < 2 || m % 2 != 0 || std::abs(ratio - static_cast<double>(m)) > 1e-9 * ratio)
        throw InvalidArgument("closed_loop: dt must be an even multiple of the Riccati step " + std::to_string(ric.dt));
    return m;
}

} // namespace detail

// Runs the loop from w(t_start) = w_start. t_start must lie on the loop grid.
inline ClosedLoopRun closed_loop_from(const StateSystem& sys, const RiccatiSolution& ric, double t_start,
                                      const Vector& w_start, double dt = 0, double consistency_tol = 1e-6) {
    require(w_start.size() == sys.n_state, "closed_loop: state has the wrong length");
    require(ric.size() >= 2, "closed_loop: Riccati solution has no intervals");
    require(ric.pi.front().rows() == sys.n_state, "closed_loop: Riccati solution belongs to another system");
    const Index m = detail::loop_ratio(ric, dt);
    detail::PiCursor cursor(ric);
    const Index total = cursor.steps();
    const double h = static_cast<double>(m) * ric.dt;
    const Index first = static_cast<Index>(std::llround(t_start / ric.dt));
    if (first < 0 || first % m != 0 || std::abs(static_cast<double>(first) * ric.dt - t_start) > 1e-9 * std::max(1.0, t_start))
        throw InvalidArgument("closed_loop: start time is not on the loop grid");
    if (total % m != 0)
        throw InvalidArgument("closed_loop: Riccati horizon is not a whole number of loop steps");
    const Index steps = (total - first) / m;

    const Index nc = sys.n_control;
    auto gain_at = [&](Index i) { return gain_from_pi(sys, cursor.at(i)); };

    ClosedLoopRun run;
    run.consistency_tol = consistency_tol;
    run.trajectory.formulation = Formulation::closed_loop;
    run.w_trajectory.formulation = Formulation::closed_loop;
    std::vector<double> times(steps + 1);
    Matrix ws(sys.n_state, steps + 1), ys(sys.n_state, steps + 1), gs(nc, steps + 1);
    run.G_condition.resize(steps + 1);
    run.consistency_series.resize(steps + 1);

    Vector w = w_start;
    Matrix F = gain_at(first);
    for (Index s = 0; s <= steps; ++s) {
        const Index i = first + s * m;
        const double t = static_cast<double>(i) * ric.dt;
        times[s] = t;
        const Vector g_direct = -F * w;
        const Vector y = w + sys.B1 * g_direct;
        const GReport G = G_operator(sys, F);
        if (G.near_singular)
            throw NumericalError("closed_loop: G(t) is near-singular at t = " + std::to_string(t) + " (condition " +
                                 std::to_string(G.condition) + ")");
        const Vector g_implicit = -G.G.fullPivLu().solve(F * y);
        run.G_condition[s] = G.condition;
        run.consistency_series[s] = u_norm(sys, g_implicit - g_direct);
        ws.col(s) = w;
        ys.col(s) = y;
        gs.col(s) = g_direct;
        if (!w.allFinite()) throw NumericalError("closed_loop: state is not finite at t = " + std::to_string(t));
        if (s == steps) break;

        const Matrix F_mid = gain_at(i + m / 2);
        const Matrix F_end = gain_at(i + m);
        auto rhs = [&](const Matrix& Ft, const Vector& x) -> Vector { return sys.A * x - sys.Bhat * (Ft * x); };
        const Vector k1 = rhs(F, w);
        const Vector k2 = rhs(F_mid, w + 0.5 * h * k1);
        const Vector k3 = rhs(F_mid, w + 0.5 * h * k2);
        const Vector k4 = rhs(F_end, w + h * k3);
        w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        F = F_end;
    }

    run.trajectory.times = times;
    run.trajectory.states = ys;
    run.w_trajectory.times = times;
    run.w_trajectory.states = ws;
    std::vector<double> local(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) local[k] = times[k] - times.front();
    run.control = ControlSignal::sampled(std::move(local), gs);
    run.t_start = times.front();

    const auto qw = quadrature_weights(times, Quadrature::simpson);
    run.cost_cumulative.assign(steps + 1, 0.0);
    std::vector<double> density(steps + 1);
    for (Index s = 0; s <= steps; ++s) {
        const Vector u = ys.col(s).head(sys.n_nodes);
        const Vector g = gs.col(s);
        density[s] = u.dot(sys.M * u) + g.dot(sys.Wu * g);
        run.cost += qw[s] * density[s];
        run.max_control_norm = std::max(run.max_control_norm, u_norm(sys, g));
        run.consistency_gap = std::max(run.consistency_gap, run.consistency_series[s]);
        if (s > 0) {
            run.cost_cumulative[s] = run.cost_cumulative[s - 1] + 0.5 * (times[s] - times[s - 1]) * (density[s] + density[s - 1]);
            run.max_control_jump = std::max(run.max_control_jump, u_norm(sys, Vector(gs.col(s) - gs.col(s - 1))));
        }
    }
    run.alpha = w_start;
    run.g0 = gs.col(0);
    return run;
}

// Closed loop of the parametrized problem launched from (y0, g0):
// alpha = y0 - B1 g0 is the initial w.
inline ClosedLoopRun closed_loop(const StateSystem& sys, const RiccatiSolution& ric, const Vector& y0, const Vector& g0,
                                 double dt = 0, double consistency_tol = 1e-6) {
    require(y0.size() == sys.n_state, "closed_loop: y0 has the wrong length");
    require(g0.size() == sys.n_control, "closed_loop: g0 has the wrong length");
    ClosedLoopRun run = closed_loop_from(sys, ric, 0.0, y0 - sys.B1 * g0, dt, consistency_tol);
    run.g0 = g0;
    return run;
}

struct MatchResult {
    Vector g0;
    double residual = 0;            // |g(0) - g0| in the Wu-norm for the chosen convention
    double alternative_residual = 0; // same check for (I - F B1) g0 = +F y0
    std::string convention;
    double G_condition = 1;
};

// Chooses g0 so that the synthesized control starts at g0. With
// g(0) = -F(0) (y0 - B1 g0) the requirement g(0) = g0 reads
// (I - F B1) g0 = -F y0. The opposite sign is evaluated too and the
// convention that passes the check is reported.
inline MatchResult match_g0(const StateSystem& sys, const RiccatiSolution& ric, const Vector& y0) {
    require(y0.size() == sys.n_state, "match_g0: y0 has the wrong length");
    const Matrix& F = ric.gains.front();
    const GReport G = G_operator(sys, F);
    if (G.near_singular || !(G.min_singular > 0))
        throw NumericalError("match_g0: I - F B1 is singular at t = 0 (condition " + std::to_string(G.condition) + ")");
    const auto lu = G.G.fullPivLu();
    auto check = [&](const Vector& g0) { return u_norm(sys, Vector(-F * (y0 - sys.B1 * g0) - g0)); };

    const Vector minus = lu.solve(Vector(-F * y0));
    const Vector plus = lu.solve(Vector(F * y0));
    const double r_minus = check(minus), r_plus = check(plus);
    MatchResult res;
    res.G_condition = G.condition;
    if (r_minus <= r_plus) {
        res.g0 = minus;
        res.residual = r_minus;
        res.alternative_residual = r_plus;
        res.convention = "(I - F B1) g0 = -F y0";
    } else {
        res.g0 = plus;
        res.residual = r_plus;
        res.alternative_residual = r_minus;
        res.convention = "(I - F B1) g0 = +F y0";
    }
    return res;
}

enum class G0Class { interior_stationary, boundary };

inline std::string to_string(G0Class c) { return c == G0Class::interior_stationary ? "interior_stationary" : "boundary"; }

struct G0Optimum {
    Vector g_star;
    G0Class classification = G0Class::interior_stationary;
    double value = 0;                 // (P(0) alpha, alpha)_Y at g_star
    double stationarity_residual = 0; // ||B1^* P(0) (y0 - B1 g_star)||_Wu
    double radius = 0;
    double norm = 0;                  // ||g_star||_Wu
    double unconstrained_norm = 0;    // minimum-norm unconstrained minimizer
};

// Minimizes phi(g) = (Pi (y0 - B1 g), y0 - B1 g) over ||g||_Wu <= radius.
// In Wu-orthonormal eigencoordinates of the Hessian B1^T Pi B1 the problem
// is diagonal; the boundary case is a scalar secular equation.
inline G0Optimum optimize_g0(const StateSystem& sys, const RiccatiSolution& ric, const Vector& y0, double radius) {
    require(y0.size() == sys.n_state, "optimize_g0: y0 has the wrong length");
    require(std::isfinite(radius) && radius > 0, "optimize_g0: radius must be positive");
    const Matrix& Pi = ric.pi.front();
    Matrix H = sys.B1.transpose() * Pi * sys.B1;
    H = (0.5 * (H + H.transpose())).eval();
    const Vector b = sys.B1.transpose() * (Pi * y0);

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(H, sys.Wu);
    if (ges.info() != Eigen::Success) throw NumericalError("optimize_g0: eigen decomposition failed");
    const Vector lambda = ges.eigenvalues();
    const Matrix V = ges.eigenvectors(); // V^T Wu V = I
    const Vector beta = V.transpose() * b;
    const double lmax = std::max(lambda.cwiseAbs().maxCoeff(), 1e-300);
    const double floor = 1e-13 * lmax;

    auto coords = [&](double mu) {
        Vector c = Vector::Zero(lambda.size());
        for (Index i = 0; i < lambda.size(); ++i) {
            const double d = std::max(lambda(i), 0.0) + mu;
            if (d > floor) c(i) = beta(i) / d;
        }
        return c;
    };

    G0Optimum out;
    out.radius = radius;
    Vector c = coords(0.0);
    out.unconstrained_norm = c.norm();
    if (out.unconstrained_norm <= radius) {
        out.classification = G0Class::interior_stationary;
    } else {
        double lo = 0, hi = lmax;
        while (coords(hi).norm() > radius) hi *= 2;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (coords(mid).norm() > radius ? lo : hi) = mid;
        }
        c = coords(hi);
        c *= radius / c.norm(); // land exactly on the sphere
        out.classification = G0Class::boundary;
    }
    out.g_star = V * c;
    const Vector alpha = y0 - sys.B1 * out.g_star;
    out.value = alpha.dot(Pi * alpha);
    out.norm = u_norm(sys, out.g_star);
    out.stationarity_residual = u_norm(sys, Vector(sys.Wu_llt.solve(sys.B1.transpose() * (Pi * alpha))));
    return out;
}

} // namespace mgt
