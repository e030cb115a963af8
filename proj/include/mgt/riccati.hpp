#pragma once

// Backward integration of the non-standard differential Riccati equation
//
//   d/dt (P y, w)_Y + (A y, P w)_Y + (P y, A w)_Y + (R y, R w)_Y
//       = (Bhat^* P y, Bhat^* P w)_U,        P(T) = 0,
//
// with Bhat^* = B0^* + B1^* A^* and all adjoints weighted by W / Wu. The
// integrator works with Pi = W P, which is symmetric whenever P is W-self-
// adjoint, so the equation becomes the plain matrix form
//
//   Pi' = -(Pi A + A^T Pi + Q - Pi S Pi),  Q = R^T W R,  S = Bhat Wu^{-1} Bhat^T.
//
// The quadratic term carries no [I + B1^* R^* R B1]^{-1} factor: R B1 = 0 holds
// exactly for this discretization, so that factor is the identity.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mgt/error.hpp"
#include "mgt/propagate.hpp"
#include "mgt/state_space.hpp"

namespace mgt {

struct RiccatiOptions {
    double dt = 0;               // 0: pick from rho(A) * dt <= rho_dt, even step count
    double rho_dt = 0.5;
    Index store_every = 0;       // 0: automatic (bounded snapshot memory)
    double symmetry_tol = 1e-8;  // W-symmetry drift that aborts the sweep
    double singular_threshold = 1e12;
};

struct RiccatiSolution {
    double horizon = 0;
    double dt = 0;             // integration step
    Index store_every = 1;     // snapshots every this many steps
    std::vector<double> times; // increasing; times.front() = 0, times.back() = horizon
    std::vector<Matrix> pi;     // W P(t), symmetric
    std::vector<Matrix> pi_dot; // d/dt (W P)(t)
    std::vector<Matrix> gains;  // Bhat^* P(t), n_control x n_state
    std::vector<double> G_cond;
    std::vector<double> G_min_sv;
    std::vector<double> residual_log;
    std::vector<double> symmetry_drift; // before re-symmetrisation, per stored time
    double max_symmetry_drift = 0;

    // Data needed to re-integrate between snapshots.
    Matrix A, Q, S;

    Index size() const { return static_cast<Index>(times.size()); }
};

namespace detail {

inline Matrix riccati_rhs(const Matrix& A, const Matrix& Q, const Matrix& S, const Matrix& Pi) {
    const Matrix PiA = Pi * A;
    const Matrix AtPi = A.transpose() * Pi;
    return -(PiA + AtPi + Q - Pi * S * Pi);
}

// One backward step of size dt (t -> t - dt) from Pi(t).
inline Matrix riccati_step_back(const Matrix& A, const Matrix& Q, const Matrix& S, const Matrix& Pi, double dt) {
    // In time-to-go s = T - t the equation reads dPi/ds = -rhs.
    const Matrix k1 = -riccati_rhs(A, Q, S, Pi);
    const Matrix k2 = -riccati_rhs(A, Q, S, Pi + 0.5 * dt * k1);
    const Matrix k3 = -riccati_rhs(A, Q, S, Pi + 0.5 * dt * k2);
    const Matrix k4 = -riccati_rhs(A, Q, S, Pi + dt * k3);
    return Pi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline double symmetry_defect(const Matrix& Pi) {
    const double scale = Pi.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (Pi - Pi.transpose()).cwiseAbs().maxCoeff() / scale;
}

inline Matrix hermite(const Matrix& p0, const Matrix& d0, const Matrix& p1, const Matrix& d1, double h, double s) {
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * p0 + (h10 * h) * d0 + h01 * p1 + (h11 * h) * d1;
}

} // namespace detail

// Bhat^* P as a map Y -> U, from the weighted form Pi = W P.
inline Matrix gain_from_pi(const StateSystem& sys, const Matrix& pi) {
    return sys.Wu_llt.solve(sys.Bhat.transpose() * pi);
}

// Gain of an operator P (not weighted): Bhat^* P = (B0^* + B1^* A^*) P.
inline Matrix gain(const StateSystem& sys, const Matrix& P) {
    require(P.rows() == sys.n_state && P.cols() == sys.n_state, "gain: P has the wrong shape");
    const Matrix bstar = adjoint(sys, sys.B0, Space::U, Space::Y) +
                         adjoint(sys, sys.B1, Space::U, Space::Y) * adjoint(sys, sys.A, Space::Y, Space::Y);
    return bstar * P;
}

struct GReport {
    Matrix G;
    double condition = 1;
    double min_singular = 1;
    bool near_singular = false;
};

// G(t) = I - Bhat^* P(t) B1 on U, with its 2-norm condition number.
inline GReport G_operator(const StateSystem& sys, const Matrix& gain_t, double singular_threshold = 1e12) {
    require(gain_t.rows() == sys.n_control && gain_t.cols() == sys.n_state, "G_operator: gain has the wrong shape");
    GReport rep;
    rep.G = Matrix::Identity(sys.n_control, sys.n_control) - gain_t * sys.B1;
    Eigen::JacobiSVD<Matrix> svd(rep.G);
    const auto& sv = svd.singularValues();
    rep.min_singular = sv(sv.size() - 1);
    rep.condition = rep.min_singular > 0 ? sv(0) / rep.min_singular : std::numeric_limits<double>::infinity();
    rep.near_singular = !(rep.condition < singular_threshold);
    return rep;
}

// Supremum over a W-orthonormal probe basis of the bilinear residual
//   (Pdot y, w) + (A y, P w) + (P y, A w) + (R y, R w) - (Bhat^* P y, Bhat^* P w)_U
// evaluated through the weighted adjoints (not through the Pi form used by
// the integrator).
inline double riccati_residual(const StateSystem& sys, const Matrix& P, const Matrix& Pdot) {
    require(P.rows() == sys.n_state && P.cols() == sys.n_state && Pdot.rows() == sys.n_state &&
                Pdot.cols() == sys.n_state,
            "riccati_residual: operator shapes do not match the state space");
    const Matrix& W = sys.W;
    const Matrix bstar_p = adjoint(sys, sys.Bhat, Space::U, Space::Y) * P;
    const Matrix E = W * Pdot + P.transpose() * W * sys.A + sys.A.transpose() * W * P +
                     sys.Robs.transpose() * W * sys.Robs - bstar_p.transpose() * sys.Wu * bstar_p;
    const auto L = sys.W_llt.matrixL();
    Matrix whitened = L.solve(E);
    whitened = L.solve(whitened.transpose()).transpose();
    return whitened.cwiseAbs().maxCoeff();
}

inline Matrix observation_weight(const StateSystem& sys) {
    Matrix Q = sys.Robs.transpose() * sys.W * sys.Robs;
    return 0.5 * (Q + Q.transpose());
}

inline Matrix input_weight(const StateSystem& sys) {
    Matrix S = sys.Bhat * sys.Wu_llt.solve(sys.Bhat.transpose());
    return 0.5 * (S + S.transpose());
}

inline RiccatiSolution solve_dre(const StateSystem& sys, double horizon, const RiccatiOptions& opt = {}) {
    require(std::isfinite(horizon) && horizon > 0, "solve_dre: horizon must be positive");
    double dt = opt.dt;
    if (dt <= 0) {
        // Even step count so the default closed loop (two Riccati steps per
        // loop step) tiles the horizon.
        const double steps_needed = std::ceil(horizon * spectral_radius(sys.A) / opt.rho_dt);
        const double steps_even = std::max(2.0, 2.0 * std::ceil(steps_needed / 2.0));
        dt = horizon / steps_even;
    }
    const auto grid = detail::uniform_grid(horizon, dt);
    const Index steps = grid.steps;

    RiccatiSolution sol;
    sol.horizon = horizon;
    sol.dt = grid.dt;
    sol.A = sys.A;
    sol.Q = observation_weight(sys);
    sol.S = input_weight(sys);

    Index stride = opt.store_every;
    if (stride <= 0) {
        const double per_snapshot = static_cast<double>(sys.n_state) * static_cast<double>(sys.n_state);
        const Index max_snapshots = std::max<Index>(16, static_cast<Index>(4.0e6 / per_snapshot));
        stride = std::max<Index>(1, (steps + max_snapshots - 1) / max_snapshots);
    }
    while (steps % stride != 0) --stride;
    sol.store_every = stride;

    const Index n_snap = steps / stride + 1;
    sol.times.resize(n_snap);
    sol.pi.resize(n_snap);
    sol.pi_dot.resize(n_snap);
    sol.symmetry_drift.assign(n_snap, 0.0);

    Matrix Pi = Matrix::Zero(sys.n_state, sys.n_state); // P(T) = 0
    double drift_since_store = 0;
    auto store = [&](Index snap, double t) {
        sol.times[snap] = t;
        sol.pi[snap] = Pi;
        sol.pi_dot[snap] = detail::riccati_rhs(sol.A, sol.Q, sol.S, Pi);
        sol.symmetry_drift[snap] = drift_since_store;
        drift_since_store = 0;
    };
    store(n_snap - 1, horizon);
    for (Index k = steps; k > 0; --k) {
        const double t_new = static_cast<double>(k - 1) * grid.dt;
        Pi = detail::riccati_step_back(sol.A, sol.Q, sol.S, Pi, grid.dt);
        if (!Pi.allFinite() || Pi.cwiseAbs().maxCoeff() > 1e150)
            throw NumericalError("Riccati sweep blew up at t = " + std::to_string(t_new) +
                                 " (spectral radius * dt = " + std::to_string(spectral_radius(sys.A) * grid.dt) + ")");
        const double drift = detail::symmetry_defect(Pi);
        if (drift > opt.symmetry_tol)
            throw NumericalError("Riccati sweep lost W-symmetry at t = " + std::to_string(t_new) + " (relative drift " +
                                 std::to_string(drift) + ")");
        drift_since_store = std::max(drift_since_store, drift);
        sol.max_symmetry_drift = std::max(sol.max_symmetry_drift, drift);
        Pi = (0.5 * (Pi + Pi.transpose())).eval(); // eval: the transpose aliases Pi
        if ((k - 1) % stride == 0) store((k - 1) / stride, t_new);
    }
    sol.times.front() = 0.0;

    sol.gains.resize(n_snap);
    sol.G_cond.resize(n_snap);
    sol.G_min_sv.resize(n_snap);
    sol.residual_log.resize(n_snap);
    for (Index s = 0; s < n_snap; ++s) {
        sol.gains[s] = gain_from_pi(sys, sol.pi[s]);
        const auto g = G_operator(sys, sol.gains[s], opt.singular_threshold);
        sol.G_cond[s] = g.condition;
        sol.G_min_sv[s] = g.min_singular;
        const Matrix P = sys.W_llt.solve(sol.pi[s]);
        const Matrix Pdot = sys.W_llt.solve(sol.pi_dot[s]);
        sol.residual_log[s] = riccati_residual(sys, P, Pdot);
    }
    return sol;
}

// P(t) itself (not weighted) at a stored snapshot.
inline Matrix riccati_operator(const StateSystem& sys, const RiccatiSolution& sol, Index snapshot) {
    return sys.W_llt.solve(sol.pi.at(snapshot));
}

// Pi on every integration step inside snapshot interval [times[k], times[k+1]],
// recomputed by re-running the backward sweep from the later snapshot.
// Returns stride + 1 matrices ordered by increasing time.
inline std::vector<Matrix> riccati_fine_segment(const RiccatiSolution& sol, Index k) {
    require(k >= 0 && k + 1 < sol.size(), "riccati_fine_segment: interval out of range");
    std::vector<Matrix> seg(sol.store_every + 1);
    seg.back() = sol.pi[k + 1];
    for (Index j = sol.store_every; j > 0; --j) {
        if (j - 1 == 0) {
            seg[0] = sol.pi[k];
            break;
        }
        Matrix next = detail::riccati_step_back(sol.A, sol.Q, sol.S, seg[j], sol.dt);
        seg[j - 1] = 0.5 * (next + next.transpose());
    }
    return seg;
}

// Pi(t) by cubic Hermite interpolation between snapshots.
inline Matrix pi_at(const RiccatiSolution& sol, double t) {
    require(t >= -1e-12 && t <= sol.horizon + 1e-12, "pi_at: time outside the Riccati horizon");
    const auto it = std::upper_bound(sol.times.begin(), sol.times.end(), t);
    Index k = std::clamp<Index>(static_cast<Index>(it - sol.times.begin()) - 1, 0, sol.size() - 2);
    const double h = sol.times[k + 1] - sol.times[k];
    const double s = std::clamp((t - sol.times[k]) / h, 0.0, 1.0);
    return detail::hermite(sol.pi[k], sol.pi_dot[k], sol.pi[k + 1], sol.pi_dot[k + 1], h, s);
}

// (P(t) alpha, alpha)_Y at a stored time.
inline double riccati_cost(const RiccatiSolution& sol, Index snapshot, const Vector& alpha) {
    return alpha.dot(sol.pi.at(snapshot) * alpha);
}

} // namespace mgt
