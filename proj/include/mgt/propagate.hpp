#pragma once

// Time integration of the free and controlled dynamics.
//
// Two controlled formulations are provided:
//   * smooth: y' = A y + B0 g + B1 g_t (needs the derivative channel)
//   * L2:     w' = A w + Bhat g,  w(0) = y0 - B1 g(0),  y = w + B1 g
// They agree for differentiable controls; the second never touches g_t.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mgt/error.hpp"
#include "mgt/state_space.hpp"

namespace mgt {

// Which side of a time instant a sample is taken from. Matters only at knots
// of discontinuous (step) signals; samples are left-continuous by default.
enum class Side { left, right };

enum class Interpolation {
    linear, // piecewise linear between samples
    step,   // piecewise constant, value on (t_k, t_{k+1}] is values[k+1]
};

struct ControlSignal {
    std::vector<double> times;      // strictly increasing, times[0] = 0
    Matrix values;                  // n_control x n_times
    std::optional<Matrix> derivative; // same shape; when present values are cubic Hermite
    std::optional<Vector> g0_anchor;  // parameter g0 of the anchored formulation
    Interpolation interpolation = Interpolation::linear;

    Index n_control() const { return values.rows(); }
    Index n_times() const { return values.cols(); }
    double horizon() const { return times.back(); }

    void validate() const {
        require(times.size() >= 2, "control signal needs at least two samples");
        require(static_cast<Index>(times.size()) == values.cols(), "control signal: times and values disagree");
        require(std::abs(times.front()) <= 1e-14, "control signal must start at t = 0");
        for (std::size_t k = 1; k < times.size(); ++k)
            require(times[k] > times[k - 1], "control signal times must be strictly increasing");
        if (derivative)
            require(derivative->rows() == values.rows() && derivative->cols() == values.cols(),
                    "control derivative channel must match the value samples");
        if (g0_anchor) require(g0_anchor->size() == values.rows(), "g0 anchor has the wrong length");
        require(values.allFinite(), "control values must be finite");
    }

    Vector anchor() const { return g0_anchor ? *g0_anchor : Vector(values.col(0)); }

    // Interval index k with t in [times[k], times[k+1]], resolved by side at knots.
    Index interval(double t, Side side) const {
        const auto n = static_cast<Index>(times.size());
        if (t <= times.front()) return 0;
        if (t >= times.back()) return n - 2;
        auto it = side == Side::right ? std::upper_bound(times.begin(), times.end(), t)
                                      : std::lower_bound(times.begin(), times.end(), t);
        Index k = static_cast<Index>(it - times.begin()) - 1;
        return std::clamp<Index>(k, 0, n - 2);
    }

    Vector value(double t, Side side = Side::left) const {
        const Index k = interval(t, side);
        const double t0 = times[k], t1 = times[k + 1], h = t1 - t0;
        const double s = std::clamp((t - t0) / h, 0.0, 1.0);
        if (derivative) {
            const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
            const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
            return h00 * values.col(k) + h10 * h * derivative->col(k) + h01 * values.col(k + 1) +
                   h11 * h * derivative->col(k + 1);
        }
        if (interpolation == Interpolation::step) {
            if (side == Side::left && t <= times.front()) return values.col(0);
            return values.col(k + 1);
        }
        return (1 - s) * values.col(k) + s * values.col(k + 1);
    }

    // Time derivative of the interpolant (Hermite signals) or of the linear
    // interpolant (value-only signals; zero for step signals).
    Vector rate(double t, Side side = Side::left) const {
        const Index k = interval(t, side);
        const double t0 = times[k], t1 = times[k + 1], h = t1 - t0;
        const double s = std::clamp((t - t0) / h, 0.0, 1.0);
        if (derivative) {
            const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
            const double d01 = -6 * s * s + 6 * s, d11 = 3 * s * s - 2 * s;
            return (d00 * values.col(k) + d01 * values.col(k + 1)) / h + d10 * derivative->col(k) +
                   d11 * derivative->col(k + 1);
        }
        if (interpolation == Interpolation::step) return Vector::Zero(values.rows());
        return (values.col(k + 1) - values.col(k)) / h;
    }

    static ControlSignal sampled(std::vector<double> times, Matrix values) {
        ControlSignal g;
        g.times = std::move(times);
        g.values = std::move(values);
        g.validate();
        return g;
    }

    static ControlSignal smooth(std::vector<double> times, Matrix values, Matrix derivative) {
        ControlSignal g;
        g.times = std::move(times);
        g.values = std::move(values);
        g.derivative = std::move(derivative);
        g.validate();
        return g;
    }

    static ControlSignal zero(Index n_control, double horizon, Index n_times = 2) {
        require(n_times >= 2, "zero control needs at least two samples");
        std::vector<double> t(n_times);
        for (Index k = 0; k < n_times; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(n_times - 1);
        return sampled(std::move(t), Matrix::Zero(n_control, n_times));
    }

    // Samples a function (and optionally its derivative) on a uniform grid.
    static ControlSignal from_function(Index n_control, double horizon, Index n_times,
                                       const std::function<Vector(double)>& f,
                                       const std::function<Vector(double)>& df = {}) {
        require(n_times >= 2, "control grid needs at least two samples");
        std::vector<double> t(n_times);
        Matrix v(n_control, n_times), d(n_control, n_times);
        for (Index k = 0; k < n_times; ++k) {
            t[k] = horizon * static_cast<double>(k) / static_cast<double>(n_times - 1);
            v.col(k) = f(t[k]);
            if (df) d.col(k) = df(t[k]);
        }
        return df ? smooth(std::move(t), std::move(v), std::move(d)) : sampled(std::move(t), std::move(v));
    }
};

enum class Formulation { ode_smooth, mild_L2, z_system, closed_loop };

inline std::string to_string(Formulation f) {
    switch (f) {
    case Formulation::ode_smooth: return "ode_smooth";
    case Formulation::mild_L2: return "mild_L2";
    case Formulation::z_system: return "z_system";
    case Formulation::closed_loop: return "closed_loop";
    }
    return "unknown";
}

struct Trajectory {
    std::vector<double> times;
    Matrix states; // n_state x n_times, blocks (u, u_t, u_tt)
    Formulation formulation = Formulation::ode_smooth;

    Index n_times() const { return states.cols(); }
    Vector at(Index k) const { return states.col(k); }
};

// Max-norm distance between two trajectories sampled on the same grid.
inline double max_gap(const Trajectory& a, const Trajectory& b) {
    require(a.states.rows() == b.states.rows() && a.states.cols() == b.states.cols(),
            "max_gap: trajectories are sampled differently");
    return (a.states - b.states).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Spectrum

struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues; // sorted by decreasing real part
    std::complex<double> kernel_eigenvalue;        // the structural zero
    double abscissa = 0;                           // max real part excluding the kernel eigenvalue
    double spectral_radius = 0;
    double kernel_residual = 0;                    // ||A (1,0,0)||_max
    bool stable() const { return abscissa < 0; }
};

inline SpectrumReport spectrum(const StateSystem& sys) {
    Eigen::EigenSolver<Matrix> es(sys.A, false);
    if (es.info() != Eigen::Success) throw NumericalError("spectrum: eigenvalue solver did not converge");
    SpectrumReport rep;
    const auto& ev = es.eigenvalues();
    rep.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::size_t kernel = 0;
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
        if (std::abs(rep.eigenvalues[i]) < std::abs(rep.eigenvalues[kernel])) kernel = i;
        rep.spectral_radius = std::max(rep.spectral_radius, std::abs(rep.eigenvalues[i]));
    }
    rep.kernel_eigenvalue = rep.eigenvalues[kernel];
    rep.abscissa = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i)
        if (i != kernel) rep.abscissa = std::max(rep.abscissa, rep.eigenvalues[i].real());
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
              [](auto a, auto b) { return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag(); });
    Vector e = Vector::Zero(sys.n_state);
    e.head(sys.n_nodes).setOnes();
    rep.kernel_residual = (sys.A * e).cwiseAbs().maxCoeff();
    return rep;
}

inline double spectral_radius(const Matrix& A) {
    Eigen::EigenSolver<Matrix> es(A, false);
    if (es.info() != Eigen::Success) throw NumericalError("spectral radius: eigenvalue solver did not converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Largest step dividing the horizon with rho(A) * dt <= safety.
inline double auto_dt(const StateSystem& sys, double horizon, double safety = 2.5) {
    require(horizon > 0, "auto_dt: horizon must be positive");
    const double rho = spectral_radius(sys.A);
    const double steps = std::max(1.0, std::ceil(horizon * rho / safety));
    return horizon / steps;
}

// ---------------------------------------------------------------------------
// Fixed-step classical Runge-Kutta on a uniform grid.

namespace detail {

struct Grid {
    Index steps;
    double dt;
};

inline Grid uniform_grid(double horizon, double dt) {
    require(std::isfinite(dt) && dt > 0, "time step must be positive");
    require(std::isfinite(horizon) && horizon >= dt * (1 - 1e-12), "horizon must be at least one time step");
    const double ratio = horizon / dt;
    Index steps = static_cast<Index>(std::llround(ratio));
    if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * ratio) steps = static_cast<Index>(std::ceil(ratio));
    steps = std::max<Index>(steps, 1);
    return {steps, horizon / static_cast<double>(steps)};
}

// rhs(t, y, side) returns y'. Stage times at the end of a step sample the
// forcing from the left, those at the start from the right, so a knot of a
// discontinuous control never leaks into the neighbouring step.
template <class Rhs>
Matrix rk4(const Matrix* generator, const Vector& y0, double t0, const Grid& grid, Rhs&& rhs) {
    Matrix out(y0.size(), grid.steps + 1);
    out.col(0) = y0;
    Vector y = y0;
    const double dt = grid.dt;
    for (Index k = 0; k < grid.steps; ++k) {
        const double t = t0 + static_cast<double>(k) * dt;
        const Vector k1 = rhs(t, y, Side::right);
        const Vector k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1, Side::right);
        const Vector k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2, Side::right);
        const Vector k4 = rhs(t + dt, y + dt * k3, Side::left);
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!y.allFinite() || y.cwiseAbs().maxCoeff() > 1e150) {
            std::string detail = "time step " + std::to_string(dt);
            if (generator) detail += ", spectral radius * dt = " + std::to_string(spectral_radius(*generator) * dt);
            throw NumericalError("integration blew up at t = " + std::to_string(t + dt) + " (" + detail + ")");
        }
        out.col(k + 1) = y;
    }
    return out;
}

inline std::vector<double> grid_times(double t0, const Grid& grid) {
    std::vector<double> t(grid.steps + 1);
    for (Index k = 0; k <= grid.steps; ++k) t[k] = t0 + static_cast<double>(k) * grid.dt;
    return t;
}

inline void check_state(const StateSystem& sys, const Vector& y, const char* what) {
    if (y.size() != sys.n_state)
        throw InvalidArgument(std::string(what) + ": state has length " + std::to_string(y.size()) + ", expected " +
                              std::to_string(sys.n_state));
}

inline void check_control(const StateSystem& sys, const ControlSignal& g, const char* what) {
    g.validate();
    if (g.n_control() != sys.n_control)
        throw InvalidArgument(std::string(what) + ": control has " + std::to_string(g.n_control()) +
                              " channels, expected " + std::to_string(sys.n_control));
}

} // namespace detail

inline Trajectory propagate_free(const StateSystem& sys, const Vector& y0, double horizon, double dt) {
    detail::check_state(sys, y0, "propagate_free");
    const auto grid = detail::uniform_grid(horizon, dt);
    Trajectory tr;
    tr.formulation = Formulation::ode_smooth;
    tr.times = detail::grid_times(0.0, grid);
    tr.states = detail::rk4(&sys.A, y0, 0.0, grid, [&](double, const Vector& y, Side) -> Vector { return sys.A * y; });
    return tr;
}

// Relative tolerance for the check that g_t matches finite differences of g.
inline constexpr double kDerivativeConsistencyTol = 5e-2;

inline void check_derivative_consistency(const ControlSignal& g, double tol = kDerivativeConsistencyTol) {
    if (!g.derivative)
        throw InvalidArgument("smooth formulation needs the derivative channel g_t; use the L2 formulation for "
                              "controls without one");
    const Matrix& d = *g.derivative;
    const double scale = 1.0 + d.cwiseAbs().maxCoeff();
    for (Index k = 0; k + 1 < g.n_times(); ++k) {
        const double h = g.times[k + 1] - g.times[k];
        const Vector fd = (g.values.col(k + 1) - g.values.col(k)) / h;
        const Vector avg = 0.5 * (d.col(k) + d.col(k + 1));
        const double mismatch = (fd - avg).cwiseAbs().maxCoeff();
        if (mismatch > tol * scale)
            throw InvalidArgument("derivative channel disagrees with finite differences of g on [" +
                                  std::to_string(g.times[k]) + ", " + std::to_string(g.times[k + 1]) + "]");
    }
}

inline Trajectory propagate_smooth_control(const StateSystem& sys, const Vector& y0, const ControlSignal& g,
                                           double dt) {
    detail::check_state(sys, y0, "propagate_smooth_control");
    detail::check_control(sys, g, "propagate_smooth_control");
    check_derivative_consistency(g);
    const auto grid = detail::uniform_grid(g.horizon(), dt);
    Trajectory tr;
    tr.formulation = Formulation::ode_smooth;
    tr.times = detail::grid_times(0.0, grid);
    tr.states = detail::rk4(&sys.A, y0, 0.0, grid, [&](double t, const Vector& y, Side side) -> Vector {
        return sys.A * y + sys.B0 * g.value(t, side) + sys.B1 * g.rate(t, side);
    });
    return tr;
}

// Integrates w' = A w + Bhat g from w0 on the grid of g; returns w samples.
inline Trajectory propagate_w(const StateSystem& sys, const Vector& w0, const ControlSignal& g, double dt) {
    detail::check_state(sys, w0, "propagate_w");
    detail::check_control(sys, g, "propagate_w");
    const auto grid = detail::uniform_grid(g.horizon(), dt);
    Trajectory tr;
    tr.formulation = Formulation::mild_L2;
    tr.times = detail::grid_times(0.0, grid);
    tr.states = detail::rk4(&sys.A, w0, 0.0, grid, [&](double t, const Vector& w, Side side) -> Vector {
        return sys.A * w + sys.Bhat * g.value(t, side);
    });
    return tr;
}

// y = w + B1 g with left-continuous samples of g.
inline Trajectory reconstruct_state(const StateSystem& sys, const Trajectory& w, const ControlSignal& g) {
    Trajectory y = w;
    for (Index k = 0; k < w.n_times(); ++k) y.states.col(k) += sys.B1 * g.value(w.times[k], Side::left);
    return y;
}

struct MildRun {
    Trajectory y; // tag mild_L2
    Trajectory w; // w = y - B1 g
};

inline MildRun propagate_L2_control_detail(const StateSystem& sys, const Vector& y0, const ControlSignal& g,
                                           double dt) {
    detail::check_state(sys, y0, "propagate_L2_control");
    detail::check_control(sys, g, "propagate_L2_control");
    const Vector w0 = y0 - sys.B1 * g.anchor();
    MildRun run;
    run.w = propagate_w(sys, w0, g, dt);
    run.y = reconstruct_state(sys, run.w, g);
    return run;
}

inline Trajectory propagate_L2_control(const StateSystem& sys, const Vector& y0, const ControlSignal& g, double dt) {
    return propagate_L2_control_detail(sys, y0, g, dt).y;
}

// Generator of the auxiliary (u, z, z_t) system with z = u_t + (c^2/b) u:
//   u_t  = -k u + z,                       k = c^2/b
//   tau z_tt = -b K z - (b/c) Mg1 z_t - g_tau M (z_t - k z + k^2 u),  g_tau = alpha - tau k
// (mass-weighted). For tau = 1, g_tau is the usual gamma.
inline Matrix z_system_generator(const StateSystem& sys) {
    const Index n = sys.n_nodes;
    const auto& p = sys.params;
    require(p.b > 0, "z-system: b must be positive");
    const double kappa = p.c * p.c / p.b;
    const double g_tau = p.alpha - p.tau * kappa;
    Eigen::LLT<Matrix> m_llt(sys.M);
    const Matrix minv_k = m_llt.solve(sys.K);
    const Matrix minv_g1 = m_llt.solve(sys.Mg1);
    const Matrix I = Matrix::Identity(n, n);
    Matrix At = Matrix::Zero(3 * n, 3 * n);
    At.block(0, 0, n, n) = -kappa * I;
    At.block(0, n, n, n) = I;
    At.block(n, 2 * n, n, n) = I;
    At.block(2 * n, 0, n, n) = -(g_tau * kappa * kappa / p.tau) * I;
    At.block(2 * n, n, n, n) = -(1.0 / p.tau) * (p.b * minv_k - g_tau * kappa * I);
    At.block(2 * n, 2 * n, n, n) = -(1.0 / p.tau) * ((p.b / p.c) * minv_g1 + g_tau * I);
    return At;
}

inline Trajectory propagate_z_system(const StateSystem& sys, const Vector& u0, const Vector& u1, const Vector& u2,
                                     double horizon, double dt) {
    const Index n = sys.n_nodes;
    require(u0.size() == n && u1.size() == n && u2.size() == n, "propagate_z_system: initial data length mismatch");
    require(sys.params.b > 0, "propagate_z_system: b = 0 makes the change of variables undefined");
    const double kappa = sys.params.c * sys.params.c / sys.params.b;
    const Matrix At = z_system_generator(sys);
    Vector x0(3 * n);
    x0 << u0, u1 + kappa * u0, u2 + kappa * u1;
    const auto grid = detail::uniform_grid(horizon, dt);
    const Matrix xs = detail::rk4(&At, x0, 0.0, grid, [&](double, const Vector& x, Side) -> Vector { return At * x; });

    Trajectory tr;
    tr.formulation = Formulation::z_system;
    tr.times = detail::grid_times(0.0, grid);
    tr.states.resize(3 * n, xs.cols());
    for (Index k = 0; k < xs.cols(); ++k) {
        const auto u = xs.col(k).segment(0, n);
        const auto z = xs.col(k).segment(n, n);
        const auto zt = xs.col(k).segment(2 * n, n);
        tr.states.col(k).segment(0, n) = u;
        tr.states.col(k).segment(n, n) = z - kappa * u;
        tr.states.col(k).segment(2 * n, n) = zt - kappa * z + kappa * kappa * u;
    }
    return tr;
}

// Y-norm of each sample with the conserved constant component removed.
inline std::vector<double> decaying_energy(const StateSystem& sys, const Trajectory& tr) {
    std::vector<double> out(tr.n_times());
    for (Index k = 0; k < tr.n_times(); ++k) out[k] = y_norm(sys, remove_kernel_component(sys, tr.states.col(k)));
    return out;
}

// Least-squares slope of log(energy) against time over samples with t >= t_from.
inline double fitted_decay_rate(const std::vector<double>& times, const std::vector<double>& energy,
                                double t_from = 0.0) {
    double st = 0, sl = 0, stt = 0, stl = 0;
    int count = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < t_from || energy[k] <= 0) continue;
        const double l = std::log(energy[k]);
        st += times[k];
        sl += l;
        stt += times[k] * times[k];
        stl += times[k] * l;
        ++count;
    }
    require(count >= 2, "fitted_decay_rate: not enough positive samples");
    return (count * stl - st * sl) / (count * stt - st * st);
}

} // namespace mgt
