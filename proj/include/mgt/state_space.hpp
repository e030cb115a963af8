#pragma once

// First-order state system for the third-order acoustic equation with
// Neumann boundary control on Gamma0 and absorbing conditions on Gamma1.
//
// State y = (u, u_t, u_tt) with n nodal values per block. The discrete
// equation is
//
//   tau M u_ttt + (alpha M + (b/c) Mg1) u_tt + (b K + c Mg1) u_t + c^2 K u
//       = c^2 T0 g + b T0 g_t
//
// which gives y' = A y + B0 g + B1 g_t. All adjoints are taken in the weighted
// inner products (y, w)_Y = y^T W w with W = blockdiag(K+M, K+M, M) and
// (g, h)_U = g^T Wu h with Wu = Mg0.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mgt/error.hpp"
#include "mgt/mesh_fem.hpp"

namespace mgt {

struct PhysicalParams {
    double tau = 1.0;
    double alpha = 2.0;
    double c = 1.0;
    double b = 1.0;

    // gamma = alpha - c^2/b. Positive gamma is the stable regime; other
    // values are allowed for instability studies.
    double gamma() const { return alpha - c * c / b; }

    void validate() const {
        require(std::isfinite(tau) && tau > 0, "tau must be positive");
        require(std::isfinite(c) && c > 0, "c must be positive");
        require(std::isfinite(b) && b > 0, "b must be positive");
        require(std::isfinite(alpha), "alpha must be finite");
    }
};

enum class Space { Y, U };

struct StateSystem {
    PhysicalParams params;
    Index n_nodes = 0;
    Index n_state = 0;
    Index n_control = 0;

    Matrix A;    // generator, n_state x n_state
    Matrix B0;   // n_state x n_control
    Matrix B1;   // (b/c^2) B0
    Matrix Bhat; // B0 + A B1
    Matrix Robs; // observation, n_state x n_state
    Matrix W;    // Y Gram matrix
    Matrix Wu;   // U Gram matrix

    // Kept for the auxiliary (u, z, z_t) system and diagnostics.
    Matrix M, K, Mg1;

    Eigen::LLT<Matrix> W_llt;
    Eigen::LLT<Matrix> Wu_llt;

    auto u_block(const Vector& y) const { return y.segment(0, n_nodes); }
    auto ut_block(const Vector& y) const { return y.segment(n_nodes, n_nodes); }
    auto utt_block(const Vector& y) const { return y.segment(2 * n_nodes, n_nodes); }
};

namespace detail {

// H-self-adjoint positive square root of H^{-1} M: S^2 = H^{-1} M, H S symmetric,
// and S^T H S = M. Discrete stand-in for (I + A)^{-1/2} between H^1 and L^2.
inline Matrix smoothing_root(const Matrix& H, const Matrix& M) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(M, H);
    if (ges.info() != Eigen::Success) throw NumericalError("observation square root: eigen-solver failure");
    const Matrix& V = ges.eigenvectors(); // V^T H V = I
    const Vector root = ges.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return V * root.asDiagonal() * V.transpose() * H;
}

} // namespace detail

inline StateSystem assemble_system(const FemOperators& ops, const PhysicalParams& params) {
    params.validate();
    const Index n = ops.num_nodes();
    const Index nc = ops.num_controls();
    require(n > 0 && nc > 0, "assemble_system: empty operators");
    require(ops.T0.rows() == n && ops.Mg0.rows() == nc, "assemble_system: operator shapes disagree");

    const double tau = params.tau, alpha = params.alpha, c = params.c, b = params.b;

    StateSystem sys;
    sys.params = params;
    sys.n_nodes = n;
    sys.n_state = 3 * n;
    sys.n_control = nc;
    sys.M = ops.M;
    sys.K = ops.K;
    sys.Mg1 = ops.Mg1;

    Eigen::LLT<Matrix> m_llt(ops.M);
    if (m_llt.info() != Eigen::Success) throw NumericalError("assemble_system: mass matrix is not positive definite");
    const Matrix minv_k = m_llt.solve(ops.K);
    const Matrix minv_g1 = m_llt.solve(ops.Mg1);
    const Matrix minv_t0 = m_llt.solve(ops.T0);
    const Matrix I = Matrix::Identity(n, n);

    sys.A = Matrix::Zero(3 * n, 3 * n);
    sys.A.block(0, n, n, n) = I;
    sys.A.block(n, 2 * n, n, n) = I;
    sys.A.block(2 * n, 0, n, n) = -(c * c / tau) * minv_k;
    sys.A.block(2 * n, n, n, n) = -(1.0 / tau) * (b * minv_k + c * minv_g1);
    sys.A.block(2 * n, 2 * n, n, n) = -(1.0 / tau) * (alpha * I + (b / c) * minv_g1);

    sys.B0 = Matrix::Zero(3 * n, nc);
    sys.B0.block(2 * n, 0, n, nc) = (c * c / tau) * minv_t0;
    sys.B1 = (b / (c * c)) * sys.B0;
    sys.Bhat = sys.B0 + sys.A * sys.B1;

    const Matrix H = ops.K + ops.M;
    sys.W = Matrix::Zero(3 * n, 3 * n);
    sys.W.block(0, 0, n, n) = H;
    sys.W.block(n, n, n, n) = H;
    sys.W.block(2 * n, 2 * n, n, n) = ops.M;
    sys.Wu = ops.Mg0;

    sys.Robs = Matrix::Zero(3 * n, 3 * n);
    sys.Robs.block(0, 0, n, n) = detail::smoothing_root(H, ops.M);

    sys.W_llt.compute(sys.W);
    sys.Wu_llt.compute(sys.Wu);
    if (sys.W_llt.info() != Eigen::Success || sys.Wu_llt.info() != Eigen::Success)
        throw NumericalError("assemble_system: inner-product weights are not positive definite");
    return sys;
}

inline double y_inner(const StateSystem& sys, const Vector& y, const Vector& w) {
    if (y.size() != sys.n_state || w.size() != sys.n_state)
        throw InvalidArgument("y_inner: expected state vectors of length " + std::to_string(sys.n_state));
    return y.dot(sys.W * w);
}

inline double u_inner(const StateSystem& sys, const Vector& g, const Vector& h) {
    if (g.size() != sys.n_control || h.size() != sys.n_control)
        throw InvalidArgument("u_inner: expected control vectors of length " + std::to_string(sys.n_control));
    return g.dot(sys.Wu * h);
}

inline double y_norm(const StateSystem& sys, const Vector& y) { return std::sqrt(std::max(0.0, y_inner(sys, y, y))); }
inline double u_norm(const StateSystem& sys, const Vector& g) { return std::sqrt(std::max(0.0, u_inner(sys, g, g))); }

// ||R y||_Y^2 expressed directly as u^T M u.
inline double observed_energy(const StateSystem& sys, const Vector& y) {
    const auto u = sys.u_block(y);
    return u.dot(sys.M * u);
}

// Weighted adjoint of op : domain -> codomain, i.e. W_dom^{-1} op^T W_cod.
inline Matrix adjoint(const StateSystem& sys, const Matrix& op, Space domain, Space codomain) {
    const Index rows = codomain == Space::Y ? sys.n_state : sys.n_control;
    const Index cols = domain == Space::Y ? sys.n_state : sys.n_control;
    if (op.rows() != rows || op.cols() != cols)
        throw InvalidArgument("adjoint: operator is " + std::to_string(op.rows()) + "x" + std::to_string(op.cols()) +
                              ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    const Matrix& w_cod = codomain == Space::Y ? sys.W : sys.Wu;
    const Matrix rhs = op.transpose() * w_cod;
    return domain == Space::Y ? Matrix(sys.W_llt.solve(rhs)) : Matrix(sys.Wu_llt.solve(rhs));
}

// Same, with domain and codomain read off the operator shape.
inline Matrix adjoint(const StateSystem& sys, const Matrix& op) {
    auto space_of = [&](Index dim) {
        if (dim == sys.n_state) return Space::Y;
        if (dim == sys.n_control) return Space::U;
        throw InvalidArgument("adjoint: dimension " + std::to_string(dim) + " is neither Y nor U");
    };
    return adjoint(sys, op, space_of(op.cols()), space_of(op.rows()));
}

struct StructuralReport {
    double observation_of_b1 = 0;      // ||Robs B1||_max
    double b1_proportionality = 0;     // ||B1 - (b/c^2) B0||_max
    double ra2_ratio_max_dev = 0;      // max |(||R A^2 y||_Y / ||y3||_L2) - 1|
    double ra2_zero_case = 0;          // ||R A^2 y||_Y for y3 = 0
    double stiffness_kernel = 0;       // ||K 1||_max / ||K||_max
    double generator_kernel = 0;       // ||A (1,0,0)||_max / ||A||_max
    bool b1_observation_ok = false;
    bool proportionality_ok = false;
    bool ra2_ok = false;
    bool kernel_ok = false;
    int probes = 0;

    bool all_ok() const { return b1_observation_ok && proportionality_ok && ra2_ok && kernel_ok; }
};

inline StructuralReport structural_report(const StateSystem& sys, int probes = 100, std::uint64_t seed = 7,
                                          double tol = 1e-10) {
    StructuralReport rep;
    rep.probes = probes;
    const Index n = sys.n_nodes;

    rep.observation_of_b1 = (sys.Robs * sys.B1).cwiseAbs().maxCoeff();
    rep.b1_proportionality = (sys.B1 - (sys.params.b / (sys.params.c * sys.params.c)) * sys.B0).cwiseAbs().maxCoeff();
    rep.b1_observation_ok = rep.observation_of_b1 == 0.0;
    rep.proportionality_ok = rep.b1_proportionality == 0.0;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int k = 0; k < probes; ++k) {
        Vector y(sys.n_state);
        for (Index i = 0; i < y.size(); ++i) y(i) = normal(rng);
        const Vector ra2 = sys.Robs * (sys.A * (sys.A * y));
        const double lhs = y_norm(sys, ra2);
        const auto y3 = sys.utt_block(y);
        const double rhs = std::sqrt(y3.dot(sys.M * y3));
        rep.ra2_ratio_max_dev = std::max(rep.ra2_ratio_max_dev, std::abs(lhs / rhs - 1.0));
    }
    {
        Vector y = Vector::Zero(sys.n_state);
        for (Index i = 0; i < 2 * n; ++i) y(i) = std::sin(1.0 + i);
        rep.ra2_zero_case = y_norm(sys, sys.Robs * (sys.A * (sys.A * y)));
    }
    rep.ra2_ok = rep.ra2_ratio_max_dev <= tol && rep.ra2_zero_case == 0.0;

    rep.stiffness_kernel = (sys.K * Vector::Ones(n)).cwiseAbs().maxCoeff() / sys.K.cwiseAbs().maxCoeff();
    Vector e = Vector::Zero(sys.n_state);
    e.head(n).setOnes();
    rep.generator_kernel = (sys.A * e).cwiseAbs().maxCoeff() / sys.A.cwiseAbs().maxCoeff();
    rep.kernel_ok = rep.stiffness_kernel <= tol && rep.generator_kernel <= tol;
    return rep;
}

// Left null vector l of A (l^T A = 0) normalised so that l^T (1,0,0) = 1.
// l^T y is conserved by the free dynamics; it measures the constant-pressure
// component that never decays.
inline Vector conserved_functional(const StateSystem& sys) {
    const Index n = sys.n_nodes;
    const auto& p = sys.params;
    const Vector ones = Vector::Ones(n);
    Vector l(sys.n_state);
    l.segment(0, n) = (p.c / p.tau) * (sys.Mg1 * ones);
    l.segment(n, n) = (1.0 / p.tau) * (p.alpha * (sys.M * ones) + (p.b / p.c) * (sys.Mg1 * ones));
    l.segment(2 * n, n) = sys.M * ones;
    const double scale = l.head(n).sum();
    if (std::abs(scale) < 1e-300) return l; // no absorbing boundary: no normalisation available
    return l / scale;
}

// Removes the kernel component (const, 0, 0) along the conserved functional.
inline Vector remove_kernel_component(const StateSystem& sys, const Vector& y) {
    const Vector l = conserved_functional(sys);
    Vector e = Vector::Zero(sys.n_state);
    e.head(sys.n_nodes).setOnes();
    const double le = l.dot(e);
    if (std::abs(le) < 1e-300) return y;
    return y - (l.dot(y) / le) * e;
}

} // namespace mgt
