#include <gtest/gtest.h>

#include <random>

#include "mgt/riccati.hpp"

using namespace mgt;

namespace {

StateSystem make(int dim, int res, PhysicalParams p = {}) {
    return assemble_system(assemble_fem(build_mesh(dim, res)), p);
}

Vector randn(std::mt19937_64& rng, Index n) {
    std::normal_distribution<double> d;
    Vector v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

double rel(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(1e-300, b.cwiseAbs().maxCoeff());
}

} // namespace

TEST(Riccati, TerminalCondition) {
    const auto sys = make(1, 8);
    const auto sol = solve_dre(sys, 1.0);
    ASSERT_GE(sol.size(), 2);
    EXPECT_EQ(sol.times.front(), 0.0);
    EXPECT_DOUBLE_EQ(sol.times.back(), 1.0);
    EXPECT_EQ(sol.pi.back().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(sol.gains.back().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(sol.G_cond.back(), 1.0);
    EXPECT_DOUBLE_EQ(sol.G_min_sv.back(), 1.0);
}

TEST(Riccati, NoObservationGivesZero) {
    auto sys = make(1, 8);
    sys.Robs.setZero();
    const auto sol = solve_dre(sys, 1.0);
    for (const auto& pi : sol.pi) EXPECT_EQ(pi.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Riccati, ResidualIsSmallAndDetectsPerturbation) {
    const auto sys = make(1, 12);
    const auto sol = solve_dre(sys, 1.0);
    double worst = 0;
    for (double r : sol.residual_log) worst = std::max(worst, r);
    EXPECT_LE(worst, 1e-6);
    const Matrix P = riccati_operator(sys, sol, 0);
    const Matrix Pdot = sys.W_llt.solve(sol.pi_dot[0]);
    EXPECT_LE(riccati_residual(sys, P, Pdot), 1e-6);
    EXPECT_GT(riccati_residual(sys, 1.01 * P, Pdot), 1e3 * std::max(worst, 1e-12));
    EXPECT_THROW(riccati_residual(sys, Matrix::Zero(2, 2), Pdot), InvalidArgument);
}

TEST(Riccati, GainMatchesWeightedAdjoint) {
    const auto sys = make(2, 3);
    const auto sol = solve_dre(sys, 0.5);
    const Matrix P = riccati_operator(sys, sol, 0);
    EXPECT_LE(rel(gain(sys, P), sol.gains[0]), 1e-9);
    // (F y, g)_U = (P y, Bhat g)_Y for the adjoint definition of F = Bhat^* P.
    std::mt19937_64 rng(1);
    for (int k = 0; k < 10; ++k) {
        const Vector y = randn(rng, sys.n_state), g = randn(rng, sys.n_control);
        const double lhs = u_inner(sys, sol.gains[0] * y, g), rhs = y_inner(sys, P * y, sys.Bhat * g);
        EXPECT_NEAR(lhs, rhs, 1e-9 * (std::abs(lhs) + 1));
    }
}

TEST(Riccati, PositiveAndMonotoneInHorizon) {
    std::mt19937_64 rng(2);
    const auto sys = make(1, 10);
    const auto short_sol = solve_dre(sys, 0.5);
    const auto long_sol = solve_dre(sys, 1.5);
    for (const auto& pi : long_sol.pi) {
        const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(pi).eigenvalues().minCoeff();
        EXPECT_GE(lo, -1e-10 * std::max(1.0, pi.cwiseAbs().maxCoeff()));
    }
    for (int k = 0; k < 10; ++k) {
        const Vector a = randn(rng, sys.n_state);
        EXPECT_LE(riccati_cost(short_sol, 0, a), riccati_cost(long_sol, 0, a) * (1 + 1e-10));
        // Time invariance: value at t with time-to-go s depends only on s.
        double prev = riccati_cost(long_sol, 0, a);
        for (Index s = 1; s < long_sol.size(); ++s) {
            const double cur = riccati_cost(long_sol, s, a);
            EXPECT_LE(cur, prev * (1 + 1e-10) + 1e-14);
            prev = cur;
        }
    }
}

TEST(Riccati, FiniteDifferenceMatchesRhs) {
    const auto sys = make(1, 8);
    RiccatiOptions opt;
    opt.store_every = 8;
    const auto sol = solve_dre(sys, 1.0, opt);
    ASSERT_EQ(sol.store_every, 8);
    const Index k = sol.size() / 2;
    const auto seg = riccati_fine_segment(sol, k);
    ASSERT_EQ(static_cast<Index>(seg.size()), 9);
    for (Index j = 1; j + 1 < 9; ++j) {
        const Matrix fd = (seg[j + 1] - seg[j - 1]) / (2 * sol.dt);
        EXPECT_LE(rel(fd, detail::riccati_rhs(sol.A, sol.Q, sol.S, seg[j])), 1e-3);
    }
}

TEST(Riccati, FineSegmentReproducesSweep) {
    const auto sys = make(1, 8);
    RiccatiOptions every, coarse;
    every.store_every = 1;
    coarse.store_every = 4;
    const auto a = solve_dre(sys, 1.0, every);
    const auto b = solve_dre(sys, 1.0, coarse);
    ASSERT_EQ(a.dt, b.dt);
    ASSERT_EQ(b.store_every, 4);
    for (Index k = 0; k + 1 < b.size(); k += 3) {
        const auto seg = riccati_fine_segment(b, k);
        for (Index j = 0; j <= 4; ++j) EXPECT_LE(rel(seg[j], a.pi[4 * k + j]), 1e-12);
    }
    EXPECT_LE(rel(pi_at(b, b.times[2]), b.pi[2]), 1e-14);
    // Cubic Hermite between snapshots: O(h^4) interpolation error.
    EXPECT_LE(rel(pi_at(b, 0.5 * (b.times[2] + b.times[3])), a.pi[10]), 2e-5);
}

TEST(Riccati, SymmetryAndGHealth) {
    const auto sys = make(2, 4);
    const auto sol = solve_dre(sys, 1.0);
    EXPECT_LE(sol.max_symmetry_drift, 1e-8);
    for (Index s = 0; s < sol.size(); ++s) {
        EXPECT_EQ((sol.pi[s] - sol.pi[s].transpose()).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_GT(sol.G_min_sv[s], 0.0);
        EXPECT_LT(sol.G_cond[s], 1e12);
    }
}

TEST(GOperator, ZeroGainIsIdentity) {
    const auto sys = make(2, 3);
    const auto rep = G_operator(sys, Matrix::Zero(sys.n_control, sys.n_state));
    EXPECT_EQ((rep.G - Matrix::Identity(sys.n_control, sys.n_control)).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(rep.condition, 1.0);
    EXPECT_FALSE(rep.near_singular);
    EXPECT_THROW(G_operator(sys, Matrix::Zero(1, 1)), InvalidArgument);
}

TEST(Riccati, RejectsBadInput) {
    const auto sys = make(1, 4);
    EXPECT_THROW(solve_dre(sys, 0.0), InvalidArgument);
    EXPECT_THROW(solve_dre(sys, -1.0), InvalidArgument);
    RiccatiOptions opt;
    opt.dt = 2.0;
    EXPECT_THROW(solve_dre(sys, 1.0, opt), InvalidArgument);
}

TEST(Riccati, AutoStepCountIsEven) {
    for (int res : {4, 7, 10}) {
        const auto sol = solve_dre(make(1, res), 1.3);
        const double steps = sol.horizon / sol.dt;
        EXPECT_NEAR(std::fmod(std::round(steps), 2.0), 0.0, 0.0);
    }
}
