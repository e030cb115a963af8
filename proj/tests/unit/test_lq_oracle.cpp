#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mgt/lq_oracle.hpp"

using namespace mgt;

namespace {

StateSystem make(int res, PhysicalParams p = {}) { return assemble_system(assemble_fem(build_mesh(1, res)), p); }

Vector randn(std::mt19937_64& rng, Index n) {
    std::normal_distribution<double> d;
    Vector v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

LQProblem problem(const StateSystem& sys, std::mt19937_64& rng, Index nt = 16) {
    LQProblem p;
    p.y0 = randn(rng, sys.n_state);
    p.g0 = randn(rng, sys.n_control);
    p.horizon = 1.0;
    p.nt = nt;
    return p;
}

ControlSignal on_knots(const LQProblem& p, const Matrix& values) {
    return ControlSignal::sampled(detail::knot_times(p.horizon, p.nt), values);
}

} // namespace

TEST(Quadrature, Weights) {
    std::vector<double> t(9);
    for (int k = 0; k < 9; ++k) t[k] = 0.25 * k;
    for (auto rule : {Quadrature::trapezoid, Quadrature::simpson}) {
        const auto w = quadrature_weights(t, rule);
        double sum = 0;
        for (double x : w) sum += x;
        EXPECT_NEAR(sum, 2.0, 1e-14);
    }
    const auto ws = quadrature_weights(t, Quadrature::simpson);
    double cubic = 0;
    for (int k = 0; k < 9; ++k) cubic += ws[k] * t[k] * t[k] * t[k];
    EXPECT_NEAR(cubic, 4.0, 1e-13);
    // Odd interval count falls back to the trapezoid rule.
    t.pop_back();
    EXPECT_EQ(quadrature_weights(t, Quadrature::simpson), quadrature_weights(t, Quadrature::trapezoid));
}

TEST(Cost, Examples) {
    const auto sys = make(8);
    Trajectory tr;
    tr.times = {0.0, 0.5, 1.0};
    tr.states = Matrix::Zero(sys.n_state, 3);
    const auto g0 = ControlSignal::zero(1, 1.0, 3);
    EXPECT_EQ(cost(sys, tr, g0), 0.0);

    tr.states.topRows(sys.n_nodes).setOnes();
    // u = 1 on the unit interval: integral over time of |u|^2_L2 = T.
    EXPECT_NEAR(cost(sys, tr, g0), 1.0, 1e-13);
    const auto g1 = ControlSignal::sampled({0.0, 0.5, 1.0}, Matrix::Ones(1, 3));
    EXPECT_NEAR(cost(sys, tr, g1), 2.0, 1e-13);

    Trajectory tr2 = tr;
    tr2.states *= 2;
    const auto g2 = ControlSignal::sampled({0.0, 0.5, 1.0}, 2 * Matrix::Ones(1, 3));
    EXPECT_NEAR(cost(sys, tr2, g2), 4 * cost(sys, tr, g1), 1e-12);

    const auto longer = ControlSignal::zero(1, 2.0, 3);
    EXPECT_THROW(cost(sys, tr, longer), InvalidArgument);
    EXPECT_THROW(cost(sys, tr, g0, Matrix::Zero(2, 2)), InvalidArgument);
}

TEST(OpenLoop, ZeroProblem) {
    const auto sys = make(8);
    LQProblem p;
    p.y0 = Vector::Zero(sys.n_state);
    p.g0 = Vector::Zero(sys.n_control);
    const auto sol = solve_open_loop(sys, p);
    EXPECT_EQ(sol.g_opt.values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(sol.cost, 0.0);
    EXPECT_EQ(sol.cost_check, 0.0);
}

TEST(OpenLoop, PerturbationsDoNotImprove) {
    std::mt19937_64 rng(1);
    const auto sys = make(8);
    const auto p = problem(sys, rng);
    const auto sol = solve_open_loop(sys, p);
    EXPECT_FALSE(sol.warning.has_value());
    EXPECT_NEAR(sol.cost_check, sol.cost, 1e-9 * sol.cost);
    const double j_star = open_loop_cost(sys, p, sol.g_opt);
    EXPECT_NEAR(j_star, sol.cost, 1e-9 * sol.cost);
    for (int k = 0; k < 10; ++k) {
        const Matrix delta = Matrix(randn(rng, p.nt).transpose());
        for (double eps : {1e-1, 1e-3}) {
            const double j = open_loop_cost(sys, p, on_knots(p, sol.g_opt.values + eps * delta));
            EXPECT_GE(j - j_star, -1e-10 * j_star) << "eps " << eps;
        }
    }
}

TEST(OpenLoop, AgreesWithPolarizationOracle) {
    // Recover the quadratic J(g) = c + 2 b.g + g.H g from cost evaluations only.
    std::mt19937_64 rng(2);
    const auto sys = make(8);
    const auto p = problem(sys, rng);
    const Index m = p.nt;
    auto J = [&](const Vector& g) { return open_loop_cost(sys, p, on_knots(p, Matrix(g.transpose()))); };
    const double c = J(Vector::Zero(m));
    std::vector<double> single(m);
    for (Index i = 0; i < m; ++i) single[i] = J(Vector::Unit(m, i));
    std::vector<double> minus(m);
    for (Index i = 0; i < m; ++i) minus[i] = J(-Vector::Unit(m, i));
    Matrix H(m, m);
    Vector b(m);
    for (Index i = 0; i < m; ++i) {
        H(i, i) = 0.5 * (single[i] + minus[i]) - c;
        b(i) = 0.25 * (single[i] - minus[i]);
        for (Index j = 0; j < i; ++j) {
            const double pair = J(Vector::Unit(m, i) + Vector::Unit(m, j));
            H(i, j) = H(j, i) = 0.5 * (pair - single[i] - single[j] + c);
        }
    }
    const Vector g_ref = H.ldlt().solve(-b);
    const auto sol = solve_open_loop(sys, p);
    const Vector g = sol.g_opt.values.row(0).transpose();
    EXPECT_LE((g - g_ref).norm(), 1e-6 * g_ref.norm());
    EXPECT_NEAR(sol.cost, c + b.dot(g_ref), 1e-7 * sol.cost);
}

TEST(OpenLoop, GradientAndNormalDiagnostics) {
    std::mt19937_64 rng(3);
    for (int res : {8, 12}) {
        const auto sys = make(res);
        auto p = problem(sys, rng, 24);
        const auto sol = solve_open_loop(sys, p);
        EXPECT_LE(sol.normal_residual, sol.gradient_bound);
        EXPECT_GE(sol.min_normal_eigenvalue, 1.0 - 1e-9);
        EXPECT_GE(sol.condition_estimate, 1.0);
        EXPECT_EQ(sol.substeps % 2, 0);
        EXPECT_EQ(sol.g_opt.anchor(), p.g0);
    }
}

TEST(OpenLoop, TrackingTargetIsReached) {
    // Target = the free response, so zero control almost attains zero cost.
    const auto sys = make(8);
    LQProblem p;
    p.y0 = Vector::Zero(sys.n_state);
    for (Index i = 0; i < sys.n_nodes; ++i) p.y0(i) = std::cos(3.0 * static_cast<double>(i) / 8.0);
    p.g0 = Vector::Zero(1);
    p.nt = 17;
    const auto knots = detail::knot_times(p.horizon, p.nt);
    const auto free = propagate_free(sys, p.y0, p.horizon, p.horizon / 16 / 64);
    p.target.resize(sys.n_nodes, p.nt);
    for (Index k = 0; k < p.nt; ++k) p.target.col(k) = free.states.col(k * 64).head(sys.n_nodes);
    const auto sol = solve_open_loop(sys, p);
    LQProblem untracked = p;
    untracked.target = Matrix();
    EXPECT_LT(sol.cost, 1e-2 * solve_open_loop(sys, untracked).cost);
    p.target.resize(sys.n_nodes, 3);
    EXPECT_THROW(solve_open_loop(sys, p), InvalidArgument);
}

TEST(OpenLoop, RejectsBadProblem) {
    const auto sys = make(4);
    LQProblem p;
    p.y0 = Vector::Zero(3);
    p.g0 = Vector::Zero(1);
    EXPECT_THROW(solve_open_loop(sys, p), InvalidArgument);
    p.y0 = Vector::Zero(sys.n_state);
    p.nt = 1;
    EXPECT_THROW(solve_open_loop(sys, p), InvalidArgument);
}

TEST(Nonexistence, ZeroDataGivesZero) {
    const auto sys = make(8);
    const auto res = nonexistence_demo(sys, Vector::Zero(1), 4, 1.0, 32);
    EXPECT_EQ(res.cost_zero, 0.0);
    for (double c : res.costs) EXPECT_EQ(c, 0.0);
}

TEST(Nonexistence, InfimumIsNotAttained) {
    const auto sys = make(8);
    const auto res = nonexistence_demo(sys, Vector::Ones(1), 32, 2.0, 128);
    ASSERT_EQ(res.costs.size(), 32u);
    EXPECT_GT(res.cost_zero, 0);
    for (std::size_t k = 8; k < res.costs.size(); ++k) EXPECT_LT(res.costs[k], res.costs[k - 1]);
    EXPECT_LT(res.costs.back(), 0.25 * res.cost_zero);
    EXPECT_EQ(res.infimum(), res.costs.back());
}
