#include <gtest/gtest.h>

#include <random>

#include "mgt/feedback.hpp"
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

struct Fixture {
    StateSystem sys = make(8);
    RiccatiSolution ric = solve_dre(sys, 1.0);
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

} // namespace

TEST(ClosedLoop, ZeroDataStaysZero) {
    const auto& [sys, ric] = fixture();
    const auto run = closed_loop(sys, ric, Vector::Zero(sys.n_state), Vector::Zero(sys.n_control));
    EXPECT_EQ(run.trajectory.states.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(run.control.values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(run.cost, 0.0);
    EXPECT_TRUE(run.consistent());
}

TEST(ClosedLoop, CostMatchesRiccatiValue) {
    std::mt19937_64 rng(1);
    const auto& [sys, ric] = fixture();
    for (int k = 0; k < 3; ++k) {
        const Vector y0 = randn(rng, sys.n_state), g0 = randn(rng, sys.n_control);
        const auto run = closed_loop(sys, ric, y0, g0);
        const double value = riccati_cost(ric, 0, y0 - sys.B1 * g0);
        EXPECT_NEAR(run.cost, value, 1e-3 * value);
        EXPECT_TRUE(run.consistent()) << run.consistency_gap;
        EXPECT_DOUBLE_EQ(run.cost_cumulative.front(), 0.0);
        EXPECT_NEAR(run.cost_cumulative.back(), run.cost, 1e-2 * run.cost);
        EXPECT_LE((run.trajectory.at(0) - (run.w_trajectory.at(0) + sys.B1 * run.control.values.col(0))).norm(), 1e-12);
    }
}

TEST(ClosedLoop, AgreesWithOpenLoopOracle) {
    std::mt19937_64 rng(2);
    const auto& [sys, ric] = fixture();
    LQProblem p;
    p.y0 = randn(rng, sys.n_state);
    p.g0 = randn(rng, sys.n_control);
    p.horizon = 1.0;
    p.nt = 64;
    const auto oracle = solve_open_loop(sys, p);
    const auto run = closed_loop(sys, ric, p.y0, p.g0);
    EXPECT_NEAR(run.cost, oracle.cost, 1e-3 * oracle.cost);
    // The feedback control evaluated on the oracle grid is admissible there.
    EXPECT_GE(open_loop_cost(sys, p, ControlSignal::sampled(run.control.times, run.control.values)),
              oracle.cost * (1 - 1e-3));
}

TEST(ClosedLoop, RestartReproducesTail) {
    std::mt19937_64 rng(3);
    const auto& [sys, ric] = fixture();
    const auto run = closed_loop(sys, ric, randn(rng, sys.n_state), randn(rng, sys.n_control));
    const Index s = run.trajectory.n_times() / 2;
    const auto tail = closed_loop_from(sys, ric, run.trajectory.times[s], run.w_trajectory.at(s));
    ASSERT_EQ(tail.trajectory.n_times(), run.trajectory.n_times() - s);
    const Matrix ref = run.trajectory.states.rightCols(tail.trajectory.n_times());
    EXPECT_LE((tail.trajectory.states - ref).cwiseAbs().maxCoeff(), 1e-6 * ref.cwiseAbs().maxCoeff());
    EXPECT_NEAR(tail.trajectory.times.front(), run.trajectory.times[s], 1e-12);
    EXPECT_DOUBLE_EQ(tail.t_start, tail.trajectory.times.front());
    EXPECT_EQ(tail.control.times.front(), 0.0);
}

TEST(ClosedLoop, ControlJumpsShrinkWithStep) {
    std::mt19937_64 rng(4);
    const auto& [sys, ric] = fixture();
    const Vector y0 = randn(rng, sys.n_state), g0 = randn(rng, sys.n_control);
    const auto coarse = closed_loop(sys, ric, y0, g0, 4 * ric.dt);
    const auto fine = closed_loop(sys, ric, y0, g0, 2 * ric.dt);
    EXPECT_LE(fine.max_control_jump, 0.6 * coarse.max_control_jump);
}

TEST(ClosedLoop, RejectsBadSteps) {
    const auto& [sys, ric] = fixture();
    const Vector y0 = Vector::Zero(sys.n_state), g0 = Vector::Zero(sys.n_control);
    EXPECT_THROW(closed_loop(sys, ric, y0, g0, 3 * ric.dt), InvalidArgument);
    EXPECT_THROW(closed_loop(sys, ric, y0, g0, 1.5 * ric.dt), InvalidArgument);
    EXPECT_THROW(closed_loop_from(sys, ric, ric.dt, y0), InvalidArgument);
    EXPECT_THROW(closed_loop(sys, ric, Vector::Zero(2), g0), InvalidArgument);
}

TEST(MatchG0, ZeroStateGivesZero) {
    const auto& [sys, ric] = fixture();
    const auto m = match_g0(sys, ric, Vector::Zero(sys.n_state));
    EXPECT_EQ(m.g0.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(m.residual, 0.0);
}

TEST(MatchG0, SynthesizedControlStartsAtG0) {
    std::mt19937_64 rng(5);
    const auto& [sys, ric] = fixture();
    for (int k = 0; k < 3; ++k) {
        const Vector y0 = randn(rng, sys.n_state);
        const auto m = match_g0(sys, ric, y0);
        EXPECT_EQ(m.convention, "(I - F B1) g0 = -F y0");
        EXPECT_LE(m.residual, 1e-10 * (1 + u_norm(sys, m.g0)));
        EXPECT_GT(m.alternative_residual, 1e3 * m.residual);
        const auto run = closed_loop(sys, ric, y0, m.g0);
        EXPECT_LE(u_norm(sys, Vector(run.control.values.col(0) - m.g0)), 1e-6 * (1 + u_norm(sys, m.g0)));
        EXPECT_LE((run.trajectory.at(0) - y0).cwiseAbs().maxCoeff(), 1e-10 * (1 + y0.cwiseAbs().maxCoeff()));
    }
}

TEST(OptimizeG0, ZeroStateGivesZero) {
    const auto& [sys, ric] = fixture();
    const auto opt = optimize_g0(sys, ric, Vector::Zero(sys.n_state), 1.0);
    EXPECT_EQ(opt.g_star.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(opt.classification, G0Class::interior_stationary);
    EXPECT_EQ(opt.value, 0.0);
}

TEST(OptimizeG0, InteriorIsStationaryAndMinimal) {
    std::mt19937_64 rng(6);
    const auto& [sys, ric] = fixture();
    const Vector y0 = randn(rng, sys.n_state);
    const auto opt = optimize_g0(sys, ric, y0, 1e6);
    ASSERT_EQ(opt.classification, G0Class::interior_stationary);
    EXPECT_LE(opt.stationarity_residual, 1e-8 * (1 + opt.value));
    for (int k = 0; k < 20; ++k) {
        const Vector g = opt.g_star + 0.1 * randn(rng, sys.n_control);
        EXPECT_GE(riccati_cost(ric, 0, y0 - sys.B1 * g), opt.value * (1 - 1e-12));
    }
}

TEST(OptimizeG0, BoundaryLandsOnSphere) {
    std::mt19937_64 rng(7);
    const auto& [sys, ric] = fixture();
    const Vector y0 = randn(rng, sys.n_state);
    const double free_norm = optimize_g0(sys, ric, y0, 1e6).unconstrained_norm;
    ASSERT_GT(free_norm, 0);
    const double radius = 0.5 * free_norm;
    const auto opt = optimize_g0(sys, ric, y0, radius);
    ASSERT_EQ(opt.classification, G0Class::boundary);
    EXPECT_NEAR(opt.norm, radius, 1e-10 * radius);
    for (int k = 0; k < 50; ++k) {
        Vector g = randn(rng, sys.n_control);
        g *= radius * std::uniform_real_distribution<double>(0, 1)(rng) / u_norm(sys, g);
        EXPECT_GE(riccati_cost(ric, 0, y0 - sys.B1 * g), opt.value * (1 - 1e-12));
    }
    EXPECT_THROW(optimize_g0(sys, ric, y0, 0.0), InvalidArgument);
}

TEST(OptimizeG0, SuboptimalityOrdering) {
    std::mt19937_64 rng(8);
    const auto& [sys, ric] = fixture();
    for (int k = 0; k < 3; ++k) {
        const Vector y0 = randn(rng, sys.n_state);
        const auto matched = match_g0(sys, ric, y0);
        const auto opt = optimize_g0(sys, ric, y0, 1e6);
        const double j_opt = closed_loop(sys, ric, y0, opt.g_star).cost;
        const double j_match = closed_loop(sys, ric, y0, matched.g0).cost;
        const double j_zero = closed_loop(sys, ric, y0, Vector::Zero(sys.n_control)).cost;
        EXPECT_LE(j_opt, j_match * (1 + 1e-9));
        EXPECT_LE(j_opt, j_zero * (1 + 1e-9));
    }
}
