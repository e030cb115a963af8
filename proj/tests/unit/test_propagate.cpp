#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mgt/propagate.hpp"

using namespace mgt;

namespace {

StateSystem make(int res, PhysicalParams p = {}) { return assemble_system(assemble_fem(build_mesh(1, res)), p); }

Vector randn(std::mt19937_64& rng, Index n) {
    std::normal_distribution<double> d;
    Vector v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

double rel_gap(const Trajectory& a, const Trajectory& b) {
    return max_gap(a, b) / std::max(1e-300, b.states.cwiseAbs().maxCoeff());
}

} // namespace

TEST(PropagateFree, ZeroStaysZero) {
    const auto sys = make(8);
    const auto tr = propagate_free(sys, Vector::Zero(sys.n_state), 1.0, 0.01);
    EXPECT_EQ(tr.n_times(), 101);
    EXPECT_EQ(tr.states.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PropagateFree, KernelStateIsStationary) {
    const auto sys = make(8);
    Vector e = Vector::Zero(sys.n_state);
    e.head(sys.n_nodes).setConstant(0.7);
    const auto tr = propagate_free(sys, e, 1.0, auto_dt(sys, 1.0));
    for (Index k = 0; k < tr.n_times(); ++k) EXPECT_LE((tr.at(k) - e).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PropagateFree, DecayMatchesSpectralAbscissa) {
    std::mt19937_64 rng(1);
    const auto sys = make(12);
    const auto spec = spectrum(sys);
    ASSERT_TRUE(spec.stable());
    const double T = 30;
    const auto tr = propagate_free(sys, randn(rng, sys.n_state), T, auto_dt(sys, T));
    const auto energy = decaying_energy(sys, tr);
    const double rate = fitted_decay_rate(tr.times, energy, T / 2);
    EXPECT_LT(rate, 0);
    EXPECT_NEAR(rate, spec.abscissa, 0.1 * std::abs(spec.abscissa));
}

TEST(PropagateFree, FourthOrderConvergence) {
    std::mt19937_64 rng(2);
    const auto sys = make(8);
    const Vector y0 = randn(rng, sys.n_state);
    // Well inside the asymptotic regime: rho(A) dt = 0.125 at the coarsest step.
    const double dt = 1.0 / std::ceil(8.0 * spectral_radius(sys.A));
    const Vector ref = propagate_free(sys, y0, 1.0, dt / 32).states.rightCols(1);
    std::vector<double> err;
    for (double h : {dt, dt / 2, dt / 4})
        err.push_back((propagate_free(sys, y0, 1.0, h).states.rightCols(1) - ref).cwiseAbs().maxCoeff());
    EXPECT_NEAR(err[0] / err[1], 16.0, 3.0);
    EXPECT_NEAR(err[1] / err[2], 16.0, 3.0);
}

TEST(PropagateFree, BlowupNamesStepSize) {
    const auto sys = make(16);
    const double rho = spectral_radius(sys.A);
    std::mt19937_64 rng(3);
    try {
        propagate_free(sys, randn(rng, sys.n_state), 2000.0 / rho, 10.0 / rho);
        FAIL() << "expected a blow-up";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("spectral radius * dt"), std::string::npos) << e.what();
    }
}

TEST(PropagateFree, RejectsBadInput) {
    const auto sys = make(4);
    EXPECT_THROW(propagate_free(sys, Vector::Zero(3), 1.0, 0.1), InvalidArgument);
    EXPECT_THROW(propagate_free(sys, Vector::Zero(sys.n_state), 1.0, 0.0), InvalidArgument);
    EXPECT_THROW(propagate_free(sys, Vector::Zero(sys.n_state), 1.0, -0.1), InvalidArgument);
}

TEST(Spectrum, KernelAndStabilityThreshold) {
    const auto stable = spectrum(make(16, {1, 2, 1, 1}));
    EXPECT_LE(std::abs(stable.kernel_eigenvalue), 1e-8);
    EXPECT_LE(stable.kernel_residual, 1e-10);
    EXPECT_LT(stable.abscissa, 0);
    const auto unstable = spectrum(make(16, {1, 0.5, 1, 1}));
    EXPECT_GT(unstable.abscissa, 0);
    EXPECT_FALSE(unstable.stable());
    for (std::size_t i = 1; i < stable.eigenvalues.size(); ++i)
        EXPECT_GE(stable.eigenvalues[i - 1].real(), stable.eigenvalues[i].real());
}

TEST(PropagateControl, ZeroControlMatchesFree) {
    std::mt19937_64 rng(4);
    const auto sys = make(8);
    const Vector y0 = randn(rng, sys.n_state);
    const double dt = auto_dt(sys, 1.0);
    const auto free = propagate_free(sys, y0, 1.0, dt);
    const auto g = ControlSignal::smooth({0.0, 1.0}, Matrix::Zero(1, 2), Matrix::Zero(1, 2));
    EXPECT_LE(max_gap(propagate_smooth_control(sys, y0, g, dt), free), 1e-14);
    EXPECT_LE(max_gap(propagate_L2_control(sys, y0, ControlSignal::zero(1, 1.0), dt), free), 1e-14);
}

TEST(PropagateControl, ConstantControlAgreesAcrossFormulations) {
    std::mt19937_64 rng(5);
    const auto sys = make(8);
    const Vector y0 = randn(rng, sys.n_state);
    const double dt = auto_dt(sys, 1.0);
    Matrix v = Matrix::Constant(1, 2, 0.8);
    const auto smooth = propagate_smooth_control(sys, y0, ControlSignal::smooth({0.0, 1.0}, v, Matrix::Zero(1, 2)), dt);
    const auto mild = propagate_L2_control(sys, y0, ControlSignal::sampled({0.0, 1.0}, v), dt);
    EXPECT_LE(rel_gap(mild, smooth), 1e-12);
    EXPECT_LE((mild.at(0) - y0).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PropagateControl, SmoothSineAgreesWithMild) {
    std::mt19937_64 rng(6);
    const auto sys = make(8);
    const Vector y0 = randn(rng, sys.n_state);
    const double w = 2 * std::numbers::pi;
    const auto g = ControlSignal::from_function(
        1, 1.0, 401, [&](double t) { return Vector::Constant(1, std::sin(w * t)); },
        [&](double t) { return Vector::Constant(1, w * std::cos(w * t)); });
    const double dt = 1e-3;
    const auto smooth = propagate_smooth_control(sys, y0, g, dt);
    const auto mild = propagate_L2_control(sys, y0, g, dt);
    EXPECT_EQ(smooth.formulation, Formulation::ode_smooth);
    EXPECT_EQ(mild.formulation, Formulation::mild_L2);
    EXPECT_LE(rel_gap(mild, smooth), 1e-6);
}

TEST(PropagateControl, StepControlJumpsByB1) {
    const auto sys = make(8);
    const double T = 1.0, amp = 1.5;
    ControlSignal g = ControlSignal::sampled({0.0, T / 2, T}, (Matrix(1, 3) << 0, 0, amp).finished());
    g.interpolation = Interpolation::step;
    std::vector<double> jump_err, w_step;
    for (double dt : {1e-2, 5e-3}) {
        const auto run = propagate_L2_control_detail(sys, Vector::Zero(sys.n_state), g, dt);
        const Index k = static_cast<Index>(std::llround(T / 2 / dt));
        const Vector dy = run.y.at(k + 1) - run.y.at(k);
        jump_err.push_back((dy - sys.B1.col(0) * amp).cwiseAbs().maxCoeff());
        w_step.push_back((run.w.at(k + 1) - run.w.at(k)).cwiseAbs().maxCoeff());
    }
    const double scale = (sys.B1.col(0) * amp).cwiseAbs().maxCoeff();
    EXPECT_LE(jump_err[1], 0.6 * jump_err[0] + 1e-14);
    EXPECT_LE(w_step[1], 0.6 * w_step[0] + 1e-14);
    EXPECT_LE(w_step[1], 0.1 * scale);
}

TEST(PropagateControl, SmoothNeedsDerivative) {
    const auto sys = make(4);
    const auto g = ControlSignal::sampled({0.0, 1.0}, Matrix::Ones(1, 2));
    EXPECT_THROW(propagate_smooth_control(sys, Vector::Zero(sys.n_state), g, 0.01), InvalidArgument);
    const auto bad = ControlSignal::smooth({0.0, 1.0}, (Matrix(1, 2) << 0, 1).finished(), Matrix::Zero(1, 2));
    EXPECT_THROW(propagate_smooth_control(sys, Vector::Zero(sys.n_state), bad, 0.01), InvalidArgument);
}

TEST(ControlSignal, Validation) {
    EXPECT_THROW(ControlSignal::sampled({0.0}, Matrix::Zero(1, 1)), InvalidArgument);
    EXPECT_THROW(ControlSignal::sampled({0.0, 0.0}, Matrix::Zero(1, 2)), InvalidArgument);
    EXPECT_THROW(ControlSignal::sampled({0.1, 1.0}, Matrix::Zero(1, 2)), InvalidArgument);
    EXPECT_THROW(ControlSignal::sampled({0.0, 1.0}, Matrix::Zero(1, 3)), InvalidArgument);
    const auto g = ControlSignal::from_function(1, 1.0, 5, [](double t) { return Vector::Constant(1, t * t); },
                                                [](double t) { return Vector::Constant(1, 2 * t); });
    EXPECT_NEAR(g.value(0.3)(0), 0.09, 1e-14);
    EXPECT_NEAR(g.rate(0.3)(0), 0.6, 1e-14);
}

TEST(ZSystem, ZeroDataAndAgreement) {
    std::mt19937_64 rng(7);
    for (double tau : {1.0, 0.6}) {
        const auto sys = make(8, {tau, 2.2, 1.1, 0.9});
        const Index n = sys.n_nodes;
        const double dt = auto_dt(sys, 1.0) / 2;
        const Vector zero = Vector::Zero(n);
        EXPECT_EQ(propagate_z_system(sys, zero, zero, zero, 1.0, dt).states.cwiseAbs().maxCoeff(), 0.0);
        const Vector y0 = randn(rng, sys.n_state);
        const auto z = propagate_z_system(sys, y0.segment(0, n), y0.segment(n, n), y0.segment(2 * n, n), 1.0, dt);
        EXPECT_LE(rel_gap(z, propagate_free(sys, y0, 1.0, dt)), 1e-6);
    }
}

TEST(ZSystem, GammaZeroIsAllowed) {
    const auto sys = make(6, {1, 1, 1, 1});
    EXPECT_NEAR(sys.params.gamma(), 0.0, 0.0);
    const Index n = sys.n_nodes;
    const Vector u = Vector::LinSpaced(n, 0, 1);
    const auto z = propagate_z_system(sys, u, Vector::Zero(n), Vector::Zero(n), 0.5, auto_dt(sys, 0.5));
    EXPECT_TRUE(z.states.allFinite());
}
