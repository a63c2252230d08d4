#include <doctest.h>

#include <cmath>

#include "epivolt/early_phase.hpp"
#include "epivolt/volterra.hpp"
#include "../support/oracles.hpp"

using namespace epivolt;

namespace {

InfectivityLaw markov_law(double beta, double gamma) {
    LawOptions opts;
    opts.tail_mass = 1e-10;
    return make_law_constant(beta, JointDurationLaw::independent(DurationLaw::deterministic(0.0),
                                                                 DurationLaw::exponential(gamma)),
                             opts);
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

} // namespace

TEST_CASE("no transmission kernel: force is the initial forcing alone") {
    // lambda == 0 via a zero-duration law is degenerate; emulate with a spec
    // whose transmission mean is zero but whose initial curve is not
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.1);
    std::vector<double> zeros(spec.lambda_mean.size(), 0.0);
    spec.lambda_mean = TabulatedCurve(spec.lambda_mean.dt(), std::move(zeros));
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 5.0;
    auto traj = solve(spec, cfg);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        double t = traj.t[i];
        CHECK(traj.Ifrak[i] == doctest::Approx(0.1 * 2.0 * std::exp(-t)).epsilon(1e-9));
    }
    // S decreases only through the initial-infectivity integral
    CHECK(traj.S.back() > 1.0 - 0.1 - 0.1 * 2.0);
}

TEST_CASE("merged solve matches the classical SIR ODE for the Markov law") {
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.horizon = 20.0;
    cfg.grid_step = 0.1;
    auto traj = solve(spec, cfg);
    auto ode = oracles::rk4_sir(2.0, 1.0, 0.05, 20.0, 1e-4);
    double dS = 0.0, dI = 0.0, dR = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        dS = std::max(dS, std::abs(traj.S[i] - ode.interp(ode.S, traj.t[i])));
        dI = std::max(dI, std::abs(traj.I[i] - ode.interp(ode.I, traj.t[i])));
        dR = std::max(dR, std::abs(traj.R[i] - ode.interp(ode.R, traj.t[i])));
    }
    CHECK(dS < 1e-4);
    CHECK(dI < 1e-4);
    CHECK(dR < 1e-4);
    // the Markov identity Ifrak = beta * I
    for (std::size_t i = 0; i < traj.size(); ++i)
        CHECK(traj.Ifrak[i] == doctest::Approx(2.0 * traj.I[i]).epsilon(1e-3));
}

TEST_CASE("seir solve with zeta = 0 equals the merged solve") {
    auto law = markov_law(1.5, 0.8);
    auto spec_seir = limit_spec_from_law(law, LimitVariant::seir, 0.0, 0.05);
    auto spec_merged = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 15.0;
    cfg.grid_step = 0.1;
    auto a = solve(spec_seir, cfg);
    auto b = solve(spec_merged, cfg);
    CHECK(sup_diff(a.S, b.S) < 1e-10);
    CHECK(sup_diff(a.Ifrak, b.Ifrak) < 1e-10);
    // with zeta = 0, E stays empty and I coincides
    CHECK(sup_diff(a.E, std::vector<double>(a.size(), 0.0)) < 1e-10);
    CHECK(sup_diff(a.I, b.I) < 1e-10);
    CHECK(sup_diff(a.R, b.R) < 1e-10);
}

TEST_CASE("balance holds to 1e-8 on every output point") {
    LawOptions opts;
    opts.grid_step = 0.01;
    auto law = make_law_constant(1.2,
                                 JointDurationLaw::independent(DurationLaw::beta_affine(2, 2, 1, 2),
                                                               DurationLaw::beta_affine(2, 2, 2, 3)),
                                 opts);
    for (auto variant : {LimitVariant::seir, LimitVariant::merged}) {
        auto spec = limit_spec_from_law(law, variant, 0.0, 0.03);
        SolverConfig cfg;
        cfg.dt = 0.01;
        cfg.horizon = 30.0;
        cfg.grid_step = 0.25;
        auto traj = solve(spec, cfg);
        for (std::size_t i = 0; i < traj.size(); ++i) {
            CHECK(std::abs(traj.S[i] + traj.E[i] + traj.I[i] + traj.R[i] - 1.0) < 1e-8);
            CHECK(traj.Ifrak[i] >= -1e-12);
            CHECK(traj.S[i] >= -1e-12);
            CHECK(traj.S[i] <= 1.0 + 1e-12);
        }
        for (std::size_t i = 1; i < traj.size(); ++i) {
            CHECK(traj.S[i] <= traj.S[i - 1] + 1e-12);
            CHECK(traj.R[i] >= traj.R[i - 1] - 1e-12);
        }
    }
}

TEST_CASE("sis: pure recovery when the kernel vanishes") {
    // the whole law's mean vanishes, including the initial curve
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::sis, 0.0, 0.2);
    std::vector<double> zeros(spec.lambda_mean.size(), 0.0);
    spec.lambda_mean = TabulatedCurve(spec.lambda_mean.dt(), zeros);
    spec.lambda0I_mean = TabulatedCurve(spec.lambda_mean.dt(), std::move(zeros));
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 8.0;
    auto traj = solve(spec, cfg);
    for (std::size_t i = 0; i < traj.size(); ++i)
        CHECK(traj.I[i] == doctest::Approx(0.2 * std::exp(-traj.t[i])).epsilon(1e-6));
}

TEST_CASE("sis: endemic equilibrium 1 - gamma/lambda") {
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::sis, 0.0, 0.1);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 100.0;
    cfg.grid_step = 1.0;
    auto traj = solve(spec, cfg);
    CHECK(traj.I.back() == doctest::Approx(0.5).epsilon(1e-3));
    // cross-check the whole path against the logistic ODE
    auto ode = oracles::rk4_sis(2.0, 1.0, 0.1, 100.0, 1e-4);
    double d = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i)
        d = std::max(d, std::abs(traj.I[i] - ode.interp(ode.I, traj.t[i])));
    CHECK(d < 1e-3);
}

TEST_CASE("sirs: immunity of length zero reduces to sis") {
    // infectious period: exponential(1); immune period: zero
    LawOptions opts;
    opts.tail_mass = 1e-10;
    auto law = make_law_constant(2.0,
                                 JointDurationLaw::independent(DurationLaw::exponential(1.0),
                                                               DurationLaw::deterministic(0.0)),
                                 opts);
    // under the sirs reading, zeta = infectious, eta = immune; lambda must be
    // positive on [0, zeta): reuse the sis-style law for the mean
    auto sis_law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(sis_law, LimitVariant::sirs, 0.0, 0.1);
    spec.G = law.durations().G;      // c.d.f. of the infectious period
    spec.Psi = law.durations().Psi;  // immune-phase occupancy: zero here
    spec.G0 = spec.G;
    spec.Psi0 = spec.Psi;
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 40.0;
    cfg.grid_step = 0.5;
    auto sirs = solve(spec, cfg);
    auto sis = solve(limit_spec_from_law(sis_law, LimitVariant::sis, 0.0, 0.1), cfg);
    CHECK(sup_diff(sirs.I, sis.I) < 1e-9);
    for (std::size_t i = 0; i < sirs.size(); ++i) {
        CHECK(sirs.R[i] == doctest::Approx(0.0));
        CHECK(sirs.I[i] + sirs.R[i] <= 1.0 + 1e-12);
    }
}

TEST_CASE("sirs: with a real immune period, I + R stays within [0, 1]") {
    LawOptions opts;
    opts.tail_mass = 1e-10;
    auto dur = JointDurationLaw::independent(DurationLaw::exponential(1.0), DurationLaw::exponential(0.5));
    auto law = make_law_constant(2.0, dur, opts);
    // mean infectivity positive on the infectious period only: constant law
    // with (zeta = infectious period) has the wrong shape, so build it from
    // zeta = 0 with eta = infectious and set the duration tables by hand
    auto sis_law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(sis_law, LimitVariant::sirs, 0.0, 0.1);
    spec.G = law.durations().G;
    spec.Psi = law.durations().Psi;
    spec.G0 = spec.G;
    spec.Psi0 = spec.Psi;
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 60.0;
    cfg.grid_step = 0.5;
    auto traj = solve(spec, cfg);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(traj.I[i] >= -1e-12);
        CHECK(traj.R[i] >= -1e-12);
        CHECK(traj.I[i] + traj.R[i] <= 1.0 + 1e-12);
    }
}

TEST_CASE("uniqueness: small perturbations of the initial data stay small") {
    auto law = markov_law(2.0, 1.0);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 20.0;
    cfg.grid_step = 0.1;
    double delta = 1e-6;
    auto a = solve(limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05), cfg);
    auto b = solve(limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05 + delta), cfg);
    double d = std::max({sup_diff(a.S, b.S), sup_diff(a.I, b.I), sup_diff(a.R, b.R)});
    CHECK(d < 1e4 * delta);  // empirical stability constant for this horizon
    CHECK(d > 0.0);
}

TEST_CASE("reduction identity: constant-lambda Ifrak equals lambda times I") {
    // memoryless constant law reduces to the classical SIR relation
    auto law = markov_law(1.7, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05);
    SolverConfig cfg;
    cfg.dt = 0.005;
    cfg.horizon = 15.0;
    cfg.grid_step = 0.1;
    auto traj = solve(spec, cfg);
    for (std::size_t i = 0; i < traj.size(); ++i)
        CHECK(traj.Ifrak[i] == doctest::Approx(1.7 * traj.I[i]).epsilon(5e-3));
}

TEST_CASE("fixed point reports a useful error when dt is absurd") {
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05);
    SolverConfig cfg;
    cfg.dt = 1.5;  // dt * lambda(0)/2 > 1: no contraction
    cfg.horizon = 40.0;
    cfg.fp_max_iter = 20;
    CHECK_THROWS_AS((void)solve(spec, cfg), SolverError);
}

TEST_CASE("convergence order: smooth Markov kernel is second order") {
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05);
    SolverConfig cfg;
    cfg.dt = 0.08;
    cfg.horizon = 10.0;
    double order = convergence_order(spec, cfg, 3);
    CHECK(order > 1.9);
    CHECK(order < 2.1);
}

TEST_CASE("convergence order: jump kernel still at least first order") {
    auto law = make_law_constant(2.0, JointDurationLaw::independent(DurationLaw::deterministic(0.0),
                                                                    DurationLaw::deterministic(1.0)));
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05);
    SolverConfig cfg;
    cfg.dt = 0.1;  // jump at t = 1 stays on every refined grid
    cfg.horizon = 6.0;
    double order = convergence_order(spec, cfg, 2);
    CHECK(order >= 1.0);
    CHECK(std::isfinite(order));
}

TEST_CASE("convergence order input validation") {
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 0.05);
    SolverConfig cfg;
    cfg.dt = 0.08;
    cfg.horizon = 5.0;
    CHECK_THROWS_AS((void)convergence_order(spec, cfg, 1), std::invalid_argument);
    CHECK(std::isfinite(convergence_order(spec, cfg, 2)));
}

TEST_CASE("initial fraction bounds enforced") {
    auto law = markov_law(2.0, 1.0);
    auto spec = limit_spec_from_law(law, LimitVariant::merged, 0.0, 1.2);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.horizon = 1.0;
    CHECK_THROWS_AS((void)solve(spec, cfg), std::invalid_argument);
    spec.I0 = 0.0;
    CHECK_THROWS_AS((void)solve(spec, cfg), std::invalid_argument);
}
