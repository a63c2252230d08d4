#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "infectivity.hpp"
#include "simulation.hpp"
#include "tabulated.hpp"

namespace epivolt {

enum class LimitVariant { seir, merged, sis, sirs };

/// Inputs of the deterministic limit system: mean infectivity curves, the
/// duration c.d.f.s the variant needs, and the initial infected fractions.
/// In the sirs variant the roles shift: zeta is the infectious period (G
/// governs I) and eta the immune period (Psi governs R).
struct LimitModelSpec {
    LimitVariant variant = LimitVariant::merged;
    TabulatedCurve lambda_mean;    // mean infectivity of the newly infected
    TabulatedCurve lambda0_mean;   // initially exposed (seir forcing)
    TabulatedCurve lambda0I_mean;  // initially infectious / initially infected
    TabulatedCurve G, Phi, Psi;    // seir tables
    TabulatedCurve G0, Phi0, Psi0, F0I;
    TabulatedCurve F, F0;          // merged-model total-period c.d.f.s
    double E0 = 0.0, I0 = 0.0;     // initial fractions

    void validate() const {
        if (E0 < 0.0 || I0 < 0.0 || !(E0 + I0 > 0.0) || !(E0 + I0 < 1.0))
            throw std::invalid_argument("limit model: initial fractions must satisfy 0 < E(0)+I(0) < 1");
    }
};

/// Fresh-at-time-zero assembly: every initially infected individual carries a
/// newly drawn trajectory, so the initial curves coincide with the base ones.
inline LimitModelSpec limit_spec_from_law(const InfectivityLaw& law, LimitVariant variant, double E0,
                                          double I0) {
    LimitModelSpec spec;
    spec.variant = variant;
    spec.lambda_mean = law.mean();
    spec.lambda0_mean = law.mean();
    spec.lambda0I_mean = law.mean();
    const DurationDistributions& d = law.durations();
    spec.G = d.G;
    spec.Phi = d.Phi;
    spec.Psi = d.Psi;
    spec.G0 = d.G0;
    spec.Phi0 = d.Phi0;
    spec.Psi0 = d.Psi0;
    spec.F0I = d.F0I;
    spec.F = d.F;
    spec.F0 = d.F;
    spec.E0 = E0;
    spec.I0 = I0;
    return spec;
}

struct SolverConfig {
    double dt = 1e-2;
    double horizon = 0.0;
    double grid_step = 0.0;  // output step; 0 means dt (must be a multiple of dt)
    double fp_tol = 1e-10;
    std::size_t fp_max_iter = 200;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Kernel sampled on the solver grid, with its trailing-zero support trimmed.
// At a jump that lands on a grid node the sample takes the average of the two
// limits: that is the composite trapezoid with a panel split at the jump, so
// grid-aligned discontinuities keep second order instead of smearing.
struct SampledKernel {
    std::vector<double> v;
    std::size_t support = 0;  // last index with a nonzero value

    static SampledKernel from(const TabulatedCurve& c, double dt, std::size_t n) {
        SampledKernel k;
        k.v.resize(n + 1, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            double t = static_cast<double>(i) * dt;
            k.v[i] = t >= c.end_time() ? c.value(c.size() - 1) : c.eval(t);
        }
        for (const auto& j : c.jumps()) {
            double x = static_cast<double>(j.node) * c.dt() / dt;
            double r = std::round(x);
            if (std::abs(x - r) > 1e-9 * std::max(1.0, x)) continue;
            auto idx = static_cast<std::size_t>(r);
            if (idx <= n) k.v[idx] = 0.5 * (j.left + c.value(j.node));
        }
        for (std::size_t i = 0; i <= n; ++i)
            if (k.v[i] != 0.0) k.support = i;
        return k;
    }

    static SampledKernel complement_of(const TabulatedCurve& cdf, double dt, std::size_t n) {
        SampledKernel k = from(cdf, dt, n);
        for (auto& x : k.v) x = 1.0 - x;
        k.support = 0;
        for (std::size_t i = 0; i < k.v.size(); ++i)
            if (k.v[i] != 0.0) k.support = i;
        return k;
    }
};

// Trapezoid convolution (kernel * K)(t_n) over [0, t_n], restricted to the
// kernel's support window. Empty at n = 0.
inline double conv_at(const SampledKernel& kern, const std::vector<double>& K, std::size_t n, double dt) {
    if (n == 0) return 0.0;
    std::size_t u_max = std::min(n, kern.support);
    double sum = 0.0;
    for (std::size_t u = 0; u <= u_max; ++u) {
        double w = (u == 0 || u == n) ? 0.5 : 1.0;
        sum += w * kern.v[u] * K[n - u];
    }
    return sum * dt;
}

// Known part of the convolution at step n (lags u >= 1), for the implicit
// solve of the u = 0 term.
inline double conv_known(const SampledKernel& kern, const std::vector<double>& K, std::size_t n, double dt) {
    std::size_t u_max = std::min(n, kern.support);
    double sum = 0.0;
    for (std::size_t u = 1; u <= u_max; ++u) {
        double w = (u == n) ? 0.5 : 1.0;
        sum += w * kern.v[u] * K[n - u];
    }
    return sum * dt;
}

struct GridPlan {
    std::size_t n_steps = 0;
    std::size_t out_every = 1;

    static GridPlan make(const SolverConfig& cfg) {
        if (!(cfg.dt > 0.0)) throw std::invalid_argument("solver: dt must be positive");
        if (!(cfg.horizon > 0.0)) throw std::invalid_argument("solver: horizon must be positive");
        GridPlan g;
        g.n_steps = static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
        double out = cfg.grid_step > 0.0 ? cfg.grid_step : cfg.dt;
        double ratio = out / cfg.dt;
        if (std::abs(ratio - std::round(ratio)) > 1e-9)
            throw std::invalid_argument("solver: grid_step must be an integer multiple of dt");
        g.out_every = static_cast<std::size_t>(std::llround(ratio));
        return g;
    }
};

inline double forcing_value(const TabulatedCurve& c, double weight, double t) {
    if (weight == 0.0) return 0.0;
    return weight * (t >= c.end_time() ? c.value(c.size() - 1) : c.eval(t));
}

} // namespace detail

/// Full SEIR limit: solves the closed (S, Ifrak) pair by trapezoid quadrature
/// with a per-step fixed-point iteration, then evaluates E, I, R from the
/// stored incidence K = S * Ifrak. The output satisfies S+E+I+R = 1 node-wise
/// up to rounding because the three output kernels sum to one exactly.
inline Trajectory solve_seir(const LimitModelSpec& spec, const SolverConfig& cfg) {
    spec.validate();
    auto plan = detail::GridPlan::make(cfg);
    const double dt = cfg.dt;
    const std::size_t n = plan.n_steps;

    auto lam = detail::SampledKernel::from(spec.lambda_mean, dt, n);
    auto Gc = detail::SampledKernel::complement_of(spec.G, dt, n);
    auto Psi = detail::SampledKernel::from(spec.Psi, dt, n);
    auto Phic = detail::SampledKernel::complement_of(spec.Phi, dt, n);
    auto G0c = detail::SampledKernel::complement_of(spec.G0, dt, n);
    auto Psi0 = detail::SampledKernel::from(spec.Psi0, dt, n);
    auto F0Ic = detail::SampledKernel::complement_of(spec.F0I, dt, n);

    const double S_init = 1.0 - spec.E0 - spec.I0;
    std::vector<double> S(n + 1), If(n + 1), K(n + 1), cumK(n + 1, 0.0);

    double C_prev = 0.0;  // trapezoid cumulative of K through the previous node
    for (std::size_t m = 0; m <= n; ++m) {
        double t = static_cast<double>(m) * dt;
        double forcing = detail::forcing_value(spec.lambda0_mean, spec.E0, t) +
                         detail::forcing_value(spec.lambda0I_mean, spec.I0, t);
        if (m == 0) {
            If[0] = forcing;
            S[0] = S_init;
            K[0] = S[0] * If[0];
            cumK[0] = 0.0;
            continue;
        }
        double known = detail::conv_known(lam, K, m, dt);
        double k_guess = K[m - 1];
        double S_m = S[m - 1], If_m = If[m - 1];
        bool converged = false;
        for (std::size_t it = 0; it < cfg.fp_max_iter; ++it) {
            S_m = S_init - (C_prev + 0.5 * dt * (K[m - 1] + k_guess));
            If_m = forcing + known + 0.5 * dt * lam.v[0] * k_guess;
            double k_next = S_m * If_m;
            if (std::abs(k_next - k_guess) <= cfg.fp_tol * std::max(1.0, std::abs(k_guess))) {
                k_guess = k_next;
                converged = true;
                break;
            }
            k_guess = k_next;
        }
        if (!converged)
            throw SolverError("volterra: fixed point stalled at t=" + std::to_string(t) +
                              " (dt too large: contraction ~ dt*lambda(0)/2)");
        K[m] = k_guess;
        S[m] = S_init - (C_prev + 0.5 * dt * (K[m - 1] + K[m]));
        If[m] = forcing + known + 0.5 * dt * lam.v[0] * K[m];
        C_prev += 0.5 * dt * (K[m - 1] + K[m]);
        cumK[m] = C_prev;
    }

    Trajectory traj;
    for (std::size_t m = 0; m <= n; m += plan.out_every) {
        double t = static_cast<double>(m) * dt;
        double eN = spec.E0 * G0c.v[m] + detail::conv_at(Gc, K, m, dt);
        double iN = spec.E0 * Psi0.v[m] + spec.I0 * F0Ic.v[m] + detail::conv_at(Psi, K, m, dt);
        double rN = spec.E0 * (1.0 - G0c.v[m] - Psi0.v[m]) + spec.I0 * (1.0 - F0Ic.v[m]) +
                    (cumK[m] - detail::conv_at(Phic, K, m, dt));
        traj.t.push_back(t);
        traj.S.push_back(S[m]);
        traj.Ifrak.push_back(If[m]);
        traj.E.push_back(eN);
        traj.I.push_back(iN);
        traj.R.push_back(rN);
        traj.A.push_back(cumK[m]);
    }
    return traj;
}

/// Merged SEIR/SIR limit: E is folded into I, which is governed by the
/// complement of the total-period c.d.f. F.
inline Trajectory solve_merged(const LimitModelSpec& spec, const SolverConfig& cfg) {
    spec.validate();
    if (spec.E0 != 0.0)
        throw std::invalid_argument("solve_merged: merged model carries initials in I0 only");
    auto plan = detail::GridPlan::make(cfg);
    const double dt = cfg.dt;
    const std::size_t n = plan.n_steps;

    auto lam = detail::SampledKernel::from(spec.lambda_mean, dt, n);
    auto Fc = detail::SampledKernel::complement_of(spec.F, dt, n);
    auto F0c = detail::SampledKernel::complement_of(spec.F0, dt, n);

    const double S_init = 1.0 - spec.I0;
    std::vector<double> S(n + 1), If(n + 1), K(n + 1), cumK(n + 1, 0.0);
    double C_prev = 0.0;
    for (std::size_t m = 0; m <= n; ++m) {
        double t = static_cast<double>(m) * dt;
        double forcing = detail::forcing_value(spec.lambda0I_mean, spec.I0, t);
        if (m == 0) {
            If[0] = forcing;
            S[0] = S_init;
            K[0] = S[0] * If[0];
            continue;
        }
        double known = detail::conv_known(lam, K, m, dt);
        double k_guess = K[m - 1];
        bool converged = false;
        for (std::size_t it = 0; it < cfg.fp_max_iter; ++it) {
            double S_m = S_init - (C_prev + 0.5 * dt * (K[m - 1] + k_guess));
            double If_m = forcing + known + 0.5 * dt * lam.v[0] * k_guess;
            double k_next = S_m * If_m;
            if (std::abs(k_next - k_guess) <= cfg.fp_tol * std::max(1.0, std::abs(k_guess))) {
                k_guess = k_next;
                converged = true;
                break;
            }
            k_guess = k_next;
        }
        if (!converged)
            throw SolverError("volterra: fixed point stalled at t=" + std::to_string(t) +
                              " (dt too large: contraction ~ dt*lambda(0)/2)");
        K[m] = k_guess;
        S[m] = S_init - (C_prev + 0.5 * dt * (K[m - 1] + K[m]));
        If[m] = forcing + known + 0.5 * dt * lam.v[0] * K[m];
        C_prev += 0.5 * dt * (K[m - 1] + K[m]);
        cumK[m] = C_prev;
    }

    Trajectory traj;
    for (std::size_t m = 0; m <= n; m += plan.out_every) {
        double conv_fc = detail::conv_at(Fc, K, m, dt);
        double iN = spec.I0 * F0c.v[m] + conv_fc;
        double rN = spec.I0 * (1.0 - F0c.v[m]) + (cumK[m] - conv_fc);
        traj.t.push_back(static_cast<double>(m) * dt);
        traj.S.push_back(S[m]);
        traj.Ifrak.push_back(If[m]);
        traj.E.push_back(0.0);
        traj.I.push_back(iN);
        traj.R.push_back(rN);
        traj.A.push_back(cumK[m]);
    }
    return traj;
}

/// Generalized SIS limit: susceptibles are 1 - I, recovery returns to S.
inline Trajectory solve_sis(const LimitModelSpec& spec, const SolverConfig& cfg) {
    spec.validate();
    auto plan = detail::GridPlan::make(cfg);
    const double dt = cfg.dt;
    const std::size_t n = plan.n_steps;

    auto lam = detail::SampledKernel::from(spec.lambda_mean, dt, n);
    auto Fc = detail::SampledKernel::complement_of(spec.F, dt, n);
    auto F0Ic = detail::SampledKernel::complement_of(spec.F0I, dt, n);

    std::vector<double> I(n + 1), If(n + 1), K(n + 1), cumK(n + 1, 0.0);
    double C_prev = 0.0;
    for (std::size_t m = 0; m <= n; ++m) {
        double t = static_cast<double>(m) * dt;
        double forcing = detail::forcing_value(spec.lambda0I_mean, spec.I0, t);
        if (m == 0) {
            If[0] = forcing;
            I[0] = spec.I0;
            K[0] = (1.0 - I[0]) * If[0];
            continue;
        }
        double known_If = detail::conv_known(lam, K, m, dt);
        double known_I = detail::conv_known(Fc, K, m, dt);
        double k_guess = K[m - 1];
        bool converged = false;
        double If_m = If[m - 1], I_m = I[m - 1];
        for (std::size_t it = 0; it < cfg.fp_max_iter; ++it) {
            If_m = forcing + known_If + 0.5 * dt * lam.v[0] * k_guess;
            I_m = spec.I0 * F0Ic.v[m] + known_I + 0.5 * dt * Fc.v[0] * k_guess;
            double k_next = (1.0 - I_m) * If_m;
            if (std::abs(k_next - k_guess) <= cfg.fp_tol * std::max(1.0, std::abs(k_guess))) {
                k_guess = k_next;
                converged = true;
                break;
            }
            k_guess = k_next;
        }
        if (!converged) throw SolverError("volterra(sis): fixed point stalled at t=" + std::to_string(t));
        K[m] = k_guess;
        If[m] = If_m;
        I[m] = I_m;
        C_prev += 0.5 * dt * (K[m - 1] + K[m]);
        cumK[m] = C_prev;
    }

    Trajectory traj;
    for (std::size_t m = 0; m <= n; m += plan.out_every) {
        traj.t.push_back(static_cast<double>(m) * dt);
        traj.S.push_back(1.0 - I[m]);
        traj.Ifrak.push_back(If[m]);
        traj.E.push_back(0.0);
        traj.I.push_back(I[m]);
        traj.R.push_back(0.0);
        traj.A.push_back(cumK[m]);
    }
    return traj;
}

/// Generalized SIRS limit: zeta is the infectious period (kernel G^c for I),
/// eta the immune period (kernel Psi for R); immunity waning returns to S.
inline Trajectory solve_sirs(const LimitModelSpec& spec, const SolverConfig& cfg) {
    spec.validate();
    auto plan = detail::GridPlan::make(cfg);
    const double dt = cfg.dt;
    const std::size_t n = plan.n_steps;

    auto lam = detail::SampledKernel::from(spec.lambda_mean, dt, n);
    auto Gc = detail::SampledKernel::complement_of(spec.G, dt, n);
    auto Psi = detail::SampledKernel::from(spec.Psi, dt, n);
    auto G0c = detail::SampledKernel::complement_of(spec.G0, dt, n);
    auto Psi0 = detail::SampledKernel::from(spec.Psi0, dt, n);

    std::vector<double> I(n + 1), Rv(n + 1), If(n + 1), K(n + 1), cumK(n + 1, 0.0);
    double C_prev = 0.0;
    for (std::size_t m = 0; m <= n; ++m) {
        double t = static_cast<double>(m) * dt;
        double forcing = detail::forcing_value(spec.lambda0I_mean, spec.I0, t);
        if (m == 0) {
            If[0] = forcing;
            I[0] = spec.I0;
            Rv[0] = 0.0;
            K[0] = (1.0 - I[0] - Rv[0]) * If[0];
            continue;
        }
        double known_If = detail::conv_known(lam, K, m, dt);
        double known_I = detail::conv_known(Gc, K, m, dt);
        double known_R = detail::conv_known(Psi, K, m, dt);
        double k_guess = K[m - 1];
        bool converged = false;
        double If_m = If[m - 1], I_m = I[m - 1], R_m = Rv[m - 1];
        for (std::size_t it = 0; it < cfg.fp_max_iter; ++it) {
            If_m = forcing + known_If + 0.5 * dt * lam.v[0] * k_guess;
            I_m = spec.I0 * G0c.v[m] + known_I + 0.5 * dt * Gc.v[0] * k_guess;
            R_m = spec.I0 * Psi0.v[m] + known_R + 0.5 * dt * Psi.v[0] * k_guess;
            double k_next = (1.0 - I_m - R_m) * If_m;
            if (std::abs(k_next - k_guess) <= cfg.fp_tol * std::max(1.0, std::abs(k_guess))) {
                k_guess = k_next;
                converged = true;
                break;
            }
            k_guess = k_next;
        }
        if (!converged) throw SolverError("volterra(sirs): fixed point stalled at t=" + std::to_string(t));
        K[m] = k_guess;
        If[m] = If_m;
        I[m] = I_m;
        Rv[m] = R_m;
        C_prev += 0.5 * dt * (K[m - 1] + K[m]);
        cumK[m] = C_prev;
    }

    Trajectory traj;
    for (std::size_t m = 0; m <= n; m += plan.out_every) {
        traj.t.push_back(static_cast<double>(m) * dt);
        traj.S.push_back(1.0 - I[m] - Rv[m]);
        traj.Ifrak.push_back(If[m]);
        traj.E.push_back(0.0);
        traj.I.push_back(I[m]);
        traj.R.push_back(Rv[m]);
        traj.A.push_back(cumK[m]);
    }
    return traj;
}

inline Trajectory solve(const LimitModelSpec& spec, const SolverConfig& cfg) {
    switch (spec.variant) {
        case LimitVariant::seir: return solve_seir(spec, cfg);
        case LimitVariant::merged: return solve_merged(spec, cfg);
        case LimitVariant::sis: return solve_sis(spec, cfg);
        case LimitVariant::sirs: return solve_sirs(spec, cfg);
    }
    throw std::logic_error("solve: unknown variant");
}

/// Richardson estimate of the discretization order from solutions at dt,
/// dt/2, dt/4, ... compared on the coarsest grid (component I).
inline double convergence_order(const LimitModelSpec& spec, const SolverConfig& cfg,
                                std::size_t refinements) {
    if (refinements < 2) throw std::invalid_argument("convergence_order: need at least two refinements");
    std::vector<Trajectory> sols;
    for (std::size_t k = 0; k <= refinements; ++k) {
        SolverConfig c = cfg;
        c.dt = cfg.dt / std::pow(2.0, static_cast<double>(k));
        c.grid_step = cfg.dt;  // common output grid
        sols.push_back(solve(spec, c));
    }
    std::vector<double> errs;
    for (std::size_t k = 0; k + 1 < sols.size(); ++k) {
        double e = 0.0;
        for (std::size_t i = 0; i < sols[k].size(); ++i)
            e = std::max(e, std::abs(sols[k].I[i] - sols[k + 1].I[i]));
        errs.push_back(e);
    }
    double order = 0.0;
    std::size_t m = 0;
    for (std::size_t k = 0; k + 1 < errs.size(); ++k) {
        if (errs[k + 1] <= 0.0) continue;
        order += std::log2(errs[k] / errs[k + 1]);
        ++m;
    }
    if (m == 0) throw SolverError("convergence_order: differences vanished, refine the base dt");
    return order / static_cast<double>(m);
}

} // namespace epivolt
