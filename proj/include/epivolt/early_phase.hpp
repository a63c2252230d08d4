#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "infectivity.hpp"
#include "tabulated.hpp"

namespace epivolt {

/// Basic reproduction number: integral of the mean infectivity curve.
inline double compute_R0(const TabulatedCurve& mean) {
    if (mean.empty()) throw std::invalid_argument("compute_R0: law has no tabulated mean");
    return mean.integral();
}

inline double compute_R0(const InfectivityLaw& law) { return compute_R0(law.mean()); }

/// Malthusian growth rate: the unique root of m(rho) = integral of
/// mean(t) exp(-rho t) dt = 1. m is strictly decreasing, so an expanding
/// bracket inside [-50, 50] /day plus a Newton polish pins the root to
/// |m(rho) - 1| <= 1e-12. Negative for subcritical curves.
inline double solve_rho(const TabulatedCurve& mean) {
    double R0 = compute_R0(mean);
    if (R0 <= 0.0) throw std::invalid_argument("solve_rho: mean curve integrates to zero, no growth rate");
    auto m = [&mean](double rho) { return mean.laplace(rho); };

    const double limit = 50.0;
    double lo = -1.0, hi = 1.0;
    while (m(hi) > 1.0) {
        if (hi >= limit) throw std::runtime_error("solve_rho: no root below +50/day (m(+50) > 1)");
        lo = hi;
        hi = std::min(limit, hi * 2.0);
    }
    while (m(lo) < 1.0) {
        if (lo <= -limit) throw std::runtime_error("solve_rho: no root above -50/day (m(-50) < 1)");
        hi = lo;
        lo = std::max(-limit, lo * 2.0);
    }
    for (int i = 0; i < 200 && hi - lo > 1e-9; ++i) {
        double mid = 0.5 * (lo + hi);
        (m(mid) > 1.0 ? lo : hi) = mid;
    }
    double rho = 0.5 * (lo + hi);
    for (int i = 0; i < 60; ++i) {
        double f = m(rho) - 1.0;
        if (std::abs(f) <= 1e-12) break;
        double df = -mean.laplace_t_moment(rho);
        double step = f / df;
        if (!std::isfinite(step)) break;
        rho -= step;
    }
    return rho;
}

inline double solve_rho(const InfectivityLaw& law) { return solve_rho(law.mean()); }

/// Growth-rate conversion: rho = log(2) / d for a doubling time d (days);
/// negated for a halving time.
inline double doubling_time_to_rho(double d, bool halving = false) {
    if (!(d > 0.0)) throw std::invalid_argument("doubling_time_to_rho: time must be positive");
    double rho = std::log(2.0) / d;
    return halving ? -rho : rho;
}

struct GrowthCalibration {
    double mu;  // scale factor making mu * g_bar satisfy the growth-rate relation
    double R0;
    double Re;  // S(t0) * R0 when a susceptible fraction was supplied
};

/// Reproduction number from an observed growth rate and a known mean-shape
/// curve (known only up to scale): R0 = integral(g) / integral(g e^{-rho t}).
/// Invariant under positive rescaling of the shape.
inline GrowthCalibration R0_from_growth(const TabulatedCurve& g_bar, double rho,
                                        double susceptible_fraction = 1.0) {
    if (g_bar.empty()) throw std::invalid_argument("R0_from_growth: empty shape");
    if (!std::isfinite(rho)) throw std::invalid_argument("R0_from_growth: rho must be finite");
    double denom = g_bar.laplace(rho);
    if (denom == 0.0) throw std::invalid_argument("R0_from_growth: shape integrates to zero against e^{-rho t}");
    double numer = g_bar.integral();
    GrowthCalibration out;
    out.mu = 1.0 / denom;
    out.R0 = numer / denom;
    out.Re = susceptible_fraction * out.R0;
    return out;
}

/// Stable-age quantities of the linearized system at growth rate rho:
/// lambda_rho and F_rho^c are the initial curves under which the system grows
/// as a pure exponential; i_frac and r_frac split the infected mass between
/// the still-infected and the recovered.
struct StableAgeProfiles {
    TabulatedCurve lambda_rho;
    TabulatedCurve F_rho_c;
    double i_frac = 0.0;  // integral of F^c(s) rho e^{-rho s} ds
    double r_frac = 1.0;  // 1 - i_frac
};

namespace detail {

inline TabulatedCurve complement(const TabulatedCurve& cdf) {
    std::vector<double> v(cdf.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 - cdf.value(i);
    std::vector<TabulatedCurve::Jump> jumps;
    for (const auto& j : cdf.jumps()) jumps.push_back({j.node, 1.0 - j.left});
    return TabulatedCurve(cdf.dt(), std::move(v), std::move(jumps));
}

} // namespace detail

/// Tail integrals are taken over the tabulated support; for negative rho the
/// weight grows, so a non-negligible final-node integrand (a truncated heavy
/// tail) is rejected as divergent.
inline StableAgeProfiles stable_age_profiles(const TabulatedCurve& mean, const TabulatedCurve& F,
                                             double rho) {
    if (mean.empty() || F.empty()) throw std::invalid_argument("stable_age_profiles: missing tabulations");
    TabulatedCurve Fc = detail::complement(F);
    double D = Fc.shifted_laplace(0, rho);
    if (!(D > 0.0) || !std::isfinite(D))
        throw std::runtime_error("stable_age_profiles: divergent normalizing integral");
    if (rho < 0.0) {
        double tail = Fc.value(Fc.size() - 1) * std::exp(-rho * Fc.end_time()) * Fc.dt();
        if (tail > 1e-9 * D)
            throw std::runtime_error("stable_age_profiles: E[e^{-rho(zeta+eta)}] diverges on this tabulation");
    }

    StableAgeProfiles out;
    std::vector<double> lr(mean.size()), fr(Fc.size());
    for (std::size_t k = 0; k < mean.size(); ++k) lr[k] = mean.shifted_laplace(k, rho) / D;
    for (std::size_t k = 0; k < Fc.size(); ++k) fr[k] = Fc.shifted_laplace(k, rho) / D;
    out.lambda_rho = TabulatedCurve(mean.dt(), std::move(lr));
    out.F_rho_c = TabulatedCurve(Fc.dt(), std::move(fr));
    out.i_frac = rho * D;
    out.r_frac = 1.0 - out.i_frac;
    return out;
}

inline StableAgeProfiles stable_age_profiles(const InfectivityLaw& law, double rho) {
    return stable_age_profiles(law.mean(), law.durations().F, rho);
}

/// Residuals of the pure-exponential solution in the discretized linear
/// early-phase system, with the stable-age initial curves substituted.
/// The ansatz (growing branch): Ifrak = rho e^{rho t}, I = i e^{rho t},
/// R = r e^{rho t}, with the system's I(0) constant equal to i; decaying
/// branch: Ifrak = -rho e^{rho t}, I = -i e^{rho t}, R = R0 + r(1 - e^{rho t}).
/// Residuals are reported relative to max(1, |ansatz|), since the absolute
/// trapezoid defect inherits the e^{rho t} scale of the solution itself.
struct LinearResidualReport {
    double sup_Ifrak = 0.0;
    double sup_I = 0.0;
    double sup_R = 0.0;
    double sup() const { return std::max({sup_Ifrak, sup_I, sup_R}); }
};

inline LinearResidualReport verify_linear_solution(const TabulatedCurve& mean, const TabulatedCurve& F,
                                                   double rho, const StableAgeProfiles& profiles,
                                                   double dt, double horizon) {
    if (rho == 0.0) throw std::invalid_argument("verify_linear_solution: rho must be nonzero");
    const double sgn = rho > 0.0 ? 1.0 : -1.0;
    const double i_frac = profiles.i_frac, r_frac = profiles.r_frac;
    auto n = static_cast<std::size_t>(std::llround(horizon / dt));

    TabulatedCurve Fc = detail::complement(F);
    std::vector<double> lam(n + 1), fc(n + 1), f(n + 1), ifrak(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        double t = static_cast<double>(k) * dt;
        lam[k] = t <= mean.end_time() ? mean.eval(t) : 0.0;
        fc[k] = t <= Fc.end_time() ? Fc.eval(t) : Fc.value(Fc.size() - 1);
        f[k] = 1.0 - fc[k];
        ifrak[k] = sgn * rho * std::exp(rho * t);
    }

    LinearResidualReport rep;
    double R_at_0 = rho > 0.0 ? r_frac : 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        double t = static_cast<double>(k) * dt;
        double conv_lam = 0.0, conv_fc = 0.0, conv_f = 0.0;
        if (k > 0) {
            for (std::size_t j = 0; j <= k; ++j) {
                double w = (j == 0 || j == k) ? 0.5 * dt : dt;
                conv_lam += w * lam[k - j] * ifrak[j];
                conv_fc += w * fc[k - j] * ifrak[j];
                conv_f += w * f[k - j] * ifrak[j];
            }
        }
        double e = std::exp(rho * t);
        double lam_rho_t = t <= profiles.lambda_rho.end_time() ? profiles.lambda_rho.eval(t) : 0.0;
        double F_rho_c_t = t <= profiles.F_rho_c.end_time() ? profiles.F_rho_c.eval(t) : 0.0;

        double I0 = sgn * i_frac;
        double ans_If = sgn * rho * e;
        double ans_I = sgn * i_frac * e;
        double ans_R = rho > 0.0 ? r_frac * e : R_at_0 + r_frac * (1.0 - e);

        double res_If = I0 * lam_rho_t + conv_lam - ans_If;
        double res_I = I0 * F_rho_c_t + conv_fc - ans_I;
        double res_R = R_at_0 + I0 * (1.0 - F_rho_c_t) + conv_f - ans_R;

        rep.sup_Ifrak = std::max(rep.sup_Ifrak, std::abs(res_If) / std::max(1.0, std::abs(ans_If)));
        rep.sup_I = std::max(rep.sup_I, std::abs(res_I) / std::max(1.0, std::abs(ans_I)));
        rep.sup_R = std::max(rep.sup_R, std::abs(res_R) / std::max(1.0, std::abs(ans_R)));
    }
    return rep;
}

/// Probability that the epidemic started by I0 fresh initial cases dies out.
/// q* is the smallest fixed point of the offspring generating function,
/// reached by monotone iteration from 0; the initial generation contributes
/// one factor per line. The generating function is evaluated exactly when the
/// law supports it, otherwise from mc_samples Monte-Carlo trajectory
/// integrals.
inline double extinction_probability(const InfectivityLaw& law, const InfectivityLaw& law0,
                                     std::size_t initial_infected, std::size_t mc_samples,
                                     std::uint64_t mc_seed = 0x657874ULL) {
    if (initial_infected == 0) throw std::invalid_argument("extinction_probability: need at least one initial case");
    if (mc_samples < 10000) throw std::invalid_argument("extinction_probability: mc_samples must be >= 10^4");
    if (compute_R0(law) <= 1.0 + 1e-12) return 1.0;

    auto make_pgf = [&](const InfectivityLaw& l, std::uint64_t seed) -> std::function<double(double)> {
        if (l.has_exact_pgf()) return [&l](double s) { return l.offspring_pgf(s); };
        auto lambdas = std::make_shared<std::vector<double>>();
        Rng rng(seed);
        lambdas->reserve(mc_samples);
        for (std::size_t m = 0; m < mc_samples; ++m) lambdas->push_back(l.sample(rng).integral());
        return [lambdas](double s) {
            double sum = 0.0;
            for (double lam : *lambdas) sum += std::exp(-(1.0 - s) * lam);
            return sum / static_cast<double>(lambdas->size());
        };
    };
    auto h = make_pgf(law, mc_seed);

    double s = 0.0;
    for (std::size_t it = 0; it < 1000000; ++it) {
        double next = h(s);
        if (next < s - 1e-14) throw std::runtime_error("extinction_probability: iteration not monotone");
        if (next - s <= 1e-10) { s = next; break; }
        s = next;
        if (it + 1 == 1000000) throw std::runtime_error("extinction_probability: fixed point did not converge");
    }

    auto h0 = make_pgf(law0, splitmix64(mc_seed));
    return std::pow(h0(s), static_cast<double>(initial_infected));
}

/// Least-squares slope of log(I0 + A(t)) over [t_lo, t_hi] on a sampled grid.
inline double estimate_growth_rate(const std::vector<double>& times, const std::vector<double>& A,
                                   double initial_infected, double t_lo, double t_hi) {
    if (times.size() != A.size() || times.empty())
        throw std::invalid_argument("estimate_growth_rate: mismatched series");
    if (t_lo < times.front() - 1e-12 || t_hi > times.back() + 1e-12 || t_lo >= t_hi)
        throw std::invalid_argument("estimate_growth_rate: window outside the trajectory");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_lo - 1e-12 || times[i] > t_hi + 1e-12) continue;
        double v = initial_infected + A[i];
        if (!(v > 0.0)) throw std::invalid_argument("estimate_growth_rate: nonpositive count in window");
        double y = std::log(v);
        sx += times[i];
        sy += y;
        sxx += times[i] * times[i];
        sxy += times[i] * y;
        ++n;
    }
    if (n < 2) throw std::invalid_argument("estimate_growth_rate: window contains fewer than two points");
    double denom = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

/// Summary row tying the early-phase quantities together.
struct GrowthSummary {
    double rho = 0.0;
    double R0 = 0.0;
    double Re = 0.0;
    double mu = 0.0;
    double i_frac = 0.0;
    double r_frac = 0.0;
    double extinction_q = 1.0;
};

inline GrowthSummary growth_summary(const InfectivityLaw& law, std::size_t initial_infected,
                                    double susceptible_fraction = 1.0, std::size_t mc_samples = 100000) {
    GrowthSummary g;
    g.R0 = compute_R0(law);
    g.rho = solve_rho(law);
    auto cal = R0_from_growth(law.mean(), g.rho, susceptible_fraction);
    g.mu = cal.mu;
    g.Re = cal.Re;
    auto profiles = stable_age_profiles(law, g.rho);
    g.i_frac = profiles.i_frac;
    g.r_frac = profiles.r_frac;
    g.extinction_q = extinction_probability(law, law, std::max<std::size_t>(initial_infected, 1),
                                            std::max<std::size_t>(mc_samples, 10000));
    return g;
}

} // namespace epivolt
