#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "duration.hpp"
#include "piecewise_linear.hpp"
#include "random.hpp"
#include "tabulated.hpp"

namespace epivolt {

using InfectivityFunction = PiecewiseLinearFunction;

/// Tabulated c.d.f.s derived from the duration law: G for the exposed period,
/// Phi for the total infected period, Psi = G - Phi (exact by construction),
/// and F, the total-period c.d.f. driving the merged-compartment model (equal
/// to Phi). The *0 tables are the initially-infected analogues; under the
/// default fresh-at-time-zero initial condition they coincide with the base
/// tables.
struct DurationDistributions {
    TabulatedCurve G, Phi, Psi, F;
    TabulatedCurve G0, Phi0, Psi0, F0I;
};

struct LawOptions {
    double grid_step = 0.01;      // tabulation step (days)
    double tail_mass = 1e-8;      // quantile level bounding non-compact supports
    std::size_t quad_nodes = 200; // Gauss-Legendre nodes per continuous duration dimension
    std::size_t mc_samples = 200000;     // fallback Monte-Carlo sample count
    std::uint64_t mc_seed = 0x6d65616eULL; // fixed seed keeps fallback tabulations deterministic
};

/// A law of random infection-age infectivity trajectories: a sampler, the
/// uniform bound lambda_star, the tabulated mean curve, and the derived
/// duration distributions. Immutable after construction and safe to share
/// across threads; sampling draws through a caller-owned Rng.
class InfectivityLaw {
public:
    InfectivityLaw() = default;  // empty shell; fill through a factory

    double lambda_star() const { return lambda_star_; }
    double support_T() const { return support_T_; }
    const TabulatedCurve& mean() const { return mean_; }
    const DurationDistributions& durations() const { return *durations_; }
    const LawOptions& options() const { return opts_; }

    InfectivityFunction sample(Rng& rng) const { return sampler_(rng); }

    /// Offspring probability generating function E[s^X] where X is
    /// conditionally Poisson with parameter Lambda = integral of one sampled
    /// trajectory. Exact (no Monte Carlo) whenever available.
    bool has_exact_pgf() const { return static_cast<bool>(pgf_); }
    double offspring_pgf(double s) const {
        if (!pgf_) throw std::logic_error("InfectivityLaw: no exact generating function");
        return pgf_(s);
    }

    /// Joint evaluators of the duration c.d.f.s backing this law; used to
    /// re-tabulate on caller-chosen grids.
    double duration_G(double t, bool left = false) const { return G_(t, left); }
    double duration_Phi(double t, bool left = false) const { return Phi_(t, left); }
    const std::vector<double>& G_jump_times() const { return g_jumps_; }
    const std::vector<double>& Phi_jump_times() const { return phi_jumps_; }

    friend InfectivityLaw make_law_constant(double beta, const JointDurationLaw& durations,
                                            const LawOptions& opts);
    friend InfectivityLaw make_law_triangular(double alpha_scale, double peak_fraction,
                                              const JointDurationLaw& durations, const LawOptions& opts);
    friend InfectivityLaw make_law_mixture(const std::vector<std::pair<double, InfectivityLaw>>& components);
    friend InfectivityLaw make_stationary_initial_law(const InfectivityLaw& base, double rho);

private:
    double lambda_star_ = 0.0;
    double support_T_ = 0.0;
    TabulatedCurve mean_;
    std::shared_ptr<const DurationDistributions> durations_;
    std::function<InfectivityFunction(Rng&)> sampler_;
    std::function<double(double)> pgf_;
    std::function<double(double, bool)> G_, Phi_;
    std::vector<double> g_jumps_, phi_jumps_;
    LawOptions opts_;
};

namespace detail {

inline std::vector<TabulatedCurve::Jump> grid_jumps(const std::vector<double>& times, double dt,
                                                    std::size_t n_nodes,
                                                    const std::function<double(double, bool)>& f,
                                                    double scale) {
    std::vector<TabulatedCurve::Jump> jumps;
    for (double t : times) {
        double x = t / dt, r = std::round(x);
        // off-grid jump times are left unrecorded; integration then loses
        // order locally, which the caller accepted by its grid choice
        if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) continue;
        auto node = static_cast<std::size_t>(r);
        if (node == 0 || node >= n_nodes) continue;
        bool seen = false;
        for (const auto& j : jumps) seen = seen || j.node == node;
        if (!seen) jumps.push_back({node, scale * f(t, true)});
    }
    return jumps;
}

inline TabulatedCurve tabulate_cdf(const std::function<double(double, bool)>& f,
                                   const std::vector<double>& jump_times, double dt, double horizon) {
    auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)) + 1;
    std::vector<double> v(n + 1);
    for (std::size_t k = 0; k <= n; ++k) v[k] = f(static_cast<double>(k) * dt, false);
    return TabulatedCurve(dt, std::move(v), grid_jumps(jump_times, dt, n + 1, f, 1.0));
}

inline std::shared_ptr<const DurationDistributions> build_duration_tables(const JointDurationLaw& joint,
                                                                          double dt, double horizon) {
    auto d = std::make_shared<DurationDistributions>();
    auto G = [&joint](double t, bool left) { return joint.cdf_zeta(t, left); };
    auto Phi = [&joint](double t, bool left) { return joint.cdf_total(t, left); };
    d->G = tabulate_cdf(G, joint.zeta_jumps(), dt, horizon);
    d->Phi = tabulate_cdf(Phi, joint.total_jumps(), dt, horizon);
    std::vector<std::pair<double, const TabulatedCurve*>> diff{{1.0, &d->G}, {-1.0, &d->Phi}};
    d->Psi = TabulatedCurve::combine(diff);
    d->F = d->Phi;
    d->G0 = d->G;
    d->Phi0 = d->Phi;
    d->Psi0 = d->Psi;
    d->F0I = d->F;
    return d;
}

} // namespace detail

/// Constant infectivity beta over the infectious period [zeta, zeta + eta):
/// the classical SEIR shape. Mean curve is beta * Psi(t).
inline InfectivityLaw make_law_constant(double beta, const JointDurationLaw& durations,
                                        const LawOptions& opts = {}) {
    if (!(beta > 0.0)) throw std::invalid_argument("make_law_constant: beta must be positive");
    InfectivityLaw law;
    law.opts_ = opts;
    law.lambda_star_ = beta;
    law.support_T_ = durations.total_upper(opts.tail_mass);

    JointDurationLaw joint = durations;
    law.sampler_ = [joint, beta](Rng& rng) {
        auto [zeta, eta] = joint.sample(rng);
        if (eta <= 0.0) return InfectivityFunction();
        std::vector<double> bp;
        std::vector<InfectivityFunction::Segment> segs;
        bp.push_back(0.0);
        if (zeta > 0.0) {
            bp.push_back(zeta);
            segs.push_back({0.0, 0.0});
        }
        bp.push_back(zeta + eta);
        segs.push_back({beta, 0.0});
        return InfectivityFunction(std::move(bp), std::move(segs), zeta, eta);
    };

    double dt = opts.grid_step;
    double horizon = std::max(law.support_T_, 2.0 * dt);
    auto psi = [joint](double t, bool left) { return joint.psi(t, left); };
    std::vector<double> kink_times = joint.zeta_jumps();
    for (double t : joint.total_jumps()) kink_times.push_back(t);
    auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)) + 1;
    std::vector<double> v(n + 1);
    for (std::size_t k = 0; k <= n; ++k) v[k] = beta * psi(static_cast<double>(k) * dt, false);
    law.mean_ = TabulatedCurve(dt, std::move(v), detail::grid_jumps(kink_times, dt, n + 1, psi, beta));

    law.durations_ = detail::build_duration_tables(joint, dt, horizon);
    law.G_ = [joint](double t, bool left) { return joint.cdf_zeta(t, left); };
    law.Phi_ = [joint](double t, bool left) { return joint.cdf_total(t, left); };
    law.g_jumps_ = joint.zeta_jumps();
    law.phi_jumps_ = joint.total_jumps();
    // Lambda = beta * eta, so E[s^X] = E[exp(-(1-s) beta eta)].
    law.pgf_ = [joint, beta](double s) { return joint.eta_mgf(-(1.0 - s) * beta); };
    return law;
}

/// Triangular infectivity: rises linearly from 0 at zeta to alpha_scale at
/// zeta + peak_fraction * eta, then falls linearly back to 0 at zeta + eta.
inline InfectivityLaw make_law_triangular(double alpha_scale, double peak_fraction,
                                          const JointDurationLaw& durations, const LawOptions& opts = {}) {
    if (!(alpha_scale > 0.0 && alpha_scale <= 1.0))
        throw std::invalid_argument("make_law_triangular: alpha_scale must lie in (0, 1]");
    if (!(peak_fraction > 0.0 && peak_fraction < 1.0))
        throw std::invalid_argument("make_law_triangular: peak_fraction must lie in (0, 1)");
    InfectivityLaw law;
    law.opts_ = opts;
    law.lambda_star_ = alpha_scale;
    law.support_T_ = durations.total_upper(opts.tail_mass);

    JointDurationLaw joint = durations;
    const double pf = peak_fraction, alpha = alpha_scale;
    law.sampler_ = [joint, alpha, pf](Rng& rng) {
        auto [zeta, eta] = joint.sample(rng);
        if (eta <= 0.0) return InfectivityFunction();
        double up = alpha / (pf * eta), down = -alpha / ((1.0 - pf) * eta);
        std::vector<double> bp;
        std::vector<InfectivityFunction::Segment> segs;
        bp.push_back(0.0);
        if (zeta > 0.0) {
            bp.push_back(zeta);
            segs.push_back({0.0, 0.0});
        }
        bp.push_back(zeta + pf * eta);
        segs.push_back({0.0, up});
        bp.push_back(zeta + eta);
        segs.push_back({alpha, down});
        return InfectivityFunction(std::move(bp), std::move(segs), zeta, eta);
    };

    const double dt = opts.grid_step;
    const double horizon = std::max(law.support_T_, 2.0 * dt);
    auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9)) + 1;
    std::vector<double> acc(n + 1, 0.0);
    auto add_triangle = [&](double w, double zeta, double eta) {
        if (eta <= 0.0) return;
        double peak_t = zeta + pf * eta, end_t = zeta + eta;
        auto k0 = static_cast<std::size_t>(std::max(0.0, std::ceil(zeta / dt - 1e-12)));
        auto k1 = std::min(n, static_cast<std::size_t>(std::floor(end_t / dt + 1e-12)));
        for (std::size_t k = k0; k <= k1; ++k) {
            double t = static_cast<double>(k) * dt;
            double v = (t <= peak_t) ? alpha * (t - zeta) / (pf * eta)
                                     : alpha * (end_t - t) / ((1.0 - pf) * eta);
            if (v > 0.0) acc[k] += w * v;
        }
    };

    if (!durations.is_independent()) {
        // finite atom table: the mean is an exact finite mixture
        for (const auto& a : durations.atoms()) add_triangle(a.weight, a.zeta, a.eta);
    } else if (durations.zeta_law().compact_support() && durations.eta_law().compact_support()) {
        const auto& gl = detail::gauss_legendre(opts.quad_nodes);
        auto nodes_for = [&gl](const DurationLaw& d) {
            std::vector<std::pair<double, double>> nw;  // (value, weight)
            if (d.is_deterministic()) {
                nw.emplace_back(d.deterministic_value(), 1.0);
                return nw;
            }
            double lo = d.quantile(0.0), hi = d.upper(0.0);
            for (std::size_t i = 0; i < gl.node.size(); ++i) {
                double x = lo + (hi - lo) * gl.node[i];
                nw.emplace_back(x, (hi - lo) * gl.weight[i] * d.density(x));
            }
            return nw;
        };
        auto zn = nodes_for(durations.zeta_law());
        auto en = nodes_for(durations.eta_law());
        for (auto& [zv, zw] : zn)
            for (auto& [ev, ew] : en) add_triangle(zw * ew, zv, ev);
    } else {
        // a marginal with unbounded support: seeded Monte-Carlo tabulation
        Rng rng(opts.mc_seed);
        double w = 1.0 / static_cast<double>(opts.mc_samples);
        for (std::size_t m = 0; m < opts.mc_samples; ++m) {
            auto [zeta, eta] = joint.sample(rng);
            add_triangle(w, zeta, eta);
        }
    }
    law.mean_ = TabulatedCurve(dt, std::move(acc));

    law.durations_ = detail::build_duration_tables(joint, dt, horizon);
    law.G_ = [joint](double t, bool left) { return joint.cdf_zeta(t, left); };
    law.Phi_ = [joint](double t, bool left) { return joint.cdf_total(t, left); };
    law.g_jumps_ = joint.zeta_jumps();
    law.phi_jumps_ = joint.total_jumps();
    // Triangle area: Lambda = (alpha/2) * eta.
    law.pgf_ = [joint, alpha](double s) { return joint.eta_mgf(-(1.0 - s) * 0.5 * alpha); };
    return law;
}

/// Mixture of component laws: each sampled individual draws its branch first.
inline InfectivityLaw make_law_mixture(const std::vector<std::pair<double, InfectivityLaw>>& components) {
    if (components.empty()) throw std::invalid_argument("make_law_mixture: no components");
    double total = 0.0;
    for (auto& [w, c] : components) {
        if (w < 0.0) throw std::invalid_argument("make_law_mixture: negative weight");
        total += w;
    }
    if (total <= 0.0) throw std::invalid_argument("make_law_mixture: zero total weight");

    InfectivityLaw law;
    law.opts_ = components.front().second.options();
    std::vector<double> weights;
    std::vector<InfectivityLaw> comps;
    for (auto& [w, c] : components) {
        weights.push_back(w / total);
        comps.push_back(c);
        law.lambda_star_ = std::max(law.lambda_star_, c.lambda_star());
        law.support_T_ = std::max(law.support_T_, c.support_T());
    }

    law.sampler_ = [weights, comps](Rng& rng) {
        double u = rng.uniform(), acc = 0.0;
        for (std::size_t i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return comps[i].sample(rng);
        }
        return comps.back().sample(rng);
    };

    std::vector<std::pair<double, const TabulatedCurve*>> mean_terms;
    for (std::size_t i = 0; i < comps.size(); ++i) mean_terms.emplace_back(weights[i], &comps[i].mean());
    law.mean_ = TabulatedCurve::combine(mean_terms);

    auto d = std::make_shared<DurationDistributions>();
    auto mix_tables = [&](const TabulatedCurve DurationDistributions::*field) {
        std::vector<std::pair<double, const TabulatedCurve*>> terms;
        for (std::size_t i = 0; i < comps.size(); ++i)
            terms.emplace_back(weights[i], &(comps[i].durations().*field));
        return TabulatedCurve::combine(terms);
    };
    d->G = mix_tables(&DurationDistributions::G);
    d->Phi = mix_tables(&DurationDistributions::Phi);
    d->Psi = mix_tables(&DurationDistributions::Psi);
    d->F = d->Phi;
    d->G0 = d->G;
    d->Phi0 = d->Phi;
    d->Psi0 = d->Psi;
    d->F0I = d->F;
    law.durations_ = d;

    law.G_ = [weights, comps](double t, bool left) {
        double s = 0.0;
        for (std::size_t i = 0; i < comps.size(); ++i) s += weights[i] * comps[i].duration_G(t, left);
        return s;
    };
    law.Phi_ = [weights, comps](double t, bool left) {
        double s = 0.0;
        for (std::size_t i = 0; i < comps.size(); ++i) s += weights[i] * comps[i].duration_Phi(t, left);
        return s;
    };
    for (auto& c : comps) {
        for (double t : c.G_jump_times()) law.g_jumps_.push_back(t);
        for (double t : c.Phi_jump_times()) law.phi_jumps_.push_back(t);
    }

    bool all_exact = true;
    for (auto& c : comps) all_exact = all_exact && c.has_exact_pgf();
    if (all_exact) {
        law.pgf_ = [weights, comps](double s) {
            double sum = 0.0;
            for (std::size_t i = 0; i < comps.size(); ++i) sum += weights[i] * comps[i].offspring_pgf(s);
            return sum;
        };
    }
    return law;
}

/// Initial-condition law whose samples are base-law trajectories observed at
/// a stationary infection age for growth rate rho: the age density is
/// proportional to e^{-rho a} F^c(a) and the trajectory is conditioned to
/// still be infected at that age. Its mean curve is the stable-age profile
/// lambda_rho scaled by i = rho * integral(F^c e^{-rho s}), and its
/// total-period c.d.f. is F_rho. Only valid for rho > 0 over a compactly
/// tabulated base law.
inline InfectivityLaw make_stationary_initial_law(const InfectivityLaw& base, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("stationary initial law: need rho > 0");
    InfectivityLaw law;
    law.opts_ = base.options();
    law.lambda_star_ = base.lambda_star();
    law.support_T_ = base.support_T();

    const double T = base.support_T();
    InfectivityLaw base_copy = base;
    law.sampler_ = [base_copy, rho, T](Rng& rng) {
        for (;;) {
            double age = rng.exponential(rho);
            if (age >= T) continue;
            double Fc = 1.0 - base_copy.duration_Phi(age);
            if (rng.uniform() > Fc) continue;
            for (;;) {
                InfectivityFunction fn = base_copy.sample(rng);
                if (fn.zeta() + fn.eta() > age) return fn.shifted_by_age(age);
            }
        }
    };

    // mean curve: integral of mean(t + a) e^{-rho a} da, normalized per
    // individual (the conditioning divides by integral(F^c e^{-rho}))
    const TabulatedCurve& mean = base.mean();
    const DurationDistributions& bd = base.durations();
    std::vector<double> fc(bd.F.size());
    for (std::size_t i = 0; i < fc.size(); ++i) fc[i] = 1.0 - bd.F.value(i);
    std::vector<TabulatedCurve::Jump> fj;
    for (const auto& j : bd.F.jumps()) fj.push_back({j.node, 1.0 - j.left});
    TabulatedCurve Fc_curve(bd.F.dt(), std::move(fc), std::move(fj));
    double denom = Fc_curve.shifted_laplace(0, rho);
    if (!(denom > 0.0)) throw std::runtime_error("stationary initial law: degenerate normalization");

    std::vector<double> mv(mean.size()), fv(Fc_curve.size());
    for (std::size_t k = 0; k < mean.size(); ++k) mv[k] = mean.shifted_laplace(k, rho) / denom;
    for (std::size_t k = 0; k < Fc_curve.size(); ++k) fv[k] = Fc_curve.shifted_laplace(k, rho) / denom;
    law.mean_ = TabulatedCurve(mean.dt(), std::move(mv));

    // only the merged-model initial fields (F0I, Phi0 = F_rho) describe the
    // age-shifted population; the exposed-phase split tables keep the base
    // law's values and are not meaningful for stationary initials
    auto d = std::make_shared<DurationDistributions>(base.durations());
    std::vector<double> f_rho(fv.size());
    for (std::size_t k = 0; k < fv.size(); ++k) f_rho[k] = 1.0 - fv[k];
    d->F0I = TabulatedCurve(Fc_curve.dt(), std::move(f_rho));
    d->Phi0 = d->F0I;
    law.durations_ = d;
    InfectivityLaw base_for_G = base;
    law.G_ = [base_for_G](double t, bool left) { return base_for_G.duration_G(t, left); };
    auto phi0 = d->F0I;
    law.Phi_ = [phi0](double t, bool) { return t >= phi0.end_time() ? 1.0 : phi0.eval(t); };
    // no exact offspring transform: the per-sample integral is no longer a
    // simple function of eta after the age shift
    return law;
}

/// Mean infectivity at elapsed time t since infection.
inline double mean_infectivity(const InfectivityLaw& law, double t) {
    if (t < 0.0) throw std::domain_error("mean_infectivity: negative time");
    if (t >= law.mean().end_time()) return 0.0;
    return law.mean().eval(t);
}

/// Re-tabulate the duration c.d.f.s on a caller-chosen grid.
inline DurationDistributions duration_distributions(const InfectivityLaw& law, double grid_step,
                                                    double horizon) {
    if (!(grid_step > 0.0)) throw std::invalid_argument("duration_distributions: grid_step must be positive");
    if (horizon < law.support_T())
        throw std::invalid_argument("duration_distributions: horizon shorter than the law's support");
    DurationDistributions d;
    auto G = [&law](double t, bool left) { return law.duration_G(t, left); };
    auto Phi = [&law](double t, bool left) { return law.duration_Phi(t, left); };
    d.G = detail::tabulate_cdf(G, law.G_jump_times(), grid_step, horizon);
    d.Phi = detail::tabulate_cdf(Phi, law.Phi_jump_times(), grid_step, horizon);
    std::vector<std::pair<double, const TabulatedCurve*>> diff{{1.0, &d.G}, {-1.0, &d.Phi}};
    d.Psi = TabulatedCurve::combine(diff);
    d.F = d.Phi;
    d.G0 = d.G;
    d.Phi0 = d.Phi;
    d.Psi0 = d.Psi;
    d.F0I = d.F;
    return d;
}

} // namespace epivolt
