#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "infectivity.hpp"
#include "piecewise_linear.hpp"
#include "random.hpp"

namespace epivolt {

/// Compartment counts and the infection log of one finite-population run.
/// The log keeps every accepted infection time together with its sampled
/// trajectory, so the force of infection is reconstructible exactly at any
/// time.
struct EpidemicState {
    struct Infection {
        double tau;  // infection time (0 for the initially infected)
        InfectivityFunction fn;
    };

    std::size_t N = 0;
    std::vector<Infection> initial;     // the I(0) individuals, infected at time 0
    std::vector<Infection> infections;  // accepted infections, in time order
    std::uint64_t A = 0;                // cumulative infections after time 0
    std::int64_t S = 0, E = 0, I = 0, R = 0;
    double time = 0.0;
    bool extinct = false;     // force of infection hit zero for good
    double extinction_time = std::numeric_limits<double>::infinity();
};

/// Total force of infection at time t: the exact sum of every individual's
/// infectivity at its own infection age. Individuals outside their infected
/// window contribute exactly zero.
inline double force_of_infection(const EpidemicState& state, double t) {
    double sum = 0.0;
    for (const auto& ind : state.initial) sum += ind.fn.eval(t - ind.tau);
    for (const auto& ind : state.infections) {
        if (ind.tau > t) break;
        sum += ind.fn.eval(t - ind.tau);
    }
    return sum;
}

/// Scaled trajectory on a uniform output grid. Compartment fractions follow
/// the full SEIR split; merged-compartment reporting is a view (E + I).
/// The A column is the raw cumulative infection count.
struct Trajectory {
    std::vector<double> t, S, Ifrak, E, I, R, A;

    std::size_t size() const { return t.size(); }
};

struct SimParams {
    std::size_t population = 0;        // N
    std::size_t initial_infected = 0;  // I(0)
    double horizon = 0.0;
    double grid_step = 0.1;
    double extinction_alpha = 0.25;  // extinct = force hits 0 before A reaches N^alpha
    std::uint64_t stop_after_infections = 0;  // 0: run to the horizon; else freeze once A reaches it
};

struct SimResult {
    Trajectory trajectory;
    EpidemicState state;
};

namespace detail {

// Aggregated force of infection as a single linear function a + b t between
// breakpoints, with pending per-segment slope/intercept changes in a queue.
struct ForceAggregate {
    struct Delta {
        double time, da, db;
        bool operator>(const Delta& o) const { return time > o.time; }
    };

    double a = 0.0, b = 0.0;
    std::priority_queue<Delta, std::vector<Delta>, std::greater<Delta>> pending;
    std::size_t ops_since_rebuild = 0;

    void advance(double t) {
        while (!pending.empty() && pending.top().time <= t) {
            a += pending.top().da;
            b += pending.top().db;
            pending.pop();
            ++ops_since_rebuild;
        }
    }

    double value(double t) const { return std::max(0.0, a + b * t); }

    // Register one individual's trajectory starting at absolute time tau.
    // Segment j contributes (a_j - b_j (tau + x_{j-1})) + b_j t on
    // [tau + x_{j-1}, tau + x_j); consecutive segment switches collapse into
    // one delta per breakpoint.
    void add_individual(const InfectivityFunction& fn, double tau, double now) {
        std::size_t k = fn.segment_count();
        if (k == 0) return;
        double prev_a = 0.0, prev_b = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            double x = fn.breakpoint(j);
            double abs_b = fn.segment(j).slope;
            double abs_a = fn.segment(j).value_at_start - abs_b * (tau + x);
            push(tau + x, abs_a - prev_a, abs_b - prev_b, now);
            prev_a = abs_a;
            prev_b = abs_b;
        }
        push(tau + fn.breakpoint(k), -prev_a, -prev_b, now);
    }

    void push(double time, double da, double db, double now) {
        if (da == 0.0 && db == 0.0) return;
        if (time <= now) {
            a += da;
            b += db;
            ++ops_since_rebuild;
        } else {
            pending.push({time, da, db});
        }
    }
};

} // namespace detail

/// One exact sample path of the finite-N model. Infections are generated by
/// thinning candidate events proposed at the piecewise-constant dominating
/// rate B(t) = lambda_star * (infected count) * S(t)/N, which is refreshed at
/// every infection and every scheduled transition; each candidate at time t
/// is accepted with probability Upsilon(t)/B(t), Upsilon = (S/N) * force.
/// Identical (params, seed) reproduce the event log bit for bit.
inline SimResult simulate(const InfectivityLaw& law, const InfectivityLaw& law0, const SimParams& p,
                          std::uint64_t seed) {
    if (p.initial_infected == 0 || p.initial_infected >= p.population)
        throw std::invalid_argument("simulate: need 0 < I0 < N");
    if (!(p.horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
    if (!(p.grid_step > 0.0)) throw std::invalid_argument("simulate: grid_step must be positive");

    Rng rng(seed);
    EpidemicState st;
    st.N = p.population;
    st.S = static_cast<std::int64_t>(p.population - p.initial_infected);

    const double N = static_cast<double>(p.population);
    const double lambda_star = std::max(law.lambda_star(), law0.lambda_star());
    const double a_threshold = std::pow(N, p.extinction_alpha);

    enum class Ev : std::uint8_t { removal = 0, activation = 1 };  // removals first on ties
    struct Sched {
        double time;
        Ev kind;
        bool operator>(const Sched& o) const {
            return time > o.time || (time == o.time && kind > o.kind);
        }
    };
    std::priority_queue<Sched, std::vector<Sched>, std::greater<Sched>> sched;
    detail::ForceAggregate force;
    std::int64_t active = 0;  // E + I: individuals not yet removed

    auto admit = [&](const InfectivityFunction& fn, double tau) {
        if (fn.eta() <= 0.0) {
            // empty infected period: straight to R
            st.R += 1;
            return;
        }
        force.add_individual(fn, tau, tau);
        active += 1;
        if (fn.zeta() > 0.0) {
            st.E += 1;
            sched.push({tau + fn.zeta(), Ev::activation});
        } else {
            st.I += 1;
        }
        // same float as the individual's final force delta, so the dominating
        // rate and the aggregate drop in the same instant
        sched.push({tau + fn.support_end(), Ev::removal});
    };

    for (std::size_t k = 0; k < p.initial_infected; ++k) {
        st.initial.push_back({0.0, law0.sample(rng)});
        admit(st.initial.back().fn, 0.0);
    }

    Trajectory traj;
    auto n_grid = static_cast<std::size_t>(std::floor(p.horizon / p.grid_step + 1e-9));
    traj.t.reserve(n_grid + 1);
    std::size_t next_grid = 0;

    auto conservation_check = [&]() {
        if (st.S + st.E + st.I + st.R != static_cast<std::int64_t>(st.N))
            throw std::runtime_error("simulate: compartment counts do not sum to N");
    };
    conservation_check();

    auto rebuild_force = [&](double t) {
        double a = 0.0, b = 0.0;
        auto accumulate = [&](const EpidemicState::Infection& ind) {
            double age = t - ind.tau;
            if (age < 0.0 || age >= ind.fn.support_end()) return;
            for (std::size_t j = 0; j < ind.fn.segment_count(); ++j) {
                if (age < ind.fn.breakpoint(j + 1)) {
                    double slope = ind.fn.segment(j).slope;
                    double start = ind.fn.segment(j).value_at_start;
                    b += slope;
                    a += start - slope * (ind.tau + ind.fn.breakpoint(j));
                    break;
                }
            }
        };
        for (const auto& ind : st.initial) accumulate(ind);
        for (const auto& ind : st.infections) accumulate(ind);
        force.a = a;
        force.b = b;
        force.ops_since_rebuild = 0;
    };

    auto fill_grid_until = [&](double t_limit, bool inclusive) {
        while (next_grid <= n_grid) {
            double tg = static_cast<double>(next_grid) * p.grid_step;
            if (tg > t_limit || (!inclusive && tg >= t_limit)) break;
            force.advance(tg);
            traj.t.push_back(tg);
            traj.S.push_back(static_cast<double>(st.S) / N);
            traj.Ifrak.push_back(force.value(tg) / N);
            traj.E.push_back(static_cast<double>(st.E) / N);
            traj.I.push_back(static_cast<double>(st.I) / N);
            traj.R.push_back(static_cast<double>(st.R) / N);
            traj.A.push_back(static_cast<double>(st.A));
            ++next_grid;
        }
    };

    double t = 0.0;
    while (true) {
        if (active == 0) {
            // the force of infection is zero for good; "extinct" means it
            // happened before the count reached N^alpha
            st.extinct = static_cast<double>(st.A) < a_threshold;
            st.extinction_time = t;
            break;
        }
        double next_sched = sched.empty() ? std::numeric_limits<double>::infinity() : sched.top().time;
        double B = lambda_star * static_cast<double>(active) * static_cast<double>(st.S) / N;

        double t_prop = (B > 0.0 && st.S > 0) ? t + rng.exponential(B)
                                              : std::numeric_limits<double>::infinity();
        if (t_prop >= next_sched) {
            if (next_sched > p.horizon) break;
            fill_grid_until(next_sched, false);
            force.advance(next_sched);
            t = next_sched;
            while (!sched.empty() && sched.top().time == next_sched) {
                if (sched.top().kind == Ev::removal) {
                    st.I -= 1;
                    st.R += 1;
                    active -= 1;
                } else {
                    st.E -= 1;
                    st.I += 1;
                }
                sched.pop();
            }
            conservation_check();
            continue;
        }
        if (t_prop > p.horizon) break;

        fill_grid_until(t_prop, false);
        force.advance(t_prop);
        if (force.ops_since_rebuild > 8192) rebuild_force(t_prop);
        t = t_prop;

        double upsilon = static_cast<double>(st.S) / N * force.value(t);
        if (upsilon > B * (1.0 + 1e-9) + 1e-12)
            throw std::runtime_error("simulate: proposal intensity exceeded the dominating rate");
        if (rng.uniform() * B <= upsilon) {
            InfectivityFunction fn = law.sample(rng);
            st.S -= 1;
            st.A += 1;
            st.infections.push_back({t, std::move(fn)});
            admit(st.infections.back().fn, t);
            conservation_check();
            if (p.stop_after_infections > 0 && st.A >= p.stop_after_infections) break;
        }
    }

    fill_grid_until(p.horizon, true);
    st.time = std::min(t, p.horizon);
    SimResult out;
    out.trajectory = std::move(traj);
    out.state = std::move(st);
    return out;
}

/// First times at which the cumulative infection count A reaches eps*N and
/// N^alpha. Event-exact (from the infection log); +infinity when the run
/// never got there.
struct HittingTimes {
    double T_eps = std::numeric_limits<double>::infinity();
    double T_alpha = std::numeric_limits<double>::infinity();
};

inline HittingTimes hitting_times(const EpidemicState& state, double eps, double alpha) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("hitting_times: eps must lie in (0,1)");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("hitting_times: alpha must lie in (0,1)");
    HittingTimes ht;
    double n = static_cast<double>(state.N);
    auto count_eps = static_cast<std::size_t>(std::ceil(eps * n - 1e-9));
    auto count_alpha = static_cast<std::size_t>(std::ceil(std::pow(n, alpha) - 1e-9));
    if (count_eps >= 1 && state.infections.size() >= count_eps)
        ht.T_eps = state.infections[count_eps - 1].tau;
    if (count_alpha >= 1 && state.infections.size() >= count_alpha)
        ht.T_alpha = state.infections[count_alpha - 1].tau;
    return ht;
}

} // namespace epivolt
