#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "simulation.hpp"

namespace epivolt {

/// Per-grid-point mean and percentile envelopes of every trajectory
/// component across an ensemble of replicates.
struct EnsembleSummary {
    std::vector<double> t;

    struct ComponentStats {
        std::vector<double> mean, p2_5, p25, p75, p97_5;
    };
    ComponentStats S, Ifrak, E, I, R, A;
};

/// What one replicate contributed beyond its trajectory.
struct ReplicateOutcome {
    bool extinct = false;
    double extinction_time = std::numeric_limits<double>::infinity();
    std::uint64_t final_A = 0;
    double T_eps = std::numeric_limits<double>::infinity();
    double T_alpha = std::numeric_limits<double>::infinity();
};

struct EnsembleOptions {
    std::size_t n_threads = 0;  // 0: hardware concurrency
    bool keep_trajectories = false;
    bool merged_view = false;    // fold E into I before reduction
    double hitting_eps = 0.1;    // thresholds recorded per replicate
    double hitting_alpha = 0.5;
};

struct EnsembleResult {
    EnsembleSummary summary;
    std::vector<ReplicateOutcome> outcomes;
    std::vector<Trajectory> trajectories;  // filled only when requested
};

namespace detail {

/// Linear-interpolation percentile of a sorted sample.
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("percentile of empty sample");
    if (sorted.size() == 1) return sorted.front();
    double h = p / 100.0 * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

} // namespace detail

/// Run n_replicates independent sample paths. Replicate r draws from a
/// stream derived from (master_seed, r) only, so results do not depend on
/// the thread count, and the reduction is a deterministic fold in replicate
/// order.
inline EnsembleResult run_ensemble(const InfectivityLaw& law, const InfectivityLaw& law0,
                                   const SimParams& params, std::size_t n_replicates,
                                   std::uint64_t master_seed, const EnsembleOptions& opts = {}) {
    if (n_replicates == 0) throw std::invalid_argument("run_ensemble: need at least one replicate");

    std::vector<Trajectory> trajectories(n_replicates);
    std::vector<ReplicateOutcome> outcomes(n_replicates);

    std::size_t n_threads = opts.n_threads ? opts.n_threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, n_replicates);
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string fail_message;
    std::mutex fail_mutex;

    auto worker = [&]() {
        for (;;) {
            std::size_t r = cursor.fetch_add(1);
            if (r >= n_replicates || failed.load()) return;
            try {
                auto res = simulate(law, law0, params, replicate_seed(master_seed, r));
                auto ht = hitting_times(res.state, opts.hitting_eps, opts.hitting_alpha);
                outcomes[r].extinct = res.state.extinct;
                outcomes[r].extinction_time = res.state.extinction_time;
                outcomes[r].final_A = res.state.A;
                outcomes[r].T_eps = ht.T_eps;
                outcomes[r].T_alpha = ht.T_alpha;
                if (opts.merged_view) {
                    for (std::size_t k = 0; k < res.trajectory.size(); ++k) {
                        res.trajectory.I[k] += res.trajectory.E[k];
                        res.trajectory.E[k] = 0.0;
                    }
                }
                trajectories[r] = std::move(res.trajectory);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                failed.store(true);
                if (fail_message.empty()) fail_message = e.what();
                return;
            }
        }
    };

    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failed.load()) throw std::runtime_error("run_ensemble: replicate failed: " + fail_message);

    EnsembleResult out;
    out.outcomes = std::move(outcomes);
    const std::size_t n_points = trajectories.front().size();
    for (const auto& tr : trajectories)
        if (tr.size() != n_points) throw std::logic_error("run_ensemble: replicate grids differ");

    out.summary.t = trajectories.front().t;
    auto reduce = [&](std::vector<double> Trajectory::*col, EnsembleSummary::ComponentStats& stats) {
        stats.mean.resize(n_points);
        stats.p2_5.resize(n_points);
        stats.p25.resize(n_points);
        stats.p75.resize(n_points);
        stats.p97_5.resize(n_points);
        std::vector<double> column(n_replicates);
        for (std::size_t k = 0; k < n_points; ++k) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n_replicates; ++r) {
                column[r] = (trajectories[r].*col)[k];
                sum += column[r];
            }
            std::sort(column.begin(), column.end());
            stats.mean[k] = sum / static_cast<double>(n_replicates);
            stats.p2_5[k] = detail::percentile_sorted(column, 2.5);
            stats.p25[k] = detail::percentile_sorted(column, 25.0);
            stats.p75[k] = detail::percentile_sorted(column, 75.0);
            stats.p97_5[k] = detail::percentile_sorted(column, 97.5);
        }
    };
    reduce(&Trajectory::S, out.summary.S);
    reduce(&Trajectory::Ifrak, out.summary.Ifrak);
    reduce(&Trajectory::E, out.summary.E);
    reduce(&Trajectory::I, out.summary.I);
    reduce(&Trajectory::R, out.summary.R);
    reduce(&Trajectory::A, out.summary.A);

    if (opts.keep_trajectories) out.trajectories = std::move(trajectories);
    return out;
}

} // namespace epivolt
