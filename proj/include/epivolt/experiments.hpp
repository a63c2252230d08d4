#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "early_phase.hpp"
#include "ensemble.hpp"
#include "sha256.hpp"
#include "volterra.hpp"

namespace epivolt {

/// Writes every emitted artifact plus a manifest (path, sha-256, line count);
/// on error the partial outputs are removed again.
class ArtifactWriter {
public:
    explicit ArtifactWriter(std::string dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    void emit(const std::string& name, const std::string& content) {
        std::string path = dir_ + "/" + name;
        write_text_file(path, content);
        std::size_t rows = static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
        entries_.push_back({name, sha256_hex(content), rows});
    }

    void finalize() {
        std::string m;
        for (const auto& e : entries_) m += e.name + '\t' + e.hash + '\t' + std::to_string(e.rows) + '\n';
        write_text_file(dir_ + "/manifest.txt", m);
        finalized_ = true;
    }

    ~ArtifactWriter() {
        if (!finalized_) {
            // failed run: take the partial outputs back out
            std::error_code ec;
            for (const auto& e : entries_) std::filesystem::remove(dir_ + "/" + e.name, ec);
        }
    }

    ArtifactWriter(const ArtifactWriter&) = delete;
    ArtifactWriter& operator=(const ArtifactWriter&) = delete;

private:
    struct Entry {
        std::string name, hash;
        std::size_t rows;
    };
    std::string dir_;
    std::vector<Entry> entries_;
    bool finalized_ = false;
};

namespace detail {

struct BuiltModel {
    InfectivityLaw law;
    InfectivityLaw law0;
    LimitModelSpec limit;
    SimParams sim;
};

inline BuiltModel build_model(const ModelSection& m, double extinction_alpha = 0.25) {
    LawOptions opts;
    opts.grid_step = m.law_grid_step;
    BuiltModel out{m.law.build(opts), InfectivityLaw{}, LimitModelSpec{}, SimParams{}};
    double i0_frac = m.resolve_I0_fraction();

    if (m.law0) {
        out.law0 = m.law0->build(opts);
    } else if (m.stationary_age_initials) {
        out.law0 = make_stationary_initial_law(out.law, solve_rho(out.law));
    } else {
        out.law0 = out.law;
    }

    double E0 = 0.0, I0 = i0_frac;
    if (m.variant == LimitVariant::seir) {
        E0 = i0_frac;  // freshly infected individuals enter through the exposed state
        I0 = 0.0;
    }
    out.limit = limit_spec_from_law(out.law, m.variant, E0, I0);
    if (m.stationary_age_initials || m.law0) {
        out.limit.lambda0I_mean = out.law0.mean();
        out.limit.lambda0_mean = out.law0.mean();
        out.limit.F0 = out.law0.durations().F0I;
        out.limit.F0I = out.law0.durations().F0I;
        out.limit.G0 = out.law0.durations().G0;
        out.limit.Phi0 = out.law0.durations().Phi0;
        out.limit.Psi0 = out.law0.durations().Psi0;
    }

    out.sim.population = m.population;
    out.sim.initial_infected = m.resolve_I0();
    out.sim.horizon = m.horizon;
    out.sim.grid_step = m.grid_step;
    out.sim.extinction_alpha = extinction_alpha;
    return out;
}

inline SolverConfig solver_config(const ModelSection& m) {
    SolverConfig cfg;
    cfg.dt = m.solver_dt;
    cfg.horizon = m.horizon;
    cfg.grid_step = m.grid_step;
    cfg.fp_tol = m.fp_tol;
    cfg.fp_max_iter = m.fp_max_iter;
    return cfg;
}

} // namespace detail

/// FLLN reproduction: stochastic ensemble vs the deterministic solution, with
/// a sup-distance report per component.
inline void run_flln_compare(const ExperimentConfig& cfg, const std::string& out_dir,
                             std::size_t n_threads) {
    const ModelSection& m = *cfg.model;
    auto built = detail::build_model(m, cfg.extinction_alpha);

    bool merged = m.variant == LimitVariant::merged;
    EnsembleOptions eopts;
    eopts.n_threads = n_threads;
    eopts.merged_view = merged;
    eopts.keep_trajectories = cfg.sample_trajectories > 0;
    auto ens = run_ensemble(built.law, built.law0, built.sim, cfg.replicates, cfg.seed, eopts);
    const EnsembleSummary& s = ens.summary;

    auto traj = solve(built.limit, detail::solver_config(m));

    ArtifactWriter w(out_dir);
    w.emit("ensemble_summary.csv", ensemble_csv(s));
    w.emit("volterra.csv", trajectory_csv(traj));
    for (std::size_t r = 0; r < cfg.sample_trajectories; ++r)
        w.emit("trajectory_rep" + std::to_string(r) + ".csv", trajectory_csv(ens.trajectories[r]));
    if (cfg.emit_event_log) {
        auto rep0 = simulate(built.law, built.law0, built.sim, replicate_seed(cfg.seed, 0));
        w.emit("event_log_rep0.csv", event_log_csv(rep0.state));
    }

    auto sup_diff = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double d = 0.0;
        for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
        return d;
    };
    std::ostringstream rep;
    rep << "flln_compare report\n";
    rep << "replicates\t" << cfg.replicates << "\n";
    rep << "population\t" << m.population << "\n";
    rep << "sup_dist_S\t" << fmt_g(sup_diff(s.S.mean, traj.S)) << "\n";
    rep << "sup_dist_E\t" << fmt_g(sup_diff(s.E.mean, traj.E)) << "\n";
    rep << "sup_dist_I\t" << fmt_g(sup_diff(s.I.mean, traj.I)) << "\n";
    rep << "sup_dist_R\t" << fmt_g(sup_diff(s.R.mean, traj.R)) << "\n";
    rep << "sup_dist_Ifrak\t" << fmt_g(sup_diff(s.Ifrak.mean, traj.Ifrak)) << "\n";
    rep << "expected_fluctuation_scale\t" << fmt_g(1.0 / std::sqrt(static_cast<double>(m.population)))
        << "\n";
    w.emit("flln_report.txt", rep.str());
    w.finalize();
}

/// Early exponential growth: per-replicate cumulative-infection curves,
/// fitted growth rates over the configured window, extinction flags and
/// hitting times, against the root-finder growth rate.
inline void run_early_growth(const ExperimentConfig& cfg, const std::string& out_dir,
                             std::size_t n_threads) {
    const ModelSection& m = *cfg.model;
    auto built = detail::build_model(m, cfg.extinction_alpha);
    double rho = solve_rho(built.law);

    EnsembleOptions eopts;
    eopts.n_threads = n_threads;
    eopts.keep_trajectories = true;
    eopts.hitting_eps = cfg.hitting_epsilon;
    eopts.hitting_alpha = cfg.hitting_alpha;
    auto ens = run_ensemble(built.law, built.law0, built.sim, cfg.replicates, cfg.seed, eopts);

    double N = static_cast<double>(m.population);
    double I0 = static_cast<double>(built.sim.initial_infected);
    double A_lo = std::pow(N, cfg.fit_window_lo_exp), A_hi = std::pow(N, cfg.fit_window_hi_exp);

    std::vector<double> rho_hats(cfg.replicates, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        if (ens.outcomes[r].extinct) continue;
        const Trajectory& tr = ens.trajectories[r];
        double t_lo = -1.0, t_hi = -1.0;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (t_lo < 0.0 && tr.A[i] >= A_lo) t_lo = tr.t[i];
            if (tr.A[i] <= A_hi) t_hi = tr.t[i];
        }
        if (t_lo < 0.0 || t_hi <= t_lo) continue;
        try {
            rho_hats[r] = estimate_growth_rate(tr.t, tr.A, I0, t_lo, t_hi);
        } catch (const std::invalid_argument&) {
        }
    }

    ArtifactWriter w(out_dir);
    {
        std::string csv = "t";
        for (std::size_t r = 0; r < cfg.replicates; ++r) csv += ",A_rep" + std::to_string(r);
        csv += '\n';
        const auto& t = ens.trajectories.front().t;
        for (std::size_t i = 0; i < t.size(); ++i) {
            csv += fmt_g(t[i]);
            for (std::size_t r = 0; r < cfg.replicates; ++r) csv += ',' + fmt_g(ens.trajectories[r].A[i]);
            csv += '\n';
        }
        w.emit("early_growth_A.csv", csv);
    }
    if (cfg.emit_event_log) {
        auto rep0 = simulate(built.law, built.law0, built.sim, replicate_seed(cfg.seed, 0));
        w.emit("event_log_rep0.csv", event_log_csv(rep0.state));
    }
    {
        std::string csv = "replicate,extinct,final_A,T_eps,T_alpha,rho_hat\n";
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            const auto& o = ens.outcomes[r];
            csv += std::to_string(r) + ',' + (o.extinct ? "1" : "0") + ',' + std::to_string(o.final_A) +
                   ',' + fmt_g(o.T_eps) + ',' + fmt_g(o.T_alpha) + ',' + fmt_g(rho_hats[r]) + '\n';
        }
        w.emit("early_growth_replicates.csv", csv);
    }
    {
        std::vector<double> fitted, t_alphas;
        std::size_t extinct_count = 0;
        for (std::size_t r = 0; r < cfg.replicates; ++r) {
            if (ens.outcomes[r].extinct) {
                ++extinct_count;
                continue;
            }
            if (std::isfinite(rho_hats[r])) fitted.push_back(rho_hats[r]);
            if (std::isfinite(ens.outcomes[r].T_alpha)) t_alphas.push_back(ens.outcomes[r].T_alpha);
        }
        auto median = [](std::vector<double> v) {
            if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
            std::sort(v.begin(), v.end());
            std::size_t n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        };
        std::ostringstream rep;
        rep << "early_growth report\n";
        rep << "rho_solver\t" << fmt_g(rho) << "\n";
        rep << "replicates\t" << cfg.replicates << "\n";
        rep << "extinct\t" << extinct_count << "\n";
        rep << "median_rho_hat\t" << fmt_g(median(fitted)) << "\n";
        rep << "median_T_alpha\t" << fmt_g(median(t_alphas)) << "\n";
        rep << "alpha_over_rho_logN\t" << fmt_g(cfg.hitting_alpha / rho * std::log(N)) << "\n";
        w.emit("early_growth_report.txt", rep.str());
    }
    w.finalize();
}

inline std::string heatmap_csv(const HeatmapResult& hm) {
    std::string out;
    for (double a : hm.alpha_grid) out += ',' + fmt_g(a, 6);
    out += '\n';
    for (std::size_t r = 0; r < hm.pR_grid.size(); ++r) {
        out += fmt_g(hm.pR_grid[r], 6);
        for (std::size_t c = 0; c < hm.alpha_grid.size(); ++c) out += ',' + fmt_g(hm.at(r, c), 6);
        out += '\n';
    }
    return out;
}

inline void run_heatmap(const ExperimentConfig& cfg, const std::string& out_dir, std::size_t n_threads) {
    auto hm = r0_heatmap(cfg.heatmap_rho, linspace01(cfg.heatmap_alpha_cells),
                         linspace01(cfg.heatmap_pR_cells), cfg.heatmap_peak_fraction, n_threads);
    ArtifactWriter w(out_dir);
    w.emit("heatmap.csv", heatmap_csv(hm));
    w.finalize();
}

inline void run_growth_summary(const ExperimentConfig& cfg, const std::string& out_dir) {
    const ModelSection& m = *cfg.model;
    LawOptions opts;
    opts.grid_step = m.law_grid_step;
    auto law = m.law.build(opts);
    auto g = growth_summary(law, cfg.gs_initial_infected, cfg.gs_susceptible_fraction, cfg.gs_mc_samples);

    ArtifactWriter w(out_dir);
    std::ostringstream kv;
    kv << "rho\t" << fmt_g(g.rho) << "\n"
       << "R0\t" << fmt_g(g.R0) << "\n"
       << "Re\t" << fmt_g(g.Re) << "\n"
       << "mu\t" << fmt_g(g.mu) << "\n"
       << "i_frac\t" << fmt_g(g.i_frac) << "\n"
       << "r_frac\t" << fmt_g(g.r_frac) << "\n"
       << "extinction_q\t" << fmt_g(g.extinction_q) << "\n";
    w.emit("growth_summary.txt", kv.str());
    std::string csv = "rho,R0,Re,mu,i_frac,r_frac,extinction_q\n";
    csv += fmt_g(g.rho) + ',' + fmt_g(g.R0) + ',' + fmt_g(g.Re) + ',' + fmt_g(g.mu) + ',' +
           fmt_g(g.i_frac) + ',' + fmt_g(g.r_frac) + ',' + fmt_g(g.extinction_q) + '\n';
    w.emit("growth_summary.csv", csv);
    w.finalize();
}

inline void run_solve_only(const ExperimentConfig& cfg, const std::string& out_dir) {
    const ModelSection& m = *cfg.model;
    auto built = detail::build_model(m);
    auto traj = solve(built.limit, detail::solver_config(m));
    ArtifactWriter w(out_dir);
    w.emit("volterra.csv", trajectory_csv(traj));
    w.finalize();
}

/// Dispatch one experiment; outputs land under out_dir (falls back to the
/// config's own output_dir).
inline void run_experiment(const ExperimentConfig& cfg, const std::string& out_override = "",
                           std::size_t threads_override = 0) {
    std::string out_dir = out_override.empty() ? cfg.output_dir : out_override;
    std::size_t threads = threads_override ? threads_override : cfg.threads.value_or(0);
    switch (cfg.kind) {
        case ExperimentConfig::Kind::flln_compare: run_flln_compare(cfg, out_dir, threads); return;
        case ExperimentConfig::Kind::early_growth: run_early_growth(cfg, out_dir, threads); return;
        case ExperimentConfig::Kind::heatmap: run_heatmap(cfg, out_dir, threads); return;
        case ExperimentConfig::Kind::growth_summary: run_growth_summary(cfg, out_dir); return;
        case ExperimentConfig::Kind::solve_only: run_solve_only(cfg, out_dir); return;
    }
    throw std::logic_error("run_experiment: unknown kind");
}

} // namespace epivolt
