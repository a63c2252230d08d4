#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <thread>
#include <vector>

#include "duration.hpp"
#include "early_phase.hpp"
#include "infectivity.hpp"
#include "tabulated.hpp"

namespace epivolt {

/// Reported/unreported mixture parameterization: a reported individual's
/// triangular infectivity peaks at 1, an unreported one at alpha but stays
/// infectious longer. Durations: zeta = 2 + 2 X1 for everyone; eta = 3 + X2
/// (reported) or 8 + 4 X2 (unreported), X1, X2 independent Beta(2,2).
struct CovidScenario {
    double p_reported = 0.8;
    double alpha = 0.7;          // relative infectivity of unreported individuals
    double peak_fraction = 0.2;  // peak at zeta + eta/5

    void validate() const {
        if (!(p_reported >= 0.0 && p_reported <= 1.0))
            throw std::invalid_argument("covid scenario: p_reported must lie in [0,1]");
        if (!(alpha > 0.0 && alpha <= 1.0))
            throw std::invalid_argument("covid scenario: alpha must lie in (0,1]");
        if (!(peak_fraction > 0.0 && peak_fraction < 1.0))
            throw std::invalid_argument("covid scenario: peak_fraction must lie in (0,1)");
    }
};

inline JointDurationLaw covid_reported_durations() {
    return JointDurationLaw::independent(DurationLaw::beta_affine(2.0, 2.0, 2.0, 2.0),
                                         DurationLaw::beta_affine(2.0, 2.0, 3.0, 1.0));
}

inline JointDurationLaw covid_unreported_durations() {
    return JointDurationLaw::independent(DurationLaw::beta_affine(2.0, 2.0, 2.0, 2.0),
                                         DurationLaw::beta_affine(2.0, 2.0, 8.0, 4.0));
}

inline InfectivityLaw build_covid_law(const CovidScenario& sc, const LawOptions& opts = {}) {
    sc.validate();
    if (sc.p_reported >= 1.0)
        return make_law_triangular(1.0, sc.peak_fraction, covid_reported_durations(), opts);
    if (sc.p_reported <= 0.0)
        return make_law_triangular(sc.alpha, sc.peak_fraction, covid_unreported_durations(), opts);
    auto reported = make_law_triangular(1.0, sc.peak_fraction, covid_reported_durations(), opts);
    auto unreported = make_law_triangular(sc.alpha, sc.peak_fraction, covid_unreported_durations(), opts);
    return make_law_mixture({{sc.p_reported, reported}, {1.0 - sc.p_reported, unreported}});
}

struct HeatmapResult {
    std::vector<double> alpha_grid;  // columns
    std::vector<double> pR_grid;     // rows
    std::vector<double> R0;          // row-major: R0[row * alpha_grid.size() + col]

    double at(std::size_t row, std::size_t col) const { return R0[row * alpha_grid.size() + col]; }
};

inline std::vector<double> linspace01(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

/// R0 over the (alpha, p_R) plane for a given observed growth rate. Each cell
/// assembles the scenario mean shape g = p_R * g_rep + (1 - p_R) alpha * g_unrep
/// (unit-peak base curves) and evaluates the growth-rate ratio formula, which
/// is invariant to the scale of g. Cells are independent; rows are evaluated
/// in parallel and assembled deterministically.
///
/// The (alpha = 0, p_R = 0) corner has an identically zero shape; it is
/// reported with the reported-only limit, since alpha = 0 removes unreported
/// infectivity entirely.
inline HeatmapResult r0_heatmap(double rho, std::vector<double> alpha_grid, std::vector<double> pR_grid,
                                double peak_fraction = 0.2, std::size_t n_threads = 0,
                                const LawOptions& opts = {}) {
    if (!std::isfinite(rho)) throw std::invalid_argument("r0_heatmap: rho must be finite");
    for (double a : alpha_grid)
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("r0_heatmap: alpha grid outside [0,1]");
    for (double p : pR_grid)
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("r0_heatmap: p_R grid outside [0,1]");
    if (alpha_grid.empty() || pR_grid.empty()) throw std::invalid_argument("r0_heatmap: empty grid");

    auto reported = make_law_triangular(1.0, peak_fraction, covid_reported_durations(), opts);
    auto unreported = make_law_triangular(1.0, peak_fraction, covid_unreported_durations(), opts);
    const TabulatedCurve& g_rep = reported.mean();
    const TabulatedCurve& g_unrep = unreported.mean();

    HeatmapResult out;
    out.alpha_grid = std::move(alpha_grid);
    out.pR_grid = std::move(pR_grid);
    out.R0.assign(out.alpha_grid.size() * out.pR_grid.size(), 0.0);

    auto cell = [&](std::size_t row, std::size_t col) {
        double p = out.pR_grid[row], a = out.alpha_grid[col];
        double wr = p, wu = (1.0 - p) * a;
        if (wr == 0.0 && wu == 0.0) wr = 1.0;
        auto g = TabulatedCurve::combine({{wr, &g_rep}, {wu, &g_unrep}});
        out.R0[row * out.alpha_grid.size() + col] = R0_from_growth(g, rho).R0;
    };

    std::size_t rows = out.pR_grid.size();
    std::size_t workers = n_threads ? n_threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, rows);
    if (workers <= 1) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < out.alpha_grid.size(); ++c) cell(r, c);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (std::size_t r = w; r < rows; r += workers)
                    for (std::size_t c = 0; c < out.alpha_grid.size(); ++c) cell(r, c);
            });
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

} // namespace epivolt
