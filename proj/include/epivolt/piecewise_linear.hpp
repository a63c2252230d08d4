#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace epivolt {

/// One realized infection-age infectivity trajectory: finitely many linear
/// segments over [x_{j-1}, x_j), identically zero before the first breakpoint
/// interval starts producing positive values and from the last breakpoint on.
///
/// The representation is exact: integrals, exponentially weighted integrals
/// and suprema are all closed-form.
class PiecewiseLinearFunction {
public:
    struct Segment {
        double value_at_start;  // a_j
        double slope;           // b_j
    };

    /// Zero function (e.g. a degenerate sample with an empty infectious period).
    PiecewiseLinearFunction() : breakpoints_{0.0}, zeta_(0.0), eta_(0.0) {}

    PiecewiseLinearFunction(std::vector<double> breakpoints, std::vector<Segment> segments,
                            double zeta, double eta)
        : breakpoints_(std::move(breakpoints)), segments_(std::move(segments)), zeta_(zeta), eta_(eta) {
        if (breakpoints_.empty() || breakpoints_.front() != 0.0)
            throw std::invalid_argument("PiecewiseLinearFunction: breakpoints must start at 0");
        if (segments_.size() + 1 != breakpoints_.size())
            throw std::invalid_argument("PiecewiseLinearFunction: need one segment per interval");
        for (std::size_t j = 0; j + 1 < breakpoints_.size(); ++j) {
            if (breakpoints_[j + 1] < breakpoints_[j])
                throw std::invalid_argument("PiecewiseLinearFunction: breakpoints must be nondecreasing");
            double len = breakpoints_[j + 1] - breakpoints_[j];
            double end_value = segments_[j].value_at_start + segments_[j].slope * len;
            if (segments_[j].value_at_start < -1e-12 || end_value < -1e-12)
                throw std::invalid_argument("PiecewiseLinearFunction: negative infectivity");
        }
    }

    double zeta() const { return zeta_; }
    double eta() const { return eta_; }
    double support_end() const { return breakpoints_.back(); }
    std::size_t segment_count() const { return segments_.size(); }
    double breakpoint(std::size_t j) const { return breakpoints_[j]; }
    const Segment& segment(std::size_t j) const { return segments_[j]; }

    double eval(double t) const {
        if (t < breakpoints_.front() || t >= breakpoints_.back()) return 0.0;
        auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
        auto j = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
        if (j >= segments_.size()) return 0.0;
        return segments_[j].value_at_start + segments_[j].slope * (t - breakpoints_[j]);
    }

    /// Exact integral over the whole support.
    double integral() const {
        double sum = 0.0;
        for (std::size_t j = 0; j < segments_.size(); ++j) {
            double len = breakpoints_[j + 1] - breakpoints_[j];
            sum += segments_[j].value_at_start * len + 0.5 * segments_[j].slope * len * len;
        }
        return sum;
    }

    /// Exact integral of f(t) * exp(-rho t), stable as rho -> 0.
    double laplace(double rho) const {
        double sum = 0.0;
        for (std::size_t j = 0; j < segments_.size(); ++j) {
            double p = breakpoints_[j], len = breakpoints_[j + 1] - p;
            if (len == 0.0) continue;
            const Segment& s = segments_[j];
            sum += std::exp(-rho * p) * (s.value_at_start * exp_moment0(rho, len) + s.slope * exp_moment1(rho, len));
        }
        return sum;
    }

    /// Supremum of the function (attained at a segment endpoint).
    double sup() const {
        double m = 0.0;
        for (std::size_t j = 0; j < segments_.size(); ++j) {
            double len = breakpoints_[j + 1] - breakpoints_[j];
            m = std::max({m, segments_[j].value_at_start, segments_[j].value_at_start + segments_[j].slope * len});
        }
        return m;
    }

    /// The trajectory seen age `a` after its start: t -> f(a + t), clipped at
    /// zero. Used for stationary-age initial conditions.
    PiecewiseLinearFunction shifted_by_age(double a) const {
        if (a <= 0.0) return *this;
        if (a >= breakpoints_.back()) return PiecewiseLinearFunction();
        std::vector<double> bp{0.0};
        std::vector<Segment> segs;
        for (std::size_t j = 0; j < segments_.size(); ++j) {
            if (breakpoints_[j + 1] <= a) continue;
            double start = std::max(breakpoints_[j], a);
            segs.push_back({segments_[j].value_at_start + segments_[j].slope * (start - breakpoints_[j]),
                            segments_[j].slope});
            bp.push_back(breakpoints_[j + 1] - a);
        }
        return PiecewiseLinearFunction(std::move(bp), std::move(segs), std::max(0.0, zeta_ - a),
                                       std::max(0.0, zeta_ + eta_ - a) - std::max(0.0, zeta_ - a));
    }

private:
    // integral over [0, len] of exp(-rho s) ds
    static double exp_moment0(double rho, double len) {
        double x = rho * len;
        if (std::abs(x) < 1e-12) return len;
        return -std::expm1(-x) / rho;
    }

    // integral over [0, len] of s exp(-rho s) ds
    static double exp_moment1(double rho, double len) {
        double x = rho * len;
        if (std::abs(x) < 1e-4) {
            // series of (1 - (1+x)e^{-x}) / x^2
            return len * len * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0);
        }
        return (1.0 - (1.0 + x) * std::exp(-x)) / (rho * rho);
    }

    std::vector<double> breakpoints_;
    std::vector<Segment> segments_;
    double zeta_;
    double eta_;
};

} // namespace epivolt
