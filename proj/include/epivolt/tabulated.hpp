#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace epivolt {

/// A function of time tabulated on a uniform grid starting at t = 0.
///
/// Stored node values are right limits (cadlag convention), and known
/// discontinuities carry a separate left-limit record. Integration splits at
/// recorded jump nodes, so step-like curves (deterministic-duration c.d.f.s,
/// rectangular mean infectivities) integrate at full quadrature order instead
/// of smearing the jump over a cell. Beyond the last node the curve extends
/// as a constant; before t = 0 it is not defined.
class TabulatedCurve {
public:
    struct Jump {
        std::size_t node;  // grid index of the jump (right limit stored in values)
        double left;       // value just before the jump
    };

    TabulatedCurve() = default;

    TabulatedCurve(double dt, std::vector<double> values, std::vector<Jump> jumps = {})
        : dt_(dt), values_(std::move(values)), jumps_(std::move(jumps)) {
        if (dt_ <= 0.0) throw std::invalid_argument("TabulatedCurve: dt must be positive");
        if (values_.size() < 2) throw std::invalid_argument("TabulatedCurve: need at least two nodes");
        std::sort(jumps_.begin(), jumps_.end(), [](const Jump& a, const Jump& b) { return a.node < b.node; });
        for (std::size_t i = 0; i < jumps_.size(); ++i) {
            if (jumps_[i].node == 0 || jumps_[i].node >= values_.size())
                throw std::invalid_argument("TabulatedCurve: jump node out of range");
            if (i > 0 && jumps_[i].node == jumps_[i - 1].node)
                throw std::invalid_argument("TabulatedCurve: duplicate jump node");
        }
    }

    bool empty() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }
    double dt() const { return dt_; }
    double end_time() const { return dt_ * static_cast<double>(values_.size() - 1); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<Jump>& jumps() const { return jumps_; }
    double value(std::size_t i) const { return values_[i]; }

    /// Snap t to a grid node if it is within a relative whisker of one,
    /// returning the node index, or npos if t is strictly between nodes.
    std::size_t node_at(double t) const {
        double x = t / dt_;
        double r = std::round(x);
        if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) && r >= 0.0 &&
            r < static_cast<double>(values_.size()))
            return static_cast<std::size_t>(r);
        return npos;
    }

    /// Cadlag evaluation with linear interpolation between nodes. Across a
    /// recorded jump the cell interpolates toward the left limit, and the
    /// jump node itself evaluates to the stored right limit.
    double eval(double t) const {
        require_table();
        if (t < 0.0) {
            if (t > -1e-12) t = 0.0;
            else throw std::domain_error("TabulatedCurve: negative time");
        }
        if (std::size_t k = node_at(t); k != npos) return values_[k];
        if (t >= end_time()) return values_.back();
        auto k = static_cast<std::size_t>(t / dt_);
        if (k + 1 >= values_.size()) return values_.back();
        double hi = values_[k + 1];
        if (const Jump* j = jump_at(k + 1)) hi = j->left;
        double frac = (t - static_cast<double>(k) * dt_) / dt_;
        return values_[k] + frac * (hi - values_[k]);
    }

    /// Integral of the curve over [0, end_time()] by composite Simpson rule,
    /// split at recorded jumps.
    double integral() const {
        return integrate_weighted([](double) { return 1.0; });
    }

    /// Integral of f(t) * exp(-rho t) over [0, end_time()]. Zero node values
    /// contribute exactly zero, so the weight may overflow harmlessly outside
    /// the support of f.
    double laplace(double rho) const {
        return integrate_weighted([rho](double t) { return std::exp(-rho * t); });
    }

    /// Integral of t * f(t) * exp(-rho t): the (negated) derivative of
    /// laplace with respect to rho.
    double laplace_t_moment(double rho) const {
        return integrate_weighted([rho](double t) { return t * std::exp(-rho * t); });
    }

    template <class Weight>
    double integrate_weighted(Weight&& w) const {
        require_table();
        const std::size_t n = values_.size() - 1;  // interval count
        double total = 0.0;
        std::size_t piece_start = 0;
        auto piece = [&](std::size_t a, std::size_t b, double left_override, bool use_override) {
            auto f = [&](std::size_t k) -> double {
                double v = (use_override && k == b) ? left_override : values_[k];
                if (v == 0.0) return 0.0;
                return v * w(static_cast<double>(k) * dt_);
            };
            total += simpson_run(f, a, b);
        };
        for (const Jump& j : jumps_) {
            if (j.node <= piece_start) { piece_start = std::max(piece_start, j.node); continue; }
            piece(piece_start, j.node, j.left, true);
            piece_start = j.node;
        }
        if (piece_start < n) piece(piece_start, n, 0.0, false);
        return total;
    }

    /// Suffix integral of f(k*dt + s) * exp(-rho s) over s in [0, end - k*dt],
    /// evaluated without rescaling by exp(rho k dt) so large rho t never
    /// overflows. Grid-aligned: the shifted nodes are the original nodes.
    double shifted_laplace(std::size_t k, double rho) const {
        require_table();
        const std::size_t n = values_.size() - 1;
        if (k >= n) return 0.0;
        double total = 0.0;
        std::size_t piece_start = k;
        auto piece = [&](std::size_t a, std::size_t b, double left_override, bool use_override) {
            auto f = [&](std::size_t i) -> double {
                double v = (use_override && i == b) ? left_override : values_[i];
                if (v == 0.0) return 0.0;
                return v * std::exp(-rho * static_cast<double>(i - k) * dt_);
            };
            total += simpson_run(f, a, b);
        };
        for (const Jump& j : jumps_) {
            if (j.node <= piece_start) continue;
            piece(piece_start, j.node, j.left, true);
            piece_start = j.node;
        }
        if (piece_start < n) piece(piece_start, n, 0.0, false);
        return total;
    }

    /// Node-wise linear combination; curves must share dt. Shorter inputs
    /// extend by their final value. Jump records are merged.
    static TabulatedCurve combine(const std::vector<std::pair<double, const TabulatedCurve*>>& terms) {
        if (terms.empty()) throw std::invalid_argument("TabulatedCurve::combine: no terms");
        double dt = terms.front().second->dt_;
        std::size_t len = 0;
        for (auto& [c, curve] : terms) {
            if (std::abs(curve->dt_ - dt) > 1e-12 * dt)
                throw std::invalid_argument("TabulatedCurve::combine: mismatched grid step");
            len = std::max(len, curve->size());
        }
        std::vector<double> v(len, 0.0);
        for (auto& [c, curve] : terms)
            for (std::size_t i = 0; i < len; ++i)
                v[i] += c * (i < curve->size() ? curve->values_[i] : curve->values_.back());
        std::vector<Jump> jumps;
        for (auto& [c, curve] : terms)
            for (const Jump& j : curve->jumps_) {
                auto it = std::find_if(jumps.begin(), jumps.end(), [&](const Jump& q) { return q.node == j.node; });
                if (it == jumps.end()) {
                    // left limit = combined value with this curve's left limit substituted
                    double left = v[j.node] + c * (j.left - curve->values_[j.node]);
                    // account for other curves jumping at the same node later
                    jumps.push_back({j.node, left});
                } else {
                    it->left += c * (j.left - curve->values_[j.node]);
                }
            }
        return TabulatedCurve(dt, std::move(v), std::move(jumps));
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    void require_table() const {
        if (values_.empty()) throw std::logic_error("TabulatedCurve: not tabulated");
    }

    const Jump* jump_at(std::size_t node) const {
        auto it = std::lower_bound(jumps_.begin(), jumps_.end(), node,
                                   [](const Jump& j, std::size_t n) { return j.node < n; });
        return (it != jumps_.end() && it->node == node) ? &*it : nullptr;
    }

    // Composite Simpson over node indices [a, b]; odd interval counts close
    // with the 3/8 rule, a single interval falls back to the trapezoid.
    template <class F>
    double simpson_run(F&& f, std::size_t a, std::size_t b) const {
        const std::size_t m = b - a;
        if (m == 0) return 0.0;
        if (m == 1) return dt_ * 0.5 * (f(a) + f(b));
        std::size_t b_simpson = b;
        double tail = 0.0;
        if (m % 2 != 0) {
            if (m == 3) return dt_ * 0.375 * (f(a) + 3.0 * f(a + 1) + 3.0 * f(a + 2) + f(b));
            b_simpson = b - 3;
            tail = dt_ * 0.375 * (f(b - 3) + 3.0 * f(b - 2) + 3.0 * f(b - 1) + f(b));
        }
        double odd = 0.0, even = 0.0;
        for (std::size_t k = a + 1; k < b_simpson; k += 2) odd += f(k);
        for (std::size_t k = a + 2; k < b_simpson; k += 2) even += f(k);
        return dt_ / 3.0 * (f(a) + 4.0 * odd + 2.0 * even + f(b_simpson)) + tail;
    }

    double dt_ = 0.0;
    std::vector<double> values_;
    std::vector<Jump> jumps_;
};

} // namespace epivolt
