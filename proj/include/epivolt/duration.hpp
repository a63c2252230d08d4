#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "random.hpp"

namespace epivolt {

namespace detail {

/// Gauss-Legendre nodes/weights mapped to [0, 1], computed once per order by
/// Newton iteration on the Legendre polynomial.
struct GaussLegendre {
    std::vector<double> node, weight;

    explicit GaussLegendre(std::size_t n) {
        node.resize(n);
        weight.resize(n);
        for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
            double x = std::cos(M_PI * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter) {
                double p0 = 1.0, p1 = x;
                for (std::size_t k = 2; k <= n; ++k) {
                    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                    p0 = p1;
                    p1 = p2;
                }
                dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
                double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            double w = 2.0 / ((1.0 - x * x) * dp * dp);
            node[i] = 0.5 * (1.0 - x);
            weight[i] = 0.5 * w;
            node[n - 1 - i] = 0.5 * (1.0 + x);
            weight[n - 1 - i] = 0.5 * w;
        }
    }
};

inline const GaussLegendre& gauss_legendre(std::size_t n) {
    static const GaussLegendre g32(32), g64(64), g200(200);
    if (n <= 32) return g32;
    if (n <= 64) return g64;
    return g200;
}

/// Regularized incomplete beta function I_x(a, b) via the Lentz continued
/// fraction.
inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    auto cf = [](double a_, double b_, double x_) {
        const double tiny = 1e-300;
        double qab = a_ + b_, qap = a_ + 1.0, qam = a_ - 1.0;
        double c = 1.0, d = 1.0 - qab * x_ / qap;
        if (std::abs(d) < tiny) d = tiny;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= 300; ++m) {
            double m2 = 2.0 * m;
            double aa = m * (b_ - m) * x_ / ((qam + m2) * (a_ + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            h *= d * c;
            aa = -(a_ + m) * (qab + m) * x_ / ((a_ + m2) * (qap + m2));
            d = 1.0 + aa * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1.0 + aa / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            double del = d * c;
            h *= del;
            if (std::abs(del - 1.0) < 1e-15) break;
        }
        return h;
    };
    if (a == 2.0 && b == 2.0) return x * x * (3.0 - 2.0 * x);
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * cf(a, b, x) / a;
    return 1.0 - front * cf(b, a, 1.0 - x) / b;
}

} // namespace detail

/// Marginal law of a single duration (exposed or infectious period).
class DurationLaw {
public:
    enum class Kind { deterministic, exponential, beta_affine };

    static DurationLaw deterministic(double value) {
        if (value < 0.0) throw std::invalid_argument("duration: negative deterministic value");
        DurationLaw d;
        d.kind_ = Kind::deterministic;
        d.p1_ = value;
        return d;
    }

    static DurationLaw exponential(double rate) {
        if (rate <= 0.0) throw std::invalid_argument("duration: exponential rate must be positive");
        DurationLaw d;
        d.kind_ = Kind::exponential;
        d.p1_ = rate;
        return d;
    }

    /// shift + scale * Beta(a, b); support [shift, shift + scale].
    static DurationLaw beta_affine(double a, double b, double shift, double scale) {
        if (a <= 0.0 || b <= 0.0 || scale <= 0.0 || shift < 0.0)
            throw std::invalid_argument("duration: invalid beta_affine parameters");
        DurationLaw d;
        d.kind_ = Kind::beta_affine;
        d.p1_ = a;
        d.p2_ = b;
        d.shift_ = shift;
        d.scale_ = scale;
        return d;
    }

    Kind kind() const { return kind_; }
    bool is_deterministic() const { return kind_ == Kind::deterministic; }
    double deterministic_value() const { return p1_; }

    double sample(Rng& rng) const {
        switch (kind_) {
            case Kind::deterministic: return p1_;
            case Kind::exponential: return rng.exponential(p1_);
            case Kind::beta_affine: return shift_ + scale_ * sample_beta(rng);
        }
        return 0.0;
    }

    double cdf(double t) const {
        switch (kind_) {
            case Kind::deterministic: return t >= p1_ ? 1.0 : 0.0;
            case Kind::exponential: return t <= 0.0 ? 0.0 : -std::expm1(-p1_ * t);
            case Kind::beta_affine: return detail::incomplete_beta(p1_, p2_, (t - shift_) / scale_);
        }
        return 0.0;
    }

    /// Left limit of the c.d.f. (differs from cdf only at an atom).
    double cdf_left(double t) const {
        if (kind_ == Kind::deterministic) return t > p1_ ? 1.0 : 0.0;
        return cdf(t);
    }

    bool has_density() const { return kind_ != Kind::deterministic; }

    double density(double t) const {
        switch (kind_) {
            case Kind::deterministic: return 0.0;
            case Kind::exponential: return t < 0.0 ? 0.0 : p1_ * std::exp(-p1_ * t);
            case Kind::beta_affine: {
                double x = (t - shift_) / scale_;
                if (x <= 0.0 || x >= 1.0) return 0.0;
                double ln = std::lgamma(p1_ + p2_) - std::lgamma(p1_) - std::lgamma(p2_) +
                            (p1_ - 1.0) * std::log(x) + (p2_ - 1.0) * std::log1p(-x);
                return std::exp(ln) / scale_;
            }
        }
        return 0.0;
    }

    double mean() const {
        switch (kind_) {
            case Kind::deterministic: return p1_;
            case Kind::exponential: return 1.0 / p1_;
            case Kind::beta_affine: return shift_ + scale_ * p1_ / (p1_ + p2_);
        }
        return 0.0;
    }

    /// E[exp(s X)]; +infinity where the transform diverges.
    double mgf(double s) const {
        switch (kind_) {
            case Kind::deterministic: return std::exp(s * p1_);
            case Kind::exponential:
                if (s >= p1_) return std::numeric_limits<double>::infinity();
                return p1_ / (p1_ - s);
            case Kind::beta_affine: {
                const auto& gl = detail::gauss_legendre(64);
                double sum = 0.0;
                for (std::size_t i = 0; i < gl.node.size(); ++i) {
                    double x = gl.node[i];
                    sum += gl.weight[i] * beta_pdf(x) * std::exp(s * (shift_ + scale_ * x));
                }
                return sum;
            }
        }
        return 0.0;
    }

    double quantile(double p) const {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("duration: quantile level outside [0,1]");
        switch (kind_) {
            case Kind::deterministic: return p1_;
            case Kind::exponential: return p >= 1.0 ? std::numeric_limits<double>::infinity()
                                                    : -std::log1p(-p) / p1_;
            case Kind::beta_affine: {
                if (p <= 0.0) return shift_;
                if (p >= 1.0) return shift_ + scale_;
                double lo = 0.0, hi = 1.0;
                for (int i = 0; i < 80; ++i) {
                    double mid = 0.5 * (lo + hi);
                    (detail::incomplete_beta(p1_, p2_, mid) < p ? lo : hi) = mid;
                }
                return shift_ + scale_ * 0.5 * (lo + hi);
            }
        }
        return 0.0;
    }

    bool compact_support() const { return kind_ != Kind::exponential; }

    /// Exact supremum of the support for compact laws; the (1 - tail_mass)
    /// quantile otherwise.
    double upper(double tail_mass) const {
        switch (kind_) {
            case Kind::deterministic: return p1_;
            case Kind::beta_affine: return shift_ + scale_;
            case Kind::exponential: return quantile(1.0 - tail_mass);
        }
        return 0.0;
    }

    /// Interior points where the c.d.f. is not smooth (support edges, atoms).
    std::vector<double> cdf_kinks() const {
        switch (kind_) {
            case Kind::deterministic: return {p1_};
            case Kind::exponential: return {0.0};
            case Kind::beta_affine: return {shift_, shift_ + scale_};
        }
        return {};
    }

private:
    double beta_pdf(double x) const {
        if (x <= 0.0 || x >= 1.0) return 0.0;
        return std::exp(std::lgamma(p1_ + p2_) - std::lgamma(p1_) - std::lgamma(p2_) +
                        (p1_ - 1.0) * std::log(x) + (p2_ - 1.0) * std::log1p(-x));
    }

    double sample_beta(Rng& rng) const {
        // Beta(2,2) has a closed-form inverse c.d.f. (one uniform per draw).
        if (p1_ == 2.0 && p2_ == 2.0) {
            double u = rng.uniform();
            return 0.5 - std::sin(std::asin(1.0 - 2.0 * u) / 3.0);
        }
        if (p1_ >= 1.0 && p2_ >= 1.0) {
            double mode = (p1_ + p2_ == 2.0) ? 0.5 : (p1_ - 1.0) / (p1_ + p2_ - 2.0);
            double peak = beta_pdf(std::min(std::max(mode, 1e-12), 1.0 - 1e-12));
            for (;;) {
                double x = rng.uniform();
                if (rng.uniform() * peak <= beta_pdf(x)) return x;
            }
        }
        // Johnk's method for the unbounded-density cases.
        for (;;) {
            double x = std::pow(rng.uniform(), 1.0 / p1_);
            double y = std::pow(rng.uniform(), 1.0 / p2_);
            if (x + y <= 1.0 && x + y > 0.0) return x / (x + y);
        }
    }

    Kind kind_ = Kind::deterministic;
    double p1_ = 0.0, p2_ = 0.0, shift_ = 0.0, scale_ = 0.0;
};

/// Joint law of the pair (zeta, eta): either an independent product of two
/// marginals or a finite table of weighted atoms (the joint_table descriptor).
class JointDurationLaw {
public:
    struct Atom {
        double zeta, eta, weight;
    };

    static JointDurationLaw independent(DurationLaw zeta, DurationLaw eta) {
        JointDurationLaw j;
        j.independent_ = true;
        j.zeta_ = zeta;
        j.eta_ = eta;
        return j;
    }

    static JointDurationLaw table(std::vector<Atom> atoms) {
        if (atoms.empty()) throw std::invalid_argument("joint_table: empty");
        double total = 0.0;
        for (auto& a : atoms) {
            if (a.zeta < 0.0 || a.eta < 0.0 || a.weight <= 0.0)
                throw std::invalid_argument("joint_table: invalid atom");
            total += a.weight;
        }
        for (auto& a : atoms) a.weight /= total;
        JointDurationLaw j;
        j.independent_ = false;
        j.atoms_ = std::move(atoms);
        return j;
    }

    bool is_independent() const { return independent_; }
    const DurationLaw& zeta_law() const { return zeta_; }
    const DurationLaw& eta_law() const { return eta_; }
    const std::vector<Atom>& atoms() const { return atoms_; }

    std::pair<double, double> sample(Rng& rng) const {
        if (independent_) return {zeta_.sample(rng), eta_.sample(rng)};
        double u = rng.uniform(), acc = 0.0;
        for (const Atom& a : atoms_) {
            acc += a.weight;
            if (u < acc) return {a.zeta, a.eta};
        }
        return {atoms_.back().zeta, atoms_.back().eta};
    }

    /// G(t) = P(zeta <= t)
    double cdf_zeta(double t, bool left = false) const {
        if (independent_) return left ? zeta_.cdf_left(t) : zeta_.cdf(t);
        double s = 0.0;
        for (const Atom& a : atoms_)
            if (left ? a.zeta < t : a.zeta <= t) s += a.weight;
        return s;
    }

    /// Phi(t) = P(zeta + eta <= t)
    double cdf_total(double t, bool left = false) const {
        if (!independent_) {
            double s = 0.0;
            for (const Atom& a : atoms_)
                if (left ? a.zeta + a.eta < t : a.zeta + a.eta <= t) s += a.weight;
            return s;
        }
        if (t < 0.0) return 0.0;
        const DurationLaw &z = zeta_, &e = eta_;
        if (z.is_deterministic()) return left ? e.cdf_left(t - z.deterministic_value())
                                              : e.cdf(t - z.deterministic_value());
        if (e.is_deterministic()) return left ? z.cdf_left(t - e.deterministic_value())
                                              : z.cdf(t - e.deterministic_value());
        // Both continuous: the sum has no atoms, left limit equals the value.
        if (z.kind() == DurationLaw::Kind::exponential && e.kind() == DurationLaw::Kind::exponential) {
            if (t <= 0.0) return 0.0;
            double nu = 1.0 / z.mean(), ga = 1.0 / e.mean();
            if (std::abs(nu - ga) < 1e-12 * nu)
                return 1.0 - (1.0 + nu * t) * std::exp(-nu * t);
            return 1.0 - (nu * std::exp(-ga * t) - ga * std::exp(-nu * t)) / (nu - ga);
        }
        // Integrate the compactly supported density against the other c.d.f.,
        // splitting where that c.d.f. has kinks so each panel is smooth.
        const DurationLaw& dens = (z.kind() == DurationLaw::Kind::beta_affine) ? z : e;
        const DurationLaw& other = (&dens == &z) ? e : z;
        double lo = dens.upper(0.0) - dens_support_len(dens);
        double hi = dens.upper(0.0);
        std::vector<double> cuts{lo, hi};
        for (double k : other.cdf_kinks()) {
            double u = t - k;
            if (u > lo && u < hi) cuts.push_back(u);
        }
        std::sort(cuts.begin(), cuts.end());
        const auto& gl = detail::gauss_legendre(64);
        double sum = 0.0;
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
            double a = cuts[c], b = cuts[c + 1];
            if (b - a <= 0.0) continue;
            for (std::size_t i = 0; i < gl.node.size(); ++i) {
                double u = a + (b - a) * gl.node[i];
                sum += (b - a) * gl.weight[i] * dens.density(u) * other.cdf(t - u);
            }
        }
        return std::min(sum, 1.0);
    }

    /// Psi(t) = P(zeta <= t < zeta + eta) = G(t) - Phi(t), by construction.
    double psi(double t, bool left = false) const { return cdf_zeta(t, left) - cdf_total(t, left); }

    double mean_zeta() const {
        if (independent_) return zeta_.mean();
        double s = 0.0;
        for (const Atom& a : atoms_) s += a.weight * a.zeta;
        return s;
    }

    double mean_eta() const {
        if (independent_) return eta_.mean();
        double s = 0.0;
        for (const Atom& a : atoms_) s += a.weight * a.eta;
        return s;
    }

    /// E[exp(s * eta)]: the transform the offspring generating function needs
    /// when the per-individual total infectivity is proportional to eta.
    double eta_mgf(double s) const {
        if (independent_) return eta_.mgf(s);
        double sum = 0.0;
        for (const Atom& a : atoms_) sum += a.weight * std::exp(s * a.eta);
        return sum;
    }

    bool compact() const {
        if (independent_) return zeta_.compact_support() && eta_.compact_support();
        return true;
    }

    double zeta_upper(double tail_mass) const {
        if (independent_) return zeta_.upper(tail_mass);
        double m = 0.0;
        for (const Atom& a : atoms_) m = std::max(m, a.zeta);
        return m;
    }

    double total_upper(double tail_mass) const {
        if (independent_) return zeta_.upper(0.5 * tail_mass) + eta_.upper(0.5 * tail_mass);
        double m = 0.0;
        for (const Atom& a : atoms_) m = std::max(m, a.zeta + a.eta);
        return m;
    }

    /// Atom locations of G (jumps of the c.d.f. of zeta).
    std::vector<double> zeta_jumps() const {
        if (independent_)
            return zeta_.is_deterministic() ? std::vector<double>{zeta_.deterministic_value()}
                                            : std::vector<double>{};
        std::vector<double> v;
        for (const Atom& a : atoms_) v.push_back(a.zeta);
        return dedup(v);
    }

    /// Atom locations of Phi (jumps of the c.d.f. of zeta + eta).
    std::vector<double> total_jumps() const {
        if (independent_) {
            if (zeta_.is_deterministic() && eta_.is_deterministic())
                return {zeta_.deterministic_value() + eta_.deterministic_value()};
            return {};
        }
        std::vector<double> v;
        for (const Atom& a : atoms_) v.push_back(a.zeta + a.eta);
        return dedup(v);
    }

    /// Probability that eta is exactly zero (degenerate samples).
    double prob_eta_zero() const {
        if (independent_)
            return (eta_.is_deterministic() && eta_.deterministic_value() == 0.0) ? 1.0 : 0.0;
        double s = 0.0;
        for (const Atom& a : atoms_)
            if (a.eta == 0.0) s += a.weight;
        return s;
    }

private:
    static std::vector<double> dedup(std::vector<double> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }

    static double dens_support_len(const DurationLaw& d) { return d.upper(0.0) - d.quantile(0.0); }

    bool independent_ = true;
    DurationLaw zeta_ = DurationLaw::deterministic(0.0);
    DurationLaw eta_ = DurationLaw::deterministic(0.0);
    std::vector<Atom> atoms_;
};

} // namespace epivolt
