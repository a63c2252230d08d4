#include <doctest.h>

#include <cmath>
#include <vector>

#include "epivolt/duration.hpp"
#include "../support/oracles.hpp"

using namespace epivolt;

TEST_CASE("incomplete beta agrees with the Beta(2,2) closed form off the fast path") {
    // probe a nearby parameter pair through the continued fraction and compare
    // with quadrature
    for (double x : {0.1, 0.37, 0.5, 0.93}) {
        double cf = detail::incomplete_beta(2.0, 3.0, x);
        double brute = oracles::midpoint_integral(
            [](double u) { return 12.0 * u * (1.0 - u) * (1.0 - u); }, 0.0, x);
        CHECK(cf == doctest::Approx(brute).epsilon(1e-8));
    }
}

TEST_CASE("beta(2,2) sampling matches its c.d.f. (KS)") {
    auto law = DurationLaw::beta_affine(2.0, 2.0, 0.0, 1.0);
    Rng rng(7);
    std::vector<double> sample;
    for (int i = 0; i < 20000; ++i) sample.push_back(law.sample(rng));
    double d = oracles::ks_statistic(sample, [](double x) { return x * x * (3.0 - 2.0 * x); });
    CHECK(d < oracles::ks_critical_001(sample.size()));
}

TEST_CASE("duration law moments and bounds") {
    auto b = DurationLaw::beta_affine(2.0, 2.0, 2.0, 2.0);  // 2 + 2 X
    CHECK(b.mean() == doctest::Approx(3.0));
    CHECK(b.upper(0.0) == doctest::Approx(4.0));
    CHECK(b.quantile(0.5) == doctest::Approx(3.0).epsilon(1e-9));
    auto e = DurationLaw::exponential(0.5);
    CHECK(e.mean() == doctest::Approx(2.0));
    CHECK(e.upper(1e-8) == doctest::Approx(-std::log(1e-8) / 0.5).epsilon(1e-9));
    auto d = DurationLaw::deterministic(1.5);
    CHECK(d.cdf(1.5) == 1.0);
    CHECK(d.cdf_left(1.5) == 0.0);
}

TEST_CASE("mgf closed forms and quadrature") {
    auto e = DurationLaw::exponential(2.0);
    CHECK(e.mgf(-1.0) == doctest::Approx(2.0 / 3.0));
    CHECK(std::isinf(e.mgf(3.0)));
    auto b = DurationLaw::beta_affine(2.0, 2.0, 1.0, 2.0);
    double s = -0.7;
    double brute = oracles::midpoint_integral(
        [&](double x) { return 6.0 * x * (1.0 - x) * std::exp(s * (1.0 + 2.0 * x)); }, 0.0, 1.0);
    CHECK(b.mgf(s) == doctest::Approx(brute).epsilon(1e-10));
}

TEST_CASE("cdf of the sum: deterministic pair is a step") {
    auto j = JointDurationLaw::independent(DurationLaw::deterministic(1.0), DurationLaw::deterministic(1.0));
    CHECK(j.cdf_total(1.999) == 0.0);
    CHECK(j.cdf_total(2.0) == 1.0);
    CHECK(j.psi(1.0) == doctest::Approx(1.0));   // G(1)=1, Phi(1)=0
    CHECK(j.psi(0.999) == doctest::Approx(0.0));
    CHECK(j.psi(2.0) == doctest::Approx(0.0));
}

TEST_CASE("cdf of the sum: two exponentials closed form") {
    auto j = JointDurationLaw::independent(DurationLaw::exponential(2.0), DurationLaw::exponential(1.0));
    for (double t : {0.3, 1.0, 4.0}) {
        double expect = 1.0 - (2.0 * std::exp(-t) - 1.0 * std::exp(-2.0 * t)) / (2.0 - 1.0);
        CHECK(j.cdf_total(t) == doctest::Approx(expect).epsilon(1e-12));
    }
    auto jj = JointDurationLaw::independent(DurationLaw::exponential(1.5), DurationLaw::exponential(1.5));
    double t = 2.0;
    CHECK(jj.cdf_total(t) == doctest::Approx(1.0 - (1.0 + 1.5 * t) * std::exp(-1.5 * t)).epsilon(1e-12));
}

TEST_CASE("cdf of the sum: beta + beta against an empirical c.d.f.") {
    auto j = JointDurationLaw::independent(DurationLaw::beta_affine(2.0, 2.0, 2.0, 2.0),
                                           DurationLaw::beta_affine(2.0, 2.0, 3.0, 1.0));
    Rng rng(11);
    const int M = 200000;
    for (double t : {5.5, 6.0, 7.0}) {
        int count = 0;
        Rng r2(11);
        for (int i = 0; i < M; ++i) {
            auto [z, e] = j.sample(r2);
            if (z + e <= t) ++count;
        }
        double emp = static_cast<double>(count) / M;
        double se = std::sqrt(emp * (1.0 - emp) / M) + 1e-6;
        CHECK(std::abs(j.cdf_total(t) - emp) < 4.0 * se);
    }
    (void)rng;
}

TEST_CASE("joint table semantics") {
    auto j = JointDurationLaw::table({{1.0, 1.0, 2.0}, {2.0, 3.0, 2.0}});
    CHECK(j.cdf_zeta(1.0) == doctest::Approx(0.5));
    CHECK(j.cdf_total(2.0) == doctest::Approx(0.5));
    CHECK(j.cdf_total(5.0) == doctest::Approx(1.0));
    CHECK(j.mean_eta() == doctest::Approx(2.0));
    CHECK(j.total_upper(0.0) == doctest::Approx(5.0));
    CHECK(j.eta_mgf(-1.0) == doctest::Approx(0.5 * std::exp(-1.0) + 0.5 * std::exp(-3.0)));
}

TEST_CASE("joint-table law re-tabulated against brute-force sampling") {
    auto j = JointDurationLaw::table({{0.5, 2.0, 1.0}, {1.0, 0.5, 3.0}, {2.0, 1.0, 1.0}});
    Rng rng(41);
    const int M = 100000;
    std::vector<int> count_G(3, 0), count_Phi(3, 0);
    const double probe[3] = {0.75, 1.5, 2.6};
    for (int m = 0; m < M; ++m) {
        auto [z, e] = j.sample(rng);
        for (int i = 0; i < 3; ++i) {
            if (z <= probe[i]) ++count_G[i];
            if (z + e <= probe[i]) ++count_Phi[i];
        }
    }
    for (int i = 0; i < 3; ++i) {
        double emp_G = static_cast<double>(count_G[i]) / M;
        double emp_Phi = static_cast<double>(count_Phi[i]) / M;
        CHECK(std::abs(j.cdf_zeta(probe[i]) - emp_G) < 0.006);
        CHECK(std::abs(j.cdf_total(probe[i]) - emp_Phi) < 0.006);
    }
}

TEST_CASE("psi is nonnegative across laws") {
    auto j = JointDurationLaw::independent(DurationLaw::beta_affine(2.0, 2.0, 2.0, 2.0),
                                           DurationLaw::beta_affine(2.0, 2.0, 8.0, 4.0));
    for (double t = 0.0; t <= 17.0; t += 0.37) CHECK(j.psi(t) >= -1e-12);
}
