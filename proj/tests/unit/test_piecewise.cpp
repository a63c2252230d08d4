#include <doctest.h>

#include <cmath>

#include "epivolt/piecewise_linear.hpp"
#include "../support/oracles.hpp"

using epivolt::PiecewiseLinearFunction;
using Segment = PiecewiseLinearFunction::Segment;

namespace {

PiecewiseLinearFunction triangle(double alpha, double pf, double zeta, double eta) {
    return PiecewiseLinearFunction({0.0, zeta, zeta + pf * eta, zeta + eta},
                                   {{0.0, 0.0}, {0.0, alpha / (pf * eta)}, {alpha, -alpha / ((1.0 - pf) * eta)}},
                                   zeta, eta);
}

} // namespace

TEST_CASE("triangular sample evaluates per the profile") {
    auto f = triangle(1.0, 0.2, 2.0, 5.0);
    CHECK(f.eval(3.0) == doctest::Approx(1.0));       // peak at zeta + eta/5
    CHECK(f.eval(7.0) == doctest::Approx(0.0));       // support ends at zeta + eta
    CHECK(f.eval(5.0) == doctest::Approx(0.5));       // halfway down
    CHECK(f.eval(1.999) == doctest::Approx(0.0));
    CHECK(f.eval(-1.0) == doctest::Approx(0.0));
    CHECK(f.sup() == doctest::Approx(1.0));
}

TEST_CASE("scaled peak") {
    auto f = triangle(0.7, 0.2, 2.0, 5.0);
    CHECK(f.eval(3.0) == doctest::Approx(0.7));
    CHECK(f.sup() == doctest::Approx(0.7));
}

TEST_CASE("triangle area is eta/2 for unit peak") {
    for (double eta : {1.0, 5.0, 12.0}) {
        auto f = triangle(1.0, 0.2, 3.0, eta);
        CHECK(f.integral() == doctest::Approx(eta / 2.0).epsilon(1e-13));
    }
}

TEST_CASE("closed-form laplace matches brute quadrature") {
    auto f = triangle(0.8, 0.3, 1.5, 4.0);
    for (double rho : {-0.4, -1e-14, 0.0, 1e-13, 0.25, 2.0}) {
        double brute = oracles::midpoint_integral(
            [&](double t) { return f.eval(t) * std::exp(-rho * t); }, 0.0, f.support_end(), 400000);
        CHECK(f.laplace(rho) == doctest::Approx(brute).epsilon(1e-8));
    }
}

TEST_CASE("zero function semantics") {
    PiecewiseLinearFunction z;
    CHECK(z.eval(0.0) == 0.0);
    CHECK(z.integral() == 0.0);
    CHECK(z.sup() == 0.0);
    CHECK(z.support_end() == 0.0);
}

TEST_CASE("age shift clips and re-anchors") {
    auto f = triangle(1.0, 0.2, 2.0, 5.0);
    auto g = f.shifted_by_age(2.5);  // past the start, before the peak
    CHECK(g.eval(0.0) == doctest::Approx(f.eval(2.5)));
    CHECK(g.eval(0.5) == doctest::Approx(f.eval(3.0)));
    CHECK(g.eval(4.5) == doctest::Approx(0.0));
    CHECK(g.zeta() == doctest::Approx(0.0));
    CHECK(g.zeta() + g.eta() == doctest::Approx(4.5));
    auto h = f.shifted_by_age(100.0);
    CHECK(h.integral() == 0.0);
}

TEST_CASE("negative segments are rejected") {
    CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, 1.0}, {{-0.5, 0.0}}, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PiecewiseLinearFunction({0.0, 1.0}, {{0.5, -1.0}}, 0.0, 1.0), std::invalid_argument);
}
