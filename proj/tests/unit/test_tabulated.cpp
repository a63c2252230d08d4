#include <doctest.h>

#include <cmath>
#include <vector>

#include "epivolt/tabulated.hpp"
#include "../support/oracles.hpp"

using epivolt::TabulatedCurve;

namespace {

TabulatedCurve sample(double dt, double T, double (*f)(double)) {
    std::vector<double> v;
    for (double t = 0.0; t <= T + 1e-12; t += dt) v.push_back(f(t));
    return TabulatedCurve(dt, std::move(v));
}

} // namespace

TEST_CASE("simpson integral of exp(-t) over [0, 20]") {
    auto c = sample(0.01, 20.0, [](double t) { return std::exp(-t); });
    CHECK(c.integral() == doctest::Approx(1.0 - std::exp(-20.0)).epsilon(1e-10));
}

TEST_CASE("laplace transform of exp(-t) matches 1/(1+rho)") {
    auto c = sample(0.01, 40.0, [](double t) { return std::exp(-t); });
    for (double rho : {0.5, 1.0, 2.0}) {
        CHECK(c.laplace(rho) == doctest::Approx(1.0 / (1.0 + rho)).epsilon(1e-8));
    }
    // negative rho turns the weight into growth: integrand e^{-0.5 t}
    CHECK(c.laplace(-0.5) == doctest::Approx((1.0 - std::exp(-0.5 * 40.0)) / 0.5).epsilon(1e-7));
}

TEST_CASE("jump-aware integration recovers a rectangle exactly") {
    // f = 1 on [0, 1), 0 after, tabulated at dt = 0.01 with the jump recorded
    double dt = 0.01;
    std::vector<double> v(201, 0.0);
    for (std::size_t k = 0; k < 100; ++k) v[k] = 1.0;
    v[100] = 0.0;  // right limit at the jump
    TabulatedCurve c(dt, std::move(v), {{100, 1.0}});
    CHECK(c.integral() == doctest::Approx(1.0).epsilon(1e-14));
    double rho = 1.3;
    CHECK(c.laplace(rho) == doctest::Approx((1.0 - std::exp(-rho)) / rho).epsilon(1e-9));
}

TEST_CASE("without the jump record the rectangle loses mass") {
    double dt = 0.01;
    std::vector<double> v(201, 0.0);
    for (std::size_t k = 0; k < 100; ++k) v[k] = 1.0;
    TabulatedCurve c(dt, std::move(v));
    CHECK(std::abs(c.integral() - 1.0) > 1e-4);  // smeared jump: the record matters
}

TEST_CASE("eval interpolates and respects cadlag jumps") {
    std::vector<double> v{0.0, 1.0, 2.0, 0.5};
    TabulatedCurve c(1.0, std::move(v), {{3, 2.0}});
    CHECK(c.eval(0.5) == doctest::Approx(0.5));
    CHECK(c.eval(1.0) == doctest::Approx(1.0));
    CHECK(c.eval(2.5) == doctest::Approx(2.0));  // toward the left limit at the jump
    CHECK(c.eval(3.0) == doctest::Approx(0.5));  // right limit at the jump node
    CHECK(c.eval(10.0) == doctest::Approx(0.5)); // constant extension
    CHECK_THROWS_AS((void)c.eval(-1.0), std::domain_error);
}

TEST_CASE("shifted_laplace matches direct quadrature") {
    auto c = sample(0.01, 30.0, [](double t) { return std::exp(-0.7 * t); });
    double rho = 0.9;
    for (std::size_t k : {0u, 100u, 1500u}) {
        double t0 = 0.01 * k;
        double expect = oracles::midpoint_integral(
            [&](double s) { return std::exp(-0.7 * (t0 + s)) * std::exp(-rho * s); }, 0.0, 30.0 - t0);
        CHECK(c.shifted_laplace(k, rho) == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("combine forms node-wise linear combinations with merged jumps") {
    std::vector<double> a{1.0, 1.0, 0.0}, b{0.5, 0.5, 0.5};
    TabulatedCurve ca(1.0, std::move(a), {{2, 1.0}});
    TabulatedCurve cb(1.0, std::move(b));
    auto c = TabulatedCurve::combine({{2.0, &ca}, {1.0, &cb}});
    CHECK(c.value(0) == doctest::Approx(2.5));
    CHECK(c.value(2) == doctest::Approx(0.5));
    REQUIRE(c.jumps().size() == 1);
    CHECK(c.jumps()[0].left == doctest::Approx(2.5));
}

TEST_CASE("odd interval counts integrate with full accuracy") {
    // 301 nodes -> 300 intervals (even); 302 -> odd, hits the 3/8 tail
    for (std::size_t nodes : {302u, 305u}) {
        std::vector<double> v(nodes);
        double dt = 0.01;
        for (std::size_t k = 0; k < nodes; ++k) v[k] = std::sin(0.5 * k * dt) + 1.2;
        TabulatedCurve c(dt, std::move(v));
        double T = dt * (nodes - 1);
        double exact = (1.0 - std::cos(0.5 * T)) / 0.5 + 1.2 * T;
        CHECK(c.integral() == doctest::Approx(exact).epsilon(1e-9));
    }
}
