#include <cmath>

#include "doctest.h"
#include "selfdiff/quadrature.hpp"

using selfdiff::integrate;

TEST_CASE("polynomials and trig are exact to tolerance") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0, 1e-12) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12) == doctest::Approx(2.0).epsilon(1e-11));
    CHECK(integrate([](double) { return 1.0; }, 3.0, 3.0) == 0.0);
}

TEST_CASE("reversed limits flip the sign") {
    const double fwd = integrate([](double x) { return std::exp(-x); }, 0.0, 2.0, 1e-12);
    const double bwd = integrate([](double x) { return std::exp(-x); }, 2.0, 0.0, 1e-12);
    CHECK(fwd == doctest::Approx(-bwd).epsilon(1e-14));
}

// Exponential-integral oracle: E1(1) = -gamma + sum (-1)^{k+1} / (k k!), so
// int_0^inf e^{-s}/(1+s) ds = e E1(1).
static double exp_integral_one() {
    const double gamma = 0.5772156649015328606;
    double sum = 0.0, term;
    double kfact = 1.0;
    for (int k = 1; k <= 30; ++k) {
        kfact *= k;
        term = ((k % 2 == 1) ? 1.0 : -1.0) / (k * kfact);
        sum += term;
    }
    return -gamma + sum;
}

TEST_CASE("decaying kernel matches the exponential-integral series") {
    const double expected = std::exp(1.0) * exp_integral_one();
    const double got = integrate([](double s) { return std::exp(-s) / (1.0 + s); }, 0.0, 45.0, 1e-12);
    CHECK(got == doctest::Approx(expected).epsilon(1e-11));
    CHECK(expected == doctest::Approx(0.59634736232319407).epsilon(1e-12));
}

TEST_CASE("non-finite integrands are rejected") {
    CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, -1.0, 1.0, 1e-10),
                    selfdiff::QuadratureError);
}
