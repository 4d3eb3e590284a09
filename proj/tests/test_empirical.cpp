#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "selfdiff/empirical.hpp"
#include "selfdiff/rng.hpp"

using selfdiff::EmpiricalMeasure;

TEST_CASE("weighted moments, mass and cdf") {
    EmpiricalMeasure m;
    m.add(0.0, 1.0);
    m.add(1.0, 3.0);
    CHECK(m.total_weight() == doctest::Approx(4.0));
    CHECK(m.mean() == doctest::Approx(0.75));
    CHECK(m.variance() == doctest::Approx(0.1875));  // E x^2 - (E x)^2 = 0.75 - 0.5625
    CHECK(m.mass_within(1.0, 0.5) == doctest::Approx(0.75));
    CHECK(m.cdf(0.0) == doctest::Approx(0.25));
    CHECK(m.cdf(0.5) == doctest::Approx(0.25));
    CHECK(m.cdf(1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(m.add(0.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalMeasure().mean(), std::runtime_error);
}

TEST_CASE("histogram masses normalize and reproduce the moments to bin width") {
    selfdiff::PathRng rng(5, 5);
    EmpiricalMeasure m;
    for (int i = 0; i < 20000; ++i) m.add(rng.normal(), 0.5 + rng.uniform());
    std::vector<double> edges;
    for (int i = 0; i <= 160; ++i) edges.push_back(-8.0 + 0.1 * i);
    const auto mass = m.histogram(edges);
    double total = 0.0, mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const double c = 0.5 * (edges[i] + edges[i + 1]);
        total += mass[i];
        mean += c * mass[i];
    }
    for (std::size_t i = 0; i < mass.size(); ++i) {
        const double c = 0.5 * (edges[i] + edges[i + 1]);
        var += (c - mean) * (c - mean) * mass[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(mean - m.mean()) <= 0.05);  // within bin width
    CHECK(std::fabs(var - m.variance()) <= 0.05);
}

TEST_CASE("merge result does not depend on merge order") {
    selfdiff::PathRng rng(9, 0);
    EmpiricalMeasure a, b;
    for (int i = 0; i < 5000; ++i) a.add(rng.normal(), rng.uniform());
    for (int i = 0; i < 3000; ++i) b.add(rng.normal(), rng.uniform());
    EmpiricalMeasure ab, ba;
    ab.merge(a);
    ab.merge(b);
    ba.merge(b);
    ba.merge(a);
    CHECK(ab.total_weight() == ba.total_weight());
    CHECK(ab.mean() == ba.mean());
    CHECK(ab.variance() == ba.variance());
}

TEST_CASE("ks distance separates matching and mismatched laws") {
    selfdiff::PathRng rng(123, 1);
    EmpiricalMeasure m;
    for (int i = 0; i < 200000; ++i) m.add(rng.normal());
    CHECK(m.ks_distance([](double x) { return selfdiff::normal_cdf(x); }) < 0.004);
    CHECK(m.ks_distance([](double x) { return selfdiff::normal_cdf(x, 0.0, 4.0); }) > 0.1);
}
