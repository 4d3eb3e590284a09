#include <cmath>
#include <thread>

#include "doctest.h"
#include "selfdiff/gain_schedule.hpp"
#include "selfdiff/rng.hpp"

using selfdiff::GainSchedule;
using selfdiff::RegimeReport;

namespace {
// Closed-form primitive of a log(1+s): a ((1+t) log(1+t) - t).
double log_growth_G(double a, double t) { return a * ((1.0 + t) * std::log1p(t) - t); }
}  // namespace

TEST_CASE("constant schedule: G is linear, inverse and kappa are exact") {
    const auto s = GainSchedule::constant(1.0);
    CHECK(s->G(7.0) == doctest::Approx(7.0));
    CHECK(s->G_inverse(7.0) == doctest::Approx(7.0));
    CHECK(s->kappa(1.0, 3.0) == doctest::Approx(4.0));
    CHECK(s->g_prime(5.0) == 0.0);
    CHECK_THROWS_AS(GainSchedule::constant(0.0), std::invalid_argument);
}

TEST_CASE("power-log alpha=1: g = 1 + t, G = t + t^2/2") {
    const auto s = GainSchedule::power_log(1.0, 0.0, 1.0);
    CHECK(s->g(3.0) == doctest::Approx(4.0));
    CHECK(s->G(2.0) == doctest::Approx(4.0));
    CHECK(s->G_inverse(1.5) == doctest::Approx(1.0));  // G(1) = 1.5
    CHECK(s->kappa(1.0, 1.5) == doctest::Approx(4.0)); // (1+1) g(1) = 4
    CHECK(s->g_prime(9.0) == doctest::Approx(1.0));
}

TEST_CASE("log growth: quadrature G matches the closed-form primitive") {
    const auto s = GainSchedule::log_growth(2.0);
    const double expected = log_growth_G(2.0, 10.0);
    CHECK(expected == doctest::Approx(32.753696001564155).epsilon(1e-12));
    CHECK(s->G(10.0) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(s->G_inverse(expected) == doctest::Approx(10.0).epsilon(1e-7));
    // kappa(r=2, u=G(10)) = (2 + 10) * 2 log 11 = 57.549486...
    CHECK(s->kappa(2.0, expected) == doctest::Approx(12.0 * 2.0 * std::log(11.0)).epsilon(1e-7));
    CHECK(s->kappa(2.0, expected) == doctest::Approx(57.549486547160897).epsilon(1e-7));
}

TEST_CASE("G_inverse inverts G on random times for every family") {
    for (const auto& s : {GainSchedule::constant(2.5), GainSchedule::power_log(1.0, 0.0, 1.0),
                          GainSchedule::power_log(0.5, 0.0, 0.25), GainSchedule::log_growth(2.0)}) {
        std::uint64_t state = 12345;
        for (int k = 0; k < 1000; ++k) {
            const double u = static_cast<double>(selfdiff::splitmix64(state) >> 11) * 0x1.0p-53;
            const double t = 1e-3 + 100.0 * u;
            const double back = s->G_inverse(s->G(t));
            CHECK(std::fabs(back - t) <= 1e-8 * (1.0 + t));
        }
    }
}

TEST_CASE("numeric derivative matches g_prime within 1e-6") {
    for (const auto& s : {GainSchedule::power_log(1.0, 0.0, 1.0), GainSchedule::power_log(2.0, 1.0, 1.0),
                          GainSchedule::log_growth(3.0)}) {
        for (double t : {0.5, 2.0, 17.0, 301.0}) {
            const double h = 1e-6 * (1.0 + t);
            const double fd = (s->g(t + h) - s->g(t - h)) / (2.0 * h);
            CHECK(std::fabs(fd - s->g_prime(t)) <= 1e-6 * (1.0 + std::fabs(fd)));
        }
    }
}

TEST_CASE("regime classification is deterministic on the three reference families") {
    const auto constant = GainSchedule::constant(1.0)->classify_regime(1e6);
    CHECK(constant.classification == RegimeReport::Classification::Diffusive);
    CHECK(constant.g_limit_finite);
    CHECK(constant.g_limit == doctest::Approx(1.0).epsilon(1e-6));

    const auto linear = GainSchedule::power_log(1.0, 0.0, 1.0)->classify_regime(1e6);
    CHECK(linear.classification == RegimeReport::Classification::ASConvergent);
    CHECK(!linear.g_limit_finite);
    CHECK(linear.ratio_logG_g.kind == selfdiff::TrendEstimate::Kind::Zero);
    CHECK(linear.ratio_gprime_g2.kind == selfdiff::TrendEstimate::Kind::Zero);

    const auto logg = GainSchedule::log_growth(2.0)->classify_regime(1e6);
    CHECK(logg.classification == RegimeReport::Classification::BoundedOscillation);
    CHECK(!logg.g_limit_finite);
    CHECK(logg.ratio_logG_g.kind == selfdiff::TrendEstimate::Kind::FinitePositive);
    // log G / g -> 1/2 for g = 2 log(1+t); finite-horizon extrapolation sits near it.
    CHECK(logg.ratio_logG_g.value == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("very slow growth classifies as convergence in probability only") {
    const auto s = GainSchedule::custom(
        [](double t) { return 1.0 + std::log1p(std::log1p(t)); },
        [](double t) { return 1.0 / ((1.0 + std::log1p(t)) * (1.0 + t)); }, "loglog");
    const auto rep = s->classify_regime(1e6);
    CHECK(rep.classification == RegimeReport::Classification::ProbConvergent);
    CHECK(!rep.g_limit_finite);
    CHECK(rep.ratio_logG_g.kind == selfdiff::TrendEstimate::Kind::Unbounded);
}

TEST_CASE("invalid schedules are rejected") {
    CHECK_THROWS_AS(GainSchedule::power_log(-1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(GainSchedule::power_log(1.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(GainSchedule::log_growth(-2.0), std::invalid_argument);
    // Decreasing g.
    CHECK_THROWS_AS(GainSchedule::custom([](double t) { return 2.0 / (1.0 + t); },
                                         [](double t) { return -2.0 / ((1.0 + t) * (1.0 + t)); }),
                    std::invalid_argument);
    // Negative g.
    CHECK_THROWS_AS(GainSchedule::custom([](double t) { return t - 1.0; },
                                         [](double) { return 1.0; }),
                    std::invalid_argument);
    CHECK_THROWS_AS(GainSchedule::constant(1.0)->classify_regime(100.0), std::invalid_argument);
}

TEST_CASE("checkpoint cache supports concurrent queries") {
    const auto s = GainSchedule::log_growth(2.0);
    const double serial = s->G(5000.0);
    std::vector<std::thread> pool;
    std::vector<double> got(4, 0.0);
    for (int w = 0; w < 4; ++w)
        pool.emplace_back([&, w]() {
            double acc = 0.0;
            for (int k = 1; k <= 50; ++k) acc = s->G_inverse(s->G(k * 100.0));
            got[w] = acc + s->G(5000.0);
        });
    for (auto& th : pool) th.join();
    for (double v : got) CHECK(v == doctest::Approx(5000.0 + serial).epsilon(1e-9));
}
