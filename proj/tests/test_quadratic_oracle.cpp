#include <cmath>

#include "doctest.h"
#include "selfdiff/quadratic_oracle.hpp"
#include "selfdiff/simulator.hpp"

using namespace selfdiff;

namespace {

// Closed form for c=1, g=1, r=1:
//   int_0^t (1+s)^2 e^{2s} ds = e^{2t} ((1+t)^2/2 - (1+t)/2 + 1/4) - 1/4,
// so Var(Y_t) = (1/2 - 1/(2(1+t)) + 1/(4(1+t)^2)) - e^{-2t}/(4(1+t)^2).
double var_y_closed_form(double t) {
    const double u = 1.0 + t;
    return 0.5 - 0.5 / u + 0.25 / (u * u) - std::exp(-2.0 * t) / (4.0 * u * u);
}

}  // namespace

TEST_CASE("law_of_Y against the closed form (c=1, g=1, r=1)") {
    const QuadraticLaw law(1.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0);

    const GaussianMoments at0 = law.law_of_Y(0.0);
    CHECK(at0.mean == 1.0);
    CHECK(at0.variance == 0.0);

    const GaussianMoments at1 = law.law_of_Y(1.0);
    CHECK(at1.mean == doctest::Approx(std::exp(-1.0) / 2.0).epsilon(1e-12));
    CHECK(at1.mean == doctest::Approx(0.18393972058572117).epsilon(1e-12));
    CHECK(at1.variance == doctest::Approx(var_y_closed_form(1.0)).epsilon(1e-9));

    CHECK(law.law_of_Y(5.0).variance == doctest::Approx(var_y_closed_form(5.0)).epsilon(1e-9));
    CHECK(law.law_of_Y(40.0).variance == doctest::Approx(var_y_closed_form(40.0)).epsilon(1e-9));
    // Long-time limit 1/(2 g c) = 1/2.
    CHECK(std::fabs(law.law_of_Y(200.0).variance - 0.5) < 3e-3);
}

TEST_CASE("F and H: infinite-horizon values and the H identity") {
    const QuadraticLaw law(1.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0);
    // F(inf) = e E1(1), H(inf) = 1 - F(inf).
    CHECK(law.F_infinity() == doctest::Approx(0.59634736232319407).epsilon(1e-10));
    CHECK(law.H_infinity() == doctest::Approx(0.40365263767680593).epsilon(1e-10));
    CHECK(law.H_infinity() == doctest::Approx(1.0 - law.F_infinity()).epsilon(1e-10));
}

TEST_CASE("H(t) = 1/r - c F(t) - e^{-cG(t)}/(r+t) across schedules") {
    struct Case {
        double c, r;
        std::shared_ptr<const GainSchedule> gain;
    };
    for (const Case& k : {Case{1.0, 1.0, GainSchedule::constant(1.0)},
                          Case{1.0, 1.0, GainSchedule::power_log(1.0, 0.0, 1.0)},
                          Case{2.0, 0.5, GainSchedule::log_growth(2.0)}}) {
        const QuadraticLaw law(k.c, k.gain, k.r, 1.0, 0.0);
        for (double t : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
            const double lhs = law.H(t);
            const double rhs =
                1.0 / k.r - k.c * law.F(t) - std::exp(-k.c * k.gain->G(t)) / (k.r + t);
            CHECK(std::fabs(lhs - rhs) <= 1e-8 * (1.0 + std::fabs(lhs)));
        }
    }
}

TEST_CASE("law_of_mubar: start, long-time mean, monotone variance") {
    const QuadraticLaw law(1.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0);
    const GaussianMoments at0 = law.law_of_mubar(0.0);
    CHECK(at0.mean == 0.0);
    CHECK(at0.variance == 0.0);

    // mean -> mu0 + r (x0-mu0) H(inf) = H(inf).
    CHECK(law.law_of_mubar(60.0).mean == doctest::Approx(0.40365263767680593).epsilon(1e-9));

    double prev = -1.0;
    for (double t : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0}) {
        const double v = law.law_of_mubar(t).variance;
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("mean_X identity: mean_Y + mean_mubar equals the direct expression") {
    for (const auto& gain : {GainSchedule::constant(1.0), GainSchedule::power_log(1.0, 0.0, 1.0)}) {
        const double c = 1.0, r = 1.0, x0 = 1.0, mu0 = 0.0;
        const QuadraticLaw law(c, gain, r, x0, mu0);
        for (double t : {0.5, 2.0, 10.0}) {
            const double via_sum = law.law_of_X(t).mean;
            const double direct = x0 + r * c * (mu0 - x0) * law.F(t);
            CHECK(via_sum == doctest::Approx(direct).epsilon(1e-9));
        }
    }
}

TEST_CASE("mean_X approaches x0 + r c (mu0 - x0) F(inf) for large t") {
    const QuadraticLaw law(1.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0);
    const double target = 1.0 - law.F_infinity();  // = 0.40365...
    CHECK(law.law_of_X(60.0).mean == doctest::Approx(target).epsilon(1e-9));
}

TEST_CASE("limit measure variance 1/(2 g c); unsupported regimes rejected") {
    CHECK(QuadraticLaw(1.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0).limit_measure().variance ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(QuadraticLaw(2.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0).limit_measure().variance ==
          doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(
        QuadraticLaw(1.0, GainSchedule::power_log(1.0, 0.0, 1.0), 1.0, 1.0, 0.0).limit_measure(),
        UnsupportedRegime);
    CHECK_THROWS_AS(QuadraticLaw(1.0, GainSchedule::log_growth(2.0), 1.0, 1.0, 0.0).limit_measure(),
                    UnsupportedRegime);
    const auto lm = QuadraticLaw(1.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0).limit_measure();
    CHECK(lm.center_mean == doctest::Approx(0.40365263767680593).epsilon(1e-8));
    CHECK(lm.center_variance > 0.0);
}

TEST_CASE("ou_ergodic_variance: constants and degenerate/divergent cases") {
    // a constant: V(inf) = 1/(2a), closed form (1 - e^{-2at})/(2a).
    CHECK(ou_ergodic_variance([](double) { return 1.0; }, 40.0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(ou_ergodic_variance([](double) { return 3.0; }, 40.0) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-8));
    // a -> infinity: variance collapses toward 0 (point mass).
    CHECK(ou_ergodic_variance([](double t) { return 1.0 + t; }, 2000.0) < 1e-3);
    // a -> 0: V(t) grows without bound and is flagged.
    CHECK_THROWS_AS(ou_ergodic_variance([](double t) { return 1.0 / (1.0 + t); }, 200.0),
                    UnsupportedRegime);
}

TEST_CASE("law_of_Y variance matches exact-sampler draws within 3 standard errors") {
    SimConfig cfg;
    cfg.potential = std::make_shared<Potential>(Potential::quadratic(1.0, 1));
    cfg.gain = GainSchedule::constant(1.0);
    cfg.r = 1.0;
    cfg.x0 = {1.0};
    cfg.mu_bar0 = {0.0};
    cfg.horizon = 5.0;
    cfg.seed = 271828;
    cfg.n_paths = 1;
    const ExactQuadraticSampler sampler(cfg, {0.0, 5.0});
    const int n = 100000;
    double s = 0, ss = 0;
    for (int i = 0; i < n; ++i) {
        const double y = sampler.sample(i).y(1);
        s += y;
        ss += y * y;
    }
    const double mean = s / n;
    const double var = (ss - n * mean * mean) / (n - 1.0);
    const QuadraticLaw law(1.0, cfg.gain, 1.0, 1.0, 0.0);
    const double expected = law.law_of_Y(5.0).variance;
    const double se_var = var * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::fabs(var - expected) <= 3.0 * se_var);
}

TEST_CASE("quadrature failures surface as errors, not wrong numbers") {
    const QuadraticLaw law(1.0, GainSchedule::constant(1.0), 1.0, 1.0, 0.0);
    CHECK_THROWS_AS(law.law_of_Y(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(law.F(-0.5), std::invalid_argument);
}
