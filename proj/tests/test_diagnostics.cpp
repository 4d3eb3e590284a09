#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "selfdiff/diagnostics.hpp"
#include "selfdiff/quadratic_oracle.hpp"

using namespace selfdiff;

namespace {

PathRecord synthetic_path(const std::vector<double>& times, const std::vector<double>& y,
                          const std::vector<double>& mu) {
    PathRecord rec;
    rec.dimension = 1;
    rec.times = times;
    rec.Y = y;
    rec.mu_bar = mu;
    rec.X.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) rec.X[i] = y[i] + mu[i];
    rec.terminal_Y = {y.back()};
    rec.mu_bar_integral_tail = {mu.back() - mu.front()};
    return rec;
}

PathRecord constant_path(double level, double horizon, std::size_t n) {
    std::vector<double> t(n), y(n, level), mu(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) t[i] = horizon * static_cast<double>(i) / (n - 1);
    return synthetic_path(t, y, mu);
}

}  // namespace

TEST_CASE("occupation of a constant path is a point mass") {
    const PathRecord rec = constant_path(2.5, 10.0, 101);
    EmpiricalMeasure m;
    add_occupation(m, rec, StateComponent::Y, 0.0);
    CHECK(m.mean() == doctest::Approx(2.5));
    CHECK(m.variance() == doctest::Approx(0.0).scale(1).epsilon(1e-15));
    CHECK(m.mass_within(2.5, 1e-9) == doctest::Approx(1.0));
}

TEST_CASE("burn-in drops the leading window, weights are time steps") {
    std::vector<double> t, y, mu;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(i * 0.1);
        y.push_back(i < 50 ? 0.0 : 1.0);
        mu.push_back(0.0);
    }
    const PathRecord rec = synthetic_path(t, y, mu);
    EmpiricalMeasure m;
    add_occupation(m, rec, StateComponent::Y, 0.5);
    CHECK(m.mean() == doctest::Approx(1.0));
    CHECK_THROWS_AS(add_occupation(m, rec, StateComponent::Y, 0.95), std::invalid_argument);
}

TEST_CASE("occupation mass is 1 regardless of decimation") {
    const PathRecord a = constant_path(1.0, 10.0, 11);
    const PathRecord b = constant_path(1.0, 10.0, 101);
    EmpiricalMeasure ma, mb;
    add_occupation(ma, a, StateComponent::Y, 0.0);
    add_occupation(mb, b, StateComponent::Y, 0.0);
    CHECK(ma.mass_within(1.0, 0.5) == doctest::Approx(1.0));
    CHECK(mb.mass_within(1.0, 0.5) == doctest::Approx(1.0));
}

TEST_CASE("classify_terminal: nearest minimum within epsilon, calm tail required") {
    const Potential dw = Potential::double_well();
    std::vector<double> t, y, mu;
    for (int i = 0; i <= 200; ++i) {
        t.push_back(i * 0.5);
        y.push_back(-1.02);
        mu.push_back(0.0);
    }
    const PathRecord settled = synthetic_path(t, y, mu);
    const auto idx = classify_terminal(settled, dw, 0.1);
    REQUIRE(idx.has_value());
    CHECK(dw.critical_points()[*idx].location[0] == doctest::Approx(-1.0));

    // Oscillating tail: same terminal point, wiggly last 10%.
    std::vector<double> y2 = y;
    for (int i = 180; i <= 200; ++i) y2[i] = -1.02 + ((i % 2) ? 0.08 : -0.08);
    const PathRecord wobbly = synthetic_path(t, y2, mu);
    CHECK(!classify_terminal(wobbly, dw, 0.1).has_value());

    // Terminal far from any critical point.
    std::vector<double> y3(y.size(), 0.5);
    CHECK(!classify_terminal(synthetic_path(t, y3, mu), dw, 0.1).has_value());

    CHECK_THROWS_AS(classify_terminal(settled, dw, 0.6), std::invalid_argument);  // >= half gap
}

TEST_CASE("lil envelope fraction: trivial and adversarial paths") {
    const auto gain = GainSchedule::power_log(1.0, 0.0, 1.0);
    std::vector<double> t, y0, y1, mu;
    for (int i = 1; i <= 2000; ++i) {
        t.push_back(i * 0.5);
        y0.push_back(0.0);
        y1.push_back(1.0);  // constant offset 1 from m = 0
        mu.push_back(0.0);
    }
    const PathRecord at_min = synthetic_path(t, y0, mu);
    CHECK(lil_envelope_fraction(at_min, 0.0, *gain, 10.0) == doctest::Approx(1.0));

    // |Y - m| = 1 while sqrt(g/log G) grows: late records all leave the band.
    const PathRecord off = synthetic_path(t, y1, mu);
    CHECK(lil_envelope_fraction(off, 0.0, *gain, 500.0) == doctest::Approx(0.0));
    CHECK(lil_envelope_fraction(off, 0.0, *gain, 10.0) < 0.2);

    CHECK_THROWS_AS(lil_envelope_fraction(at_min, 0.0, *gain, 0.1), std::invalid_argument);
}

TEST_CASE("apt deviation: zero-noise paths shadow the flow, tighter later") {
    SimConfig cfg;
    cfg.potential = std::make_shared<Potential>(Potential::quadratic(1.0, 1));
    cfg.gain = GainSchedule::constant(1.0);
    cfg.r = 1.0;
    cfg.x0 = {1.0};
    cfg.mu_bar0 = {0.0};
    cfg.horizon = 30.0;
    cfg.dt_base = 0.01;
    cfg.decimation = 1;
    cfg.n_paths = 1;
    const PathRecord rec = simulate_path_zero_noise(cfg);
    const double d5 = apt_deviation(rec, cfg.potential, *cfg.gain, 5.0, 1.0);
    const double d20 = apt_deviation(rec, cfg.potential, *cfg.gain, 20.0, 1.0);
    CHECK(d20 < d5);

    // Started at the critical point with zero noise: nothing moves.
    cfg.x0 = {0.0};
    const PathRecord still = simulate_path_zero_noise(cfg);
    CHECK(apt_deviation(still, cfg.potential, *cfg.gain, 5.0, 1.0) <= 1e-9);

    // Coarse decimation leaves too few records in the window.
    cfg.x0 = {1.0};
    cfg.decimation = 2000;
    const PathRecord coarse = simulate_path_zero_noise(cfg);
    CHECK_THROWS_AS(apt_deviation(coarse, cfg.potential, *cfg.gain, 5.0, 1.0), std::invalid_argument);
}

TEST_CASE("trichotomy labels synthetic paths and fractions sum to 1") {
    const Potential pot = Potential::asymmetric_wells();  // minima at 0 (zero min) and 2
    std::vector<double> t;
    for (int i = 1; i <= 1000; ++i) t.push_back(i * 10.0);

    // (a) Y -> 0, mu settles at 0.37.
    std::vector<double> ya(t.size(), 0.0), mua(t.size(), 0.37);
    // (b) Y -> 2, X grows like 2 log t + 1.
    std::vector<double> yb(t.size(), 2.0), mub(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) mub[i] = 2.0 * std::log(t[i]) + 1.0 - 2.0;
    // (c) tail oscillates.
    std::vector<double> yc(t.size()), muc(t.size(), 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) yc[i] = (i % 2) ? 0.4 : -0.4;

    std::vector<PathRecord> paths;
    paths.push_back(synthetic_path(t, ya, mua));
    paths.push_back(synthetic_path(t, yb, mub));
    paths.push_back(synthetic_path(t, yc, muc));

    const TrichotomyVerdict v = trichotomy(paths, pot, 0.2);
    REQUIRE(v.per_path.size() == 3);
    CHECK(v.per_path[0].label == TrichotomyLabel::ConvergedToMubarInf);
    CHECK(v.per_path[0].mu_inf_estimate == doctest::Approx(0.37));
    CHECK(v.per_path[1].label == TrichotomyLabel::DivergedLogRate);
    CHECK(v.per_path[1].log_slope == doctest::Approx(2.0).epsilon(0.02));
    CHECK(v.per_path[2].label == TrichotomyLabel::Undecided);
    CHECK(v.fraction_converged + v.fraction_diverged + v.fraction_undecided ==
          doctest::Approx(1.0).epsilon(1e-12));

    // Order invariance: shuffling the paths permutes the per-path labels only.
    std::vector<PathRecord> shuffled{paths[2], paths[0], paths[1]};
    const TrichotomyVerdict vs = trichotomy(shuffled, pot, 0.2);
    CHECK(vs.fraction_converged == v.fraction_converged);
    CHECK(vs.fraction_diverged == v.fraction_diverged);
    CHECK(vs.per_path[1].label == TrichotomyLabel::ConvergedToMubarInf);
}

TEST_CASE("ergodic averages: constants are exact") {
    const PathRecord rec = constant_path(3.0, 10.0, 51);
    const auto ones = ergodic_average(rec, [](double) { return 1.0; });
    for (double v : ones) CHECK(v == doctest::Approx(1.0));
    const auto ident = ergodic_average(rec, [](double x) { return x; });
    CHECK(ident.back() == doctest::Approx(3.0));
}

TEST_CASE("ergodic averages of cos(uX) match the Gaussian characteristic function") {
    // Constant gain: per path, (1/t) int cos(u X_s) ds -> cos(u mu_inf) e^{-u^2 V/2}
    // with V = 1/(2 g c) = 1/2; the path's own center is estimated by its
    // terminal mu_bar.
    SimConfig cfg;
    cfg.potential = std::make_shared<Potential>(Potential::quadratic(1.0, 1));
    cfg.gain = GainSchedule::constant(1.0);
    cfg.r = 1.0;
    cfg.x0 = {1.0};
    cfg.mu_bar0 = {0.0};
    cfg.horizon = 200.0;
    cfg.dt_base = 0.02;
    cfg.decimation = 50;
    cfg.seed = 2026;
    cfg.n_paths = 300;

    for (const double u : {0.5, 1.0, 2.0}) {
        double diff_sum = 0.0;
        for (int i = 0; i < cfg.n_paths; ++i) {
            const PathRecord rec = simulate_path(cfg, i);
            const auto avg = ergodic_average(rec, [u](double x) { return std::cos(u * x); });
            const double center = rec.mu(rec.n_records() - 1);
            const double predicted = std::cos(u * center) * std::exp(-u * u * 0.25);
            diff_sum += avg.back() - predicted;
        }
        CHECK(std::fabs(diff_sum / cfg.n_paths) <= 0.05);
    }
}

TEST_CASE("mu_inf estimates across paths spread like var_mubar(inf)") {
    // Unique minimum at 0 with a growing gain: every path converges and its
    // mu_inf estimate is Gaussian with variance var_mubar(inf). Uses the
    // exact sampler so the horizon 1e4 costs nothing.
    SimConfig cfg;
    cfg.potential = std::make_shared<Potential>(Potential::quadratic(1.0, 1));
    cfg.gain = GainSchedule::power_log(1.0, 0.0, 1.0);
    cfg.r = 1.0;
    cfg.x0 = {1.0};
    cfg.mu_bar0 = {0.0};
    cfg.horizon = 1e4;
    cfg.seed = 777;
    cfg.n_paths = 2000;

    std::vector<double> grid{0.0};
    for (int i = 0; i <= 200; ++i) grid.push_back(0.1 * std::pow(1e5, i / 200.0));
    const ExactQuadraticSampler sampler(cfg, grid);

    double s = 0, ss = 0;
    for (int i = 0; i < cfg.n_paths; ++i) {
        const PathRecord rec = sampler.sample(i);
        const PathVerdict v = classify_path(rec, *cfg.potential, 0.2);
        REQUIRE(v.label == TrichotomyLabel::ConvergedToMubarInf);
        s += v.mu_inf_estimate;
        ss += v.mu_inf_estimate * v.mu_inf_estimate;
    }
    const double n = cfg.n_paths;
    const double mean = s / n;
    const double var = (ss - n * mean * mean) / (n - 1.0);
    const QuadraticLaw law(1.0, cfg.gain, cfg.r, cfg.x0[0], cfg.mu_bar0[0]);
    const double expected = law.var_mubar_infinity();
    CHECK(std::fabs(var - expected) <= 4.0 * expected * std::sqrt(2.0 / (n - 1.0)));
    CHECK(mean == doctest::Approx(law.law_of_mubar(1e4).mean).epsilon(0.05));
}

TEST_CASE("lil fraction is stable under decimation (50 vs 200)") {
    SimConfig cfg;
    cfg.potential = std::make_shared<Potential>(Potential::quadratic(1.0, 1));
    cfg.gain = GainSchedule::power_log(1.0, 0.0, 1.0);
    cfg.r = 1.0;
    cfg.x0 = {1.0};
    cfg.mu_bar0 = {0.0};
    cfg.horizon = 200.0;
    cfg.dt_base = 0.1;
    cfg.seed = 4242;
    cfg.n_paths = 50;

    auto median_fraction = [&](int decim) {
        SimConfig c = cfg;
        c.decimation = decim;
        std::vector<double> fr;
        for (int i = 0; i < c.n_paths; ++i)
            fr.push_back(lil_envelope_fraction(simulate_path(c, i), 0.0, *c.gain, 10.0));
        std::sort(fr.begin(), fr.end());
        return 0.5 * (fr[fr.size() / 2] + fr[(fr.size() - 1) / 2]);
    };
    const double f50 = median_fraction(50);
    const double f200 = median_fraction(200);
    CHECK(std::fabs(f50 - f200) <= 0.01);
}
