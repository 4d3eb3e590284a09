#include "selfdiff/quadratic_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "selfdiff/quadrature.hpp"

namespace selfdiff {
namespace {

// Integrates across an exponential boundary layer: the dominant side of
// `split` first, then the (often vanishing) remainder with an absolute
// floor, so near-zero pieces cannot starve the panel budget.
double integrate_layered(const std::function<double(double)>& f, double a, double b, double split,
                         double rel_tol, bool mass_above_split) {
    split = std::clamp(split, a, b);
    double main_piece = 0.0;
    if (mass_above_split) {
        if (b > split) main_piece = integrate(f, split, b, rel_tol);
        const double floor = (std::fabs(main_piece) + 1e-280) * rel_tol;
        if (split > a) main_piece += integrate(f, a, split, rel_tol, floor);
    } else {
        if (split > a) main_piece = integrate(f, a, split, rel_tol);
        const double floor = (std::fabs(main_piece) + 1e-280) * rel_tol;
        if (b > split) main_piece += integrate(f, split, b, rel_tol, floor);
    }
    return main_piece;
}

}  // namespace

QuadraticLaw::QuadraticLaw(double c, std::shared_ptr<const GainSchedule> gain, double r, double x0,
                           double mu_bar0)
    : c_(c), gain_(std::move(gain)), r_(r), x0_(x0), mu0_(mu_bar0) {
    if (!(c_ > 0.0)) throw std::invalid_argument("QuadraticLaw needs c > 0");
    if (!(r_ > 0.0)) throw std::invalid_argument("QuadraticLaw needs r > 0");
    if (!gain_) throw std::invalid_argument("QuadraticLaw needs a gain schedule");
}

double QuadraticLaw::F(double t) const {
    if (t < 0.0) throw std::invalid_argument("F needs t >= 0");
    if (t == 0.0) return 0.0;
    const double split = std::min(t, gain_->G_inverse(25.0 / c_));
    return integrate_layered(
        [&](double s) { return std::exp(-c_ * gain_->G(s)) * gain_->g(s) / (r_ + s); }, 0.0, t,
        split, 1e-10, false);
}

double QuadraticLaw::H(double t) const {
    if (t < 0.0) throw std::invalid_argument("H needs t >= 0");
    if (t == 0.0) return 0.0;
    const double split = std::min(t, gain_->G_inverse(25.0 / c_));
    return integrate_layered(
        [&](double u) {
            const double ru = r_ + u;
            return std::exp(-c_ * gain_->G(u)) / (ru * ru);
        },
        0.0, t, split, 1e-10, false);
}

double QuadraticLaw::F_infinity() const {
    const double cutoff = gain_->G_inverse(45.0 / c_);
    // Tail by parts: int_T^inf e^{-cG} g/(r+s) ds = e^{-cG(T)}/(c(r+T)) - (H(inf)-H(T))/c.
    // The leading term is added as the remainder; with the cutoff above it
    // is ~1e-20 relative.
    return F(cutoff) + std::exp(-45.0) / (c_ * (r_ + cutoff));
}

double QuadraticLaw::H_infinity() const {
    const double cutoff = gain_->G_inverse(45.0 / c_);
    const double rT = r_ + cutoff;
    return H(cutoff) + std::exp(-45.0) / (c_ * gain_->g(cutoff) * rT * rT);
}

GaussianMoments QuadraticLaw::law_of_Y(double t) const {
    if (t < 0.0) throw std::invalid_argument("law_of_Y needs t >= 0");
    GaussianMoments m;
    const double Gt = gain_->G(t);
    m.mean = r_ * (x0_ - mu0_) * std::exp(-c_ * Gt) / (r_ + t);
    if (t == 0.0) {
        m.mean = x0_ - mu0_;
        m.variance = 0.0;
        return m;
    }
    const double split = (Gt > 20.0 / c_) ? gain_->G_inverse(Gt - 20.0 / c_) : 0.0;
    m.variance = integrate_layered(
        [&](double s) {
            const double w = (r_ + s) / (r_ + t);
            return w * w * std::exp(-2.0 * c_ * gain_->G_between(s, t));
        },
        0.0, t, split, 1e-9, true);
    return m;
}

// e^{cG(s)} (H(t) - H(s)) = int_s^t e^{-c(G(w)-G(s))}/(r+w)^2 dw, kept O(1).
double QuadraticLaw::scaled_H_tail(double s, double t) const {
    if (s >= t) return 0.0;
    const double split = std::min(t, gain_->G_inverse(gain_->G(s) + 20.0 / c_));
    return integrate_layered(
        [&](double w) {
            const double rw = r_ + w;
            return std::exp(-c_ * gain_->G_between(s, w)) / (rw * rw);
        },
        s, t, split, 1e-10, false);
}

double QuadraticLaw::scaled_F_tail(double s, double t) const {
    if (s >= t) return 0.0;
    const double split = std::min(t, gain_->G_inverse(gain_->G(s) + 20.0 / c_));
    return integrate_layered(
        [&](double w) { return std::exp(-c_ * gain_->G_between(s, w)) * gain_->g(w) / (r_ + w); },
        s, t, split, 1e-10, false);
}

GaussianMoments QuadraticLaw::law_of_mubar(double t) const {
    if (t < 0.0) throw std::invalid_argument("law_of_mubar needs t >= 0");
    GaussianMoments m;
    m.mean = mu0_ + r_ * (x0_ - mu0_) * H(t);
    if (t == 0.0) {
        m.variance = 0.0;
        return m;
    }
    m.variance = integrate(
        [&](double s) {
            const double rs = r_ + s;
            const double j = scaled_H_tail(s, t);
            return rs * rs * j * j;
        },
        0.0, t, 1e-8);
    return m;
}

GaussianMoments QuadraticLaw::law_of_X(double t) const {
    // The mean identity mean_X = mean_Y + mean_mubar is the binding
    // contract; the variance follows the explicit martingale expression.
    GaussianMoments m;
    const GaussianMoments my = law_of_Y(t);
    const GaussianMoments mm = law_of_mubar(t);
    m.mean = my.mean + mm.mean;
    if (t == 0.0) return m;
    m.variance = integrate(
        [&](double s) {
            const double k = 1.0 - c_ * (r_ + s) * scaled_F_tail(s, t);
            return k * k;
        },
        0.0, t, 1e-8);
    return m;
}

double QuadraticLaw::var_mubar_infinity() const {
    const double cutoff = std::max(1e5, gain_->G_inverse(45.0 / c_));
    const double v = integrate(
        [&](double s) {
            const double rs = r_ + s;
            const double j = scaled_H_tail(s, cutoff);
            return rs * rs * j * j;
        },
        0.0, cutoff, 1e-7);
    // Tail of the outer integral: integrand ~ 1/(c g (r+s))^2 past the cutoff.
    const double g_end = gain_->g(cutoff);
    return v + 1.0 / (c_ * c_ * g_end * g_end * (r_ + cutoff));
}

QuadraticLaw::LimitMeasure QuadraticLaw::limit_measure() const {
    double g_inf = 0.0;
    switch (gain_->family()) {
        case GainSchedule::Family::Constant: g_inf = gain_->g0(); break;
        case GainSchedule::Family::LogGrowth:
            throw UnsupportedRegime("limit measure: g is unbounded (log growth); mu_t collapses to a point mass");
        case GainSchedule::Family::PowerLog:
            if (gain_->alpha() > 0.0 || gain_->beta() > 0.0)
                throw UnsupportedRegime("limit measure: g is unbounded; mu_t collapses to a point mass");
            g_inf = gain_->g0();
            break;
        case GainSchedule::Family::Custom: {
            const RegimeReport rep = gain_->classify_regime(1e6);
            if (!rep.g_limit_finite)
                throw UnsupportedRegime("limit measure: g has no finite positive limit");
            g_inf = rep.g_limit;
            break;
        }
    }
    if (!(g_inf > 0.0)) throw UnsupportedRegime("limit measure: lim g must be positive");
    LimitMeasure lm;
    lm.variance = 1.0 / (2.0 * g_inf * c_);
    lm.center_mean = mu0_ + r_ * (x0_ - mu0_) * H_infinity();
    lm.center_variance = var_mubar_infinity();
    return lm;
}

double ou_ergodic_variance(const std::function<double(double)>& a, double horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("ou_ergodic_variance needs horizon > 0");
    if (!(a(horizon) > 0.0)) throw UnsupportedRegime("ou_ergodic_variance needs lim a > 0");

    auto A_between = [&](double lo, double hi) { return integrate(a, lo, hi, 1e-10, 1e-13); };
    auto V_at = [&](double t) {
        // int_0^t exp(-2 int_s^t a) ds; the mass sits in a layer at s = t.
        const double width = 16.0 / std::max(a(t), 1e-6);
        const double split = std::max(0.0, t - width);
        double acc = integrate([&](double s) { return std::exp(-2.0 * A_between(s, t)); }, split, t, 1e-9);
        if (split > 0.0 && A_between(split, t) < 16.0) {
            acc += integrate([&](double s) { return std::exp(-2.0 * A_between(s, t)); }, 0.0, split,
                             1e-7, std::fabs(acc) * 1e-7);
        }
        return acc;
    };

    const double v_half = V_at(0.5 * horizon);
    const double v_full = V_at(horizon);
    if (v_full > 1.25 * v_half + 1e-12)
        throw UnsupportedRegime("ou_ergodic_variance: V(t) keeps growing over the horizon");
    return v_full;
}

}  // namespace selfdiff
