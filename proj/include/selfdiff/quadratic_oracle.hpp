#pragma once

#include <functional>
#include <memory>
#include <stdexcept>

#include "selfdiff/gain_schedule.hpp"

// Closed-form Gaussian laws of (Y_t, mu_bar_t, X_t) for the 1-D quadratic
// potential V(x) = c x^2 / 2: time-indexed means and variances through the
// quadratures
//   F(t) = int_0^t e^{-cG(s)} g(s)/(r+s) ds,
//   H(t) = int_0^t e^{-cG(u)}/(r+u)^2 du,
// plus the limiting Gaussian measure when g has a finite positive limit.
// All exponential kernels are accumulated as differences G(t)-G(s) so
// nothing overflows for growing schedules. Dimensions d >= 2 with an
// isotropic c reduce to this law applied per coordinate.

namespace selfdiff {

struct UnsupportedRegime : std::domain_error {
    using std::domain_error::domain_error;
};

struct GaussianMoments {
    double mean = 0.0;
    double variance = 0.0;
};

class QuadraticLaw {
  public:
    QuadraticLaw(double c, std::shared_ptr<const GainSchedule> gain, double r, double x0,
                 double mu_bar0);

    double c() const { return c_; }
    double r() const { return r_; }

    double F(double t) const;
    double H(double t) const;
    double F_infinity() const;
    double H_infinity() const;

    GaussianMoments law_of_Y(double t) const;
    GaussianMoments law_of_mubar(double t) const;
    GaussianMoments law_of_X(double t) const;

    struct LimitMeasure {
        double variance;         // 1 / (2 g(inf) c), deterministic
        double center_mean;      // law of the random center mu_bar(inf)
        double center_variance;
    };
    // Requires lim g finite and positive; growing schedules collapse the
    // limit to a point mass and are rejected.
    LimitMeasure limit_measure() const;

    double var_mubar_infinity() const;

  private:
    double scaled_F_tail(double s, double t) const;  // e^{cG(s)} (F(t)-F(s))
    double scaled_H_tail(double s, double t) const;  // e^{cG(s)} (H(t)-H(s))

    double c_;
    std::shared_ptr<const GainSchedule> gain_;
    double r_, x0_, mu0_;
};

// V(inf) = lim_t e^{-2A(t)} int_0^t e^{2A(s)} ds for A' = a; the ergodic
// variance of the time-inhomogeneous OU process dZ = -a(t) Z dt + dB.
// Throws UnsupportedRegime when the quantity diverges over the horizon.
double ou_ergodic_variance(const std::function<double(double)>& a, double horizon);

}  // namespace selfdiff
