#pragma once

#include <functional>
#include <stdexcept>

// Adaptive Gauss-Kronrod (G7,K15) quadrature on finite intervals.
// Integrands with fast-decaying exponential factors are expected to be
// pre-scaled by the caller so the integrand stays O(1) (log-domain
// accumulation); infinite tails are handled by analytic remainders at the
// call sites.

namespace selfdiff {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integrates f over [a,b] to relative tolerance rel_tol (with an absolute
// floor for integrals near zero). Throws QuadratureError if the requested
// tolerance cannot be certified.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_floor = 0.0);

}  // namespace selfdiff
