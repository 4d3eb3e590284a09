#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfdiff/smallvec.hpp"

// Interaction potentials V: R^d -> R_+ together with gradient, Laplacian,
// classified critical points and the numeric data needed by the hypothesis
// checks: a lower Hessian bound c valid outside a compact ball (the
// asymptotic convexity constant) and the radius of that ball.

namespace selfdiff {

struct CriticalPoint {
    enum class Kind { LocalMin, LocalMax, Saddle };
    Vec location;
    Kind kind = Kind::LocalMin;
    // For minima: a > 0 with (y - m, grad V(y)) >= a |y - m|^2 on |y - m| <= valid_radius.
    double taylor_constant = 0.0;
    double valid_radius = 0.0;
};

struct HypothesisReport {
    double fitted_growth_a = 0.0;       // smallest a with lap V <= a (1 + V) on the grid
    double inner_shell_min_ratio = 0.0; // min |grad V|^2 / V on |x| in [R/4, R/2]
    double outer_shell_min_ratio = 0.0; // min |grad V|^2 / V on |x| in [R/2, R]
    bool positivity_ok = false;
    bool convexity_ok = false;          // Hessian >= c outside the chi ball
    bool growth_ratio_ok = false;       // |grad V|^2 / V increasing outward
    std::vector<std::string> warnings;  // advisory findings, never fatal
};

class Potential {
  public:
    enum class Family { Quadratic, DoubleWell, AsymmetricWells, Polynomial1D, Custom };

    static Potential quadratic(double c, int dimension);
    // V(x) = (x^2 - 1)^2 / 4, minima at -1 and +1, maximum at 0.
    static Potential double_well();
    // V(x) = x^2 (x - 2)^2 / 4, minima at 0 and 2, maximum at 1.
    static Potential asymmetric_wells();
    // 1-D polynomial sum_k coeffs[k] x^k; critical points are Newton-refined
    // from the given starting guesses and classified by the second derivative.
    static Potential polynomial(std::vector<double> coeffs, const std::vector<double>& newton_starts);
    static Potential custom(int dimension, std::function<double(std::span<const double>)> value,
                            std::function<void(std::span<const double>, std::span<double>)> gradient,
                            std::vector<CriticalPoint> critical_points, double convexity_constant,
                            double chi_support_radius);

    int dimension() const { return dim_; }
    Family family() const { return family_; }
    const std::string& name() const { return name_; }
    const std::vector<double>& parameters() const { return params_; }

    double value(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::span<double> out) const;
    double laplacian(std::span<const double> x) const;
    SquareMat hessian(std::span<const double> x) const;  // finite differences of the gradient

    // Scalar fast paths, valid when dimension() == 1. These are what the
    // inner simulation loop calls.
    double value1(double x) const {
        switch (family_) {
            case Family::Quadratic: return 0.5 * params_[0] * x * x;
            case Family::DoubleWell: {
                const double u = x * x - 1.0;
                return 0.25 * u * u;
            }
            case Family::AsymmetricWells: {
                const double u = x * (x - 2.0);
                return 0.25 * u * u;
            }
            case Family::Polynomial1D: return horner(params_, x);
            case Family::Custom: break;
        }
        const double xv[1] = {x};
        return fn_value_(xv);
    }
    double grad1(double x) const {
        switch (family_) {
            case Family::Quadratic: return params_[0] * x;
            case Family::DoubleWell: return x * x * x - x;
            case Family::AsymmetricWells: return x * (x - 1.0) * (x - 2.0);
            case Family::Polynomial1D: return horner(dcoeffs_, x);
            case Family::Custom: break;
        }
        const double xv[1] = {x};
        double g[1];
        fn_grad_(xv, g);
        return g[0];
    }
    double lap1(double x) const {
        switch (family_) {
            case Family::Quadratic: return params_[0];
            case Family::DoubleWell: return 3.0 * x * x - 1.0;
            case Family::AsymmetricWells: return 3.0 * x * x - 6.0 * x + 2.0;
            case Family::Polynomial1D: return horner(ddcoeffs_, x);
            case Family::Custom: break;
        }
        return laplacian_fd(&x, 1);
    }

    const std::vector<CriticalPoint>& critical_points() const { return crits_; }
    double convexity_constant() const { return convexity_constant_; }
    double chi_support_radius() const { return chi_support_radius_; }
    // Smallest distance between two listed critical points (inf if < 2 points).
    double min_critical_gap() const;

    // Grid-based, advisory checks of the standing hypotheses on V.
    HypothesisReport check_hypotheses(double radius, int samples, std::uint64_t seed = 12345) const;

  private:
    Potential() = default;
    void locate_and_classify_1d(const std::vector<double>& starts);
    void fit_taylor_constants();
    void fit_convexity_1d();
    double laplacian_fd(const double* x, int n) const;

    static double horner(const std::vector<double>& c, double x) {
        double r = 0.0;
        for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
        return r;
    }

    Family family_ = Family::Custom;
    std::string name_;
    int dim_ = 1;
    std::vector<double> params_;  // family-specific (c for quadratic, coeffs for polynomial)
    std::vector<double> dcoeffs_, ddcoeffs_;  // polynomial derivative coefficients
    std::vector<CriticalPoint> crits_;
    double convexity_constant_ = 0.0;
    double chi_support_radius_ = 0.0;
    std::function<double(std::span<const double>)> fn_value_;
    std::function<void(std::span<const double>, std::span<double>)> fn_grad_;
};

}  // namespace selfdiff
