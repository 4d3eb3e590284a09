#include "selfdiff/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "selfdiff/rng.hpp"

namespace selfdiff {
namespace {

std::vector<double> differentiate(const std::vector<double>& coeffs) {
    std::vector<double> d;
    for (std::size_t k = 1; k < coeffs.size(); ++k) d.push_back(static_cast<double>(k) * coeffs[k]);
    if (d.empty()) d.push_back(0.0);
    return d;
}

}  // namespace

double Potential::value(std::span<const double> x) const {
    if (dim_ == 1 && family_ != Family::Custom) return value1(x[0]);
    if (family_ == Family::Quadratic) {
        double s = 0.0;
        for (double xi : x) s += xi * xi;
        return 0.5 * params_[0] * s;
    }
    return fn_value_(x);
}

void Potential::gradient(std::span<const double> x, std::span<double> out) const {
    if (dim_ == 1 && family_ != Family::Custom) {
        out[0] = grad1(x[0]);
        return;
    }
    if (family_ == Family::Quadratic) {
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = params_[0] * x[i];
        return;
    }
    fn_grad_(x, out);
}

double Potential::laplacian(std::span<const double> x) const {
    if (dim_ == 1 && family_ != Family::Custom) return lap1(x[0]);
    if (family_ == Family::Quadratic) return params_[0] * dim_;
    return laplacian_fd(x.data(), dim_);
}

// Central differences of the gradient, step h = 1e-4 (1 + |x|).
double Potential::laplacian_fd(const double* x, int n) const {
    double r = 0.0;
    Vec xp(x, x + n), gp(n), gm(n);
    double nx = norm(std::span<const double>(x, static_cast<std::size_t>(n)));
    const double h = 1e-4 * (1.0 + nx);
    for (int i = 0; i < n; ++i) {
        const double xi = xp[i];
        xp[i] = xi + h;
        gradient(xp, gp);
        xp[i] = xi - h;
        gradient(xp, gm);
        xp[i] = xi;
        r += (gp[i] - gm[i]) / (2.0 * h);
    }
    return r;
}

SquareMat Potential::hessian(std::span<const double> x) const {
    const int n = dim_;
    SquareMat H(n);
    Vec xp(x.begin(), x.end()), gp(n), gm(n);
    const double h = 1e-5 * (1.0 + norm(x));
    for (int j = 0; j < n; ++j) {
        const double xj = xp[j];
        xp[j] = xj + h;
        gradient(xp, gp);
        xp[j] = xj - h;
        gradient(xp, gm);
        xp[j] = xj;
        for (int i = 0; i < n; ++i) H(i, j) = (gp[i] - gm[i]) / (2.0 * h);
    }
    // Symmetrize.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (H(i, j) + H(j, i));
            H(i, j) = H(j, i) = v;
        }
    return H;
}

double Potential::min_critical_gap() const {
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < crits_.size(); ++i)
        for (std::size_t j = i + 1; j < crits_.size(); ++j)
            gap = std::min(gap, dist(crits_[i].location, crits_[j].location));
    return gap;
}

Potential Potential::quadratic(double c, int dimension) {
    if (!(c > 0.0)) throw std::invalid_argument("quadratic potential needs c > 0");
    if (dimension < 1) throw std::invalid_argument("dimension must be positive");
    Potential p;
    p.family_ = Family::Quadratic;
    p.name_ = "quadratic";
    p.dim_ = dimension;
    p.params_ = {c};
    p.convexity_constant_ = c;
    p.chi_support_radius_ = 0.0;
    CriticalPoint origin;
    origin.location.assign(dimension, 0.0);
    origin.kind = CriticalPoint::Kind::LocalMin;
    origin.taylor_constant = c;
    origin.valid_radius = std::numeric_limits<double>::infinity();
    p.crits_ = {origin};
    return p;
}

Potential Potential::double_well() {
    Potential p;
    p.family_ = Family::DoubleWell;
    p.name_ = "double_well";
    p.dim_ = 1;
    p.locate_and_classify_1d({-1.5, -1.0, 0.0, 1.0, 1.5});
    p.fit_taylor_constants();
    p.convexity_constant_ = 2.0;  // V'' = 3x^2 - 1 >= 2 for |x| >= 1
    p.chi_support_radius_ = 1.0;
    return p;
}

Potential Potential::asymmetric_wells() {
    Potential p;
    p.family_ = Family::AsymmetricWells;
    p.name_ = "asymmetric_wells";
    p.dim_ = 1;
    p.locate_and_classify_1d({-0.5, 0.0, 1.0, 2.0, 2.5});
    p.fit_taylor_constants();
    p.convexity_constant_ = 2.0;  // V'' = 3x^2 - 6x + 2 >= 2 for |x| >= 2
    p.chi_support_radius_ = 2.0;
    return p;
}

Potential Potential::polynomial(std::vector<double> coeffs, const std::vector<double>& newton_starts) {
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.size() < 3) throw std::invalid_argument("polynomial potential needs degree >= 2");
    if (coeffs.back() <= 0.0 || (coeffs.size() - 1) % 2 != 0)
        throw std::invalid_argument("polynomial potential must have positive even-degree leading term");
    Potential p;
    p.family_ = Family::Polynomial1D;
    p.name_ = "polynomial";
    p.dim_ = 1;
    p.params_ = std::move(coeffs);
    p.dcoeffs_ = differentiate(p.params_);
    p.ddcoeffs_ = differentiate(p.dcoeffs_);
    p.locate_and_classify_1d(newton_starts);
    if (p.crits_.empty()) throw std::invalid_argument("no critical point found from the given starts");
    for (const auto& cp : p.crits_)
        if (p.value1(cp.location[0]) < -1e-12)
            throw std::invalid_argument("polynomial potential is negative at a critical point");
    p.fit_taylor_constants();
    p.fit_convexity_1d();
    return p;
}

Potential Potential::custom(int dimension, std::function<double(std::span<const double>)> value,
                            std::function<void(std::span<const double>, std::span<double>)> gradient,
                            std::vector<CriticalPoint> critical_points, double convexity_constant,
                            double chi_support_radius) {
    Potential p;
    p.family_ = Family::Custom;
    p.name_ = "custom";
    p.dim_ = dimension;
    p.fn_value_ = std::move(value);
    p.fn_grad_ = std::move(gradient);
    p.crits_ = std::move(critical_points);
    p.convexity_constant_ = convexity_constant;
    p.chi_support_radius_ = chi_support_radius;
    return p;
}

void Potential::locate_and_classify_1d(const std::vector<double>& starts) {
    crits_.clear();
    for (double s : starts) {
        double x = s;
        bool converged = false;
        for (int it = 0; it < 100; ++it) {
            const double g = grad1(x);
            const double h = lap1(x);
            if (std::fabs(h) < 1e-10) break;  // heading into a degenerate point
            const double step = g / h;
            x -= step;
            if (std::fabs(step) < 1e-14 * (1.0 + std::fabs(x))) {
                converged = true;
                break;
            }
        }
        if (!converged || !std::isfinite(x) || std::fabs(grad1(x)) > 1e-10) continue;
        const double h = lap1(x);
        if (std::fabs(h) < 1e-6)
            throw std::invalid_argument("degenerate critical point (singular Hessian) is not supported");
        bool dup = false;
        for (const auto& cp : crits_)
            if (std::fabs(cp.location[0] - x) < 1e-7) dup = true;
        if (dup) continue;
        CriticalPoint cp;
        cp.location = {x};
        cp.kind = h > 0 ? CriticalPoint::Kind::LocalMin : CriticalPoint::Kind::LocalMax;
        crits_.push_back(cp);
    }
    std::sort(crits_.begin(), crits_.end(),
              [](const CriticalPoint& a, const CriticalPoint& b) { return a.location[0] < b.location[0]; });
}

void Potential::fit_taylor_constants() {
    const double gap = min_critical_gap();
    for (auto& cp : crits_) {
        if (cp.kind != CriticalPoint::Kind::LocalMin) continue;
        const double m = cp.location[0];
        double eps = std::isfinite(gap) ? 0.45 * gap : 1.0;
        for (int attempt = 0; attempt < 30; ++attempt) {
            double a = std::numeric_limits<double>::infinity();
            for (int k = 1; k <= 200; ++k) {
                const double u = eps * k / 200.0;
                for (double y : {m - u, m + u}) a = std::min(a, (y - m) * grad1(y) / (u * u));
            }
            if (a > 0.0) {
                cp.taylor_constant = a;
                cp.valid_radius = eps;
                break;
            }
            eps *= 0.5;
        }
    }
}

void Potential::fit_convexity_1d() {
    double reach = 1.0;
    for (const auto& cp : crits_) reach = std::max(reach, std::fabs(cp.location[0]));
    double radius = 1.25 * reach + 0.25;
    for (int attempt = 0; attempt < 40; ++attempt) {
        double c = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 400; ++k) {
            const double r = radius * (1.0 + 3.0 * k / 400.0);
            c = std::min(c, std::min(lap1(r), lap1(-r)));
        }
        if (c > 0.0) {
            convexity_constant_ = c;
            chi_support_radius_ = radius;
            return;
        }
        radius *= 1.5;
    }
    throw std::invalid_argument("potential is not strictly convex outside a compact set");
}

HypothesisReport Potential::check_hypotheses(double radius, int samples, std::uint64_t seed) const {
    if (samples < 100) throw std::invalid_argument("check_hypotheses needs at least 100 samples");
    if (!(radius > 0.0)) throw std::invalid_argument("check_hypotheses needs radius > 0");
    HypothesisReport rep;
    PathRng rng(seed, 0);

    const int n = dim_;
    Vec x(n), g(n);
    double min_v = std::numeric_limits<double>::infinity();
    double fitted_a = -std::numeric_limits<double>::infinity();
    double inner = std::numeric_limits<double>::infinity();
    double outer = std::numeric_limits<double>::infinity();

    auto visit = [&](const Vec& pt) {
        const double v = value(pt);
        min_v = std::min(min_v, v);
        gradient(pt, g);
        const double lap = laplacian(pt);
        fitted_a = std::max(fitted_a, lap / (1.0 + v));
        const double r = norm(pt);
        if (v > 1e-300) {
            const double ratio = dot(g, g) / v;
            if (r >= radius / 4.0 && r <= radius / 2.0) inner = std::min(inner, ratio);
            if (r >= radius / 2.0 && r <= radius) outer = std::min(outer, ratio);
        }
    };

    for (int k = 0; k < samples; ++k) {
        if (n == 1) {
            // Half structured grid, half random, so the shells are always hit.
            if (k % 2 == 0) {
                const double u = -radius + 2.0 * radius * (k + 0.5) / samples;
                x[0] = u;
            } else {
                x[0] = radius * (2.0 * rng.uniform() - 1.0);
            }
        } else {
            double r2 = 0.0;
            for (int i = 0; i < n; ++i) {
                x[i] = rng.normal();
                r2 += x[i] * x[i];
            }
            const double scale = radius * std::pow(rng.uniform(), 1.0 / n) / std::sqrt(r2);
            for (int i = 0; i < n; ++i) x[i] *= scale;
        }
        visit(x);
    }
    // Make sure the origin and both shells are sampled in 1-D.
    if (n == 1) {
        x[0] = 0.0;
        visit(x);
        for (int k = 0; k <= 64; ++k) {
            x[0] = radius / 4.0 + (radius * 3.0 / 4.0) * k / 64.0;
            visit(x);
            x[0] = -x[0];
            visit(x);
        }
    }

    rep.positivity_ok = min_v >= -1e-12;
    rep.fitted_growth_a = fitted_a;
    rep.inner_shell_min_ratio = std::isfinite(inner) ? inner : 0.0;
    rep.outer_shell_min_ratio = std::isfinite(outer) ? outer : 0.0;
    rep.growth_ratio_ok = rep.outer_shell_min_ratio > 1.1 * rep.inner_shell_min_ratio;
    if (!rep.growth_ratio_ok)
        rep.warnings.push_back(
            "growth ratio |grad V|^2 / V looks bounded on the sampled shells; "
            "accepted (closed-form analysis covers quadratic-type tails)");

    // Hessian lower bound outside the chi ball, along random directions.
    bool convex_ok = true;
    Vec xi(n);
    for (int k = 0; k < std::max(100, samples / 4); ++k) {
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] = rng.normal();
            r2 += x[i] * x[i];
        }
        const double rr = chi_support_radius_ + 1e-3 + (2.0 + chi_support_radius_) * rng.uniform();
        for (int i = 0; i < n; ++i) x[i] *= rr / std::sqrt(r2);
        double n2 = 0.0;
        for (int i = 0; i < n; ++i) {
            xi[i] = rng.normal();
            n2 += xi[i] * xi[i];
        }
        const SquareMat H = hessian(x);
        double q = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) q += xi[i] * H(i, j) * xi[j];
        if (q / n2 < convexity_constant_ - 1e-8) {
            convex_ok = false;
            break;
        }
    }
    rep.convexity_ok = convex_ok;
    if (!rep.positivity_ok) rep.warnings.push_back("V takes negative values on the sampled grid");
    return rep;
}

}  // namespace selfdiff
