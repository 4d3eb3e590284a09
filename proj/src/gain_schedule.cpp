#include "selfdiff/gain_schedule.hpp"

#include <algorithm>
#include <stdexcept>

#include "selfdiff/quadrature.hpp"

namespace selfdiff {
namespace {
constexpr double kCacheStart = 1.0 / 64.0;
constexpr double kCacheRatio = 1.05;
}  // namespace

std::shared_ptr<const GainSchedule> GainSchedule::constant(double g0) {
    if (!(g0 > 0.0)) throw std::invalid_argument("constant gain needs g0 > 0");
    auto s = std::shared_ptr<GainSchedule>(new GainSchedule());
    s->family_ = Family::Constant;
    s->name_ = "constant";
    s->g0_ = g0;
    s->analytic_G_ = true;
    return s;
}

std::shared_ptr<const GainSchedule> GainSchedule::log_growth(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("log-growth gain needs a > 0");
    auto s = std::shared_ptr<GainSchedule>(new GainSchedule());
    s->family_ = Family::LogGrowth;
    s->name_ = "log_growth";
    s->g0_ = a;
    s->analytic_G_ = false;
    return s;
}

std::shared_ptr<const GainSchedule> GainSchedule::power_log(double alpha, double beta, double g0) {
    if (alpha < 0.0) throw std::invalid_argument("power-log gain needs alpha >= 0");
    if (beta < 0.0) throw std::invalid_argument("power-log gain needs beta >= 0");
    if (!(g0 > 0.0)) throw std::invalid_argument("power-log gain needs g0 > 0");
    auto s = std::shared_ptr<GainSchedule>(new GainSchedule());
    s->family_ = Family::PowerLog;
    s->name_ = "power_log";
    s->alpha_ = alpha;
    s->beta_ = beta;
    s->g0_ = g0;
    s->analytic_G_ = (beta == 0.0);
    s->validate();
    return s;
}

std::shared_ptr<const GainSchedule> GainSchedule::custom(std::function<double(double)> g,
                                                         std::function<double(double)> g_prime,
                                                         std::string label) {
    auto s = std::shared_ptr<GainSchedule>(new GainSchedule());
    s->family_ = Family::Custom;
    s->name_ = std::move(label);
    s->fn_g_ = std::move(g);
    s->fn_gp_ = std::move(g_prime);
    s->analytic_G_ = false;
    s->validate();
    return s;
}

void GainSchedule::validate() const {
    // g must be nonnegative, positive away from 0, and nondecreasing on a
    // broad sampled grid. Decreasing or nonpositive schedules are rejected.
    double prev = g(0.0);
    if (prev < 0.0) throw std::invalid_argument("gain schedule is negative at t = 0");
    double t = 1e-3;
    while (t <= 1e7) {
        const double v = g(t);
        if (!(v > 0.0)) throw std::invalid_argument("gain schedule must be positive for t > 0");
        if (v < prev * (1.0 - 1e-12) - 1e-12)
            throw std::invalid_argument("gain schedule must be nondecreasing");
        prev = v;
        t *= 1.25;
    }
}

double GainSchedule::g_prime(double t) const {
    switch (family_) {
        case Family::Constant: return 0.0;
        case Family::LogGrowth: return g0_ / (1.0 + t);
        case Family::PowerLog: {
            double d = 0.0;
            if (alpha_ > 0.0) {
                d += alpha_ * std::pow(t, alpha_ - 1.0) * std::pow(std::log1p(t), beta_);
            }
            if (beta_ != 0.0) {
                const double lg = std::log1p(t);
                d += (alpha_ == 0.0 ? 1.0 : std::pow(t, alpha_)) * beta_ *
                     (lg > 0.0 ? std::pow(lg, beta_ - 1.0) : 0.0) / (1.0 + t);
            }
            return d;
        }
        case Family::Custom: break;
    }
    if (fn_gp_) return fn_gp_(t);
    const double h = 1e-5 * (1.0 + t);
    return (fn_g_(t + h) - fn_g_(std::max(0.0, t - h))) / (t - h >= 0.0 ? 2.0 * h : h);
}

double GainSchedule::G(double t) const {
    if (t < 0.0) throw std::invalid_argument("G needs t >= 0");
    if (analytic_G_) {
        switch (family_) {
            case Family::Constant: return g0_ * t;
            case Family::PowerLog: return g0_ * t + std::pow(t, alpha_ + 1.0) / (alpha_ + 1.0);
            default: break;
        }
    }
    return quad_G(t);
}

void GainSchedule::extend_checkpoints(double t) const {
    // Caller holds cache_mutex_.
    if (cache_t_.empty()) {
        cache_t_ = {0.0, kCacheStart};
        cache_G_ = {0.0, integrate([this](double s) { return g(s); }, 0.0, kCacheStart, 1e-11, 1e-14)};
    }
    while (cache_t_.back() < t) {
        const double a = cache_t_.back();
        const double b = a * kCacheRatio;
        cache_t_.push_back(b);
        cache_G_.push_back(cache_G_.back() + integrate([this](double s) { return g(s); }, a, b, 1e-11, 1e-14));
    }
}

double GainSchedule::quad_G(double t) const {
    if (t == 0.0) return 0.0;
    std::lock_guard<std::mutex> lock(cache_mutex_);
    extend_checkpoints(t);
    const auto it = std::upper_bound(cache_t_.begin(), cache_t_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - cache_t_.begin()) - 1;
    return cache_G_[k] + integrate([this](double s) { return g(s); }, cache_t_[k], t, 1e-11, 1e-14);
}

double GainSchedule::G_between(double lo, double hi) const {
    if (hi < lo) return -G_between(hi, lo);
    switch (family_) {
        case Family::Constant: return g0_ * (hi - lo);
        case Family::PowerLog:
            if (beta_ == 0.0 && alpha_ == 1.0)
                return (hi - lo) * (g0_ + 0.5 * (hi + lo));
            break;
        default: break;
    }
    // Narrow intervals by direct quadrature of g; wide ones via G.
    if (hi - lo <= 0.25 * (1.0 + lo))
        return integrate([this](double s) { return g(s); }, lo, hi, 1e-12, 1e-15);
    return G(hi) - G(lo);
}

double GainSchedule::G_inverse(double u) const {
    if (u < 0.0) throw std::invalid_argument("G_inverse needs u >= 0");
    if (u == 0.0) return 0.0;
    if (family_ == Family::Constant) return u / g0_;
    if (family_ == Family::PowerLog && beta_ == 0.0 && alpha_ == 1.0) {
        return -g0_ + std::sqrt(g0_ * g0_ + 2.0 * u);
    }

    // Bracket via the checkpoint cache (or doubling for analytic G), then
    // polish with Newton, falling back to bisection steps when Newton
    // leaves the bracket.
    double lo = 0.0, hi = 1.0;
    if (analytic_G_) {
        while (G(hi) < u) hi *= 2.0;
    } else {
        std::unique_lock<std::mutex> lock(cache_mutex_);
        extend_checkpoints(kCacheStart);
        while (cache_G_.back() < u) {
            const double a = cache_t_.back();
            extend_checkpoints(a * kCacheRatio);
        }
        const auto it = std::lower_bound(cache_G_.begin(), cache_G_.end(), u);
        const std::size_t k = static_cast<std::size_t>(it - cache_G_.begin());
        hi = cache_t_[k];
        lo = (k == 0) ? 0.0 : cache_t_[k - 1];
    }

    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double Gx = G(x);
        if (std::fabs(Gx - u) <= 1e-10 * (1.0 + u)) return x;
        if (Gx < u)
            lo = x;
        else
            hi = x;
        const double gx = g(x);
        double next = gx > 0.0 ? x - (Gx - u) / gx : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    throw std::runtime_error("G_inverse did not converge");
}

double GainSchedule::kappa(double r, double u) const {
    const double t = G_inverse(u);
    return (r + t) * g(t);
}

namespace {

struct Fit {
    double intercept = 0.0;  // extrapolated limit (z -> 0 with z = 1/log t)
};

Fit fit_inv_log(const std::vector<double>& t, const std::vector<double>& y) {
    double sz = 0, sy = 0, szz = 0, szy = 0;
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 / std::log(t[i]);
        sz += z;
        sy += y[i];
        szz += z * z;
        szy += z * y[i];
    }
    const double denom = n * szz - sz * sz;
    Fit f;
    if (std::fabs(denom) < 1e-30) {
        f.intercept = sy / n;
        return f;
    }
    const double slope = (n * szy - sz * sy) / denom;
    f.intercept = (sy - slope * sz) / n;
    return f;
}

TrendEstimate estimate_trend(const std::vector<double>& t_all, const std::vector<double>& y_all,
                             std::size_t window) {
    TrendEstimate e;
    const std::size_t n = y_all.size();
    const std::size_t w = std::min(window, n);
    std::vector<double> tw(t_all.end() - w, t_all.end());
    std::vector<double> yw(y_all.end() - w, y_all.end());

    double scale = 0.0;
    for (double v : yw) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) {
        e.kind = TrendEstimate::Kind::Zero;
        return e;
    }
    // Sustained growth across the full sample range means no finite limit.
    const double full_lo = std::fabs(y_all[n / 4]) + 1e-300;
    if (std::fabs(y_all[n - 1]) > 2.0 * full_lo && std::fabs(y_all[n - 1]) >= scale * 0.999) {
        e.kind = TrendEstimate::Kind::Unbounded;
        return e;
    }
    const Fit f = fit_inv_log(tw, yw);
    // 10% slack band: an extrapolated limit inside it is declared zero.
    if (f.intercept < 0.1 * scale) {
        e.kind = TrendEstimate::Kind::Zero;
        return e;
    }
    e.kind = TrendEstimate::Kind::FinitePositive;
    e.value = f.intercept;
    return e;
}

}  // namespace

RegimeReport GainSchedule::classify_regime(double horizon) const {
    // Need at least 50 geometric sample times (ratio 1.3 starting at t = 1).
    const double min_horizon = std::pow(1.3, 49);
    if (horizon < min_horizon)
        throw std::invalid_argument("classify_regime needs a horizon of at least ~3.7e5");

    std::vector<double> ts, y_logGg, y_gpg2, y_invg;
    for (double t = 1.0; t <= horizon * 1.0000001; t *= 1.3) {
        ts.push_back(t);
        const double gt = g(t);
        const double Gt = G(t);
        y_logGg.push_back(Gt > 1.0 ? std::log(Gt) / gt : 0.0);
        y_gpg2.push_back(g_prime(t) / (gt * gt));
        y_invg.push_back(1.0 / gt);
    }

    RegimeReport rep;
    rep.ratio_logG_g = estimate_trend(ts, y_logGg, 25);
    rep.ratio_gprime_g2 = estimate_trend(ts, y_gpg2, 25);

    // lim g: if g still grows measurably over the last decade the limit is
    // taken as infinite; otherwise extrapolate 1/g.
    const double growth = g(horizon) / g(horizon / 10.0) - 1.0;
    const TrendEstimate inv_g = estimate_trend(ts, y_invg, 25);
    if (growth <= 0.01 && inv_g.kind == TrendEstimate::Kind::FinitePositive) {
        rep.g_limit_finite = true;
        rep.g_limit = 1.0 / inv_g.value;
    } else {
        rep.g_limit_finite = false;
    }

    using C = RegimeReport::Classification;
    if (rep.ratio_gprime_g2.kind == TrendEstimate::Kind::Unbounded) {
        rep.classification = C::OpenRegime;
        return rep;
    }
    if (rep.g_limit_finite) {
        rep.classification = C::Diffusive;
        return rep;
    }
    switch (rep.ratio_logG_g.kind) {
        case TrendEstimate::Kind::Zero: rep.classification = C::ASConvergent; break;
        case TrendEstimate::Kind::FinitePositive: rep.classification = C::BoundedOscillation; break;
        case TrendEstimate::Kind::Unbounded: rep.classification = C::ProbConvergent; break;
    }
    return rep;
}

}  // namespace selfdiff
