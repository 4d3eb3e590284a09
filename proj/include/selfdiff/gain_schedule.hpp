#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

// Gain schedules g(t): the drift amplitude of the interaction term, its
// primitive G, the generalized inverse G^{-1}(u) = inf{t : G(t) >= u}, the
// time-change rate kappa, and an asymptotic regime classifier based on the
// trends of log G(t)/g(t), g'(t)/g(t)^2 and 1/g(t).

namespace selfdiff {

struct TrendEstimate {
    enum class Kind { Zero, FinitePositive, Unbounded };
    Kind kind = Kind::Zero;
    double value = 0.0;  // extrapolated limit when finite
};

struct RegimeReport {
    enum class Classification { ASConvergent, BoundedOscillation, ProbConvergent, Diffusive, OpenRegime };
    bool g_limit_finite = false;
    double g_limit = 0.0;  // meaningful when finite
    TrendEstimate ratio_gprime_g2;
    TrendEstimate ratio_logG_g;
    Classification classification = Classification::OpenRegime;
};

class GainSchedule {
  public:
    enum class Family { Constant, LogGrowth, PowerLog, Custom };

    static std::shared_ptr<const GainSchedule> constant(double g0);
    // g(t) = a log(1+t); g(0)=0 is allowed, g is positive for t > 0.
    static std::shared_ptr<const GainSchedule> log_growth(double a);
    // g(t) = g0 + t^alpha log(1+t)^beta with g0 > 0 keeping g positive at 0.
    static std::shared_ptr<const GainSchedule> power_log(double alpha, double beta, double g0 = 1.0);
    static std::shared_ptr<const GainSchedule> custom(std::function<double(double)> g,
                                                      std::function<double(double)> g_prime,
                                                      std::string label = "custom");

    Family family() const { return family_; }
    const std::string& name() const { return name_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double g0() const { return g0_; }

    double g(double t) const {
        switch (family_) {
            case Family::Constant: return g0_;
            case Family::LogGrowth: return g0_ * std::log1p(t);
            case Family::PowerLog:
                if (beta_ == 0.0) {
                    if (alpha_ == 1.0) return g0_ + t;
                    if (alpha_ == 2.0) return g0_ + t * t;
                    return g0_ + std::pow(t, alpha_);
                }
                return g0_ + (alpha_ == 0.0 ? 1.0 : std::pow(t, alpha_)) * std::pow(std::log1p(t), beta_);
            case Family::Custom: break;
        }
        return fn_g_(t);
    }

    double g_prime(double t) const;
    double G(double t) const;
    // G(hi) - G(lo) without the catastrophic cancellation a plain difference
    // suffers once G is large; exponential kernels exp(-c (G(t)-G(s))) are
    // computed through this.
    double G_between(double lo, double hi) const;
    double G_inverse(double u) const;
    // kappa(u) = (r + G^{-1}(u)) g(G^{-1}(u)); the rate of the time-changed
    // mean-reversion term.
    double kappa(double r, double u) const;

    RegimeReport classify_regime(double horizon) const;

  private:
    GainSchedule() = default;
    void validate() const;
    double quad_G(double t) const;        // cached-checkpoint quadrature
    void extend_checkpoints(double t) const;

    Family family_ = Family::Custom;
    std::string name_;
    double alpha_ = 0.0, beta_ = 0.0, g0_ = 1.0;
    std::function<double(double)> fn_g_, fn_gp_;
    bool analytic_G_ = false;

    // Monotone checkpoint cache for quadrature-based G; geometric grid of
    // ratio 1.05, appended under a lock, read behind the same lock (cold
    // path only: the simulation loop never calls G).
    mutable std::mutex cache_mutex_;
    mutable std::vector<double> cache_t_, cache_G_;
};

}  // namespace selfdiff
