#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "selfdiff/gain_schedule.hpp"
#include "selfdiff/potentials.hpp"
#include "selfdiff/rng.hpp"
#include "selfdiff/smallvec.hpp"

// Integration of the coupled system
//   dY = dB - g(t) grad V(Y) dt - Y dt/(r+t),   dmu = Y dt/(r+t),
// with tamed Euler-Maruyama for Y (drift b -> b/(1+dt|b|)) and a midpoint
// rule for the deterministic mu sub-step. X is reconstructed as Y + mu.
// Also: an exact Gaussian sampler for the 1-D quadratic potential and a
// Runge-Kutta integrator for the gradient flow of -grad V.

namespace selfdiff {

struct SimConfig {
    std::shared_ptr<const Potential> potential;
    std::shared_ptr<const GainSchedule> gain;
    double r = 1.0;
    Vec x0{0.0};
    Vec mu_bar0{0.0};
    double horizon = 1.0;
    double dt_base = 0.01;
    int decimation = 100;  // record every k-th step
    std::uint64_t seed = 1;
    int n_paths = 1;

    int dimension() const { return potential ? potential->dimension() : 1; }
    void validate() const;
    // dt_base * g(T) * sup|Hessian| over the state box; large values mean the
    // un-tamed explicit step would be unstable without the adaptive dt.
    double stability_indicator() const;
};

struct PathRecord {
    int dimension = 1;
    std::vector<double> times;
    std::vector<double> Y;       // row-major [n_records x d]
    std::vector<double> mu_bar;  // row-major [n_records x d]
    std::vector<double> X;       // row-major [n_records x d], X = Y + mu_bar exactly
    Vec terminal_Y;
    Vec mu_bar_integral_tail;  // int_0^T Y_s ds/(r+s), i.e. mu_bar(T) - mu_bar(0)
    std::uint64_t seed_stream_id = 0;
    std::uint64_t steps_taken = 0;
    std::uint64_t tamed_steps = 0;  // steps with dt |b| > 0.1
    bool blew_up = false;
    double blow_up_time = 0.0;

    std::size_t n_records() const { return times.size(); }
    double t(std::size_t i) const { return times[i]; }
    double y(std::size_t i, int k = 0) const { return Y[i * dimension + k]; }
    double mu(std::size_t i, int k = 0) const { return mu_bar[i * dimension + k]; }
    double x(std::size_t i, int k = 0) const { return X[i * dimension + k]; }
};

// One tamed Euler-Maruyama step of (t, Y, mu). noise must have covariance
// dt * Id. Returns the advanced time t + dt.
double step_y(const Potential& pot, const GainSchedule& gain, double r, double t, double dt,
              std::span<const double> noise, Vec& y, Vec& mu);

PathRecord simulate_path(const SimConfig& cfg, std::uint64_t path_index);
// Deterministic skeleton (all Brownian increments zero); used by tests and
// the flow comparison diagnostics.
PathRecord simulate_path_zero_noise(const SimConfig& cfg);

int resolve_thread_count(int requested = 0);

// Runs f(record, path_index) over the ensemble on a small worker pool.
// Path index -> worker assignment is static, per-path streams make each
// record independent of scheduling, and results land in an index-addressed
// vector, so the output is identical however many workers run.
template <class R, class F>
std::vector<R> map_paths(const SimConfig& cfg, int threads, F&& f) {
    const int n = cfg.n_paths;
    std::vector<R> out(static_cast<std::size_t>(n));
    const int w = std::max(1, std::min(resolve_thread_count(threads), n));
    if (w == 1) {
        for (int i = 0; i < n; ++i) out[i] = f(simulate_path(cfg, i), static_cast<std::size_t>(i));
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int worker = 0; worker < w; ++worker) {
        pool.emplace_back([&, worker]() {
            for (int i = worker; i < n; i += w)
                out[i] = f(simulate_path(cfg, i), static_cast<std::size_t>(i));
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

std::vector<PathRecord> simulate_ensemble(const SimConfig& cfg, int threads = 0);

// Exact sampler for the 1-D quadratic case: Y and mu_bar are jointly
// Gaussian on any time grid, with per-interval coefficients obtained by
// quadrature of the exponential kernels (accumulated in log domain). No
// discretization error.
class ExactQuadraticSampler {
  public:
    ExactQuadraticSampler(const SimConfig& cfg, std::vector<double> grid);
    PathRecord sample(std::uint64_t path_index) const;
    const std::vector<double>& grid() const { return grid_; }

  private:
    struct Interval {
        double alpha;      // mean propagation factor of Y
        double h_hat;      // mu gain: mu += Y_a (r+a) h_hat
        double l11, l21, l22;  // Cholesky factor of cov(xi, eta)
    };
    double c_ = 1.0, r_ = 1.0, y0_ = 0.0, mu0_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> grid_;
    std::vector<Interval> intervals_;
};

// D(t,y) = g(t)|grad V(y)|^2 + (y, grad V(y))/(r+t) - lap V(y)/2; V(Y_t) is a
// supermartingale while D > 0.
double drift_dissipation(const Potential& pot, const GainSchedule& gain, double r, double t,
                         std::span<const double> y);

// Gradient flow of -grad V: classic RK4 with step-doubling control,
// error tolerance ~1e-8 per unit time.
class FlowIntegrator {
  public:
    FlowIntegrator(std::shared_ptr<const Potential> pot, Vec y0, double tol_per_unit = 1e-8);
    // Advances to time h >= current time and returns the state.
    const Vec& advance_to(double h);
    const Vec& state() const { return y_; }
    double time() const { return h_; }

  private:
    void rk4(const Vec& in, double dt, Vec& out) const;
    std::shared_ptr<const Potential> pot_;
    Vec y_;
    double h_ = 0.0;
    double dt_ = 0.05;
    double tol_;
};

Vec integrate_flow(const std::shared_ptr<const Potential>& pot, const Vec& y0, double h);

}  // namespace selfdiff
