#include "selfdiff/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "selfdiff/quadrature.hpp"

namespace selfdiff {

void SimConfig::validate() const {
    if (!potential || !gain) throw std::invalid_argument("SimConfig needs a potential and a gain schedule");
    if (!(r > 0.0)) throw std::invalid_argument("SimConfig needs r > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("SimConfig needs horizon > 0");
    if (!(dt_base > 0.0)) throw std::invalid_argument("SimConfig needs dt_base > 0");
    if (decimation < 1) throw std::invalid_argument("SimConfig needs decimation >= 1");
    if (n_paths < 1) throw std::invalid_argument("SimConfig needs n_paths >= 1");
    const int d = potential->dimension();
    if (static_cast<int>(x0.size()) != d || static_cast<int>(mu_bar0.size()) != d)
        throw std::invalid_argument("x0 / mu_bar0 dimension mismatch");
}

double SimConfig::stability_indicator() const {
    // Rough Lipschitz bound of grad V over a box around the critical points
    // and the start point.
    double reach = 1.0;
    for (const auto& cp : potential->critical_points())
        reach = std::max(reach, norm(cp.location));
    reach = std::max(reach, norm(x0)) + 2.0;
    double lip = 0.0;
    const int d = potential->dimension();
    Vec x(d, 0.0);
    for (int k = 0; k <= 64; ++k) {
        x[0] = -reach + 2.0 * reach * k / 64.0;
        lip = std::max(lip, std::fabs(potential->laplacian(x)));
    }
    return dt_base * gain->g(horizon) * lip;
}

double step_y(const Potential& pot, const GainSchedule& gain, double r, double t, double dt,
              std::span<const double> noise, Vec& y, Vec& mu) {
    const int d = static_cast<int>(y.size());
    const double gt = gain.g(t);
    const double mu_rate = dt / (r + t + 0.5 * dt);
    if (d == 1) {
        const double b = gt * pot.grad1(y[0]);
        const double y0 = y[0];
        y[0] = y0 + noise[0] - dt * b / (1.0 + dt * std::fabs(b)) - dt * y0 / (r + t);
        mu[0] += mu_rate * 0.5 * (y0 + y[0]);
        return t + dt;
    }
    double stack[8];
    Vec heap;
    double* b = d <= 8 ? stack : (heap.resize(d), heap.data());
    pot.gradient(y, std::span<double>(b, static_cast<std::size_t>(d)));
    double bnorm = 0.0;
    for (int i = 0; i < d; ++i) {
        b[i] *= gt;
        bnorm += b[i] * b[i];
    }
    bnorm = std::sqrt(bnorm);
    const double tame = 1.0 / (1.0 + dt * bnorm);
    for (int i = 0; i < d; ++i) {
        const double yi = y[i];
        y[i] = yi + noise[i] - dt * b[i] * tame - dt * yi / (r + t);
        mu[i] += mu_rate * 0.5 * (yi + y[i]);
    }
    return t + dt;
}

namespace {

PathRecord simulate_path_impl(const SimConfig& cfg, std::uint64_t path_index, bool zero_noise) {
    cfg.validate();
    const Potential& pot = *cfg.potential;
    const GainSchedule& gain = *cfg.gain;
    const int d = pot.dimension();
    const double T = cfg.horizon;
    const double dtb = cfg.dt_base;
    const double r = cfg.r;
    const std::uint64_t decim = static_cast<std::uint64_t>(cfg.decimation);

    PathRecord rec;
    rec.dimension = d;
    rec.seed_stream_id = path_index;
    PathRng rng(cfg.seed, path_index);

    Vec y = sub(cfg.x0, cfg.mu_bar0);
    Vec mu = cfg.mu_bar0;

    auto record = [&](double t) {
        rec.times.push_back(t);
        for (int i = 0; i < d; ++i) {
            rec.Y.push_back(y[i]);
            rec.mu_bar.push_back(mu[i]);
            rec.X.push_back(y[i] + mu[i]);
        }
    };
    record(0.0);

    double t = 0.0;
    std::uint64_t step = 0;

    if (d == 1) {
        double ys = y[0], ms = mu[0];
        std::uint64_t until_record = decim;
        while (t < T) {
            const double gt = gain.g(t);
            double dt = dtb / (1.0 + gt);
            if (dt > dtb) dt = dtb;
            bool last = false;
            if (t + dt >= T) {
                dt = T - t;
                last = true;
            }
            const double noise = zero_noise ? 0.0 : std::sqrt(dt) * rng.normal();
            const double b = gt * pot.grad1(ys);
            const double ab = dt * std::fabs(b);
            if (ab > 0.1) ++rec.tamed_steps;
            const double ynew = ys + noise - dt * b / (1.0 + ab) - dt * ys / (r + t);
            ms += dt * 0.5 * (ys + ynew) / (r + t + 0.5 * dt);
            ys = ynew;
            t = last ? T : t + dt;
            ++step;
            if (!(std::fabs(ys) < 1e12)) {
                rec.blew_up = true;
                rec.blow_up_time = t;
                break;
            }
            if (--until_record == 0 || last) {
                until_record = decim;
                y[0] = ys;
                mu[0] = ms;
                record(t);
            }
        }
        y[0] = ys;
        mu[0] = ms;
        if (rec.blew_up) record(t);
    } else {
        Vec noise(d, 0.0);
        while (t < T) {
            const double gt = gain.g(t);
            double dt = dtb / (1.0 + gt);
            if (dt > dtb) dt = dtb;
            bool last = false;
            if (t + dt >= T) {
                dt = T - t;
                last = true;
            }
            const double sdt = std::sqrt(dt);
            for (int i = 0; i < d; ++i) noise[i] = zero_noise ? 0.0 : sdt * rng.normal();
            {
                // Inline of step_y with taming statistics.
                Vec b(d);
                pot.gradient(y, b);
                double bnorm = 0.0;
                for (int i = 0; i < d; ++i) {
                    b[i] *= gt;
                    bnorm += b[i] * b[i];
                }
                bnorm = std::sqrt(bnorm);
                if (dt * bnorm > 0.1) ++rec.tamed_steps;
                const double tame = 1.0 / (1.0 + dt * bnorm);
                const double mu_rate = dt / (r + t + 0.5 * dt);
                for (int i = 0; i < d; ++i) {
                    const double yi = y[i];
                    y[i] = yi + noise[i] - dt * b[i] * tame - dt * yi / (r + t);
                    mu[i] += mu_rate * 0.5 * (yi + y[i]);
                }
            }
            t = last ? T : t + dt;
            ++step;
            double ynorm2 = 0.0;
            for (int i = 0; i < d; ++i) ynorm2 += y[i] * y[i];
            if (!(ynorm2 < 1e24)) {
                rec.blew_up = true;
                rec.blow_up_time = t;
                record(t);
                break;
            }
            if (step % decim == 0 || t >= T) record(t);
        }
    }

    rec.steps_taken = step;
    rec.terminal_Y = y;
    rec.mu_bar_integral_tail = sub(mu, cfg.mu_bar0);
    return rec;
}

}  // namespace

PathRecord simulate_path(const SimConfig& cfg, std::uint64_t path_index) {
    return simulate_path_impl(cfg, path_index, false);
}

PathRecord simulate_path_zero_noise(const SimConfig& cfg) {
    return simulate_path_impl(cfg, 0, true);
}

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SELFDIFF_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

std::vector<PathRecord> simulate_ensemble(const SimConfig& cfg, int threads) {
    const int n = cfg.n_paths;
    std::vector<PathRecord> out(static_cast<std::size_t>(n));
    const int w = std::max(1, std::min(resolve_thread_count(threads), n));
    if (w == 1) {
        for (int i = 0; i < n; ++i) out[i] = simulate_path(cfg, i);
        return out;
    }
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int worker = 0; worker < w; ++worker) {
        pool.emplace_back([&, worker]() {
            for (int i = worker; i < n; i += w) out[i] = simulate_path(cfg, i);
        });
    }
    for (auto& th : pool) th.join();
    return out;
}

double drift_dissipation(const Potential& pot, const GainSchedule& gain, double r, double t,
                         std::span<const double> y) {
    Vec g(y.size());
    pot.gradient(y, g);
    return gain.g(t) * dot(g, g) + dot(y, g) / (r + t) - 0.5 * pot.laplacian(y);
}

// ---------------------------------------------------------------------------
// Exact quadratic sampler

namespace {

// Integrates f over [a,b] split at the edge of an exponential boundary
// layer: the dominant side first, then the (often vanishing) remainder
// against an absolute floor, so the adaptive rule neither misses the layer
// nor starves on a near-zero piece.
double integrate_layered(const std::function<double(double)>& f, double a, double b, double split,
                         double rel_tol, bool mass_above_split) {
    split = std::clamp(split, a, b);
    double v = 0.0;
    if (mass_above_split) {
        if (b > split) v = integrate(f, split, b, rel_tol);
        const double floor = (std::fabs(v) + 1e-280) * rel_tol;
        if (split > a) v += integrate(f, a, split, rel_tol, floor);
    } else {
        if (split > a) v = integrate(f, a, split, rel_tol);
        const double floor = (std::fabs(v) + 1e-280) * rel_tol;
        if (b > split) v += integrate(f, split, b, rel_tol, floor);
    }
    return v;
}

}  // namespace

ExactQuadraticSampler::ExactQuadraticSampler(const SimConfig& cfg, std::vector<double> grid)
    : grid_(std::move(grid)) {
    cfg.validate();
    if (cfg.potential->family() != Potential::Family::Quadratic || cfg.potential->dimension() != 1)
        throw std::invalid_argument("exact sampler requires the 1-D quadratic potential");
    if (grid_.size() < 2 || grid_.front() != 0.0)
        throw std::invalid_argument("exact sampler grid must start at 0");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("exact sampler grid must increase");

    c_ = cfg.potential->parameters()[0];
    r_ = cfg.r;
    y0_ = cfg.x0[0] - cfg.mu_bar0[0];
    mu0_ = cfg.mu_bar0[0];
    seed_ = cfg.seed;
    const GainSchedule& gain = *cfg.gain;
    const double c = c_, r = r_;

    auto layer_start = [&](double t_hi, double width) {
        // Point s with G(t_hi) - G(s) = width (exponent budget).
        const double target = gain.G(t_hi) - width;
        return target <= 0.0 ? 0.0 : gain.G_inverse(target);
    };
    auto layer_end = [&](double t_lo, double width) {
        return gain.G_inverse(gain.G(t_lo) + width);
    };

    intervals_.reserve(grid_.size() - 1);
    for (std::size_t k = 0; k + 1 < grid_.size(); ++k) {
        const double a = grid_[k], b = grid_[k + 1];
        Interval iv{};
        iv.alpha = (r + a) / (r + b) * std::exp(-c * gain.G_between(a, b));

        const double v_xi = integrate_layered(
            [&](double s) {
                const double w = (r + s) / (r + b);
                return w * w * std::exp(-2.0 * c * gain.G_between(s, b));
            },
            a, b, layer_start(b, 20.0 / c), 1e-9, true);

        iv.h_hat = integrate_layered(
            [&](double s) {
                const double rs = r + s;
                return std::exp(-c * gain.G_between(a, s)) / (rs * rs);
            },
            a, b, std::min(b, layer_end(a, 20.0 / c)), 1e-9, false);

        auto J = [&](double u) {
            return integrate_layered(
                [&](double w) {
                    const double rw = r + w;
                    return std::exp(-c * gain.G_between(u, w)) / (rw * rw);
                },
                u, b, std::min(b, layer_end(u, 20.0 / c)), 1e-10, false);
        };

        const double cov = integrate_layered(
            [&](double u) {
                const double ru = r + u;
                return ru * ru * std::exp(-c * gain.G_between(u, b)) * J(u) / (r + b);
            },
            a, b, layer_start(b, 20.0 / c), 1e-8, true);

        const double v_eta = integrate(
            [&](double u) {
                const double ru = r + u;
                const double j = J(u);
                return ru * ru * j * j;
            },
            a, b, 1e-8);

        iv.l11 = std::sqrt(std::max(v_xi, 0.0));
        iv.l21 = iv.l11 > 0.0 ? cov / iv.l11 : 0.0;
        iv.l22 = std::sqrt(std::max(v_eta - iv.l21 * iv.l21, 0.0));
        intervals_.push_back(iv);
    }
}

PathRecord ExactQuadraticSampler::sample(std::uint64_t path_index) const {
    PathRng rng(seed_, path_index);
    PathRecord rec;
    rec.dimension = 1;
    rec.seed_stream_id = path_index;
    rec.times = grid_;
    rec.Y.reserve(grid_.size());
    rec.mu_bar.reserve(grid_.size());
    rec.X.reserve(grid_.size());

    double y = y0_, mu = mu0_;
    rec.Y.push_back(y);
    rec.mu_bar.push_back(mu);
    rec.X.push_back(y + mu);
    for (std::size_t k = 0; k < intervals_.size(); ++k) {
        const Interval& iv = intervals_[k];
        const double z1 = rng.normal(), z2 = rng.normal();
        const double xi = iv.l11 * z1;
        const double eta = iv.l21 * z1 + iv.l22 * z2;
        const double a = grid_[k];
        mu += y * (r_ + a) * iv.h_hat + eta;
        y = iv.alpha * y + xi;
        rec.Y.push_back(y);
        rec.mu_bar.push_back(mu);
        rec.X.push_back(y + mu);
    }
    rec.steps_taken = intervals_.size();
    rec.terminal_Y = {y};
    rec.mu_bar_integral_tail = {mu - mu0_};
    return rec;
}

// ---------------------------------------------------------------------------
// Gradient flow

FlowIntegrator::FlowIntegrator(std::shared_ptr<const Potential> pot, Vec y0, double tol_per_unit)
    : pot_(std::move(pot)), y_(std::move(y0)), tol_(tol_per_unit) {}

void FlowIntegrator::rk4(const Vec& in, double dt, Vec& out) const {
    const int d = static_cast<int>(in.size());
    Vec k1(d), k2(d), k3(d), k4(d), tmp(d);
    pot_->gradient(in, k1);
    for (int i = 0; i < d; ++i) tmp[i] = in[i] - 0.5 * dt * k1[i];
    pot_->gradient(tmp, k2);
    for (int i = 0; i < d; ++i) tmp[i] = in[i] - 0.5 * dt * k2[i];
    pot_->gradient(tmp, k3);
    for (int i = 0; i < d; ++i) tmp[i] = in[i] - dt * k3[i];
    pot_->gradient(tmp, k4);
    out.resize(d);
    for (int i = 0; i < d; ++i)
        out[i] = in[i] - dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
}

const Vec& FlowIntegrator::advance_to(double h) {
    if (h < h_) throw std::invalid_argument("flow cannot run backwards");
    Vec full, half, two;
    while (h_ < h) {
        double dt = std::min(dt_, h - h_);
        rk4(y_, dt, full);
        rk4(y_, 0.5 * dt, half);
        rk4(half, 0.5 * dt, two);
        double err = 0.0;
        for (std::size_t i = 0; i < y_.size(); ++i) err = std::max(err, std::fabs(two[i] - full[i]));
        const double tol_local = tol_ * dt;
        if (err <= tol_local || dt <= 1e-12) {
            // Local extrapolation of the two half steps.
            for (std::size_t i = 0; i < y_.size(); ++i) y_[i] = two[i] + (two[i] - full[i]) / 15.0;
            h_ += dt;
            const double grow = err > 0.0 ? 0.9 * std::pow(tol_local / err, 0.2) : 5.0;
            dt_ = std::min(10.0, dt * std::clamp(grow, 0.2, 5.0));
        } else {
            dt_ = dt * std::clamp(0.9 * std::pow(tol_local / err, 0.2), 0.2, 0.9);
        }
    }
    return y_;
}

Vec integrate_flow(const std::shared_ptr<const Potential>& pot, const Vec& y0, double h) {
    if (h < 0.0) throw std::invalid_argument("integrate_flow needs h >= 0");
    FlowIntegrator flow(pot, y0);
    flow.advance_to(h);
    return flow.state();
}

}  // namespace selfdiff
