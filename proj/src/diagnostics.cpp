#include "selfdiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace selfdiff {

void add_occupation(EmpiricalMeasure& measure, const PathRecord& path, StateComponent which,
                    double burn_in_fraction, int coord) {
    if (burn_in_fraction < 0.0 || burn_in_fraction > 0.9)
        throw std::invalid_argument("burn-in fraction must lie in [0, 0.9]");
    const std::size_t n = path.n_records();
    if (n < 2) throw std::invalid_argument("occupation measure needs a recorded path");
    const double t_start = burn_in_fraction * path.t(n - 1);
    bool any = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (path.t(i) < t_start) continue;
        const double w = path.t(i + 1) - path.t(i);
        const double v = which == StateComponent::X ? path.x(i, coord) : path.y(i, coord);
        measure.add(v, w);
        any = true;
    }
    if (!any) throw std::invalid_argument("occupation window is empty");
}

EmpiricalMeasure occupation_measure(std::span<const PathRecord> paths, StateComponent which,
                                    double burn_in_fraction, int coord) {
    EmpiricalMeasure m;
    for (const PathRecord& p : paths) add_occupation(m, p, which, burn_in_fraction, coord);
    return m;
}

double tail_oscillation(const PathRecord& path, double window_fraction) {
    const std::size_t n = path.n_records();
    if (n == 0) throw std::invalid_argument("empty path");
    const double t_start = (1.0 - window_fraction) * path.t(n - 1);
    double osc = 0.0;
    for (int k = 0; k < path.dimension; ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < n; ++i) {
            if (path.t(i) < t_start) continue;
            lo = std::min(lo, path.y(i, k));
            hi = std::max(hi, path.y(i, k));
        }
        if (hi >= lo) osc = std::max(osc, hi - lo);
    }
    return osc;
}

std::optional<std::size_t> classify_terminal(const PathRecord& path, const Potential& potential,
                                             double epsilon) {
    const double gap = potential.min_critical_gap();
    if (!(epsilon > 0.0) || epsilon >= 0.5 * gap)
        throw std::invalid_argument("epsilon must be positive and below half the critical gap");
    if (potential.critical_points().empty()) return std::nullopt;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < potential.critical_points().size(); ++i) {
        const double d = dist(path.terminal_Y, potential.critical_points()[i].location);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best_d > epsilon) return std::nullopt;
    if (tail_oscillation(path) >= 0.5 * epsilon) return std::nullopt;
    return best;
}

double lil_envelope_fraction(const PathRecord& path, double m, const GainSchedule& gain, double T0,
                             double envelope_constant) {
    if (gain.G(T0) <= 1.0)
        throw std::invalid_argument("lil envelope needs T0 with log G(T0) > 0");
    std::size_t total = 0, inside = 0;
    for (std::size_t i = 0; i < path.n_records(); ++i) {
        const double t = path.t(i);
        if (t <= T0) continue;
        const double scale = std::sqrt(gain.g(t) / std::log(gain.G(t)));
        ++total;
        if (std::fabs(path.y(i) - m) * scale <= envelope_constant) ++inside;
    }
    if (total == 0) throw std::invalid_argument("lil envelope: no records past T0");
    return static_cast<double>(inside) / static_cast<double>(total);
}

double apt_deviation(const PathRecord& path, const std::shared_ptr<const Potential>& potential,
                     const GainSchedule& gain, double base, double window, int min_records) {
    const double t_lo = gain.G_inverse(base);
    const double t_hi = gain.G_inverse(base + window);
    const std::size_t n = path.n_records();
    if (n == 0 || path.t(n - 1) < t_hi)
        throw std::invalid_argument("apt window extends past the recorded horizon");

    // Base state: recorded point nearest to G^{-1}(base).
    std::size_t i0 = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = std::fabs(path.t(i) - t_lo);
        if (d < best) {
            best = d;
            i0 = i;
        }
    }
    Vec y0(path.dimension);
    for (int k = 0; k < path.dimension; ++k) y0[k] = path.y(i0, k);
    const double h0 = gain.G(path.t(i0)) - base;

    FlowIntegrator flow(potential, y0);
    if (h0 > 0.0) flow.advance_to(h0);

    int used = 0;
    double dev = 0.0;
    for (std::size_t i = i0; i < n; ++i) {
        const double t = path.t(i);
        if (t < t_lo && i != i0) continue;
        if (t > t_hi) break;
        const double h = gain.G(t) - base;
        if (h < flow.time()) continue;
        const Vec& phi = flow.advance_to(h);
        double d2 = 0.0;
        for (int k = 0; k < path.dimension; ++k) {
            const double d = path.y(i, k) - phi[k];
            d2 += d * d;
        }
        dev = std::max(dev, std::sqrt(d2));
        ++used;
    }
    if (used < min_records)
        throw std::invalid_argument("apt window has insufficient recorded resolution");
    return dev;
}

double log_time_slope(const PathRecord& path, double t_lo, double t_hi) {
    double sl = 0, sx = 0, sll = 0, slx = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < path.n_records(); ++i) {
        const double t = path.t(i);
        if (t < t_lo || t > t_hi || t <= 0.0) continue;
        const double L = std::log(t);
        const double x = path.x(i);
        sl += L;
        sx += x;
        sll += L * L;
        slx += L * x;
        ++n;
    }
    if (n < 3) throw std::invalid_argument("log_time_slope needs at least 3 records in the window");
    const double denom = n * sll - sl * sl;
    if (std::fabs(denom) < 1e-30) throw std::invalid_argument("log_time_slope: degenerate window");
    return (n * slx - sl * sx) / denom;
}

PathVerdict classify_path(const PathRecord& path, const Potential& potential, double epsilon) {
    PathVerdict v;
    const auto idx = classify_terminal(path, potential, epsilon);
    if (!idx) return v;
    v.critical_index = idx;
    const CriticalPoint& cp = potential.critical_points()[*idx];
    if (cp.kind != CriticalPoint::Kind::LocalMin) return v;  // stuck near an unstable point: undecided
    if (norm(cp.location) <= 1e-9) {
        v.label = TrichotomyLabel::ConvergedToMubarInf;
        const std::size_t last = path.n_records() - 1;
        v.mu_inf_estimate = path.mu(last);
    } else {
        v.label = TrichotomyLabel::DivergedLogRate;
        const double T = path.t(path.n_records() - 1);
        v.log_slope = log_time_slope(path, T / 10.0, T);
    }
    return v;
}

TrichotomyVerdict trichotomy(std::span<const PathRecord> paths, const Potential& potential,
                             double epsilon) {
    TrichotomyVerdict verdict;
    verdict.per_path.reserve(paths.size());
    std::size_t conv = 0, div = 0;
    for (const PathRecord& p : paths) {
        verdict.per_path.push_back(classify_path(p, potential, epsilon));
        switch (verdict.per_path.back().label) {
            case TrichotomyLabel::ConvergedToMubarInf: ++conv; break;
            case TrichotomyLabel::DivergedLogRate: ++div; break;
            case TrichotomyLabel::Undecided: break;
        }
    }
    const double n = static_cast<double>(paths.size());
    if (n > 0) {
        verdict.fraction_converged = conv / n;
        verdict.fraction_diverged = div / n;
        verdict.fraction_undecided = (n - conv - div) / n;
    }
    return verdict;
}

std::vector<double> ergodic_average(const PathRecord& path,
                                    const std::function<double(double)>& f) {
    const std::size_t n = path.n_records();
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    out[0] = f(path.x(0));
    double acc = 0.0;
    double prev = out[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double fi = f(path.x(i));
        acc += 0.5 * (prev + fi) * (path.t(i) - path.t(i - 1));
        prev = fi;
        out[i] = path.t(i) > 0.0 ? acc / path.t(i) : fi;
    }
    return out;
}

}  // namespace selfdiff
