#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "selfdiff/empirical.hpp"
#include "selfdiff/simulator.hpp"

// Reductions from simulated paths to verdicts: occupation measures,
// terminal classification against the critical points of V, the
// fluctuation-envelope check around a stable minimum, the deviation from
// the time-changed gradient flow, the convergence/divergence trichotomy
// and pointwise ergodic averages.

namespace selfdiff {

enum class StateComponent { X, Y };

// Appends a path's time-occupation samples (coordinate `coord`) after
// dropping t < burn_in_fraction * horizon; each record is weighted by the
// time step to the next one.
void add_occupation(EmpiricalMeasure& measure, const PathRecord& path, StateComponent which,
                    double burn_in_fraction, int coord = 0);

EmpiricalMeasure occupation_measure(std::span<const PathRecord> paths, StateComponent which,
                                    double burn_in_fraction, int coord = 0);

// Max - min of the Y coordinates over the trailing `window_fraction` of the
// recorded horizon (the finite-path surrogate for "has converged").
double tail_oscillation(const PathRecord& path, double window_fraction = 0.1);

// Index into potential.critical_points() of the point the path settled at:
// nearest point within epsilon of terminal Y, tail oscillation below
// epsilon/2. epsilon must be less than half the minimal critical-point gap.
std::optional<std::size_t> classify_terminal(const PathRecord& path, const Potential& potential,
                                             double epsilon);

// Fraction of recorded times t in (T0, T] with
//   |Y_t - m| sqrt(g(t) / log G(t)) <= envelope_constant.
double lil_envelope_fraction(const PathRecord& path, double m, const GainSchedule& gain, double T0,
                             double envelope_constant = 3.0);

// sup over recorded h in [0, window] of |Y_{G^{-1}(base+h)} - phi_h(Y_{G^{-1}(base)})|,
// base and window in time-changed units. Throws if fewer than min_records
// records fall inside the window.
double apt_deviation(const PathRecord& path, const std::shared_ptr<const Potential>& potential,
                     const GainSchedule& gain, double base, double window, int min_records = 20);

enum class TrichotomyLabel { ConvergedToMubarInf, DivergedLogRate, Undecided };

struct PathVerdict {
    TrichotomyLabel label = TrichotomyLabel::Undecided;
    std::optional<std::size_t> critical_index;
    double mu_inf_estimate = 0.0;  // for converged paths
    double log_slope = 0.0;        // for diverged paths: X_t ~ slope * log t
};

struct TrichotomyVerdict {
    std::vector<PathVerdict> per_path;
    double fraction_converged = 0.0;
    double fraction_diverged = 0.0;
    double fraction_undecided = 0.0;
};

PathVerdict classify_path(const PathRecord& path, const Potential& potential, double epsilon);
TrichotomyVerdict trichotomy(std::span<const PathRecord> paths, const Potential& potential,
                             double epsilon);

// Least-squares slope of X (coordinate 0) against log t over recorded times
// t in [t_lo, t_hi].
double log_time_slope(const PathRecord& path, double t_lo, double t_hi);

// Running averages (1/t) int_0^t f(X_s) ds on the record grid (trapezoid),
// aligned with path.times; entry 0 is f(X_0).
std::vector<double> ergodic_average(const PathRecord& path,
                                    const std::function<double(double)>& f);

}  // namespace selfdiff
