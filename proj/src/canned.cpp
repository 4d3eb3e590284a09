#include <array>
#include <chrono>
#include <cstring>

#include "report_util.hpp"
#include "selfdiff/quadratic_oracle.hpp"
#include "selfdiff/quadrature.hpp"

// Canned experiments: each one reproduces, at desk scale, one claim about
// the dynamics (exact Gaussian law, ergodic limit, convergence regime,
// escape from unstable points, flow shadowing, trichotomy, determinism).
// Their thresholds are pinned here; the acceptance suite replays them.

namespace selfdiff {
namespace {

using detail::add_check;
using detail::finalize;
using detail::median_of;
using detail::nearest_record;
using detail::num;
using detail::reduce_ensemble;
using detail::ReduceOptions;
using detail::Reduction;
using detail::write_file;
using detail::write_histogram;
using detail::write_manifest;
using detail::write_plot_script;
using detail::write_summary_csv;

int used_threads(const ExperimentConfig& cfg, int threads) {
    return std::max(1, std::min(resolve_thread_count(threads), cfg.n_paths));
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

// --------------------------------------------------------------- criterion 1
// Simulated ensemble moments of Y_T and mu_bar_T against the closed-form law.
ReportBundle run_quadratic_exact_law(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    ReduceOptions opt;
    const Reduction red = reduce_ensemble(sim, w, opt, nullptr);
    bundle.blown_paths = red.blowups;
    const double wall = timer.seconds();

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_summary_csv(cfg.output_dir, red.grid, bundle);
    write_file(cfg.output_dir + "/oracle_table.csv", write_oracle_table(cfg), bundle.files);

    const QuadraticLaw law(cfg.potential_c, sim.gain, cfg.r, cfg.x0[0], cfg.mu_bar0[0]);
    const std::size_t last = red.grid.times.size() - 1;
    const double T = red.grid.times[last];
    const double n = static_cast<double>(red.grid.n);

    auto compare = [&](const char* tag, const std::vector<double>& s, const std::vector<double>& ss,
                       const GaussianMoments& lm) {
        const double mean = red.grid.mean(s, last);
        const double var = red.grid.var(s, ss, last);
        const double se_mean = std::sqrt(var / n);
        const double se_var = var * std::sqrt(2.0 / (n - 1.0));
        add_check(bundle, std::string("mean_") + tag, std::fabs(mean - lm.mean) <= 4.0 * se_mean,
                  "sim " + num(mean) + " law " + num(lm.mean) + " |diff| " +
                      num(std::fabs(mean - lm.mean)) + " <= 4se " + num(4.0 * se_mean));
        add_check(bundle, std::string("var_") + tag, std::fabs(var - lm.variance) <= 4.0 * se_var,
                  "sim " + num(var) + " law " + num(lm.variance) + " |diff| " +
                      num(std::fabs(var - lm.variance)) + " <= 4se " + num(4.0 * se_var));
    };
    compare("Y", red.grid.sy, red.grid.syy, law.law_of_Y(T));
    compare("mubar", red.grid.sm, red.grid.smm, law.law_of_mubar(T));

    const double tamed_frac =
        red.total_steps ? static_cast<double>(red.tamed_steps) / static_cast<double>(red.total_steps) : 0.0;
    add_check(bundle, "taming_inactive", tamed_frac < 0.01,
              "fraction of tamed steps " + num(tamed_frac));
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");
    const double budget = 120.0 * 8.0 / std::min(w, 8);
    add_check(bundle, "runtime", wall <= budget,
              num(wall) + " s on " + std::to_string(w) + " threads (budget " + num(budget) + " s)");

    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 2
// Long-run occupation of X, centered per path, against N(0, 1/(2 g c)).
ReportBundle run_quadratic_ergodic(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    ReduceOptions opt;
    opt.moments = false;
    opt.occupation = true;
    opt.which = StateComponent::X;
    opt.burn_in = cfg.burn_in;
    opt.center_per_path = true;
    const Reduction red = reduce_ensemble(sim, w, opt, nullptr);
    bundle.blown_paths = red.blowups;

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_histogram(cfg.output_dir, red.occupation, bundle);

    const QuadraticLaw law(cfg.potential_c, sim.gain, cfg.r, cfg.x0[0], cfg.mu_bar0[0]);
    const double limit_var = law.limit_measure().variance;
    const double occ_var = red.occupation.variance();
    add_check(bundle, "occupation_variance", std::fabs(occ_var - limit_var) <= 0.05 * limit_var,
              "pooled centered variance " + num(occ_var) + " vs " + num(limit_var) + " (5%)");
    const double ks =
        red.occupation.ks_distance([&](double v) { return normal_cdf(v, 0.0, limit_var); });
    add_check(bundle, "occupation_ks", ks < 0.02, "KS distance " + num(ks) + " < 0.02");
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    std::ostringstream cmp;
    cmp << "quantity,empirical,oracle\n";
    cmp << "centered_occupation_variance," << num(occ_var) << ',' << num(limit_var) << "\n";
    cmp << "ks_distance_vs_limit_law," << num(ks) << ",0\n";
    write_file(cfg.output_dir + "/oracle_compare.csv", cmp.str(), bundle.files);

    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 3
// Growing gain: terminal Y small, flat tail, mu_bar Cauchy along each path.
ReportBundle run_as_convergence(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    struct PerPath {
        double abs_terminal_y = 0.0;
        double tail_osc = 0.0;
        double mu_cauchy = 0.0;
    };
    std::vector<PerPath> pp(cfg.n_paths);
    ReduceOptions opt;
    const Reduction red = reduce_ensemble(sim, w, opt, [&](const PathRecord& rec, std::size_t i) {
        pp[i].abs_terminal_y = std::fabs(rec.terminal_Y[0]);
        pp[i].tail_osc = tail_oscillation(rec);
        const std::size_t mid = nearest_record(rec, 0.5 * cfg.horizon);
        pp[i].mu_cauchy = std::fabs(rec.mu(rec.n_records() - 1) - rec.mu(mid));
    });
    bundle.blown_paths = red.blowups;

    std::size_t ok_y = 0, ok_osc = 0, ok_mu = 0;
    for (const PerPath& p : pp) {
        if (p.abs_terminal_y < 0.05) ++ok_y;
        if (p.tail_osc < 0.02) ++ok_osc;
        if (p.mu_cauchy < 0.01) ++ok_mu;
    }
    const double n = static_cast<double>(cfg.n_paths);
    add_check(bundle, "terminal_Y_small", ok_y == static_cast<std::size_t>(cfg.n_paths),
              num(100.0 * ok_y / n) + "% of paths have |Y_T| < 0.05 (need 100%)");
    add_check(bundle, "tail_oscillation", ok_osc == static_cast<std::size_t>(cfg.n_paths),
              num(100.0 * ok_osc / n) + "% of paths have tail oscillation < 0.02 (need 100%)");
    add_check(bundle, "mu_bar_cauchy", static_cast<double>(ok_mu) >= 0.99 * n,
              num(100.0 * ok_mu / n) + "% of paths have |mu(T)-mu(T/2)| < 0.01 (need 99%)");
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_summary_csv(cfg.output_dir, red.grid, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 4
// Double well with growing gain: occupation of Y concentrates on the minima,
// avoids the maximum, and both minima attract a positive fraction of paths.
ReportBundle run_double_well_ergodic(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    std::vector<int> settled(cfg.n_paths, -1);
    const auto pot = sim.potential;
    ReduceOptions opt;
    opt.moments = false;
    opt.occupation = true;
    opt.which = StateComponent::Y;
    opt.burn_in = cfg.burn_in;
    const Reduction red = reduce_ensemble(sim, w, opt, [&](const PathRecord& rec, std::size_t i) {
        const auto idx = classify_terminal(rec, *pot, cfg.epsilon);
        settled[i] = idx ? static_cast<int>(*idx) : -1;
    });
    bundle.blown_paths = red.blowups;

    const double mass_minima =
        red.occupation.mass_within(-1.0, 0.1) + red.occupation.mass_within(1.0, 0.1);
    const double mass_max = red.occupation.mass_within(0.0, 0.1);
    add_check(bundle, "mass_on_minima", mass_minima >= 0.98,
              num(100.0 * mass_minima) + "% of occupation within 0.1 of {-1,+1} (need 98%)");
    add_check(bundle, "mass_near_maximum", mass_max <= 0.01,
              num(100.0 * mass_max) + "% of occupation within 0.1 of 0 (allow 1%)");

    // Critical points are sorted by location: [0] = -1, [1] = 0, [2] = +1.
    std::size_t left = 0, right = 0;
    for (int s : settled) {
        if (s == 0) ++left;
        if (s == 2) ++right;
    }
    const double n = static_cast<double>(cfg.n_paths);
    add_check(bundle, "left_minimum_attracts", static_cast<double>(left) >= 0.10 * n,
              num(100.0 * left / n) + "% of paths settle at -1 (need 10%)");
    add_check(bundle, "right_minimum_attracts", static_cast<double>(right) >= 0.10 * n,
              num(100.0 * right / n) + "% of paths settle at +1 (need 10%)");
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_histogram(cfg.output_dir, red.occupation, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 5
// Divergent paths follow X_t ~ m log t with the slope of the selected
// minimum; with the asymmetric potential both outcomes occur.
ReportBundle run_xt_over_logt(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    std::vector<PathVerdict> verdicts(cfg.n_paths);
    const auto pot = sim.potential;
    ReduceOptions opt;
    opt.moments = false;
    const Reduction red = reduce_ensemble(sim, w, opt, [&](const PathRecord& rec, std::size_t i) {
        verdicts[i] = classify_path(rec, *pot, cfg.epsilon);
    });
    bundle.blown_paths = red.blowups;

    std::size_t decided = 0, slope_ok = 0;
    for (const PathVerdict& v : verdicts) {
        if (v.label != TrichotomyLabel::DivergedLogRate) continue;
        ++decided;
        const double m = pot->critical_points()[*v.critical_index].location[0];
        if (std::fabs(v.log_slope - m) <= 0.15 * std::fabs(m)) ++slope_ok;
    }
    const double n = static_cast<double>(cfg.n_paths);
    add_check(bundle, "decided_paths", static_cast<double>(decided) >= 0.8 * n,
              num(100.0 * decided / n) + "% of paths classified to a minimum");
    add_check(bundle, "log_rate_slopes",
              decided > 0 && static_cast<double>(slope_ok) >= 0.95 * static_cast<double>(decided),
              num(decided ? 100.0 * slope_ok / decided : 0.0) +
                  "% of decided paths have slope within 15% of their minimum (need 95%)");
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    std::ostringstream os;
    os << "path,label,minimum,log_slope\n";
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
        const PathVerdict& v = verdicts[i];
        const double m = v.critical_index ? pot->critical_points()[*v.critical_index].location[0] : 0.0;
        os << i << ',' << static_cast<int>(v.label) << ',' << num(m) << ',' << num(v.log_slope)
           << "\n";
    }
    write_file(cfg.output_dir + "/trichotomy.csv", os.str(), bundle.files);
    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

ReportBundle run_asymmetric_trichotomy(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    std::vector<PathVerdict> verdicts(cfg.n_paths);
    const auto pot = sim.potential;
    ReduceOptions opt;
    opt.moments = false;
    const Reduction red = reduce_ensemble(sim, w, opt, [&](const PathRecord& rec, std::size_t i) {
        verdicts[i] = classify_path(rec, *pot, cfg.epsilon);
    });
    bundle.blown_paths = red.blowups;

    std::size_t conv = 0, div = 0;
    for (const PathVerdict& v : verdicts) {
        if (v.label == TrichotomyLabel::ConvergedToMubarInf) ++conv;
        if (v.label == TrichotomyLabel::DivergedLogRate) ++div;
    }
    const double n = static_cast<double>(cfg.n_paths);
    add_check(bundle, "convergence_occurs", static_cast<double>(conv) >= 0.05 * n,
              num(100.0 * conv / n) + "% of paths converge (need 5%)");
    add_check(bundle, "divergence_occurs", static_cast<double>(div) >= 0.05 * n,
              num(100.0 * div / n) + "% of paths diverge at log rate (need 5%)");
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 6
// Fluctuation envelope sqrt(log G / g) around the minimum, exact sampler.
ReportBundle run_lil_envelope(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    (void)threads;
    const SimConfig sim = cfg.make_sim_config();
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    std::vector<double> grid{0.0};
    for (int i = 0; i <= 40; ++i) grid.push_back(0.25 * std::pow(10.0 / 0.25, i / 40.0));
    for (int i = 1; i <= 400; ++i)
        grid.push_back(10.0 * std::pow(cfg.horizon / 10.0, i / 400.0));
    const ExactQuadraticSampler sampler(sim, grid);

    std::vector<double> fracs(cfg.n_paths);
    for (int i = 0; i < cfg.n_paths; ++i) {
        const PathRecord rec = sampler.sample(static_cast<std::uint64_t>(i));
        fracs[i] = lil_envelope_fraction(rec, cfg.lil_m, *sim.gain, cfg.lil_t0);
    }
    const double med = median_of(fracs);
    add_check(bundle, "envelope_median", med >= 0.99,
              "median in-envelope fraction " + num(med) + " (need 0.99)");

    std::ostringstream os;
    os << "path,envelope_fraction\n";
    for (std::size_t i = 0; i < fracs.size(); ++i) os << i << ',' << num(fracs[i]) << "\n";
    write_file(cfg.output_dir + "/lil_fractions.csv", os.str(), bundle.files);
    write_manifest(cfg.output_dir, cfg, 1, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 7
// Paths started exactly at the local maximum leave its neighborhood.
ReportBundle run_unstable_escape(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    struct Escape {
        bool exited = false;
        double exit_time = -1.0;
    };
    std::vector<Escape> esc(cfg.n_paths);
    ReduceOptions opt;
    opt.moments = false;
    const Reduction red = reduce_ensemble(sim, w, opt, [&](const PathRecord& rec, std::size_t i) {
        for (std::size_t k = 0; k < rec.n_records(); ++k) {
            if (std::fabs(rec.y(k)) > cfg.epsilon) {
                esc[i].exited = true;
                esc[i].exit_time = rec.t(k);
                break;
            }
        }
    });
    bundle.blown_paths = red.blowups;

    std::size_t exited = 0;
    std::vector<double> times;
    for (const Escape& e : esc)
        if (e.exited) {
            ++exited;
            times.push_back(e.exit_time);
        }
    add_check(bundle, "all_paths_escape", exited == static_cast<std::size_t>(cfg.n_paths),
              std::to_string(exited) + " of " + std::to_string(cfg.n_paths) + " paths left |Y| <= " +
                  num(cfg.epsilon) + " before t = " + num(cfg.horizon) +
                  (times.empty() ? "" : " (median exit " + num(median_of(times)) + ")"));
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 8
// Deviation from the time-changed gradient flow shrinks along the path.
ReportBundle run_apt_flow(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    const std::size_t nb = cfg.apt_bases.size();
    std::vector<std::vector<double>> devs(nb, std::vector<double>(cfg.n_paths, 0.0));
    const auto pot = sim.potential;
    const auto gain = sim.gain;
    ReduceOptions opt;
    opt.moments = false;
    const Reduction red = reduce_ensemble(sim, w, opt, [&](const PathRecord& rec, std::size_t i) {
        for (std::size_t b = 0; b < nb; ++b)
            devs[b][i] = apt_deviation(rec, pot, *gain, cfg.apt_bases[b], cfg.apt_window);
    });
    bundle.blown_paths = red.blowups;

    std::vector<double> medians(nb);
    std::ostringstream os;
    os << "base,median_deviation\n";
    for (std::size_t b = 0; b < nb; ++b) {
        medians[b] = median_of(devs[b]);
        os << num(cfg.apt_bases[b]) << ',' << num(medians[b]) << "\n";
    }
    bool decreasing = true;
    for (std::size_t b = 1; b < nb; ++b)
        if (!(medians[b] < medians[b - 1])) decreasing = false;
    std::string detail = "medians";
    for (double m : medians) detail += " " + num(m);
    add_check(bundle, "deviation_decreasing", decreasing, detail);
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    write_file(cfg.output_dir + "/apt.csv", os.str(), bundle.files);
    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// --------------------------------------------------------------- criterion 9
// Constant gain: the running max keeps growing and the occupation measure
// stays spread out.
ReportBundle run_diffusive_regime(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const SimConfig sim = cfg.make_sim_config();
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    const std::array<double, 3> horizons{100.0, 1000.0, 10000.0};
    struct Maxes {
        std::array<double, 3> running_max{-1e300, -1e300, -1e300};
    };
    std::vector<Maxes> mx(cfg.n_paths);
    ReduceOptions opt;
    opt.moments = false;
    opt.occupation = true;
    opt.which = StateComponent::X;
    opt.burn_in = cfg.burn_in;
    opt.center_per_path = true;
    const Reduction red = reduce_ensemble(sim, w, opt, [&](const PathRecord& rec, std::size_t i) {
        for (std::size_t k = 0; k < rec.n_records(); ++k) {
            const double t = rec.t(k), x = rec.x(k);
            for (std::size_t h = 0; h < horizons.size(); ++h)
                if (t <= horizons[h] && x > mx[i].running_max[h]) mx[i].running_max[h] = x;
        }
    });
    bundle.blown_paths = red.blowups;

    std::array<double, 3> med{};
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        std::vector<double> v(cfg.n_paths);
        for (int i = 0; i < cfg.n_paths; ++i) v[i] = mx[i].running_max[h];
        med[h] = median_of(v);
    }
    add_check(bundle, "running_max_grows", med[0] < med[1] && med[1] < med[2],
              "median running max " + num(med[0]) + " -> " + num(med[1]) + " -> " + num(med[2]));
    const double occ_var = red.occupation.variance();
    add_check(bundle, "occupation_spread", occ_var >= 0.25,
              "pooled centered occupation variance " + num(occ_var) + " (need 0.25)");
    add_check(bundle, "blow_ups", red.blowups == 0, std::to_string(red.blowups) + " paths blew up");

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_histogram(cfg.output_dir, red.occupation, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// -------------------------------------------------------------- criterion 10
// Bit-reproducibility, zero blow-ups, and first-order weak convergence of
// the tamed scheme measured with common random numbers.
ReportBundle run_determinism(const ExperimentConfig& cfg, int threads) {
    Timer timer;
    const int w = used_threads(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    ReportBundle bundle;
    bundle.total_paths = cfg.n_paths;

    // (a) identical seed -> byte-identical CSV bodies.
    ExperimentConfig small = cfg;
    small.diagnostics = {"occupation"};
    small.occupation_of = "X";
    small.burn_in = 0.5;
    auto read_all = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    small.output_dir = cfg.output_dir + "/run_a";
    ReportBundle run_a = run_experiment(small, w);
    small.output_dir = cfg.output_dir + "/run_b";
    ReportBundle run_b = run_experiment(small, w);
    const bool same_summary = read_all(cfg.output_dir + "/run_a/ensemble_summary.csv") ==
                              read_all(cfg.output_dir + "/run_b/ensemble_summary.csv");
    const bool same_hist = read_all(cfg.output_dir + "/run_a/occupation_hist.txt") ==
                           read_all(cfg.output_dir + "/run_b/occupation_hist.txt");
    add_check(bundle, "byte_identical_rerun", same_summary && same_hist,
              std::string("ensemble_summary.csv ") + (same_summary ? "identical" : "DIFFERS") +
                  ", occupation_hist.txt " + (same_hist ? "identical" : "DIFFERS"));
    bundle.blown_paths = run_a.blown_paths + run_b.blown_paths;

    // (b) weak order: Var(Y_T) error against the exact quadratic path as dt
    // halves. All resolutions consume the same Brownian increments, and the
    // exact path is realized on those increments too (its per-interval
    // martingale weights reproduce the law variance exactly), so the shared
    // Monte Carlo fluctuation cancels out of the error estimates.
    const auto pot = std::make_shared<Potential>(Potential::quadratic(1.0, 1));
    const auto gain = GainSchedule::constant(1.0);
    const double T = 5.0, r = 1.0;
    // dt_base levels 0.01, 0.005, 0.0025; with g = 1 the adaptive rule makes
    // the actual steps 0.005, 0.0025, 0.00125, exact halvings of each other.
    const double dt_fine = 0.00125;
    const std::uint64_t n_fine = static_cast<std::uint64_t>(std::llround(T / dt_fine));
    const int n_mc = 100000;

    // Exact weights: Y_T = e^{-G(T)} r Y0/(r+T) + sum_j w_j dB_j with
    // w_j^2 dt = int over the j-th fine interval of ((r+s)/(r+T))^2 e^{-2(G(T)-G(s))}.
    std::vector<double> w_exact(n_fine);
    for (std::uint64_t j = 0; j < n_fine; ++j) {
        const double a = dt_fine * static_cast<double>(j);
        const double b = dt_fine * static_cast<double>(j + 1);
        const double v = integrate(
            [&](double s) {
                const double q = (r + s) / (r + T);
                return q * q * std::exp(-2.0 * (T - s));
            },
            a, b, 1e-10, 1e-18);
        w_exact[j] = std::sqrt(std::max(0.0, v) / dt_fine);
    }
    const double exact_det = std::exp(-T) * r * 1.0 / (r + T);

    std::array<double, 4> sum{}, sumsq{};  // three Euler levels + exact path
    std::vector<std::array<double, 4>> terminal(n_mc);
    const int crn_threads = std::max(1, std::min(resolve_thread_count(threads), n_mc));
    {
        std::vector<std::thread> pool;
        for (int worker = 0; worker < crn_threads; ++worker) {
            pool.emplace_back([&, worker]() {
                Vec y(1), mu(1);
                for (int i = worker; i < n_mc; i += crn_threads) {
                    PathRng rng(cfg.seed + 1, static_cast<std::uint64_t>(i));
                    std::array<double, 3> ys{1.0, 1.0, 1.0};  // Y0 = x0 - mu0 = 1
                    std::array<double, 3> ms{0.0, 0.0, 0.0};
                    std::array<double, 3> ts{0.0, 0.0, 0.0};
                    std::array<double, 3> acc{0.0, 0.0, 0.0};
                    const std::array<std::uint64_t, 3> stride{4, 2, 1};
                    double y_exact = exact_det;
                    for (std::uint64_t s = 1; s <= n_fine; ++s) {
                        const double dB = std::sqrt(dt_fine) * rng.normal();
                        y_exact += w_exact[s - 1] * dB;
                        for (int l = 0; l < 3; ++l) {
                            acc[l] += dB;
                            if (s % stride[l] == 0) {
                                const double dt = dt_fine * static_cast<double>(stride[l]);
                                y[0] = ys[l];
                                mu[0] = ms[l];
                                const double noise[1] = {acc[l]};
                                ts[l] = step_y(*pot, *gain, r, ts[l], dt, noise, y, mu);
                                ys[l] = y[0];
                                ms[l] = mu[0];
                                acc[l] = 0.0;
                            }
                        }
                    }
                    terminal[i] = {ys[0], ys[1], ys[2], y_exact};
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (int i = 0; i < n_mc; ++i)
        for (int l = 0; l < 4; ++l) {
            sum[l] += terminal[i][l];
            sumsq[l] += terminal[i][l] * terminal[i][l];
        }

    std::array<double, 4> var{};
    for (int l = 0; l < 4; ++l) {
        const double mean = sum[l] / n_mc;
        var[l] = (sumsq[l] - n_mc * mean * mean) / (n_mc - 1.0);
    }
    const QuadraticLaw law(1.0, gain, r, 1.0, 0.0);
    const double law_var = law.law_of_Y(T).variance;
    const double se_var = var[3] * std::sqrt(2.0 / (n_mc - 1.0));
    add_check(bundle, "exact_path_matches_law", std::fabs(var[3] - law_var) <= 4.0 * se_var,
              "exact-path sample variance " + num(var[3]) + " vs law " + num(law_var));

    std::array<double, 3> err{};
    for (int l = 0; l < 3; ++l) err[l] = std::fabs(var[l] - var[3]);
    const double ratio01 = err[0] / err[1];
    const double ratio12 = err[1] / err[2];
    add_check(bundle, "weak_order_ratio",
              ratio01 >= 1.5 && ratio01 <= 3.0 && ratio12 >= 1.5 && ratio12 <= 3.0,
              "errors " + num(err[0]) + " -> " + num(err[1]) + " -> " + num(err[2]) +
                  ", ratios " + num(ratio01) + ", " + num(ratio12) + " (need [1.5, 3])");
    add_check(bundle, "blow_ups", bundle.blown_paths == 0,
              std::to_string(bundle.blown_paths) + " paths blew up across the reruns");

    write_manifest(cfg.output_dir, cfg, w, bundle);
    write_plot_script(cfg.output_dir, bundle);
    bundle.wall_seconds = timer.seconds();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

// ---------------------------------------------------------------------------

const std::vector<CannedExperiment>& catalog() {
    static const std::vector<CannedExperiment> entries = {
        {"quadratic_exact_law",
         "simulated moments of Y_T and mu_bar_T match the closed-form Gaussian law",
         &run_quadratic_exact_law,
         "experiment.name = quadratic_exact_law\n"
         "potential.name = quadratic\npotential.c = 1\n"
         "gain.family = constant\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 1\nsim.mu_bar0 = 0\n"
         "sim.horizon = 5\nsim.dt_base = 0.005\nsim.decimation = 100\n"
         "sim.seed = 20240601\nsim.n_paths = 10000\n"
         "output.dir = out/quadratic_exact_law\n"},
        {"quadratic_ergodic",
         "occupation measure of X converges to the Gaussian limit N(center, 1/(2 g c))",
         &run_quadratic_ergodic,
         "experiment.name = quadratic_ergodic\n"
         "potential.name = quadratic\npotential.c = 1\n"
         "gain.family = constant\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 1\nsim.mu_bar0 = 0\n"
         "sim.horizon = 200\nsim.dt_base = 0.005\nsim.decimation = 400\n"
         "sim.seed = 20240602\nsim.n_paths = 10000\n"
         "diagnostics.burn_in = 0.5\n"
         "output.dir = out/quadratic_ergodic\n"},
        {"as_convergence",
         "gain growing linearly: Y -> 0 along each path and mu_bar is Cauchy",
         &run_as_convergence,
         "experiment.name = as_convergence\n"
         "potential.name = quadratic\npotential.c = 1\n"
         "gain.family = power_log\ngain.alpha = 1\ngain.beta = 0\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 1\nsim.mu_bar0 = 0\n"
         "sim.horizon = 1000\nsim.dt_base = 0.1\nsim.decimation = 4000\n"
         "sim.seed = 20240603\nsim.n_paths = 1000\n"
         "output.dir = out/as_convergence\n"},
        {"double_well_ergodic",
         "double well: occupation of Y concentrates on the minima, not the maximum",
         &run_double_well_ergodic,
         "experiment.name = double_well_ergodic\n"
         "potential.name = double_well\n"
         "gain.family = power_log\ngain.alpha = 1\ngain.beta = 0\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 0\nsim.mu_bar0 = 0\n"
         "sim.horizon = 1000\nsim.dt_base = 0.3\nsim.decimation = 5000\n"
         "sim.seed = 20240604\nsim.n_paths = 10000\n"
         "diagnostics.burn_in = 0.5\ndiagnostics.epsilon = 0.25\n"
         "output.dir = out/double_well_ergodic\n"},
        {"xt_over_logt",
         "paths that select a nonzero minimum m diverge like X_t ~ m log t",
         &run_xt_over_logt,
         "experiment.name = xt_over_logt\n"
         "potential.name = double_well\n"
         "gain.family = power_log\ngain.alpha = 1\ngain.beta = 0\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 0\nsim.mu_bar0 = 0\n"
         "sim.horizon = 10000\nsim.dt_base = 0.5\nsim.decimation = 20000\n"
         "sim.seed = 20240605\nsim.n_paths = 200\n"
         "diagnostics.epsilon = 0.2\n"
         "output.dir = out/xt_over_logt\n"},
        {"asymmetric_trichotomy",
         "asymmetric wells at 0 and 2: both convergence and log-rate divergence occur",
         &run_asymmetric_trichotomy,
         "experiment.name = asymmetric_trichotomy\n"
         "potential.name = asymmetric_wells\n"
         "gain.family = power_log\ngain.alpha = 1\ngain.beta = 0\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 1\nsim.mu_bar0 = 0\n"
         "sim.horizon = 10000\nsim.dt_base = 0.5\nsim.decimation = 20000\n"
         "sim.seed = 20240606\nsim.n_paths = 150\n"
         "diagnostics.epsilon = 0.2\n"
         "output.dir = out/asymmetric_trichotomy\n"},
        {"lil_envelope",
         "fluctuations of Y stay inside the sqrt(log G / g) envelope (exact sampler)",
         &run_lil_envelope,
         "experiment.name = lil_envelope\n"
         "potential.name = quadratic\npotential.c = 1\n"
         "gain.family = power_log\ngain.alpha = 1\ngain.beta = 0\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 1\nsim.mu_bar0 = 0\n"
         "sim.horizon = 1000\nsim.dt_base = 0.1\nsim.decimation = 100\n"
         "sim.seed = 20240607\nsim.n_paths = 1000\n"
         "diagnostics.lil_t0 = 10\ndiagnostics.lil_m = 0\n"
         "output.dir = out/lil_envelope\n"},
        {"unstable_escape",
         "paths started at the local maximum leave its 0.2-neighborhood",
         &run_unstable_escape,
         "experiment.name = unstable_escape\n"
         "potential.name = double_well\n"
         "gain.family = power_log\ngain.alpha = 1\ngain.beta = 0\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 0\nsim.mu_bar0 = 0\n"
         "sim.horizon = 100\nsim.dt_base = 0.25\nsim.decimation = 1\n"
         "sim.seed = 20240608\nsim.n_paths = 1000\n"
         "diagnostics.epsilon = 0.2\n"
         "output.dir = out/unstable_escape\n"},
        {"apt_flow",
         "time-changed paths shadow the gradient flow of -grad V over unit windows",
         &run_apt_flow,
         "experiment.name = apt_flow\n"
         "potential.name = double_well\n"
         "gain.family = power_log\ngain.alpha = 1\ngain.beta = 0\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 0\nsim.mu_bar0 = 0\n"
         "sim.horizon = 12.5\nsim.dt_base = 0.02\nsim.decimation = 1\n"
         "sim.seed = 20240609\nsim.n_paths = 400\n"
         "diagnostics.apt_bases = 10,20,40,80\ndiagnostics.apt_window = 1\n"
         "output.dir = out/apt_flow\n"},
        {"diffusive_regime",
         "constant gain: running max of X keeps growing, occupation stays diffuse",
         &run_diffusive_regime,
         "experiment.name = diffusive_regime\n"
         "potential.name = quadratic\npotential.c = 1\n"
         "gain.family = constant\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 0\nsim.mu_bar0 = 0\n"
         "sim.horizon = 10000\nsim.dt_base = 0.02\nsim.decimation = 50\n"
         "sim.seed = 20240610\nsim.n_paths = 100\n"
         "diagnostics.burn_in = 0.5\n"
         "output.dir = out/diffusive_regime\n"},
        {"determinism",
         "same seed gives byte-identical outputs; dt-halving error ratio is first order",
         &run_determinism,
         "experiment.name = determinism\n"
         "potential.name = quadratic\npotential.c = 1\n"
         "gain.family = constant\ngain.g0 = 1\n"
         "sim.r = 1\nsim.x0 = 1\nsim.mu_bar0 = 0\n"
         "sim.horizon = 5\nsim.dt_base = 0.005\nsim.decimation = 100\n"
         "sim.seed = 20240611\nsim.n_paths = 200\n"
         "output.dir = out/determinism\n"},
    };
    return entries;
}

}  // namespace

const std::vector<CannedExperiment>& canned_experiments() { return catalog(); }

const CannedExperiment* find_canned(const std::string& name) {
    for (const auto& e : canned_experiments())
        if (e.name == name) return &e;
    return nullptr;
}

ReportBundle run_canned(const std::string& name, const std::string& output_dir, int threads) {
    const CannedExperiment* entry = find_canned(name);
    if (!entry) throw std::runtime_error("unknown canned experiment '" + name + "'");
    ExperimentConfig cfg = parse_config_text(entry->config_text);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    return entry->runner(cfg, threads);
}

}  // namespace selfdiff
