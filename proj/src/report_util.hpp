#pragma once

// Internal helpers shared by the generic experiment runner and the canned
// experiment catalog: ensemble reduction with deterministic worker merging,
// CSV/manifest writers and small statistics utilities. Not installed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "selfdiff/diagnostics.hpp"
#include "selfdiff/experiment.hpp"

namespace selfdiff {
namespace detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct MomentGrid {
    std::vector<double> times;
    std::vector<double> sx, sxx, sy, syy, sm, smm;
    std::uint64_t n = 0;

    void add(const PathRecord& rec) {
        const std::size_t k = rec.n_records();
        if (times.empty()) {
            times = rec.times;
            sx.assign(k, 0.0);
            sxx.assign(k, 0.0);
            sy.assign(k, 0.0);
            syy.assign(k, 0.0);
            sm.assign(k, 0.0);
            smm.assign(k, 0.0);
        }
        if (k != times.size()) throw std::runtime_error("record grid mismatch in ensemble");
        for (std::size_t i = 0; i < k; ++i) {
            const double x = rec.x(i), y = rec.y(i), m = rec.mu(i);
            sx[i] += x;
            sxx[i] += x * x;
            sy[i] += y;
            syy[i] += y * y;
            sm[i] += m;
            smm[i] += m * m;
        }
        ++n;
    }
    void merge(const MomentGrid& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        if (o.times.size() != times.size()) throw std::runtime_error("record grid mismatch in merge");
        for (std::size_t i = 0; i < times.size(); ++i) {
            sx[i] += o.sx[i];
            sxx[i] += o.sxx[i];
            sy[i] += o.sy[i];
            syy[i] += o.syy[i];
            sm[i] += o.sm[i];
            smm[i] += o.smm[i];
        }
        n += o.n;
    }
    double mean(const std::vector<double>& s, std::size_t i) const {
        return s[i] / static_cast<double>(n);
    }
    double var(const std::vector<double>& s, const std::vector<double>& ss, std::size_t i) const {
        if (n < 2) return 0.0;
        const double m = mean(s, i);
        return std::max(0.0, (ss[i] - static_cast<double>(n) * m * m) / (static_cast<double>(n) - 1.0));
    }
};

struct Reduction {
    MomentGrid grid;
    EmpiricalMeasure occupation;
    std::uint64_t blowups = 0;
    std::uint64_t tamed_steps = 0;
    std::uint64_t total_steps = 0;
    std::uint64_t n_paths = 0;
};

struct ReduceOptions {
    bool moments = true;
    bool occupation = false;
    StateComponent which = StateComponent::Y;
    double burn_in = 0.5;
    bool center_per_path = false;
};

// Static stripes + index-addressed side effects: results do not depend on
// scheduling; merging worker partials in worker order keeps float sums
// reproducible for a fixed thread count.
inline Reduction reduce_ensemble(const SimConfig& cfg, int threads, const ReduceOptions& opt,
                          const std::function<void(const PathRecord&, std::size_t)>& extra) {
    const int n = cfg.n_paths;
    const int w = std::max(1, std::min(resolve_thread_count(threads), n));
    std::vector<Reduction> partials(static_cast<std::size_t>(w));

    auto work = [&](int worker) {
        Reduction& red = partials[worker];
        for (int i = worker; i < n; i += w) {
            const PathRecord rec = simulate_path(cfg, static_cast<std::uint64_t>(i));
            ++red.n_paths;
            red.tamed_steps += rec.tamed_steps;
            red.total_steps += rec.steps_taken;
            if (rec.blew_up) {
                ++red.blowups;
                continue;
            }
            if (opt.moments) red.grid.add(rec);
            if (opt.occupation) {
                if (opt.center_per_path) {
                    EmpiricalMeasure one;
                    add_occupation(one, rec, opt.which, opt.burn_in);
                    const double m = one.mean();
                    for (const auto& [v, wt] : one.samples()) red.occupation.add(v - m, wt);
                } else {
                    add_occupation(red.occupation, rec, opt.which, opt.burn_in);
                }
            }
            if (extra) extra(rec, static_cast<std::size_t>(i));
        }
    };

    if (w == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (int worker = 0; worker < w; ++worker) pool.emplace_back(work, worker);
        for (auto& th : pool) th.join();
    }

    Reduction total;
    for (Reduction& p : partials) {
        total.grid.merge(p.grid);
        total.occupation.merge(p.occupation);
        total.blowups += p.blowups;
        total.tamed_steps += p.tamed_steps;
        total.total_steps += p.total_steps;
        total.n_paths += p.n_paths;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Writers

inline void write_file(const std::string& path, const std::string& body, std::vector<std::string>& files) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    files.push_back(path);
}

inline void write_manifest(const std::string& dir, const ExperimentConfig& cfg, int threads,
                    ReportBundle& bundle) {
    std::ostringstream os;
    os << "# resolved experiment manifest (re-run with these values and the same\n";
    os << "# thread count to reproduce every CSV byte for byte)\n";
    for (const auto& [k, v] : cfg.resolved_entries()) os << k << " = " << v << "\n";
    os << "run.threads = " << threads << "\n";
    os << "run.stability_indicator = " << num(cfg.make_sim_config().stability_indicator()) << "\n";
    os << "run.report_format = " << cfg.report_version << "\n";
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    os << "run.timestamp_unix = "
       << std::chrono::duration_cast<std::chrono::seconds>(now).count() << "\n";
    write_file(dir + "/manifest.txt", os.str(), bundle.files);
}

inline void write_summary_csv(const std::string& dir, const MomentGrid& g, ReportBundle& bundle) {
    std::ostringstream os;
    os << "t,mean_X,var_X,mean_Y,var_Y,mean_mubar,var_mubar\n";
    for (std::size_t i = 0; i < g.times.size(); ++i) {
        os << num(g.times[i]) << ',' << num(g.mean(g.sx, i)) << ',' << num(g.var(g.sx, g.sxx, i))
           << ',' << num(g.mean(g.sy, i)) << ',' << num(g.var(g.sy, g.syy, i)) << ','
           << num(g.mean(g.sm, i)) << ',' << num(g.var(g.sm, g.smm, i)) << "\n";
    }
    write_file(dir + "/ensemble_summary.csv", os.str(), bundle.files);
}

inline void write_histogram(const std::string& dir, const EmpiricalMeasure& m, ReportBundle& bundle,
                     int bins = 200) {
    if (m.size() == 0) return;
    const auto& s = m.samples();
    double lo = s.front().first, hi = s.front().first;
    for (const auto& [v, w] : s) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi <= lo) hi = lo + 1.0;
    std::vector<double> edges(bins + 1);
    for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
    const std::vector<double> mass = m.histogram(edges);
    std::ostringstream os;
    for (int i = 0; i < bins; ++i)
        os << num(0.5 * (edges[i] + edges[i + 1])) << ' ' << num(mass[i]) << "\n";
    write_file(dir + "/occupation_hist.txt", os.str(), bundle.files);
}

inline void write_plot_script(const std::string& dir, ReportBundle& bundle) {
    std::ostringstream os;
    os << "# gnuplot script for the data files in this directory\n";
    os << "set datafile separator comma\n";
    os << "set key autotitle columnhead\n";
    bool have_summary = false, have_hist = false, have_oracle = false;
    for (const auto& f : bundle.files) {
        if (f.ends_with("ensemble_summary.csv")) have_summary = true;
        if (f.ends_with("occupation_hist.txt")) have_hist = true;
        if (f.ends_with("oracle_table.csv")) have_oracle = true;
    }
    if (have_summary) {
        os << "set term push\nset output\n";
        os << "plot 'ensemble_summary.csv' using 1:4 with lines title 'mean Y', \\\n";
        os << "     'ensemble_summary.csv' using 1:5 with lines title 'var Y'\n";
    }
    if (have_oracle)
        os << "replot 'oracle_table.csv' using 1:3 with lines title 'var Y (law)'\n";
    if (have_hist) {
        os << "# histogram is space separated\n";
        os << "# plot 'occupation_hist.txt' with boxes\n";
    }
    write_file(dir + "/plot.gp", os.str(), bundle.files);
}

inline void add_check(ReportBundle& b, const std::string& name, bool pass, const std::string& detail) {
    b.checks.push_back({name, pass, detail});
}

inline void finalize(ReportBundle& b, const ExperimentConfig& cfg, const std::string& dir) {
    const double frac =
        b.total_paths ? static_cast<double>(b.blown_paths) / static_cast<double>(b.total_paths) : 0.0;
    if (frac > 0.001)
        b.status = 3;
    else if (!b.all_passed())
        b.status = 1;
    else
        b.status = 0;
    std::ostringstream os;
    os << "experiment " << cfg.name << "\n";
    os << "paths " << b.total_paths << ", blown " << b.blown_paths << ", wall_s "
       << num(b.wall_seconds) << "\n";
    for (const auto& c : b.checks)
        os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
    os << "status " << b.status << "\n";
    b.summary = os.str();
    std::vector<std::string> dummy;
    write_file(dir + "/summary.txt", b.summary, dummy);
    b.files.push_back(dir + "/summary.txt");
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw std::runtime_error("median of empty set");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + mid);
        m = 0.5 * (m + lo);
    }
    return m;
}

inline std::size_t nearest_record(const PathRecord& rec, double t) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rec.n_records(); ++i) {
        const double d = std::fabs(rec.t(i) - t);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}


}  // namespace detail
}  // namespace selfdiff
