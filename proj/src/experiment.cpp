#include "selfdiff/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "selfdiff/diagnostics.hpp"
#include "selfdiff/quadratic_oracle.hpp"
#include "report_util.hpp"

namespace selfdiff {

using detail::add_check;
using detail::finalize;
using detail::median_of;
using detail::num;
using detail::reduce_ensemble;
using detail::ReduceOptions;
using detail::Reduction;
using detail::write_file;
using detail::write_histogram;
using detail::write_manifest;
using detail::write_plot_script;
using detail::write_summary_csv;

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_list(const std::string& v, int line) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(line, "bad number '" + item + "'");
        }
    }
    return out;
}

double parse_num(const std::string& v, int line) {
    const auto list = parse_list(v, line);
    if (list.size() != 1) throw ConfigError(line, "expected a single number, got '" + v + "'");
    return list[0];
}

std::vector<std::string> parse_names(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    cfg.diagnostics.clear();
    bool saw_gain_family = false, saw_potential = false;

    std::stringstream ss(text);
    std::string raw;
    int line = 0;
    while (std::getline(ss, raw)) {
        ++line;
        std::string s = raw;
        const std::size_t hash = s.find('#');
        if (hash != std::string::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "expected key=value, got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty() || val.empty()) throw ConfigError(line, "empty key or value");

        if (key == "experiment.name") cfg.name = val;
        else if (key == "potential.name") { cfg.potential_name = val; saw_potential = true; }
        else if (key == "potential.c") cfg.potential_c = parse_num(val, line);
        else if (key == "potential.dimension") cfg.dimension = static_cast<int>(parse_num(val, line));
        else if (key == "potential.coefficients") cfg.coefficients = parse_list(val, line);
        else if (key == "potential.starts") cfg.newton_starts = parse_list(val, line);
        else if (key == "gain.family") { cfg.gain_family = val; saw_gain_family = true; }
        else if (key == "gain.a") cfg.gain_a = parse_num(val, line);
        else if (key == "gain.alpha") cfg.gain_alpha = parse_num(val, line);
        else if (key == "gain.beta") cfg.gain_beta = parse_num(val, line);
        else if (key == "gain.g0") cfg.gain_g0 = parse_num(val, line);
        else if (key == "sim.r") cfg.r = parse_num(val, line);
        else if (key == "sim.x0") cfg.x0 = parse_list(val, line);
        else if (key == "sim.mu_bar0") cfg.mu_bar0 = parse_list(val, line);
        else if (key == "sim.horizon") cfg.horizon = parse_num(val, line);
        else if (key == "sim.dt_base") cfg.dt_base = parse_num(val, line);
        else if (key == "sim.decimation") cfg.decimation = static_cast<int>(parse_num(val, line));
        else if (key == "sim.seed") cfg.seed = static_cast<std::uint64_t>(parse_num(val, line));
        else if (key == "sim.n_paths") cfg.n_paths = static_cast<int>(parse_num(val, line));
        else if (key == "diagnostics.run") cfg.diagnostics = parse_names(val);
        else if (key == "diagnostics.burn_in") cfg.burn_in = parse_num(val, line);
        else if (key == "diagnostics.epsilon") cfg.epsilon = parse_num(val, line);
        else if (key == "diagnostics.lil_t0") cfg.lil_t0 = parse_num(val, line);
        else if (key == "diagnostics.lil_m") cfg.lil_m = parse_num(val, line);
        else if (key == "diagnostics.apt_bases") cfg.apt_bases = parse_list(val, line);
        else if (key == "diagnostics.apt_window") cfg.apt_window = parse_num(val, line);
        else if (key == "diagnostics.occupation_of") cfg.occupation_of = val;
        else if (key == "output.dir") cfg.output_dir = val;
        else if (key == "report.version") cfg.report_version = static_cast<int>(parse_num(val, line));
        else throw ConfigError(line, "unknown key '" + key + "'");
    }
    if (!saw_gain_family) throw ConfigError(0, "missing required key 'gain.family'");
    if (!saw_potential) throw ConfigError(0, "missing required key 'potential.name'");
    for (const auto& d : cfg.diagnostics)
        if (d != "occupation" && d != "trichotomy" && d != "lil" && d != "apt" && d != "oracle_compare")
            throw ConfigError(0, "unknown diagnostic '" + d + "'");
    if (cfg.occupation_of != "X" && cfg.occupation_of != "Y")
        throw ConfigError(0, "diagnostics.occupation_of must be X or Y");
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::shared_ptr<const Potential> ExperimentConfig::make_potential() const {
    if (potential_name == "quadratic")
        return std::make_shared<Potential>(Potential::quadratic(potential_c, dimension));
    if (potential_name == "double_well") return std::make_shared<Potential>(Potential::double_well());
    if (potential_name == "asymmetric_wells")
        return std::make_shared<Potential>(Potential::asymmetric_wells());
    if (potential_name == "polynomial") {
        std::vector<double> starts = newton_starts;
        if (starts.empty())
            for (int k = -8; k <= 8; ++k) starts.push_back(0.5 * k);
        return std::make_shared<Potential>(Potential::polynomial(coefficients, starts));
    }
    throw ConfigError(0, "unknown potential '" + potential_name + "'");
}

std::shared_ptr<const GainSchedule> ExperimentConfig::make_gain() const {
    if (gain_family == "constant") return GainSchedule::constant(gain_g0);
    if (gain_family == "log_growth") return GainSchedule::log_growth(gain_a);
    if (gain_family == "power_log") return GainSchedule::power_log(gain_alpha, gain_beta, gain_g0);
    throw ConfigError(0, "unknown gain family '" + gain_family + "'");
}

SimConfig ExperimentConfig::make_sim_config() const {
    SimConfig sim;
    sim.potential = make_potential();
    sim.gain = make_gain();
    sim.r = r;
    sim.x0 = x0;
    sim.mu_bar0 = mu_bar0;
    sim.horizon = horizon;
    sim.dt_base = dt_base;
    sim.decimation = decimation;
    sim.seed = seed;
    sim.n_paths = n_paths;
    sim.validate();
    return sim;
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::resolved_entries() const {
    std::vector<std::pair<std::string, std::string>> e;
    auto list_str = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + num(v[i]);
        return s;
    };
    e.emplace_back("experiment.name", name);
    e.emplace_back("potential.name", potential_name);
    if (potential_name == "quadratic") {
        e.emplace_back("potential.c", num(potential_c));
        e.emplace_back("potential.dimension", std::to_string(dimension));
    }
    if (potential_name == "polynomial") {
        e.emplace_back("potential.coefficients", list_str(coefficients));
        e.emplace_back("potential.starts", list_str(newton_starts));
    }
    e.emplace_back("gain.family", gain_family);
    if (gain_family == "log_growth") e.emplace_back("gain.a", num(gain_a));
    if (gain_family == "power_log") {
        e.emplace_back("gain.alpha", num(gain_alpha));
        e.emplace_back("gain.beta", num(gain_beta));
    }
    if (gain_family != "log_growth") e.emplace_back("gain.g0", num(gain_g0));
    e.emplace_back("sim.r", num(r));
    e.emplace_back("sim.x0", list_str(x0));
    e.emplace_back("sim.mu_bar0", list_str(mu_bar0));
    e.emplace_back("sim.horizon", num(horizon));
    e.emplace_back("sim.dt_base", num(dt_base));
    e.emplace_back("sim.decimation", std::to_string(decimation));
    e.emplace_back("sim.seed", std::to_string(seed));
    e.emplace_back("sim.n_paths", std::to_string(n_paths));
    if (!diagnostics.empty()) {
        std::string s;
        for (std::size_t i = 0; i < diagnostics.size(); ++i) s += (i ? "," : "") + diagnostics[i];
        e.emplace_back("diagnostics.run", s);
        e.emplace_back("diagnostics.burn_in", num(burn_in));
        e.emplace_back("diagnostics.epsilon", num(epsilon));
        e.emplace_back("diagnostics.occupation_of", occupation_of);
    }
    e.emplace_back("output.dir", output_dir);
    e.emplace_back("report.version", std::to_string(report_version));
    return e;
}

std::string path_record_csv(const PathRecord& rec) {
    std::ostringstream os;
    os << 't';
    for (int k = 1; k <= rec.dimension; ++k) os << ",X_" << k;
    for (int k = 1; k <= rec.dimension; ++k) os << ",Y_" << k;
    for (int k = 1; k <= rec.dimension; ++k) os << ",mubar_" << k;
    os << "\n";
    for (std::size_t i = 0; i < rec.n_records(); ++i) {
        os << num(rec.t(i));
        for (int k = 0; k < rec.dimension; ++k) os << ',' << num(rec.x(i, k));
        for (int k = 0; k < rec.dimension; ++k) os << ',' << num(rec.y(i, k));
        for (int k = 0; k < rec.dimension; ++k) os << ',' << num(rec.mu(i, k));
        os << "\n";
    }
    return os.str();
}

std::string write_oracle_table(const ExperimentConfig& cfg) {
    if (cfg.potential_name != "quadratic")
        throw std::runtime_error("oracle tables require the quadratic potential");
    const QuadraticLaw law(cfg.potential_c, cfg.make_gain(), cfg.r, cfg.x0.at(0), cfg.mu_bar0.at(0));
    std::ostringstream os;
    os << "t,mean_Y,var_Y,mean_mubar,var_mubar\n";
    const int n_pts = 80;
    for (int i = 0; i <= n_pts; ++i) {
        const double t = cfg.horizon * i / n_pts;
        const GaussianMoments y = law.law_of_Y(t);
        const GaussianMoments m = law.law_of_mubar(t);
        os << num(t) << ',' << num(y.mean) << ',' << num(y.variance) << ',' << num(m.mean) << ','
           << num(m.variance) << "\n";
    }
    return os.str();
}

ReportBundle run_experiment(const ExperimentConfig& cfg, int threads) {
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig sim = cfg.make_sim_config();
    const int used_threads = std::max(1, std::min(resolve_thread_count(threads), cfg.n_paths));
    fs::create_directories(cfg.output_dir);

    ReportBundle bundle;
    bundle.total_paths = static_cast<std::uint64_t>(cfg.n_paths);

    auto has = [&](const char* d) {
        return std::find(cfg.diagnostics.begin(), cfg.diagnostics.end(), d) != cfg.diagnostics.end();
    };

    ReduceOptions opt;
    opt.occupation = has("occupation");
    opt.which = cfg.occupation_of == "X" ? StateComponent::X : StateComponent::Y;
    opt.burn_in = cfg.burn_in;

    const bool want_tri = has("trichotomy");
    const bool want_lil = has("lil");
    const bool want_apt = has("apt");
    std::vector<PathVerdict> verdicts(want_tri ? cfg.n_paths : 0);
    std::vector<double> lil_fracs(want_lil ? cfg.n_paths : 0);
    std::vector<std::vector<double>> apt_devs(cfg.apt_bases.size());
    for (auto& v : apt_devs) v.assign(want_apt ? cfg.n_paths : 0, 0.0);
    const auto pot = sim.potential;
    const auto gain = sim.gain;

    std::function<void(const PathRecord&, std::size_t)> extra;
    if (want_tri || want_lil || want_apt) {
        extra = [&](const PathRecord& rec, std::size_t idx) {
            if (want_tri) verdicts[idx] = classify_path(rec, *pot, cfg.epsilon);
            if (want_lil)
                lil_fracs[idx] = lil_envelope_fraction(rec, cfg.lil_m, *gain, cfg.lil_t0);
            if (want_apt)
                for (std::size_t b = 0; b < cfg.apt_bases.size(); ++b)
                    apt_devs[b][idx] = apt_deviation(rec, pot, *gain, cfg.apt_bases[b], cfg.apt_window);
        };
    }

    const Reduction red = reduce_ensemble(sim, used_threads, opt, extra);
    bundle.blown_paths = red.blowups;

    write_manifest(cfg.output_dir, cfg, used_threads, bundle);
    write_file(cfg.output_dir + "/path0.csv", path_record_csv(simulate_path(sim, 0)), bundle.files);
    if (red.grid.n > 0) write_summary_csv(cfg.output_dir, red.grid, bundle);
    if (opt.occupation) write_histogram(cfg.output_dir, red.occupation, bundle);

    if (want_tri) {
        std::ostringstream os;
        os << "path,label,mu_inf_estimate,log_slope\n";
        const TrichotomyVerdict v = [&] {
            TrichotomyVerdict tv;
            tv.per_path = verdicts;
            std::size_t c = 0, d = 0;
            for (const auto& pv : verdicts) {
                if (pv.label == TrichotomyLabel::ConvergedToMubarInf) ++c;
                if (pv.label == TrichotomyLabel::DivergedLogRate) ++d;
            }
            tv.fraction_converged = static_cast<double>(c) / verdicts.size();
            tv.fraction_diverged = static_cast<double>(d) / verdicts.size();
            tv.fraction_undecided = 1.0 - tv.fraction_converged - tv.fraction_diverged;
            return tv;
        }();
        for (std::size_t i = 0; i < verdicts.size(); ++i) {
            const char* label = verdicts[i].label == TrichotomyLabel::ConvergedToMubarInf
                                    ? "converged"
                                    : (verdicts[i].label == TrichotomyLabel::DivergedLogRate
                                           ? "diverged_log_rate"
                                           : "undecided");
            os << i << ',' << label << ',' << num(verdicts[i].mu_inf_estimate) << ','
               << num(verdicts[i].log_slope) << "\n";
        }
        write_file(cfg.output_dir + "/trichotomy.csv", os.str(), bundle.files);
        add_check(bundle, "trichotomy_fractions_sum",
                  std::fabs(v.fraction_converged + v.fraction_diverged + v.fraction_undecided - 1.0) <
                      1e-12,
                  "converged " + num(v.fraction_converged) + ", diverged " +
                      num(v.fraction_diverged) + ", undecided " + num(v.fraction_undecided));
    }
    if (want_lil) {
        std::ostringstream os;
        os << "path,envelope_fraction\n";
        for (std::size_t i = 0; i < lil_fracs.size(); ++i) os << i << ',' << num(lil_fracs[i]) << "\n";
        write_file(cfg.output_dir + "/lil_fractions.csv", os.str(), bundle.files);
    }
    if (want_apt) {
        std::ostringstream os;
        os << "base,median_deviation\n";
        for (std::size_t b = 0; b < cfg.apt_bases.size(); ++b)
            os << num(cfg.apt_bases[b]) << ',' << num(median_of(apt_devs[b])) << "\n";
        write_file(cfg.output_dir + "/apt.csv", os.str(), bundle.files);
    }
    if (has("oracle_compare")) {
        write_file(cfg.output_dir + "/oracle_table.csv", write_oracle_table(cfg), bundle.files);
        const QuadraticLaw law(cfg.potential_c, gain, cfg.r, cfg.x0.at(0), cfg.mu_bar0.at(0));
        const std::size_t last = red.grid.times.size() - 1;
        const double n = static_cast<double>(red.grid.n);
        const GaussianMoments ly = law.law_of_Y(red.grid.times[last]);
        const double mean_y = red.grid.mean(red.grid.sy, last);
        const double var_y = red.grid.var(red.grid.sy, red.grid.syy, last);
        const double se_mean = std::sqrt(var_y / n);
        const double se_var = var_y * std::sqrt(2.0 / (n - 1.0));
        add_check(bundle, "oracle_mean_Y", std::fabs(mean_y - ly.mean) <= 4.0 * se_mean,
                  "sim " + num(mean_y) + " vs law " + num(ly.mean) + " (4se " + num(4.0 * se_mean) + ")");
        add_check(bundle, "oracle_var_Y", std::fabs(var_y - ly.variance) <= 4.0 * se_var,
                  "sim " + num(var_y) + " vs law " + num(ly.variance) + " (4se " + num(4.0 * se_var) + ")");
    }
    write_plot_script(cfg.output_dir, bundle);

    add_check(bundle, "blow_ups",
              static_cast<double>(red.blowups) <= 0.001 * static_cast<double>(cfg.n_paths),
              std::to_string(red.blowups) + " of " + std::to_string(cfg.n_paths));

    bundle.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    finalize(bundle, cfg, cfg.output_dir);
    return bundle;
}

}  // namespace selfdiff
