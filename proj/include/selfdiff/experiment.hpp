#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "selfdiff/simulator.hpp"

// Config-driven experiment front end: strict key=value configs with dotted
// sections, a catalog of canned experiments (one per claim the toolkit is
// able to reproduce), parallel ensemble execution and reproducible report
// bundles (manifest + CSV + summary).

namespace selfdiff {

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(int line_, const std::string& what) : std::runtime_error(what), line(line_) {}
};

struct ExperimentConfig {
    std::string name = "experiment";

    // potential.*
    std::string potential_name = "quadratic";  // quadratic|double_well|asymmetric_wells|polynomial
    double potential_c = 1.0;
    int dimension = 1;
    std::vector<double> coefficients;  // polynomial
    std::vector<double> newton_starts;

    // gain.*
    std::string gain_family = "constant";  // constant|log_growth|power_log
    double gain_a = 1.0;
    double gain_alpha = 1.0;
    double gain_beta = 0.0;
    double gain_g0 = 1.0;

    // sim.*
    double r = 1.0;
    std::vector<double> x0{1.0};
    std::vector<double> mu_bar0{0.0};
    double horizon = 5.0;
    double dt_base = 0.01;
    int decimation = 100;
    std::uint64_t seed = 1;
    int n_paths = 100;

    // diagnostics.*
    std::vector<std::string> diagnostics;  // occupation|trichotomy|lil|apt|oracle_compare
    double burn_in = 0.5;
    double epsilon = 0.2;
    double lil_t0 = 10.0;
    double lil_m = 0.0;
    std::vector<double> apt_bases{10.0, 20.0, 40.0, 80.0};
    double apt_window = 1.0;
    std::string occupation_of = "Y";  // X|Y

    // output.*
    std::string output_dir = "out";
    int report_version = 1;

    std::shared_ptr<const Potential> make_potential() const;
    std::shared_ptr<const GainSchedule> make_gain() const;
    SimConfig make_sim_config() const;
    // Full resolved key=value echo (manifest body).
    std::vector<std::pair<std::string, std::string>> resolved_entries() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ReportBundle {
    int status = 0;  // 0 ok, 1 failed checks, 3 blow-ups above 0.1%
    std::vector<CheckResult> checks;
    std::vector<std::string> files;
    std::uint64_t blown_paths = 0;
    std::uint64_t total_paths = 0;
    double wall_seconds = 0.0;
    std::string summary;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct CannedExperiment {
    std::string name;
    std::string description;  // one line: which claim it reproduces
    ReportBundle (*runner)(const ExperimentConfig&, int threads);
    std::string config_text;  // resolvable, editable starting point
};

const std::vector<CannedExperiment>& canned_experiments();
const CannedExperiment* find_canned(const std::string& name);

// Generic runner used for config files: simulate, run the selected
// diagnostics, write the bundle. Canned experiments add their own checks.
ReportBundle run_experiment(const ExperimentConfig& cfg, int threads = 0);
// Resolves the canned catalog entry, applies the output directory override
// and runs it.
ReportBundle run_canned(const std::string& name, const std::string& output_dir, int threads = 0);

// Oracle table (t, mean_Y, var_Y, mean_mubar, var_mubar) on a grid up to the
// configured horizon; requires a quadratic potential.
std::string write_oracle_table(const ExperimentConfig& cfg);

// CSV body of one recorded path: t, X_1..X_d, Y_1..Y_d, mubar_1..mubar_d.
std::string path_record_csv(const PathRecord& rec);

}  // namespace selfdiff
